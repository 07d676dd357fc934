"""Command line: ``sfft <mode> [--config file.json] [flags]``.

Flags override values from the JSON config. The CSV goes to --out or to
stdout. Exit status is 0 when every trial ran to completion; per-trial
success is the ``success`` column.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import SFFTError
from .experiments import MODES, ExperimentConfig, rows_to_csv, run_experiment
from .selftest import run_selftest

# flag name -> config field
_FLAGS = {
    "n": ("n", int), "k": ("k", int), "eps": ("eps", float), "delta": ("delta", float),
    "seed": ("seed", int), "trials": ("trials", int), "out": ("out", str),
    "mu": ("mu", float), "r_star": ("R_star", float), "c1": ("C1", float), "c2": ("C2", float),
    "alpha_est": ("alpha_est", float), "c_est": ("C_est", float), "c_f": ("c_F", float),
    "delta_semi": ("delta_semi", float), "signal": ("signal", str), "workers": ("workers", int),
}


def _float_list(text):
    return [float(v) for v in text.split(",") if v]


def _int_list(text):
    return [int(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sfft", description="Sparse FFT experiments.")
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    for flag, (_, typ) in _FLAGS.items():
        p.add_argument("--" + flag.replace("_", "-"), dest=flag, type=typ, default=None)
    p.add_argument("--ks", type=_int_list, default=None, help="k sweep for bench-samples, e.g. 16,32,64")
    p.add_argument("--epss", type=_float_list, default=None, help="eps sweep for bench-error")
    p.add_argument("--timing", action="store_true", default=None, help="record wall_ms (CSV no longer byte-stable)")
    return p


def load_config(args) -> ExperimentConfig:
    d = {}
    if args.config:
        path = Path(args.config)
        try:
            d = json.loads(path.read_text())
        except OSError as e:
            raise SFFTError(f"cannot read config {path}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise SFFTError(f"{path}: invalid JSON ({e})") from None
        if not isinstance(d, dict):
            raise SFFTError(f"{path}: top level must be an object")
    d["mode"] = args.mode
    for flag, (name, _) in _FLAGS.items():
        v = getattr(args, flag)
        if v is not None:
            d[name] = v
    for name in ("ks", "epss", "timing"):
        v = getattr(args, name)
        if v is not None:
            d[name] = v
    return ExperimentConfig.from_dict(d)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.mode == "selftest":
            return 0 if run_selftest() else 1
        cfg = load_config(args)
        rows = run_experiment(cfg)
    except SFFTError as e:
        print(f"sfft: error: {e}", file=sys.stderr)
        return 2
    if not cfg.out:
        sys.stdout.write(rows_to_csv(rows))
    return 0


if __name__ == "__main__":
    sys.exit(main())
