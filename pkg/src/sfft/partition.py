"""Collision, crowding and badness predicates and isolating partitions.

A partition S = S_1 u ... u S_T is built round by round: everything in the
current candidate set that is bad, collides with a bad element, or is
crowded gets pushed to the next round. Range counts over permuted positions
use a sorted-array index, so a round costs O(R_t |S| log |S|).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, PartitionFailure
from .hashing import Hashing

__all__ = [
    "PartitionSchedule",
    "IsolatingPartition",
    "CircularIndex",
    "circ_dist",
    "collides",
    "is_crowded",
    "find_bad_elements",
    "construct_partition",
    "verify_partition",
    "size_bound",
]


def _pow2_at_least(v: float) -> int:
    return 1 << max(0, math.ceil(math.log2(max(v, 1.0))))


@dataclass(frozen=True)
class PartitionSchedule:
    """Round count T, hashings per round R_t and bucket counts B_t.

    R_t = C1 * 2^t rounded to an integer >= 1; B_t is the next power of two
    >= C2 k / R_t^2, at least ``b_min`` and at most n/4.
    """

    n: int
    k: int
    delta: float = 0.25
    C1: float = 0.5
    C2: float = 64.0
    c_T: int = 3
    b_min: int = 4
    T: int = field(init=False)
    R: tuple = field(init=False)
    B: tuple = field(init=False)

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ConfigurationError("delta must lie in (0, 1)")
        if self.k < 1:
            raise ConfigurationError("k must be positive")
        if self.k == 1:
            T = 1
        else:
            T = math.ceil(math.log2(math.log2(self.k + 1)) / (1 - self.delta)) + self.c_T
        T = max(1, T)
        R = tuple(max(1, int(round(self.C1 * 2 ** t))) for t in range(1, T + 1))
        cap = max(2, self.n // 4)
        B = tuple(min(cap, max(self.b_min, _pow2_at_least(self.C2 * self.k / r ** 2))) for r in R)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "B", B)

    def R_t(self, t: int) -> int:
        return self.R[t - 1]

    def B_t(self, t: int) -> int:
        return self.B[t - 1]


def size_bound(schedule: PartitionSchedule, t: int) -> float:
    """k (R_0 / R_{t-1}) 2^{-2^{(1-delta)(t-1)} + 1}, with the unrounded geometric R."""
    d = schedule.delta
    return schedule.k * 2.0 ** (-(t - 1)) * 2.0 ** (-(2.0 ** ((1 - d) * (t - 1))) + 1)


def circ_dist(a, b, n):
    d = np.abs(np.asarray(a, dtype=np.int64) - np.asarray(b, dtype=np.int64)) % n
    return np.minimum(d, n - d)


class CircularIndex:
    """Sorted permuted positions answering circular range counts by bisection."""

    def __init__(self, positions, n: int):
        self.n = int(n)
        self.pos = np.sort(np.asarray(positions, dtype=np.int64) % self.n)

    def __len__(self):
        return self.pos.size

    def count_within(self, centres, radius) -> np.ndarray:
        """#{p : |p - c|_circ <= radius} for each centre (vectorised)."""
        c = np.asarray(centres, dtype=np.int64)
        radius = np.broadcast_to(np.asarray(radius, dtype=np.int64), c.shape)
        n = self.n
        out = np.zeros(c.shape, dtype=np.int64)
        full = 2 * radius + 1 >= n
        out[full] = self.pos.size
        m = ~full
        if m.any():
            lo = (c[m] - radius[m]) % n
            hi = (c[m] + radius[m]) % n
            cnt_hi = np.searchsorted(self.pos, hi, side="right")
            cnt_lo = np.searchsorted(self.pos, lo, side="left")
            wrap = lo > hi
            out[m] = np.where(wrap, self.pos.size - cnt_lo + cnt_hi, cnt_hi - cnt_lo)
        return out


def collides(a: int, b: int, H: Hashing, t_radius: int) -> bool:
    """a and b land within t_radius buckets: |pi(a) - pi(b)|_circ <= (n/B)(t_radius - 1)."""
    if a == b:
        return False
    d = int(circ_dist(H.perm(a), H.perm(b), H.n))
    return d <= (H.n // H.B) * (t_radius - 1)


def _scales(B: int) -> range:
    return range(0, max(1, math.ceil(math.log2(B))) + 1)


def _crowded_mask(elems: np.ndarray, Q: np.ndarray, H: Hashing, lam: float) -> np.ndarray:
    """Vectorised crowding test of each element of ``elems`` against set Q."""
    if elems.size == 0 or Q.size == 0:
        return np.zeros(elems.size, dtype=bool)
    idx = CircularIndex(H.perm(Q), H.n)
    pe = H.perm(elems)
    self_in = np.isin(elems, Q).astype(np.int64)
    nb = H.n // H.B
    out = np.zeros(elems.size, dtype=bool)
    for q in _scales(H.B):
        cnt = idx.count_within(pe, nb * 2 ** q) - self_in
        out |= cnt >= lam * 4.0 ** q
    return out


def is_crowded(a: int, Q, H: Hashing, lam: float) -> bool:
    """True iff some scale q has |Ball(pi(a), (n/B) 2^q) n pi(Q minus a)| >= lam 4^q."""
    Q = np.asarray(sorted(set(int(v) for v in Q)), dtype=np.int64)
    return bool(_crowded_mask(np.array([int(a)]), Q, H, lam)[0])


def _collide_mask(elems: np.ndarray, targets: np.ndarray, H: Hashing, t_radius: int) -> np.ndarray:
    """For each element: does it R-collide with some *other* element of targets?"""
    if elems.size == 0 or targets.size == 0:
        return np.zeros(elems.size, dtype=bool)
    idx = CircularIndex(H.perm(targets), H.n)
    r = (H.n // H.B) * (t_radius - 1)
    cnt = idx.count_within(H.perm(elems), r) - np.isin(elems, targets)
    return cnt > 0


def find_bad_elements(S, S_t, hashings: Sequence[Hashing], R_t: int, delta: float) -> set:
    """Elements of S colliding with S_t under more than R_t^{1-delta} of the hashings."""
    S = np.asarray(sorted(set(int(v) for v in S)), dtype=np.int64)
    St = np.asarray(sorted(set(int(v) for v in S_t)), dtype=np.int64)
    if St.size == 0 or S.size == 0:
        return set()
    hits = np.zeros(S.size, dtype=np.int64)
    for H in hashings:
        hits += _collide_mask(S, St, H, R_t)
    return set(S[hits > R_t ** (1 - delta)].tolist())


@dataclass
class IsolatingPartition:
    sets: list            # sets[t-1] = sorted list of elements of S_t
    schedule: PartitionSchedule
    hashings: list        # hashings[t-1] = list of R_t hashings
    S: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({str(t + 1): [int(v) for v in s] for t, s in enumerate(self.sets)})

    def dump(self, path) -> None:
        Path(path).write_text(self.to_json())


def construct_partition(S, schedule: PartitionSchedule, hashings: Sequence[Sequence[Hashing]]) -> IsolatingPartition:
    """Round-by-round construction; raises PartitionFailure when it overruns T
    or a round's set breaks the doubly-exponential size bound."""
    S_arr = np.asarray(sorted(set(int(v) for v in S)), dtype=np.int64)
    T = schedule.T
    if len(hashings) < T:
        raise ConfigurationError("need one list of hashings per round")
    sets: list[np.ndarray] = []
    cur = S_arr
    t = 1
    while cur.size:
        if t > T:
            raise PartitionFailure(f"{cur.size} elements left after {T} rounds", rounds=t - 1)
        Hs = hashings[t - 1]
        R = schedule.R_t(t)
        lam = float(R) ** -3
        bad = np.asarray(sorted(find_bad_elements(S_arr, cur, Hs, R, schedule.delta)), dtype=np.int64)
        U = np.zeros(cur.size, dtype=bool)
        V = np.zeros(cur.size, dtype=bool)
        for H in Hs:
            U |= _collide_mask(cur, bad, H, R)
            V |= _crowded_mask(cur, cur, H, lam)
        nxt = np.union1d(bad, cur[U | V])
        sets = [np.setdiff1d(s, nxt) for s in sets]
        sets.append(np.setdiff1d(cur, nxt))
        cur = nxt
        t += 1
    while len(sets) < T:
        sets.append(np.zeros(0, dtype=np.int64))
    for i, s in enumerate(sets, start=1):
        if s.size > size_bound(schedule, i) + 1e-9:
            raise PartitionFailure(f"round {i} holds {s.size} > {size_bound(schedule, i):.2f}", rounds=i)
    return IsolatingPartition([s.tolist() for s in sets], schedule,
                              [list(h) for h in hashings[:T]], S_arr.tolist())


def verify_partition(part: IsolatingPartition) -> bool:
    """Brute-force check of disjointness, cover and the three isolation conditions."""
    sch = part.schedule
    S = set(int(v) for v in part.S)
    seen: set = set()
    for s in part.sets:
        ss = set(s)
        if ss & seen:
            return False
        seen |= ss
    if seen != S:
        return False
    Sl = sorted(S)
    for t, St in enumerate(part.sets, start=1):
        if len(St) > size_bound(sch, t) + 1e-9:
            return False
        if not St:
            continue
        R = sch.R_t(t)
        Hs = part.hashings[t - 1]
        nb_lists = []
        for H in Hs:
            pS = {a: int(H.perm(a)) for a in Sl}
            nb_lists.append(pS)
        # bad elements w.r.t. the final S_t
        bad = []
        for a in Sl:
            cnt = 0
            for H, pS in zip(Hs, nb_lists):
                r = (H.n // H.B) * (R - 1)
                if any(b != a and int(circ_dist(pS[a], pS[b], H.n)) <= r for b in St):
                    cnt += 1
            if cnt > R ** (1 - sch.delta):
                bad.append(a)
        lam = float(R) ** -3
        for H, pS in zip(Hs, nb_lists):
            nb = H.n // H.B
            r = nb * (R - 1)
            for a in St:
                # (3) no collision with a bad element
                if any(b != a and int(circ_dist(pS[a], pS[b], H.n)) <= r for b in bad):
                    return False
                # (2) not crowded by S_t at any scale
                others = [pS[b] for b in St if b != a]
                d = circ_dist(pS[a], np.array(others, dtype=np.int64), H.n) if others else np.zeros(0)
                for q in _scales(H.B):
                    if (d <= nb * 2 ** q).sum() >= lam * 4.0 ** q:
                        return False
    return True
