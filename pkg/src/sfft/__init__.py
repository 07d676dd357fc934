"""Sparse FFT with sample-optimal estimation: hashing, flat filters,
isolating partitions, location and recovery."""
from .dft import Domain, Signal, SparseVector, forward_dft, inverse_dft
from .errors import (BudgetExceeded, ConfigurationError, DomainError, InvalidBucketing,
                     InvalidPermutation, InvalidSharpness, PartitionFailure, SFFTError)
from .estimation import EstimateConfig, estimate, estimate_values, run_estimate
from .filters import FlatFilter, build_filter
from .hashing import FrequencySource, Hashing, SampleLedger, hash_to_bins, make_hashing
from .partition import PartitionSchedule, construct_partition, verify_partition
from .recovery import RecoveryConfig, locate_signal, run_sparse_fft, sparse_fft
from .reference import compute_ground_truth, l2l2_error
from .semi_equi import semi_equi_fft

__version__ = "0.1.0"
