"""Exception types shared across the package."""


class SFFTError(Exception):
    """Base class for all package errors."""


class ConfigurationError(SFFTError, ValueError):
    """Bad sizes, bad parameters or malformed input files."""


class DomainError(SFFTError, ValueError):
    """An argument lies outside the domain of an operation."""


class InvalidPermutation(ConfigurationError):
    """Raised when a multiplier is not invertible mod n (even sigma)."""


class InvalidSharpness(ConfigurationError):
    pass


class InvalidBucketing(ConfigurationError):
    pass


class PartitionFailure(SFFTError):
    """Partition construction did not terminate in the scheduled rounds."""

    def __init__(self, msg, rounds=None):
        super().__init__(msg)
        self.rounds = rounds


class BudgetExceeded(SFFTError):
    """The sample ledger would exceed its configured budget."""

    def __init__(self, phase, count, budget):
        super().__init__(f"sample budget {budget} exceeded during phase {phase!r} (at {count})")
        self.phase = phase
        self.count = count
        self.budget = budget
