"""Exception taxonomy shared by every module.

Exit-code mapping used by the CLI: ContractViolation, ValidationError and
ConfigError exit with 2, NumericError with 3, CheckpointFormatError and
OSError with 4.
"""


class GanshiftError(Exception):
    """Base class for all package errors."""


class ContractViolation(GanshiftError, ValueError):
    """A caller broke a documented precondition."""


class ValidationError(GanshiftError, ValueError):
    """Well-formed input whose content fails validation (bad label, bad key)."""


class ConfigError(GanshiftError, ValueError):
    """Malformed or inconsistent experiment configuration."""


class NumericError(GanshiftError, ArithmeticError):
    """A numeric routine failed: non-convergence, non-finite loss, singularity."""


class CheckpointFormatError(GanshiftError, ValueError):
    """Corrupt, truncated or version-incompatible checkpoint file."""
