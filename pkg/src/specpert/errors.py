"""Exception type shared by every module.

Each failure carries a stable string ``code`` so the runner can surface it in
reports and map it to an exit status.
"""

NOT_POSITIVE_DEFINITE = "NOT_POSITIVE_DEFINITE"
NO_CONVERGENCE = "NO_CONVERGENCE"
INVALID_LAW = "INVALID_LAW"
NOT_DECREASING = "NOT_DECREASING"
INTERLEAVE_VIOLATION = "INTERLEAVE_VIOLATION"
KERNEL_NOT_PSD = "KERNEL_NOT_PSD"
KERNEL_NOT_SYMMETRIC = "KERNEL_NOT_SYMMETRIC"
KERNEL_SYNTAX = "KERNEL_SYNTAX"
DIMENSION_MISMATCH = "DIMENSION_MISMATCH"
WINDOW_TOO_SMALL = "WINDOW_TOO_SMALL"
NONPOSITIVE_VALUE = "NONPOSITIVE_VALUE"
INCOMPATIBLE_FITS = "INCOMPATIBLE_FITS"
ZERO_VECTOR = "ZERO_VECTOR"
WRONG_SIGN = "WRONG_SIGN"
DEGENERATE_GAP = "DEGENERATE_GAP"
INVALID_INDEX = "INVALID_INDEX"
NOT_FINITE = "NOT_FINITE"
CONFIG_INVALID = "CONFIG_INVALID"


class SpecPertError(Exception):
    """Raised for any contract violation; ``code`` identifies the failure."""

    def __init__(self, code, message=""):
        self.code = code
        self.message = message
        super().__init__(f"{code}: {message}" if message else code)
