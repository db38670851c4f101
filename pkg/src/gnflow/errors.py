"""Structured error types shared across the package.

Each failure mode gets its own exception class so callers (and the CLI exit
code map) can distinguish a violated numerical hypothesis from a plain bug.
"""


class GnflowError(Exception):
    """Base class for all structured solver errors."""


class GridMismatch(GnflowError):
    """Fields from different grids were combined."""


class NonMonotoneMap(GnflowError):
    """A flow map lost strict monotonicity, so it is not invertible."""


class NotPositiveDefinite(GnflowError):
    """SPD factorization hit a nonpositive pivot; the h > 0 (or phi_x > 0)
    hypothesis behind the operator assembly no longer holds."""


class DepthPositivityLost(GnflowError):
    """The water depth reached zero during time stepping."""


class DiffeoLost(GnflowError):
    """The flow-map Jacobian reached zero during time stepping; the
    Lagrangian description stopped being a diffeomorphism."""


class HorizonExceeded(GnflowError):
    """A wave reached the domain-edge guard band, so the periodic
    truncation of the decaying-data problem is no longer valid."""


class ConfigError(GnflowError):
    """Invalid run configuration.  Carries every violation found, not just
    the first one."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


# CLI exit codes, one per failure mode (0 = success).
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEPTH = 3
EXIT_DIFFEO = 4
EXIT_HORIZON = 5
EXIT_NOT_SPD = 6
EXIT_NON_MONOTONE = 7
EXIT_GRID_MISMATCH = 8

EXIT_CODE = {
    ConfigError: EXIT_CONFIG,
    DepthPositivityLost: EXIT_DEPTH,
    DiffeoLost: EXIT_DIFFEO,
    HorizonExceeded: EXIT_HORIZON,
    NotPositiveDefinite: EXIT_NOT_SPD,
    NonMonotoneMap: EXIT_NON_MONOTONE,
    GridMismatch: EXIT_GRID_MISMATCH,
}


def exit_code_for(exc: BaseException) -> int:
    for cls, code in EXIT_CODE.items():
        if isinstance(exc, cls):
            return code
    return 1
