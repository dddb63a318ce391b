"""Exception hierarchy.

Every domain error carries a short machine-readable ``reason`` so the CLI can
print ``reason=<code>`` and exit 1 without parsing messages.
"""


class SnflatError(Exception):
    reason = "error"


class RankDeficientError(SnflatError, ValueError):
    reason = "rank-deficient"


class NoInverseError(SnflatError, ValueError):
    reason = "no-inverse"


class PrecisionError(SnflatError, ArithmeticError):
    reason = "precision"


class BudgetError(SnflatError, RuntimeError):
    reason = "budget"


class SnfShapeError(SnflatError, ValueError):
    reason = "snf-shape"


class CompositeModulusError(SnflatError, ValueError):
    reason = "composite-modulus"


class DualGuardError(SnflatError, ValueError):
    """``1 + sum(b_i^2)`` vanishes mod N, so the dual map is undefined."""

    reason = "dual-guard"


class PrimeGapError(SnflatError, RuntimeError):
    reason = "prime-gap"


class NotInLatticeError(SnflatError, ValueError):
    reason = "not-in-lattice"


class ContractViolationError(SnflatError, ValueError):
    reason = "contract-violation"


class WrapPrecisionError(SnflatError, ValueError):
    reason = "wrap-precision"


class OracleFailure(SnflatError, RuntimeError):
    reason = "oracle-failed"


class BudgetExhaustedError(SnflatError, RuntimeError):
    """All trials failed; ``tally`` maps FAIL reasons to counts."""

    reason = "budget-exhausted"

    def __init__(self, message, tally=None, traces=None):
        super().__init__(message)
        self.tally = dict(tally or {})
        self.traces = list(traces or [])


class FormatError(SnflatError, ValueError):
    reason = "format"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
