"""Exception types shared across the package.

The CLI maps each family onto an exit code: validation-type errors exit 1,
hypothesis-type errors exit 2 and convergence failures exit 3.
"""


class NeutralSpectraError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(NeutralSpectraError, ValueError):
    """An input object violates one of its structural invariants."""


class StructureError(ValidationError):
    """A transition matrix lacks the absorbed two-dimensional block structure."""


class PoleError(NeutralSpectraError, ZeroDivisionError):
    """A Pochhammer denominator vanished before the series terminated."""


class DivisionRemainder(NeutralSpectraError, ArithmeticError):
    """Exact polynomial division left a nonzero remainder."""


class HypothesisError(NeutralSpectraError):
    """A theorem's hypotheses (irreducibility, aperiodicity, ...) do not hold."""


class NotReversible(HypothesisError):
    """Detailed balance fails for the pair ``(i, j)``."""

    def __init__(self, i, j, defect):
        self.i, self.j, self.defect = i, j, defect
        super().__init__(f"detailed balance fails on pair ({i}, {j}); defect {defect:.3e}")


class NotSymmetrizable(HypothesisError):
    """The matrix is not self-adjoint for the supplied weights."""

    def __init__(self, defect):
        self.defect = defect
        super().__init__(f"matrix is not reversible w.r.t. the given weights (defect {defect:.3e})")


class NotIrreducible(HypothesisError):
    """The positivity graph of a nonnegative matrix is not strongly connected."""

    def __init__(self, labels):
        self.labels = list(labels)
        super().__init__(
            f"matrix is reducible: {len(set(self.labels))} strongly connected classes "
            f"(labels {self.labels})"
        )


class EmptyDomain(NeutralSpectraError, ValueError):
    """A restriction was requested on an empty set of states."""


class NoConvergence(NeutralSpectraError, ArithmeticError):
    """An iterative solver hit its iteration cap."""


class DegenerateError(NeutralSpectraError, ArithmeticError):
    """All probability mass was absorbed; the conditional law is undefined."""


class NoSurvivors(NeutralSpectraError):
    """Every simulated path was absorbed before the horizon."""

    def __init__(self, trials, horizon):
        self.trials, self.horizon = trials, horizon
        super().__init__(f"all {trials} paths absorbed before horizon {horizon}")


class TieToleranceWarning(UserWarning):
    """Two Perron roots are neither clearly equal nor clearly distinct."""
