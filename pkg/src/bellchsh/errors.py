"""Exception hierarchy.

Input problems derive from ``ValueError``; numerical failures derive from
``ArithmeticError``.  The CLI maps the first family to exit code 1 and the
second to exit code 2.
"""


class BellError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(BellError, ValueError):
    """Shapes disagree or exceed the supported maximum."""


class NotHermitianError(BellError, ValueError):
    def __init__(self, max_asymmetry: float, tol: float, what: str = "matrix"):
        self.max_asymmetry = max_asymmetry
        self.tol = tol
        super().__init__(
            f"{what} is not Hermitian: ||M - M^dagger||_F = {max_asymmetry:.3e} > {tol:.1e}"
        )


class ValidationError(BellError, ValueError):
    """A domain object violates one of its invariants."""


class NotDichotomicError(ValidationError):
    def __init__(self, label: str, defect: float, tol: float):
        self.label = label
        self.defect = defect
        super().__init__(
            f"observable {label!r} does not square to the identity: "
            f"||M^2 - I||_F = {defect:.3e} > {tol:.1e}"
        )


class MissingObservablesError(ValidationError):
    """An operation needs product-form local observables the scenario lacks."""


class IncompatibleObservablesError(ValidationError):
    """Local observables do not commute, so no grand measurement exists."""

    def __init__(self, norms: dict[str, float], tol: float):
        self.norms = norms
        bad = ", ".join(f"||{k}||_F = {v:.3e}" for k, v in norms.items() if v > tol)
        super().__init__(f"local observables are incompatible: {bad} (tolerance {tol:.1e})")


class NumericalError(BellError, ArithmeticError):
    """A numerical routine failed (non-convergence, complex expectation, ...)."""


class ConvergenceError(NumericalError):
    pass
