"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Invalid input to a library call or configuration field."""


class GeometryError(ValueError):
    """A point is on the wrong side of, or outside, the domain."""


class EllipticityError(ValueError):
    """A conductivity tensor is not symmetric positive definite."""


class RankError(ValueError):
    """A truncation level exceeds the numerical rank of the operator."""


class DegenerateSpectrumError(ValueError):
    """All eigenvalues fell below the rank tolerance."""


class WalkBudgetError(RuntimeError):
    """A walk exceeded its step cap before reaching the stopping shell."""

    def __init__(self, pole: int, replicate: int, max_steps: int):
        self.pole = pole
        self.replicate = replicate
        self.max_steps = max_steps
        super().__init__(
            f"walk (pole={pole}, replicate={replicate}) exceeded {max_steps} steps"
        )


class ConfigurationError(ValueError):
    """An inconsistent combination of run parameters."""
