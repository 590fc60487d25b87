"""Exception types shared across the package.

ValueError subclasses signal bad input (rejected before any numerics run);
ArithmeticError subclasses signal numerical failures detected mid-computation.
The CLI maps the two families to distinct exit codes.
"""


class OrderCapError(ValueError):
    """Requested a tree order beyond the configured enumeration cap."""


class NearSingularError(ArithmeticError):
    """An operator inverse was requested too close to a singularity."""

    def __init__(self, kind, z, margin):
        self.kind = kind
        self.z = z
        self.margin = margin
        super().__init__(
            f"near-singular inverse: kind={kind}, z={z}, margin={margin:.3e}"
        )


class NotDegenerateError(ValueError):
    """A degenerate model space was required but the energies differ."""


class ShiftDegenerateError(ValueError):
    """Diagonally shifted energies collide, so the shifted expansion is ill-posed."""


class ModelSpaceDetachedError(ArithmeticError):
    """Exact eigenvectors have (numerically) no component left in the model space."""


class ExtrapolationError(ArithmeticError):
    """Finite-difference extrapolation failed to converge."""
