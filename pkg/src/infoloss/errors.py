"""Exception types shared by the analysis modules."""

from __future__ import annotations

__all__ = [
    "InfoLossError",
    "ConfigError",
    "NoBranchError",
    "AmbiguousBranchError",
    "SingularJacobianError",
    "ZeroDensityError",
    "DimensionTooHighError",
    "BoundViolationError",
    "InfiniteLossError",
]


class InfoLossError(Exception):
    """Base class for this package's errors."""


class ConfigError(InfoLossError):
    """A model configuration is malformed or fails schema checks."""


class NoBranchError(InfoLossError):
    """A point in the density support is covered by no map part."""

    def __init__(self, x):
        self.x = x
        super().__init__(f"no part of the map covers x={x}")


class AmbiguousBranchError(InfoLossError):
    """A point is claimed by more than one map part (regions overlap)."""

    def __init__(self, x, parts):
        self.x = x
        self.parts = parts
        super().__init__(f"parts {parts} overlap at x={x}")


class SingularJacobianError(InfoLossError):
    """|det J| fell below the singularity threshold at an evaluated point."""

    def __init__(self, x, value):
        self.x = x
        self.value = value
        super().__init__(f"|det J|={value:g} at x={x} is numerically singular")


class ZeroDensityError(InfoLossError):
    """The output density is zero where a positive value was required."""

    def __init__(self, y):
        self.y = y
        super().__init__(f"output density is zero at y={y}")


class DimensionTooHighError(InfoLossError):
    """Tensor quadrature only covers one and two dimensions."""

    def __init__(self, dim: int):
        self.dim = dim
        super().__init__(f"quadrature supports N<=2, got N={dim}")


class BoundViolationError(InfoLossError):
    """A sampled pdf value exceeded the declared rejection bound."""

    def __init__(self, x, value, bound):
        self.x = x
        self.value = value
        self.bound = bound
        super().__init__(f"pdf({x})={value:g} exceeds declared bound {bound:g}")


class InfiniteLossError(InfoLossError):
    """A finite loss number was requested for a map classified Infinite."""

    def __init__(self, classification):
        self.classification = classification
        super().__init__(
            f"information loss is infinite ({classification.reason}); "
            "no finite estimate exists"
        )
