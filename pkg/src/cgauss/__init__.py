"""Exact conditional law of an i.i.d. standard Normal vector given ``w'Z = c``."""
from .errors import (
    BadPivot,
    CGaussError,
    DegenerateRescale,
    DimensionMismatch,
    InsufficientSamples,
    NonPositiveEntry,
    NotPositiveDefinite,
    TooFewAccepted,
    ZeroWeight,
)
from .law import (
    ConditionalGaussian,
    FullSpacePoint,
    WeightVector,
    bivariate_law,
    condition_on_weighted_sum,
    density_self_consistency,
    full_space_law,
    lift,
    log_density,
    marginal_sum_density,
    z_space_law,
)
from .structured import DiagPlusConstantMatrix, StructuredInverse

__version__ = "0.1.0"
