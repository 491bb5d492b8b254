"""Numerical toolkit for K-functionals, interpolation functors and K-orbits on lattice couples."""
from .measure import (CarrierError, ConvFunction, DomainError, GridFunction, MeasureSpace,
                      StepFunction, conv_violations, default_grid, least_concave_majorant,
                      log_grid, primitive_integral, rearrange)
from .spaces import (Couple, HalfLineLp, HalfLineSup, Lorentz, WeightedLp, convexify_couple,
                     norm)
from .kfunctional import KResult, k_profile, k_value

__all__ = [
    "CarrierError", "ConvFunction", "DomainError", "GridFunction", "MeasureSpace",
    "StepFunction", "conv_violations", "default_grid", "least_concave_majorant", "log_grid",
    "primitive_integral", "rearrange", "Couple", "HalfLineLp", "HalfLineSup", "Lorentz",
    "WeightedLp", "convexify_couple", "norm", "KResult", "k_profile", "k_value",
]
