"""Numerical gauge integration of convex-set-valued functions on [0, 1]."""

__version__ = "0.1.0"

from .convex_sets import Polytope, hausdorff_distance, minkowski_sum, support  # noqa: E402
from .integrators import (  # noqa: E402
    Multifunction, birkhoff_integral, henstock_integral, integrate, mcshane_integral,
    pettis_integral,
)

__all__ = [
    "Polytope", "Multifunction", "hausdorff_distance", "minkowski_sum", "support",
    "integrate", "henstock_integral", "mcshane_integral", "birkhoff_integral", "pettis_integral",
]
