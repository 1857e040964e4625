"""Simulation and statistics toolkit for iteration-stable random tessellations.

Subpackages cover the convex geometry kernel, translation-invariant hyperplane
measures, the cell-division process engine, window functionals, exact and
empirical beta-mixing machinery, and the Monte Carlo experiment harness.
"""

from .geometry import (
    ConvexPolytope,
    CuboidRegion,
    Facet,
    Hyperplane,
    boundary_mass_in_region,
    contained_in,
    hits,
    intrinsic_features,
    split,
    support_value,
)
from .measure import DirectionalDistribution, HyperplaneMeasure, SeparatorClass
from .process import SimulationConfig, Tessellation, holding_rate, restrict, simulate, translate

__all__ = [
    "ConvexPolytope",
    "CuboidRegion",
    "Facet",
    "Hyperplane",
    "boundary_mass_in_region",
    "contained_in",
    "hits",
    "intrinsic_features",
    "split",
    "support_value",
    "DirectionalDistribution",
    "HyperplaneMeasure",
    "SeparatorClass",
    "SimulationConfig",
    "Tessellation",
    "holding_rate",
    "restrict",
    "simulate",
    "translate",
]

__version__ = "0.1.0"
