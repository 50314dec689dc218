"""Stationary states and dynamics of aggregation-diffusion equations with
porous-medium diffusion and Riesz-kernel attraction."""

from .energy import EnergyBreakdown, free_energy, hls_ratio, interaction
from .evolution import EvolutionConfig, EvolutionTrace, evolve
from .hypergeom import f21, f21_derivative, f21_limit, f21_transformed, h_integral
from .model import (
    LineDensity,
    LineGrid,
    ModelParams,
    RadialDensity,
    RadialGrid,
    dilate,
    line_from_function,
    make_params,
    radial_from_function,
    uniform_ball,
)
from .riesz import PotentialProfile, ThetaKernel, riesz_potential, riesz_potential_at
from .stationary import (
    SolverConfig,
    StationaryReport,
    char_residual_1d,
    solve_stationary,
    uniqueness_harness,
)

__all__ = [
    "EnergyBreakdown",
    "EvolutionConfig",
    "EvolutionTrace",
    "LineDensity",
    "LineGrid",
    "ModelParams",
    "PotentialProfile",
    "RadialDensity",
    "RadialGrid",
    "SolverConfig",
    "StationaryReport",
    "ThetaKernel",
    "char_residual_1d",
    "dilate",
    "evolve",
    "f21",
    "f21_derivative",
    "f21_limit",
    "f21_transformed",
    "free_energy",
    "h_integral",
    "hls_ratio",
    "interaction",
    "line_from_function",
    "make_params",
    "radial_from_function",
    "riesz_potential",
    "riesz_potential_at",
    "solve_stationary",
    "uniform_ball",
    "uniqueness_harness",
]
