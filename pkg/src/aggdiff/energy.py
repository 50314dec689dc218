"""Free energy F = H_m + chi W_k and related diagnostics.

Radial densities use the Riesz potential at cell centres for the interaction
term. Line densities use exact cell-pair integrals of |x - y|^k, so for a
piecewise-constant density the 1D interaction energy is exact up to
rounding.
"""

from dataclasses import dataclass

import numpy as np

from .model import LineDensity, RadialDensity, surface_area
from .riesz import line_pair_matrix, raw_potential


@dataclass(frozen=True)
class EnergyBreakdown:
    H_m: float
    W_k: float
    F: float
    D: float
    rho_m_integral: float
    chi: float
    m: float

    def as_dict(self):
        return {"Hm": self.H_m, "Wk": self.W_k, "F": self.F, "D": self.D}


def _check_dim(rho, params):
    if rho.N != params.N:
        raise ValueError(f"density dimension {rho.N} != params.N {params.N}")


def integral_of_power(rho, p):
    """int rho^p over R^N."""
    v = rho.values**p
    if isinstance(rho, RadialDensity):
        return float(surface_area(rho.N) * np.sum(v * rho.weights))
    return float(np.sum(v) * rho.grid.dx)


def entropy(rho, m):
    """H_m = (1/(m-1)) int rho^m."""
    if not m > 1:
        raise ValueError(f"entropy needs m > 1, got {m}")
    return integral_of_power(rho, m) / (m - 1.0)


def kernel_double_integral(rho, params):
    """int int |x - y|^k rho(x) rho(y) dx dy, for any nonnegative density."""
    _check_dim(rho, params)
    k = params.k
    v = rho.values
    if isinstance(rho, LineDensity):
        return float(v @ (line_pair_matrix(rho.grid, k) @ v))
    raw = raw_potential(v, rho.grid, params)
    return float(surface_area(rho.N) * np.sum(raw * v * rho.weights))


def interaction(rho, params):
    """W_k = (1/2) int int |x - y|^k / k rho rho (negative for k < 0)."""
    if abs(rho.mass - 1.0) > 1e-10:
        raise ValueError(f"interaction energy needs a unit-mass density, got mass {rho.mass!r}")
    return kernel_double_integral(rho, params) / (2.0 * params.k)


def _breakdown(H, W, rho_m, params):
    m, chi = params.m, params.chi
    F = H + chi * W
    D = 2.0 * F + (m - 2.0) / (m - 1.0) * rho_m
    return EnergyBreakdown(H, W, F, D, rho_m, chi, m)


def free_energy(rho, params):
    """Entropy, interaction, total energy and the multiplier D.

    D = 2F + ((m-2)/(m-1)) ||rho||_m^m is the constant in the Euler-Lagrange
    identity of a minimiser.
    """
    _check_dim(rho, params)
    rho_m = integral_of_power(rho, params.m)
    H = rho_m / (params.m - 1.0)
    W = interaction(rho, params)
    return _breakdown(H, W, rho_m, params)


def free_energy_from_potential(rho, S, params):
    """Energy breakdown when S_k at the cells is already known.

    W_k = (1/2) int rho S_k; matches free_energy when S comes from the same
    discretisation. ``S`` may be a PotentialProfile or an array.
    """
    S = np.asarray(getattr(S, "values", S), dtype=float)
    rho_m = integral_of_power(rho, params.m)
    if isinstance(rho, RadialDensity):
        W = 0.5 * surface_area(rho.N) * float(np.sum(rho.values * S * rho.weights))
    else:
        W = 0.5 * float(np.sum(rho.values * S)) * rho.grid.dx
    return _breakdown(rho_m / (params.m - 1.0), W, rho_m, params)


def hls_ratio(rho, params):
    """Scale-invariant ratio |int int |x-y|^k rho rho| / (||rho||_1^((k+N)/N) ||rho||_mc^mc).

    Unchanged under dilations and under rho -> c rho.
    """
    if not np.any(rho.values > 0):
        raise ValueError("hls_ratio needs a nonzero density")
    N, k = params.N, params.k
    mc = params.m_c
    num = abs(kernel_double_integral(rho, params))
    l1 = integral_of_power(rho, 1.0)
    lmc = integral_of_power(rho, mc)
    return num / (l1 ** ((k + N) / N) * lmc)
