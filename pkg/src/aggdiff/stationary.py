"""Stationary states through the Euler-Lagrange fixed point.

A minimiser satisfies rho^(m-1) = ((m-1)/m) (D - chi S_k)_+, with the
multiplier D fixed by unit mass. The solver iterates the damped map

    rho <- (1 - omega) rho + omega G(rho),
    G(rho) = (((m-1)/m) (D - chi S_k[rho]))_+^(1/(m-1)),

choosing D by bisection at every step. Radial problems (any N) use the
Riesz potential at cell centres. Line problems (N = 1) use the
cell-averaged potential built from exact cell-pair integrals, which makes
the fixed point the exact critical point of the discrete free energy.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .energy import free_energy, free_energy_from_potential
from .model import (
    LineDensity,
    LineGrid,
    RadialDensity,
    RadialGrid,
    dilate,
    line_from_function,
    monotone_defect,
    radial_from_function,
    rearrange_1d,
    surface_area,
    uniform_ball,
)
from .riesz import ThetaKernel, line_pair_matrix

log = logging.getLogger(__name__)

MASS_TOL = 1e-12
SUPPORT_THRESHOLD = 1e-12
MAX_WIDEN = 8
MAX_GROW = 5
GROW_FACTOR = 1.5


class SolverError(RuntimeError):
    """Numerical failure of the fixed-point iteration."""


@dataclass(frozen=True)
class SolverConfig:
    """Fixed-point controls.

    ``D_bracket`` is measured from chi * min S_k, where the projected mass
    vanishes. With ``None`` the bracket runs up to a value at which the
    projection provably has mass >= 1 on the whole domain, so no widening
    is ever needed. ``support_margin`` = 1 disables domain growth.
    """

    omega: float = 0.5
    tol: float = 1e-11
    max_iter: int = 20000
    D_bracket: tuple | None = None
    support_margin: float = 0.8

    def __post_init__(self):
        if not 0 < self.omega <= 1:
            raise ValueError(f"omega must lie in (0, 1], got {self.omega}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if self.D_bracket is not None:
            lo, hi = self.D_bracket
            if not lo < hi:
                raise ValueError(f"D_bracket must be ordered, got {self.D_bracket}")
        if not 0 < self.support_margin <= 1:
            raise ValueError("support_margin must lie in (0, 1]")


@dataclass
class StationaryReport:
    profile: object
    D: float
    el_residual: float
    support_radius: float
    monotone_defect: float
    char_residual_1d: float | None
    iterations: int
    lipschitz_estimate: float
    lipschitz_rho: float
    converged: bool
    energy: object
    energy_history: np.ndarray = field(repr=False)
    change_history: np.ndarray = field(repr=False)
    domain_growths: int = 0
    stationarity_guaranteed: bool = True
    notes: tuple = ()

    def summary(self):
        return {
            "D": self.D,
            "F": self.energy.F,
            "Hm": self.energy.H_m,
            "Wk": self.energy.W_k,
            "el_residual": self.el_residual,
            "char_residual_1d": self.char_residual_1d,
            "support_radius": self.support_radius,
            "monotone_defect": self.monotone_defect,
            "lipschitz_estimate": self.lipschitz_estimate,
            "iterations": self.iterations,
            "converged": self.converged,
            "domain_growths": self.domain_growths,
            "max_rho": float(np.max(self.profile.values)),
            "stationarity_guaranteed": self.stationarity_guaranteed,
            "notes": list(self.notes),
        }


# ------------------------------------------------------------- problem setup

class _RadialProblem:
    def __init__(self, grid, params):
        self.grid = grid
        self.params = params
        self.kern = ThetaKernel(params).center_matrix(grid)
        self.vol = surface_area(params.N) * grid.volume_weights(params.N)
        self.h = grid.dr

    def potential(self, v):
        return (self.kern @ v) / self.params.k

    def mass(self, v):
        return float(np.sum(v * self.vol))

    def density(self, v, normalized=False):
        return RadialDensity(self.grid, v, self.params.N, normalized=normalized)

    def outward(self, v):
        return [v]

    def support_radius(self, v):
        idx = np.nonzero(v > SUPPORT_THRESHOLD * v.max())[0]
        return float(self.grid.edges[idx[-1] + 1]) if idx.size else 0.0

    @property
    def extent(self):
        return self.grid.r_max

    def grown(self, factor):
        return RadialGrid(self.grid.r_max * factor, self.grid.n)


class _LineProblem:
    def __init__(self, grid, params):
        self.grid = grid
        self.params = params
        self.pair = line_pair_matrix(grid, params.k)
        self.h = grid.dx

    def potential(self, v):
        # cell averages of S_k
        return (self.pair @ v) / (self.params.k * self.h)

    def mass(self, v):
        return float(np.sum(v) * self.h)

    def density(self, v, normalized=False):
        return LineDensity(self.grid, v, normalized=normalized)

    def outward(self, v):
        half = v.size // 2
        return [v[half:], v[: v.size - half][::-1]]

    def support_radius(self, v):
        idx = np.nonzero(v > SUPPORT_THRESHOLD * v.max())[0]
        if not idx.size:
            return 0.0
        e = self.grid.edges
        return float(max(abs(e[idx[0]]), abs(e[idx[-1] + 1])))

    @property
    def extent(self):
        return self.grid.L

    def grown(self, factor):
        return LineGrid(self.grid.L * factor, self.grid.n)


def _problem(rho, params):
    if rho.N != params.N:
        raise ValueError(f"density dimension {rho.N} != params.N {params.N}")
    if isinstance(rho, LineDensity):
        return _LineProblem(rho.grid, params)
    return _RadialProblem(rho.grid, params)


# ------------------------------------------------------------------ pieces

def project(S, D, params):
    """G = (((m-1)/m) (D - chi S))_+^(1/(m-1))."""
    m = params.m
    base = np.maximum((m - 1.0) / m * (D - params.chi * S), 0.0)
    return base ** (1.0 / (m - 1.0))


def find_multiplier(S, mass, params, bracket=None, volume=None):
    """Bisection for D with mass(project(S, D)) = 1.

    The bracket is relative to chi * min S. It is widened by a factor 4 up
    to eight times before giving up. Without a bracket, the upper end is
    chi * max S + (m/(m-1)) volume^(1-m), where the projection is at least
    1/volume everywhere.
    """
    base = params.chi * float(np.min(S))
    if bracket is None:
        if volume is None:
            volume = mass(np.ones_like(S))
        m = params.m
        top = params.chi * float(np.max(S)) + m / (m - 1.0) * volume ** (1.0 - m)
        bracket = (0.0, top - base)
    lo, hi = base + bracket[0], base + bracket[1]

    def mass_at(D):
        return mass(project(S, D, params))

    widen = 0
    while True:
        m_lo, m_hi = mass_at(lo), mass_at(hi)
        if m_lo <= 1.0 <= m_hi:
            break
        if widen == MAX_WIDEN:
            raise SolverError(
                f"multiplier bracket [{lo}, {hi}] gives masses [{m_lo}, {m_hi}] "
                f"after {MAX_WIDEN} widenings"
            )
        width = hi - lo
        if m_lo > 1.0:
            lo = hi - 4.0 * width
        if m_hi < 1.0:
            hi = lo + 4.0 * width
        widen += 1

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        mm = mass_at(mid)
        if abs(mm - 1.0) <= MASS_TOL:
            lo = hi = mid
            break
        if mm < 1.0:
            lo = mid
        else:
            hi = mid
    D = 0.5 * (lo + hi)
    g = project(S, D, params)
    return D, g / mass(g)


def el_residual(rho, S, D, params, threshold=SUPPORT_THRESHOLD):
    """Max over the support of |rho^(m-1) - ((m-1)/m)(D - chi S)_+| / max rho^(m-1).

    ``S`` is a PotentialProfile or an array of S_k values on the cells.
    """
    S = np.asarray(getattr(S, "values", S), dtype=float)
    m = params.m
    v = rho.values
    pressure = v ** (m - 1.0)
    target = np.maximum((m - 1.0) / m * (D - params.chi * S), 0.0)
    supp = v > threshold * v.max()
    return float(np.max(np.abs(pressure - target)[supp]) / pressure.max())


def _lipschitz(values, h):
    return float(np.max(np.abs(np.diff(values))) / h)


def _iterate(problem, params, config, v):
    energies, changes = [], []
    omega = config.omega
    D = math.nan
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        S = problem.potential(v)
        energies.append(free_energy_from_potential(problem.density(v), S, params).F)
        D, g = find_multiplier(S, problem.mass, params, config.D_bracket)
        change = problem.mass(np.abs(g - v))
        changes.append(change)
        v = (1.0 - omega) * v + omega * g
        if not np.all(np.isfinite(v)):
            raise SolverError(f"non-finite iterate at step {it}")
        if omega * change < config.tol:
            converged = True
            break
        if problem.support_radius(v) > config.support_margin * problem.extent:
            return v, D, it, energies, changes, "grow"
    return v, D, it, energies, changes, converged


def default_initial(grid, params, config=None):
    """Normalized indicator of the unit ball, or of radius extent/3 when B_1 does not fit."""
    config = config or SolverConfig()
    if isinstance(grid, LineGrid):
        if params.N != 1:
            raise ValueError("line grids are one-dimensional")
        R = 1.0 if 1.0 < config.support_margin * grid.L else grid.L / 3
        return line_from_function(lambda x: (np.abs(x) <= R).astype(float), grid)
    R = 1.0 if 1.0 < config.support_margin * grid.r_max else grid.r_max / 3
    return uniform_ball(grid, params.N, R)


def solve_stationary(params, config=None, initial=None, grid=None):
    """Solve for the stationary profile.

    ``initial`` fixes the geometry (a LineDensity gives the full-line N = 1
    problem, a RadialDensity the radial one). Without it the normalized
    indicator of the unit ball on ``grid`` is used. Line initial data are
    first replaced by their symmetric decreasing rearrangement, averaged
    with its mirror image, which centres the problem at the origin.
    """
    config = config or SolverConfig()
    if initial is None:
        if grid is None:
            raise ValueError("need an initial density or a grid")
        initial = default_initial(grid, params, config)
    if abs(initial.mass - 1.0) > 1e-10:
        raise ValueError(f"initial density must have unit mass, got {initial.mass!r}")

    notes = []
    guaranteed = params.m < params.m_star
    if params.regime != "diffusion-dominated":
        warnings.warn(f"m = {params.m} is not above m_c = {params.m_c}", RuntimeWarning, stacklevel=2)
        notes.append("m <= m_c: outside the diffusion-dominated regime")
    if not guaranteed:
        warnings.warn(
            f"m = {params.m} >= m* = {params.m_star}: the minimiser need not be a stationary state",
            RuntimeWarning,
            stacklevel=2,
        )
        notes.append("m >= m*: stationarity of the minimiser is not guaranteed")
    notes.append("the multiplier C of the Euler-Lagrange identity is identified with D")

    if isinstance(initial, LineDensity):
        # dealing sorted cells left and right cannot be exactly even; the
        # mirror average removes the residual tilt, which the iteration
        # would otherwise only drift out of very slowly (translations are
        # neutral for the line problem)
        r = rearrange_1d(initial)
        rho = r.with_values(0.5 * (r.values + r.values[::-1]))
    else:
        rho = initial
    growths = 0
    while True:
        problem = _problem(rho, params)
        v, D, iters, energies, changes, status = _iterate(problem, params, config, rho.values.copy())
        if status != "grow":
            break
        if growths == MAX_GROW:
            raise SolverError(f"support still reaches the domain edge after {MAX_GROW} domain growths")
        growths += 1
        log.info("support near the boundary; growing the domain by %.2f", GROW_FACTOR)
        cur = problem.density(v / problem.mass(v))
        rho = dilate(cur, 1.0, grid=problem.grown(GROW_FACTOR)).normalize()

    if not status:
        raise SolverError(
            f"no convergence in {config.max_iter} iterations; last L1 changes {changes[-3:]}"
        )

    v = v / problem.mass(v)
    profile = problem.density(v, normalized=True)
    S = problem.potential(v)
    D, _ = find_multiplier(S, problem.mass, params, config.D_bracket)
    resid = el_residual(profile, S, D, params)
    mono = max(monotone_defect(part) for part in problem.outward(v))
    char = char_residual_1d(profile, params) if isinstance(profile, LineDensity) else None
    energy = free_energy_from_potential(profile, S, params)
    return StationaryReport(
        profile=profile,
        D=D,
        el_residual=resid,
        support_radius=problem.support_radius(v),
        monotone_defect=mono,
        char_residual_1d=char,
        iterations=iters,
        lipschitz_estimate=_lipschitz(v ** (params.m - 1.0), problem.h),
        lipschitz_rho=_lipschitz(v, problem.h),
        converged=True,
        energy=energy,
        energy_history=np.array(energies),
        change_history=np.array(changes),
        domain_growths=growths,
        stationarity_guaranteed=guaranteed,
        notes=tuple(notes),
    )


def fit_line_domain(params, L0=4.0, n=128, ratio=3.0, max_rounds=40, config=None):
    """Half-width L with the stationary support near L / ratio.

    Stationary supports range over many orders of magnitude (the length
    scale behaves like a power 1/(m - 1 + k) of the parameters), so a fixed
    domain either wastes the grid or cannot hold the profile. Coarse solves
    rescale L until the support stops moving by more than 5%.
    """
    L = float(L0)
    for _ in range(max_rounds):
        rep = solve_stationary(params, config, grid=LineGrid(L, n))
        target = ratio * rep.support_radius
        if abs(target - L) <= 0.05 * L:
            return L
        L = target
    raise SolverError(f"domain fit did not settle in {max_rounds} rounds (last L = {L})")


# --------------------------------------------------------- 1D diagnostics

CHAR_S_NODES = 32


def char_residual_1d(rho, params, threshold=SUPPORT_THRESHOLD):
    """Defect of rho(p)^m = (chi/2) int int_0^1 |q|^k rho(p-sq) rho(p-sq+q) ds dq.

    rho is sampled by linear interpolation of the cell values; q runs over
    cells of width dx with exact weights int |q|^k dq; s uses a 32-point
    Gauss rule. Returns the max defect on the support over max rho^m.
    """
    if not isinstance(rho, LineDensity) or params.N != 1:
        raise ValueError("the integral characterization is one-dimensional")
    k, m, chi = params.k, params.m, params.chi
    g = rho.grid
    x, v, h = g.centers, rho.values, g.dx
    n = g.n
    # q cells centred on multiples of h, covering [-2L, 2L]
    j = np.arange(-n, n + 1)
    qc = j * h

    def prim(t):
        return np.sign(t) * np.abs(t) ** (k + 1) / (k + 1)

    qw = prim(qc + h / 2) - prim(qc - h / 2)
    s, sw = np.polynomial.legendre.leggauss(CHAR_S_NODES)
    s, sw = 0.5 * (s + 1), 0.5 * sw

    def sample(pts):
        return np.interp(pts, x, v, left=0.0, right=0.0)

    supp = np.nonzero(v > threshold * v.max())[0]
    rhs = np.empty(supp.size)
    for out, i in enumerate(supp):
        p = x[i]
        a = p - s[:, None] * qc[None, :]
        prod = sample(a) * sample(a + qc[None, :])
        rhs[out] = 0.5 * chi * np.sum(sw[:, None] * prod * qw[None, :])
    lhs = v[supp] ** m
    return float(np.max(np.abs(lhs - rhs)) / np.max(v**m))


def pointwise_inequality(z, m, k):
    """(lhs, rhs, gap) for z^(1-m)/(m-1) + z^k/k >= 1/(m-1) + 1/k.

    The gap is summed in log z so that it stays nonnegative to rounding
    near z = 1: gap = sum_{j>=2} t^j/j! (k^(j-1) - (1-m)^(j-1)), t = log z.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("z must be positive")
    if not m > 1 - k:
        raise ValueError(f"need m > 1 - k = {1 - k}")
    lhs = z ** (1 - m) / (m - 1) + z**k / k
    rhs = 1.0 / (m - 1) + 1.0 / k
    t = np.log(z)
    direct = np.expm1((1 - m) * t) / (m - 1) + np.expm1(k * t) / k
    series = np.zeros_like(t)
    term = np.ones_like(t)
    for j in range(1, 40):
        term = term * t / j
        if j >= 2:
            series = series + term * (k ** (j - 1) - (1 - m) ** (j - 1))
    gap = np.where(np.abs(t) < 0.1, series, direct)
    if gap.ndim == 0:
        return float(lhs), rhs, float(gap)
    return lhs, rhs, gap


@dataclass
class MinimalityReport:
    F_bar: float
    candidate_energies: list
    slack: float
    violations: list
    lambdas: np.ndarray
    dilation_energies: np.ndarray
    lambda_argmin: float
    lambda_step: float

    @property
    def passed(self):
        return not self.violations and abs(self.lambda_argmin - 1.0) <= self.lambda_step * (1 + 1e-12)


def minimality_check_1d(rho_bar, candidates, params, lambdas=None):
    """Compare F on candidates with F[rho_bar] and scan dilations of rho_bar."""
    F_bar = free_energy(rho_bar, params).F
    slack = 1e-6 * abs(F_bar)
    energies, bad = [], []
    for i, c in enumerate(candidates):
        Fc = free_energy(c, params).F
        energies.append(Fc)
        if Fc < F_bar - slack:
            bad.append((i, Fc))
    if lambdas is None:
        lambdas = np.linspace(0.5, 2.0, 151)
    lambdas = np.asarray(lambdas, dtype=float)
    scan = np.array([free_energy(dilate(rho_bar, lam), params).F for lam in lambdas])
    step = float(np.max(np.diff(lambdas))) if lambdas.size > 1 else 0.0
    return MinimalityReport(
        F_bar, energies, slack, bad, lambdas, scan, float(lambdas[np.argmin(scan)]), step
    )


# -------------------------------------------------------------- uniqueness

def standard_initials(grid):
    """Uniform, triangle and Gaussian-like unit-mass line densities."""
    L = grid.L
    w = L / 3
    return {
        "uniform": line_from_function(lambda x: (np.abs(x) <= w).astype(float), grid),
        "triangle": line_from_function(lambda x: np.maximum(w - np.abs(x - 0.1 * w), 0.0), grid),
        "gaussian": line_from_function(lambda x: np.exp(-((x + 0.05 * w) ** 2) / (0.1 * w * w)), grid),
    }


@dataclass
class UniquenessReport:
    names: list
    reports: dict
    distances: dict

    @property
    def max_distance(self):
        return max(self.distances.values()) if self.distances else 0.0


def _l1(a, b):
    if a.grid != b.grid:
        raise ValueError("profiles live on different grids")
    vol = a.grid.dx if isinstance(a, LineDensity) else surface_area(a.N) * a.weights
    return float(np.sum(np.abs(a.values - b.values) * vol))


def uniqueness_harness(params, grid, config=None, initials=None):
    """Solve from several initial data and report pairwise L1 distances.

    Line profiles are centred by the solver. For N >= 2 the distances are
    only reported; uniqueness is not known there.
    """
    if initials is None:
        if not isinstance(grid, LineGrid):
            r = grid.r_max / 3
            initials = {
                "ball": uniform_ball(grid, params.N, r),
                "cone": radial_from_function(lambda x: np.maximum(r - x, 0.0), grid, params.N),
                "gaussian": radial_from_function(lambda x: np.exp(-x * x / (0.1 * r * r)), grid, params.N),
            }
        else:
            initials = standard_initials(grid)
    reports = {name: solve_stationary(params, config, ini) for name, ini in initials.items()}
    names = list(reports)
    dist = {}
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            dist[f"{a}-{b}"] = _l1(reports[a].profile, reports[b].profile)
    return UniquenessReport(names, reports, dist)
