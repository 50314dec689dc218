"""Quick property-check suites behind ``aggdiff verify --suite NAME``.

Each suite is a list of checks returning (measured, tolerance, passed).
They are cheap versions of the test-suite families, meant as a smoke test
of an installation.
"""

import math
import sys

import numpy as np

from .energy import free_energy, hls_ratio, interaction
from .evolution import EvolutionConfig, evolve
from .hypergeom import extrapolate_limit, f21, f21_derivative, f21_limit, f21_transformed
from .model import (
    LineGrid,
    RadialGrid,
    dilate,
    line_from_function,
    make_params,
    radial_from_function,
    rearrange_1d,
    uniform_ball,
)
from .riesz import (
    cross_range_K,
    cross_range_ratio,
    decay_envelope_check,
    riesz_potential,
    riesz_potential_at,
)
from .stationary import (
    char_residual_1d,
    minimality_check_1d,
    pointwise_inequality,
    solve_stationary,
    uniqueness_harness,
)


def _random_abcz(rng, n):
    a = rng.uniform(0.05, 1.5, n)
    b = rng.uniform(0.1, 2.0, n)
    c = b + rng.uniform(0.1, 2.0, n)
    c = np.maximum(c, a + 0.05)
    z = rng.uniform(0.0, 0.999, n)
    return a, b, c, z


def _hg_transform(rng):
    worst = 0.0
    for a, b, c, z in zip(*_random_abcz(rng, 200)):
        lhs, rhs = f21(a, b, c, z), f21_transformed(a, b, c, z)
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    return worst, 1e-9


def _hg_derivative(rng):
    worst = 0.0
    for a, b, c, z in zip(*_random_abcz(rng, 50)):
        z = min(z, 0.95)
        hstep = 1e-5
        fd = (f21(a, b, c, z + hstep) - f21(a, b, c, max(z - hstep, 0.0))) / (z + hstep - max(z - hstep, 0.0))
        d = f21_derivative(a, b, c, z)
        worst = max(worst, abs(fd - d) / abs(d))
    return worst, 1e-6


def _hg_limit(rng):
    worst = 0.0
    for _ in range(20):
        a, b = rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)
        s = rng.uniform(0.1, 0.9) if rng.random() < 0.5 else rng.uniform(1.1, 2.5)
        c = a + b + s
        lim = f21_limit(a, b, c)
        worst = max(worst, abs(extrapolate_limit(a, b, c, 1e-6) - lim) / lim)
    return worst, 1e-8


def _riesz_ball(rng):
    p = make_params(3, -1.0, 2.0, 1.0)
    grid = RadialGrid(4.0, 256)
    R = 1.0
    rho = uniform_ball(grid, 3, R)
    r = np.array([1.5, 2.0, 3.0])
    raw = riesz_potential_at(rho, p, r)
    return float(np.max(np.abs(raw * r - 1.0))), 1e-8


def _riesz_decay(rng):
    bad = 0
    for N, k in ((2, -0.5), (2, -1.0), (3, -2.5), (3, -2.0)):
        p = make_params(N, k, 2.0, 1.0)
        grid = RadialGrid(4.0, 200)
        R = rng.uniform(0.5, 1.5)
        rho = radial_from_function(lambda x, R=R: np.maximum(R * R - x * x, 0.0), grid, N)
        rep = decay_envelope_check(riesz_potential(rho, p), R, p)
        bad += rep.upper_violations + rep.lower_violations
    return float(bad), 0.0


def _energy_dilation(rng):
    p = make_params(1, -0.5, 2.0, 1.0)
    g = LineGrid(4.0, 256)
    rho = line_from_function(lambda x: np.exp(-x * x), g)
    e = free_energy(rho, p)
    worst = 0.0
    for lam in (0.5, 2.0):
        got = free_energy(dilate(rho, lam), p).F
        want = lam ** (p.N * (p.m - 1)) * e.H_m + lam ** (-p.k) * p.chi * e.W_k
        worst = max(worst, abs(got - want) / abs(want))
    return worst, 1e-8


def _energy_rearrangement(rng):
    p = make_params(1, -0.5, 2.0, 1.0)
    g = LineGrid(2.0, 128)
    worst = -math.inf
    for _ in range(20):
        f = line_from_function(lambda x: rng.random(x.shape), g)
        worst = max(worst, interaction(rearrange_1d(f), p) - interaction(f, p))
    return max(worst, 0.0), 1e-12


def _energy_hls(rng):
    p = make_params(2, -1.0, 2.0, 1.0)
    rho = radial_from_function(lambda x: np.exp(-4 * x * x), RadialGrid(4.0, 256), 2)
    base = hls_ratio(rho, p)
    got = hls_ratio(dilate(rho, 2.0), p)
    return abs(got - base) / base, 1e-6


SET_1D = (-0.5, 1.8, 1.0)


def _solve_1d():
    k, m, chi = SET_1D
    p = make_params(1, k, m, chi)
    return p, solve_stationary(p, grid=LineGrid(0.83, 256))


def _stationary_el(rng):
    p, rep = _solve_1d()
    return rep.el_residual, 1e-6


def _stationary_char(rng):
    p, rep = _solve_1d()
    return char_residual_1d(rep.profile, p), 1e-3


def _stationary_uniqueness(rng):
    k, m, chi = SET_1D
    rep = uniqueness_harness(make_params(1, k, m, chi), LineGrid(0.83, 128))
    return rep.max_distance, 1e-4


def _minimality(rng):
    p, rep = _solve_1d()
    g = rep.profile.grid
    cands = [line_from_function(lambda x: np.exp(-(x / w) ** 2), g) for w in (0.05, 0.1, 0.2)]
    mr = minimality_check_1d(rep.profile, cands, p, lambdas=np.linspace(0.8, 1.25, 31))
    return float(not mr.passed), 0.0


def _pointwise(rng):
    z = np.exp(rng.uniform(-5, 5, 2000))
    _, _, gap = pointwise_inequality(z, 1.8, -0.5)
    return float(max(-gap.min(), 0.0)), 0.0


def _evolution_mass(rng):
    p = make_params(1, -0.5, 2.0, 1.0)
    g = LineGrid(1.5, 128)
    rho = line_from_function(lambda x: (np.abs(x) <= 1).astype(float), g)
    tr = evolve(rho, p, EvolutionConfig(t_end=0.5, L=g.L, n=g.n, steady_tol=None))
    return max(tr.max_mass_drift, tr.max_energy_increase), 1e-10


def _crossrange_K(rng):
    p = make_params(3, -1.0, 2.0, 1.0)
    worst = 0.0
    q = 0.3
    for H in (2.0, 10.0, 100.0):
        want = H ** (1 - q * 2.0) + H ** (q * 1.0)
        worst = max(worst, abs(cross_range_K(H, p, q) - want) / want)
    return worst, 1e-12


def _crossrange_ratio(rng):
    p = make_params(3, -1.0, 2.0, 1.0)
    grid = RadialGrid(2.0, 400)
    rho = radial_from_function(lambda x: (x + 1e-3) ** -1.5 * (x < 1), grid, 3)
    vals = [cross_range_ratio(rho, H, p, 0.1) for H in (10.0, 100.0, 1000.0)]
    return max(vals), 10.0


SUITES = {
    "hypergeom": [
        ("transformation identity", _hg_transform),
        ("derivative vs finite differences", _hg_derivative),
        ("limit at z = 1", _hg_limit),
    ],
    "riesz": [
        ("ball potential M/|x|", _riesz_ball),
        ("decay envelope violations", _riesz_decay),
    ],
    "energy": [
        ("dilation law", _energy_dilation),
        ("rearrangement lowers W_k", _energy_rearrangement),
        ("HLS ratio dilation invariance", _energy_hls),
    ],
    "stationary": [
        ("Euler-Lagrange residual", _stationary_el),
        ("integral characterization", _stationary_char),
        ("three-initial uniqueness", _stationary_uniqueness),
    ],
    "minimality": [
        ("candidate family and dilation scan", _minimality),
        ("pointwise inequality gap", _pointwise),
    ],
    "evolution": [
        ("mass drift and energy rise", _evolution_mass),
    ],
    "crossrange": [
        ("K formula", _crossrange_K),
        ("bounded ratio", _crossrange_ratio),
    ],
}


def run_suite(name, seed=0, stream=sys.stdout):
    """Run one suite, print a table, return True when every check passes."""
    rng = np.random.default_rng(seed)
    ok = True
    stream.write(f"suite {name} (seed {seed})\n")
    stream.write(f"  {'check':<40} {'measured':>12} {'tolerance':>12}  result\n")
    for label, fn in SUITES[name]:
        try:
            value, tol = fn(rng)
            passed = bool(value <= tol)
            shown = f"{value:12.3e}"
        except Exception as exc:  # report, keep going
            passed, tol, shown = False, float("nan"), f"{type(exc).__name__:>12}"
        ok &= passed
        stream.write(f"  {label:<40} {shown} {tol:12.3e}  {'PASS' if passed else 'FAIL'}\n")
    return ok
