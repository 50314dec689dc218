"""Parameters, grids and piecewise-constant densities.

Densities are finite-volume objects: one nonnegative value per cell of a
uniform grid. Radial densities live on [0, r_max] and carry the dimension
N; their cell volume weights are the exact integrals of r^(N-1) over each
cell. Line densities live on [-L, L] and are the full-line 1D objects.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .special import gamma

NORMALIZED_TOL = 1e-10


def surface_area(N):
    """Surface measure of the unit sphere in R^N, 2 pi^(N/2) / Gamma(N/2)."""
    return 2.0 * math.pi ** (N / 2.0) / gamma(N / 2.0)


@dataclass(frozen=True)
class ModelParams:
    N: int
    k: float
    m: float
    chi: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not -self.N < self.k < 0:
            raise ValueError(f"k must lie in (-N, 0) = ({-self.N}, 0), got {self.k}")
        if not self.m > 1:
            raise ValueError(f"m must be > 1 (fast diffusion is not supported), got {self.m}")
        if not self.chi >= 0:
            raise ValueError(f"chi must be >= 0, got {self.chi}")

    @property
    def s(self):
        return (self.k + self.N) / 2.0

    @property
    def m_c(self):
        return 1.0 - self.k / self.N

    @property
    def m_star(self):
        """Regularity threshold; math.inf when 1 - N <= k < 0."""
        if self.k < 1 - self.N:
            return (2.0 - self.k - self.N) / (1.0 - self.k - self.N)
        return math.inf

    @property
    def sigma_N(self):
        return surface_area(self.N)

    @property
    def regime(self):
        # exact comparison; m_c is computed, so allow rounding slack
        if math.isclose(self.m, self.m_c, rel_tol=1e-12, abs_tol=1e-14):
            return "fair-competition"
        return "diffusion-dominated" if self.m > self.m_c else "attraction-dominated"

    @property
    def kernel_branch(self):
        """'regular' for k > 1-N, 'critical' for k = 1-N, 'singular' below."""
        if math.isclose(self.k, 1 - self.N, abs_tol=1e-14):
            return "critical"
        return "regular" if self.k > 1 - self.N else "singular"


def make_params(N, k, m, chi):
    return ModelParams(int(N), float(k), float(m), float(chi))


@dataclass(frozen=True)
class RadialGrid:
    r_max: float
    n: int

    def __post_init__(self):
        if self.n < 8:
            raise ValueError(f"need at least 8 cells, got {self.n}")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")

    @property
    def dr(self):
        return self.r_max / self.n

    @property
    def edges(self):
        return np.arange(self.n + 1) * self.dr

    @property
    def centers(self):
        return (np.arange(self.n) + 0.5) * self.dr

    def volume_weights(self, N):
        """Exact per-cell integrals of r^(N-1): (r_{i+1}^N - r_i^N) / N."""
        e = self.edges
        return (e[1:] ** N - e[:-1] ** N) / N


@dataclass(frozen=True)
class LineGrid:
    L: float
    n: int

    def __post_init__(self):
        if self.n < 8:
            raise ValueError(f"need at least 8 cells, got {self.n}")
        if not self.L > 0:
            raise ValueError("L must be positive")

    @property
    def dx(self):
        return 2.0 * self.L / self.n

    @property
    def edges(self):
        return -self.L + np.arange(self.n + 1) * self.dx

    @property
    def centers(self):
        return -self.L + (np.arange(self.n) + 0.5) * self.dx


def _as_values(values, n):
    v = np.array(values, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"expected {n} cell values, got shape {v.shape}")
    if np.any(~np.isfinite(v)):
        raise ValueError("density values must be finite")
    if np.any(v < 0):
        i = int(np.argmin(v))
        raise ValueError(f"density must be nonnegative; cell {i} has {v[i]}")
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class RadialDensity:
    grid: RadialGrid
    values: np.ndarray
    N: int
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", _as_values(self.values, self.grid.n))
        if self.normalized and abs(self.mass - 1.0) > NORMALIZED_TOL:
            raise ValueError(f"density flagged normalized but has mass {self.mass!r}")

    @property
    def weights(self):
        return self.grid.volume_weights(self.N)

    @property
    def mass(self):
        return float(surface_area(self.N) * np.sum(self.values * self.weights))

    def normalize(self):
        return RadialDensity(self.grid, self.values / self.mass, self.N, normalized=True)

    def with_values(self, values, normalized=False):
        return RadialDensity(self.grid, values, self.N, normalized=normalized)


@dataclass(frozen=True)
class LineDensity:
    grid: LineGrid
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(self, "values", _as_values(self.values, self.grid.n))
        if self.normalized and abs(self.mass - 1.0) > NORMALIZED_TOL:
            raise ValueError(f"density flagged normalized but has mass {self.mass!r}")

    N = 1

    @property
    def mass(self):
        return float(np.sum(self.values) * self.grid.dx)

    def normalize(self):
        return LineDensity(self.grid, self.values / self.mass, normalized=True)

    def with_values(self, values, normalized=False):
        return LineDensity(self.grid, values, normalized=normalized)


def radial_from_function(f, grid, N, normalize=True, subcells=8):
    """Cell averages (w.r.t. r^(N-1) dr) of a radial profile f(r)."""
    x, wq = np.polynomial.legendre.leggauss(subcells)
    e = grid.edges
    a, b = e[:-1, None], e[1:, None]
    r = 0.5 * (b - a) * x + 0.5 * (a + b)
    jac = 0.5 * (b - a) * wq
    num = np.sum(f(r) * r ** (N - 1) * jac, axis=1)
    vals = num / grid.volume_weights(N)
    rho = RadialDensity(grid, np.maximum(vals, 0.0), N)
    return rho.normalize() if normalize else rho


def line_from_function(f, grid, normalize=True, subcells=8):
    """Cell averages of a profile f(x) on a line grid."""
    x, wq = np.polynomial.legendre.leggauss(subcells)
    e = grid.edges
    a, b = e[:-1, None], e[1:, None]
    pts = 0.5 * (b - a) * x + 0.5 * (a + b)
    vals = np.sum(f(pts) * wq, axis=1) / 2.0
    rho = LineDensity(grid, np.maximum(vals, 0.0))
    return rho.normalize() if normalize else rho


def uniform_ball(grid, N, R=1.0):
    """Normalized indicator of B_R; R is snapped to the nearest cell edge."""
    ncell = int(round(R / grid.dr))
    if not 1 <= ncell <= grid.n:
        raise ValueError(f"ball radius {R} not resolved by the grid")
    vals = np.zeros(grid.n)
    vals[:ncell] = 1.0
    return RadialDensity(grid, vals, N).normalize()


def mass_function(rho, R):
    """Mass of a radial density inside the ball of radius R."""
    g = rho.grid
    if R < 0 or R > g.r_max * (1 + 1e-14):
        raise ValueError(f"R must lie in [0, r_max={g.r_max}], got {R}")
    e = g.edges
    hi = np.minimum(e[1:], R)
    lo = e[:-1]
    part = np.where(hi > lo, (hi**rho.N - lo**rho.N) / rho.N, 0.0)
    return float(surface_area(rho.N) * np.sum(rho.values * part))


def monotone_defect(values):
    """Largest increase between consecutive cells (0 for non-increasing)."""
    d = np.diff(np.asarray(values, dtype=float))
    return float(max(d.max(initial=0.0), 0.0))


def level_set_radius(rho, H):
    """Radius A_H of the superlevel ball {rho >= H}, as a cell edge."""
    if not H > 0:
        raise ValueError("level H must be positive")
    v = rho.values
    bad = np.nonzero(np.diff(v) > 0)[0]
    if bad.size:
        i = int(bad[0])
        raise ValueError(
            f"density is not non-increasing: cell {i} has {v[i]!r} < cell {i + 1} value {v[i + 1]!r}"
        )
    below = np.nonzero(v < H)[0]
    ncell = rho.grid.n if below.size == 0 else int(below[0])
    return ncell * rho.grid.dr


def lp_norm(rho, p):
    """||rho||_p for a radial or line density."""
    if p < 1:
        raise ValueError("p must be >= 1")
    v = rho.values
    if isinstance(rho, RadialDensity):
        integral = surface_area(rho.N) * np.sum(v**p * rho.weights)
    else:
        integral = np.sum(v**p) * rho.grid.dx
    return float(integral ** (1.0 / p))


def _overlap_resample(src_edges, src_vals, dst_edges, measure):
    """Conservative remap of a piecewise-constant function.

    ``measure(a, b)`` is the volume of the interval [a, b] in the relevant
    geometry (r^(N-1) dr for radial grids, dx for lines).
    """
    lo = np.maximum(dst_edges[:-1, None], src_edges[None, :-1])
    hi = np.minimum(dst_edges[1:, None], src_edges[None, 1:])
    over = np.where(hi > lo, measure(lo, np.maximum(hi, lo)), 0.0)
    dst_vol = measure(dst_edges[:-1], dst_edges[1:])
    return over @ src_vals / dst_vol


def dilate(rho, lam, grid=None):
    """Dilation rho^lam(x) = lam^N rho(lam x).

    By default the grid itself is rescaled (r_max -> r_max / lam), which is
    exact. Passing ``grid`` resamples conservatively onto that grid.
    """
    if not lam > 0:
        raise ValueError(f"dilation factor must be positive, got {lam}")
    N = rho.N
    vals = lam**N * rho.values
    if isinstance(rho, RadialDensity):
        scaled = RadialDensity(RadialGrid(rho.grid.r_max / lam, rho.grid.n), vals, N)
        if grid is None:
            return scaled

        def measure(a, b):
            return (b**N - a**N) / N

        src_e = scaled.grid.edges
        dst_e = grid.edges
        # mass beyond the target grid would be lost
        if src_e[-1] > dst_e[-1] and np.any(vals[src_e[:-1] >= dst_e[-1]] > 0):
            raise ValueError("target grid does not contain the dilated support")
        new = _overlap_resample(src_e, vals, dst_e, measure)
        return RadialDensity(grid, new, N)

    scaled = LineDensity(LineGrid(rho.grid.L / lam, rho.grid.n), vals)
    if grid is None:
        return scaled
    src_e = scaled.grid.edges
    outside = (src_e[1:] > grid.L) | (src_e[:-1] < -grid.L)
    if np.any(vals[outside] > 0):
        raise ValueError("target grid does not contain the dilated support")
    new = _overlap_resample(scaled.grid.edges, vals, grid.edges, lambda a, b: b - a)
    return LineDensity(grid, new)


def rearrange_1d(f):
    """Symmetric decreasing rearrangement of a line density.

    Cell values are sorted in decreasing order and dealt out alternately to
    the right and left of the centre, so the value multiset is unchanged.
    With an even cell count the centre is the edge between cells n/2 - 1
    and n/2; with an odd count it is the middle cell.
    """
    v = np.sort(np.asarray(f.values))[::-1]
    n = v.size
    order = np.empty(n, dtype=int)
    if n % 2 == 0:
        right, left = n // 2, n // 2 - 1
        for i in range(n):
            if i % 2 == 0:
                order[i] = right
                right += 1
            else:
                order[i] = left
                left -= 1
    else:
        mid = n // 2
        order[0] = mid
        for i in range(1, n):
            step = (i + 1) // 2
            order[i] = mid + step if i % 2 else mid - step
    out = np.empty(n)
    out[order] = v
    return LineDensity(f.grid, out, normalized=f.normalized)


def line_to_radial(f):
    """Right half of an even line density as an N = 1 radial density."""
    n = f.grid.n
    if n % 2:
        raise ValueError("need an even cell count so that 0 is a cell edge")
    v = f.values
    if not np.allclose(v, v[::-1], rtol=0, atol=1e-14 * max(v.max(), 1.0)):
        raise ValueError("line density is not even")
    return RadialDensity(RadialGrid(f.grid.L, n // 2), v[n // 2 :], 1)


def radial_to_line(rho):
    if rho.N != 1:
        raise ValueError("only N = 1 radial densities map to the line")
    v = rho.values
    return LineDensity(LineGrid(rho.grid.r_max, 2 * rho.grid.n), np.concatenate([v[::-1], v]))


def center_of_mass(f):
    return float(np.sum(f.grid.centers * f.values) * f.grid.dx / f.mass)


# ---------------------------------------------------------------- CSV files

def density_csv_text(rho):
    """CSV text with header ``r,rho`` (radial) or ``x,rho`` (line), 17 digits."""
    col = "r" if isinstance(rho, RadialDensity) else "x"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([col, "rho"])
    for x, v in zip(rho.grid.centers, rho.values):
        w.writerow([format(float(x), ".17g"), format(float(v), ".17g")])
    return buf.getvalue()


def write_density_csv(path, rho):
    with open(path, "w", newline="") as fh:
        fh.write(density_csv_text(rho))


def read_density_csv(path, N=None):
    """Read a density CSV; header ``r,rho`` gives radial, ``x,rho`` a line density.

    The grid is reconstructed from the (uniform) cell centres.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    x, v = data[:, 0], data[:, 1]
    n = len(x)
    if header == ["r", "rho"]:
        if N is None:
            raise ValueError("radial density files need the dimension N")
        dr = 2.0 * x[0]
        grid = RadialGrid(dr * n, n)
        if not np.allclose(grid.centers, x, rtol=1e-12, atol=1e-14):
            raise ValueError("radial cell centres are not uniform from 0")
        return RadialDensity(grid, v, int(N))
    if header == ["x", "rho"]:
        L = (x[-1] - x[0]) * n / (2.0 * (n - 1))
        grid = LineGrid(L, n)
        if not np.allclose(grid.centers, x, rtol=1e-12, atol=1e-14 * L):
            raise ValueError("line cell centres are not uniform and symmetric")
        return LineDensity(grid, v)
    raise ValueError(f"unrecognised density header {header}")
