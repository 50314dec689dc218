"""Riesz potentials |x|^k * rho of radial densities.

For radial rho the convolution reduces to a one-dimensional integral

    (|.|^k * rho)(r) = int_0^inf Theta(r, eta) rho(eta) eta^(N-1) d eta,

where Theta is the spherical average of |x - y|^k. Theta is written through
the hypergeometric integral H(-k/2, (N-1)/2; N-1; 4u/(1+u)^2), u = min/max
of the two radii. In 1D the average is the two-point sum
|r - eta|^k + (r + eta)^k and every cell integral is closed form.

Potentials of piecewise-constant densities are assembled from per-cell
integrals of Theta. Far cells use 8-point Gauss-Legendre; cells within two
widths of the evaluation radius use a graded Gauss rule in the distance
|eta - r|, which absorbs the integrable |eta - r|^(k+N-1) (or logarithmic)
behaviour of Theta at the diagonal.
"""

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .hypergeom import _f21
from .model import RadialDensity, RadialGrid, level_set_radius, mass_function, surface_area
from .special import gamma

FAR_NODES = 8
GEOM_NODES = 12
GEOM_RATIO = 0.25
GEOM_LEVELS = 22
NEAR_WIDTHS = 2.0
ROW_CHUNK = 64


def _hyper_params(N, k):
    return -k / 2.0, (N - 1) / 2.0, float(N - 1)


def _vartheta_prefactor(N):
    # 2^(N-2) sigma_{N-1} B(b, b) with b = (N-1)/2
    b = (N - 1) / 2.0
    return 2.0 ** (N - 2) * surface_area(N - 1) * gamma(b) ** 2 / gamma(2 * b)


def _theta_from_gap(N, k, big, gap):
    """Theta(r, eta) from the larger radius ``big`` and the gap |r - eta|.

    Working with the gap keeps 1 - u exact when eta is very close to r.
    """
    big = np.asarray(big, dtype=float)
    gap = np.asarray(gap, dtype=float)
    if N == 1:
        small = big - gap
        return gap**k + (big + small) ** k
    a, b, c = _hyper_params(N, k)
    one_minus_u = gap / big
    u = 1.0 - one_minus_u
    z = 4.0 * u / (1.0 + u) ** 2
    w = (one_minus_u / (1.0 + u)) ** 2
    vt = _vartheta_prefactor(N) * (1.0 + u) ** k * _f21(a, b, c, z, np.maximum(w, 1e-300))
    return big**k * vt


def vartheta(u, params):
    """Angular kernel on the unit sphere, Theta(1, u) for 0 <= u < 1."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u >= 1):
        raise ValueError("u must lie in [0, 1)")
    out = _theta_from_gap(params.N, params.k, np.ones_like(u), 1.0 - u)
    return float(out) if out.ndim == 0 else out


def theta(r, eta, params):
    """Spherical average Theta_k(r, eta) of |x - y|^k with |x| = r, |y| = eta.

    Symmetric in (r, eta). On the diagonal it is finite only when
    k > 1 - N.
    """
    r = np.asarray(r, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(r <= 0) or np.any(eta <= 0):
        raise ValueError("radii must be positive")
    gap = np.abs(r - eta)
    if params.k <= 1 - params.N and np.any(gap == 0):
        raise ValueError("Theta is infinite on the diagonal r = eta for k <= 1 - N")
    out = _theta_from_gap(params.N, params.k, np.maximum(r, eta), gap)
    return float(out) if out.ndim == 0 else out


# ------------------------------------------------------------ cell integrals

def _exact_1d_cells(r, lo, hi, k):
    """int_lo^hi |r - eta|^k + (r + eta)^k d eta, vectorised."""
    def prim(t):
        return np.sign(t) * np.abs(t) ** (k + 1) / (k + 1)

    direct = prim(hi - r) - prim(lo - r)
    mirror = ((r + hi) ** (k + 1) - (r + lo) ** (k + 1)) / (k + 1)
    return direct + mirror


@lru_cache(maxsize=None)
def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _graded_pieces(N, k, r, t0, t1, side):
    """int over gap t in [t0, t1] of Theta(r, r + side*t) (r + side*t)^(N-1) dt.

    Arrays r, t0, t1, side share one shape. The gap range is split
    geometrically toward t0 (ratio GEOM_RATIO, GEOM_LEVELS levels) with a
    Gauss rule on each level; the innermost sliver [t0, t0 + eps] is closed
    with the leading-order behaviour c t^(k+N-1) of the integrand.
    """
    x, wq = _gauss(GEOM_NODES)
    span = t1 - t0
    levels = GEOM_RATIO ** np.arange(GEOM_LEVELS + 1)
    lo_off = span[:, None] * levels[None, 1:]
    hi_off = span[:, None] * levels[None, :-1]
    width = hi_off - lo_off
    t = t0[:, None, None] + lo_off[:, :, None] + width[:, :, None] * x
    rr = r[:, None, None]
    sd = side[:, None, None]
    eta = rr + sd * t
    big = np.where(sd > 0, eta, rr)
    f = _theta_from_gap(N, k, np.broadcast_to(big, t.shape), t) * eta ** (N - 1)
    body = np.sum(np.sum(f * wq, axis=2) * width, axis=1)

    eps = span * levels[-1]
    te = t0 + eps
    eta_e = r + side * te
    fe = _theta_from_gap(N, k, np.where(side > 0, eta_e, r), te) * eta_e ** (N - 1)
    alpha = k + N - 1
    if alpha < 0:
        tail = fe / te**alpha * (te ** (alpha + 1) - t0 ** (alpha + 1)) / (alpha + 1)
    else:
        tail = fe * eps
    return body + tail


def _far_block(N, k, r, lo, hi):
    x, wq = _gauss(FAR_NODES)
    width = hi - lo
    eta = np.broadcast_to(lo[None, :, None] + width[None, :, None] * x, (r.size, lo.size, x.size))
    rr = np.broadcast_to(r[:, None, None], eta.shape)
    big = np.maximum(rr, eta)
    gap = np.abs(rr - eta)
    vals = _theta_from_gap(N, k, big, gap) * eta ** (N - 1)
    return np.sum(vals * wq, axis=2) * width[None, :]


def cell_integral_matrix(r_eval, edges, N, k):
    """Matrix M[i, j] = int over cell j of Theta(r_i, eta) eta^(N-1) d eta."""
    r_eval = np.atleast_1d(np.asarray(r_eval, dtype=float))
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1], edges[1:]
    if N == 1:
        return _exact_1d_cells(r_eval[:, None], lo[None, :], hi[None, :], k)

    width = hi - lo
    out = np.empty((r_eval.size, lo.size))
    for start in range(0, r_eval.size, ROW_CHUNK):
        rows = r_eval[start : start + ROW_CHUNK]
        dist = np.maximum(np.maximum(lo[None, :] - rows[:, None], rows[:, None] - hi[None, :]), 0.0)
        near = dist < NEAR_WIDTHS * width[None, :]
        block = np.zeros((rows.size, lo.size))
        far_cols = ~np.all(near, axis=0)
        if np.any(far_cols):
            fb = _far_block(N, k, rows, lo[far_cols], hi[far_cols])
            block[:, far_cols] = fb
        block[near] = 0.0

        ii, jj = np.nonzero(near)
        if ii.size:
            r = rows[ii]
            a, b = lo[jj], hi[jj]
            inside = (a < r) & (r < b)
            right = b <= r  # cell entirely left of r: eta = r - t
            # pieces: (r, t0, t1, side, pair index)
            pr, pt0, pt1, ps, pidx = [], [], [], [], []
            # cell left of r
            sel = right & ~inside
            pr.append(r[sel]); pt0.append(r[sel] - b[sel]); pt1.append(r[sel] - a[sel])
            ps.append(-np.ones(sel.sum())); pidx.append(np.nonzero(sel)[0])
            # cell right of r
            sel = (a >= r) & ~inside
            pr.append(r[sel]); pt0.append(a[sel] - r[sel]); pt1.append(b[sel] - r[sel])
            ps.append(np.ones(sel.sum())); pidx.append(np.nonzero(sel)[0])
            # cell containing r: split at r
            sel = inside
            idx = np.nonzero(sel)[0]
            pr.append(r[sel]); pt0.append(np.zeros(sel.sum())); pt1.append(r[sel] - a[sel])
            ps.append(-np.ones(sel.sum())); pidx.append(idx)
            pr.append(r[sel]); pt0.append(np.zeros(sel.sum())); pt1.append(b[sel] - r[sel])
            ps.append(np.ones(sel.sum())); pidx.append(idx)

            pr, pt0, pt1, ps, pidx = (np.concatenate(v) for v in (pr, pt0, pt1, ps, pidx))
            keep = pt1 > pt0
            vals = _graded_pieces(N, k, pr[keep], pt0[keep], pt1[keep], ps[keep])
            acc = np.zeros(ii.size)
            np.add.at(acc, pidx[keep], vals)
            block[ii, jj] = acc
        out[start : start + rows.size] = block
    return out


@lru_cache(maxsize=32)
def _unit_center_matrix(N, k, n):
    edges = np.arange(n + 1, dtype=float)
    m = cell_integral_matrix(edges[:-1] + 0.5, edges, N, k)
    m.setflags(write=False)
    return m


class ThetaKernel:
    """Cached cell-integrated kernel for one (N, k).

    On a uniform grid with spacing h the centre-to-cell matrix equals
    h^(k+N) times the matrix for unit spacing, so one matrix per cell count
    serves every r_max.
    """

    def __init__(self, params):
        self.params = params

    def __call__(self, r, eta):
        return theta(r, eta, self.params)

    def center_matrix(self, grid):
        p = self.params
        return _unit_center_matrix(p.N, float(p.k), grid.n) * grid.dr ** (p.k + p.N)


@dataclass(frozen=True)
class PotentialProfile:
    grid: RadialGrid
    raw_riesz: np.ndarray
    k: float
    source: RadialDensity = field(repr=False, default=None)

    @property
    def values(self):
        """S_k = raw_riesz / k."""
        return self.raw_riesz / self.k

    @property
    def radii(self):
        return self.grid.centers


def raw_potential(values, grid, params):
    """|.|^k * rho at the cell centres, for any nonnegative cell values."""
    kern = ThetaKernel(params).center_matrix(grid)
    return kern @ np.asarray(values, dtype=float)


def _require_unit_mass(rho):
    if abs(rho.mass - 1.0) > 1e-10:
        raise ValueError(f"density must have unit mass, got {rho.mass!r}")


def riesz_potential(rho, params):
    """Riesz potential of a normalized radial density at its cell centres."""
    if rho.N != params.N:
        raise ValueError(f"density dimension {rho.N} != params.N {params.N}")
    _require_unit_mass(rho)
    raw = raw_potential(rho.values, rho.grid, params)
    return PotentialProfile(rho.grid, raw, params.k, rho)


def riesz_potential_at(rho, params, radii):
    """|.|^k * rho at arbitrary radii (may lie beyond the grid)."""
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any(radii < 0):
        raise ValueError("radii must be nonnegative")
    edges = rho.grid.edges
    if params.k <= 1 - params.N:
        v = rho.values
        jumps = np.nonzero(np.abs(np.diff(v)) > 0)[0] + 1
        hit = np.isin(np.round(radii / rho.grid.dr, 12), jumps.astype(float))
        if np.any(hit):
            warnings.warn(
                "evaluation radius coincides with a density jump in the singular "
                "kernel range; quadrature accuracy is reduced there",
                RuntimeWarning,
                stacklevel=2,
            )
    mat = cell_integral_matrix(radii, edges, params.N, params.k)
    return mat @ rho.values


# ------------------------------------------------------- estimates and bounds

def estimate_constant_C1(params):
    """Constant of the bound |x|^k * rho <= C1 |x|^k for k > 1 - N."""
    N, k = params.N, params.k
    if not k > 1 - N:
        raise ValueError("C1 applies only for k > 1 - N")
    a, b, c = _hyper_params(N, k)
    return 2.0 ** (N - 2) * surface_area(N - 1) * gamma(b) * gamma(c - a - b) / gamma(c - a)


def estimate_constant_C2(params):
    """Constant of the bound with the far-field factor T_k, for k <= 1 - N.

    In 1D the angular average is |r - eta|^k + (r + eta)^k <= 2 r^k T_k, so
    C2 = 2 there.
    """
    N, k = params.N, params.k
    if params.kernel_branch == "regular":
        raise ValueError("C2 applies only for k <= 1 - N")
    if N == 1:
        return 2.0
    a, b, c = _hyper_params(N, k)
    base = 2.0 ** (N - 2) * surface_area(N - 1)
    if params.kernel_branch == "critical":
        g = gamma(N / 2.0 - 0.5) ** 2 / gamma(N - 1.0)
        factor = (N - 1) * gamma(float(N)) / (2.0 * gamma((N + 1) / 2.0) ** 2)
        return base * g * max(1.0, factor)
    return base * gamma(c - b) * gamma(a + b - c) / gamma(a)


def far_field_factor(x, R, params):
    """T_k(|x|, R) for |x| > R (k <= 1 - N)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= R):
        raise ValueError("T_k is defined for |x| > R")
    ratio = (x + R) / (x - R)
    if params.kernel_branch == "critical":
        return 1.0 + np.log(ratio)
    return ratio ** (1.0 - params.k - params.N)


@dataclass
class DecayReport:
    radii: np.ndarray
    upper_ratio: np.ndarray
    upper_constant: float
    lower_ratio: np.ndarray
    branch: str
    tolerance: float
    upper_violations: int
    lower_violations: int

    @property
    def passed(self):
        return self.upper_violations == 0 and self.lower_violations == 0


def decay_envelope_check(S, R_support, params, rho=None, tol=1e-6):
    """Compare a potential beyond the support with the decay envelopes.

    Upper: raw / r^k <= C1 (k > 1 - N) or raw / (T_k(r, R) r^k) <= C2.
    Lower: raw / ((r + 1)^k M_rho(1)) >= 1. Both with slack factor 1 + tol.
    In the T_k branch the first cell beyond R is reported but not counted.
    """
    rho = rho if rho is not None else S.source
    if rho is None:
        raise ValueError("the source density is needed for the lower envelope")
    r = S.grid.centers
    sel = r > R_support
    radii = r[sel]
    raw = S.raw_riesz[sel]
    k = params.k
    branch = params.kernel_branch
    if branch == "regular":
        const = estimate_constant_C1(params)
        upper = raw / radii**k
        counted = np.ones(radii.size, dtype=bool)
    else:
        const = estimate_constant_C2(params)
        upper = raw / (far_field_factor(radii, R_support, params) * radii**k)
        counted = np.ones(radii.size, dtype=bool)
        counted[:1] = False
    m1 = mass_function(rho, min(1.0, rho.grid.r_max))
    lower = raw / ((radii + 1.0) ** k * m1)
    up_bad = int(np.sum((upper > const * (1 + tol)) & counted))
    lo_bad = int(np.sum(lower < 1.0 / (1 + tol)))
    return DecayReport(radii, upper, const, lower, branch, tol, up_bad, lo_bad)


def cross_range_K(H, params, q):
    """Growth function K_{k,q,N}(H) of the cross-range interaction bound."""
    N, k, m = params.N, params.k, params.m
    if not 0 <= q < m / N:
        raise ValueError(f"q must lie in [0, m/N) = [0, {m / N}), got {q}")
    if not H >= 1:
        raise ValueError("H must be >= 1")
    if params.kernel_branch == "critical":
        return H ** (1 - q) * (2 + math.log(1 + H**q)) + H ** (q * (N - 1))
    return H ** (1 - q * (k + N)) + H ** (-k * q)


def cross_range_ratio(rho, H, params, q):
    """Cross-range interaction over M_rho(A_H) K(H).

    The numerator is the integral of |x - y|^k rho(x) rho(y) over
    |x| >= A_H, |y| < A_H, with A_H the radius of {rho >= H}.
    """
    A = level_set_radius(rho, H)
    if A == 0:
        return 0.0
    if H ** (-q) < 2 * A:
        raise ValueError(f"H^(-q) = {H ** (-q)} < 2 A_H = {2 * A}: outside the range of the cross-range estimate")
    K = cross_range_K(H, params, q)
    grid = rho.grid
    n_in = int(round(A / grid.dr))
    inner = rho.values[:n_in]
    nodes, wts = _outer_nodes(grid, n_in)
    pot_in = cell_integral_matrix(nodes, grid.edges[: n_in + 1], params.N, params.k) @ inner
    dens = rho.values[np.minimum((nodes / grid.dr).astype(int), grid.n - 1)]
    cross = surface_area(params.N) * np.sum(pot_in * dens * nodes ** (params.N - 1) * wts)
    m_in = mass_function(rho, A)
    return float(cross / (m_in * K))


def _outer_nodes(grid, n_in):
    """Quadrature nodes over the cells n_in.. of a radial grid.

    The potential of the inner part has a power-type kink at the inner
    edge, so the first outer cell is split geometrically toward it.
    """
    x, w = _gauss(FAR_NODES)
    e = grid.edges
    a, b = e[n_in:-1], e[n_in + 1 :]
    nodes = [(a[:, None] + (b - a)[:, None] * x).ravel()]
    wts = [((b - a)[:, None] * w).ravel()]
    if a.size:
        lo, h = a[0], b[0] - a[0]
        cuts = h * GEOM_RATIO ** np.arange(GEOM_LEVELS + 1)[::-1]
        cuts = np.concatenate([[0.0], cuts])
        seg_a, seg_b = cuts[:-1], cuts[1:]
        nodes[0] = nodes[0][FAR_NODES:]
        wts[0] = wts[0][FAR_NODES:]
        nodes.append((lo + seg_a[:, None] + (seg_b - seg_a)[:, None] * x).ravel())
        wts.append(((seg_b - seg_a)[:, None] * w).ravel())
    return np.concatenate(nodes), np.concatenate(wts)


def fractional_constant(N, s):
    """Constant c_{N,s} with c_{N,s} (-Delta)^s S_k = rho, k = 2s - N."""
    if not 0 < s < N / 2:
        raise ValueError(f"s must lie in (0, N/2) = (0, {N / 2}), got {s}")
    return (2 * s - N) * gamma(N / 2 - s) / (math.pi ** (N / 2) * 4**s * gamma(s))


def fractional_constant_k(N, k):
    """Same constant written in terms of the kernel exponent k."""
    if not -N < k < 0:
        raise ValueError("k must lie in (-N, 0)")
    return k * gamma(-k / 2) / (math.pi ** (N / 2) * 2 ** (k + N) * gamma((k + N) / 2))


# ------------------------------------------------------------ 1D line grids

def line_pair_weights(n, h, k):
    """A[d] = int over two cells at index distance d of |x - y|^k dx dy.

    Uses the double antiderivative G(t) = |t|^(k+2) / ((k+1)(k+2)):
    A[d] = G((d+1)h) - 2 G(dh) + G((d-1)h). For d >= 8 the second difference
    is summed as a binomial series to avoid cancellation.
    """
    if not -1 < k < 0:
        raise ValueError("line kernels need k in (-1, 0)")
    p = k + 2.0
    scale = h**p / ((k + 1.0) * p)
    d = np.arange(n, dtype=float)
    out = np.empty(n)
    near = d < 8
    dn = d[near]
    out[near] = (dn + 1) ** p - 2 * dn**p + np.abs(dn - 1) ** p
    df = d[~near]
    if df.size:
        acc = np.zeros_like(df)
        coef = p * (p - 1) / 2.0
        for j in range(2, 40, 2):
            acc += 2.0 * coef * df ** (p - j)
            coef *= (p - j) * (p - j - 1) / ((j + 1.0) * (j + 2.0))
        out[~near] = acc
    return scale * out


@lru_cache(maxsize=16)
def _line_matrix(n, k):
    from scipy.linalg import toeplitz

    m = toeplitz(line_pair_weights(n, 1.0, k))
    m.setflags(write=False)
    return m


def line_pair_matrix(grid, k):
    """Symmetric matrix of cell-pair integrals of |x - y|^k on a line grid."""
    return _line_matrix(grid.n, float(k)) * grid.dx ** (k + 2)


def line_point_matrix(grid, k):
    """M[i, j] = int over cell j of |x_i - y|^k dy, x_i the cell centres."""
    x = grid.centers
    e = grid.edges

    def prim(t):
        return np.sign(t) * np.abs(t) ** (k + 1) / (k + 1)

    return prim(e[None, 1:] - x[:, None]) - prim(e[None, :-1] - x[:, None])
