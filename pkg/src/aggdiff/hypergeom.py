"""Gauss hypergeometric function 2F1 on [0, 1) for positive parameters.

Two evaluation routes cover the interval:

* ``z <= 0.5``: the Gauss series, truncated once a term falls below
  1e-16 of the partial sum;
* ``z > 0.5``: the connection formulas that expand around z = 1 in powers
  of ``w = 1 - z`` (Abramowitz & Stegun 15.3.6, and 15.3.10/15.3.11 when
  ``c - a - b`` is an integer, where logarithms appear).

Callers near z = 1 can pass ``w`` directly so that ``1 - z`` never has to
be formed in floating point.
"""

import math

import numpy as np

from .special import digamma, gamma, rgamma

SERIES_SWITCH = 0.5
SERIES_TOL = 1e-16
MAX_TERMS = 100_000
# c - a - b closer than this to an integer is treated as that integer
INTEGER_TOL = 1e-12
# inside this band around an integer the non-integer connection formula
# loses digits (error ~ eps / |c-a-b-m|); quartic interpolation in c through
# five nodes m + s*step, s = -2..2, is used instead
NEAR_INTEGER_BAND = 1e-4
NEAR_INTEGER_STEP = 1e-4
_NODES = (-2.0, -1.0, 0.0, 1.0, 2.0)


def _series(a, b, c, z):
    z = np.asarray(z, dtype=float)
    total = np.ones_like(z)
    term = np.ones_like(z)
    for j in range(MAX_TERMS):
        term = term * ((a + j) * (b + j) / ((c + j) * (j + 1.0))) * z
        total = total + term
        if np.all(np.abs(term) <= SERIES_TOL * np.abs(total)):
            break
    else:
        raise RuntimeError(f"2F1 series did not converge in {MAX_TERMS} terms")
    return total


def _near_one_noninteger(a, b, c, w):
    d = c - a - b
    a1 = gamma(c) * gamma(d) * rgamma(c - a) * rgamma(c - b)
    a2 = gamma(c) * gamma(-d) * rgamma(a) * rgamma(b)
    out = a1 * _series(a, b, 1.0 - d, w)
    if a2 != 0.0:
        out = out + a2 * w**d * _series(c - a, c - b, 1.0 + d, w)
    return out


def _near_one_integer(a, b, m, w):
    """2F1(a, b; a+b+m; 1-w) for integer m >= 0."""
    c = a + b + m
    logw = np.log(w)
    finite = np.zeros_like(w)
    if m > 0:
        coef = gamma(m) * gamma(c) * rgamma(a + m) * rgamma(b + m)
        term = np.ones_like(w)
        for n in range(m):
            finite = finite + term
            if n < m - 1:
                term = term * ((a + n) * (b + n) / ((n + 1.0) * (1.0 - m + n))) * w
        finite = coef * finite

    pref = gamma(c) * rgamma(a) * rgamma(b)
    if pref == 0.0:
        return finite
    # terms t_n = (a+m)_n (b+m)_n / (n! (n+m)!) w^n
    t = np.full_like(w, 1.0 / math.factorial(m))
    psi1 = digamma(1.0)
    psi_nm = digamma(m + 1.0)
    psi_a = digamma(a + m)
    psi_b = digamma(b + m)
    acc = np.zeros_like(w)
    for n in range(MAX_TERMS):
        rest = -psi1 - psi_nm + psi_a + psi_b
        acc = acc + t * (logw + rest)
        bound = np.abs(t) * (np.abs(logw) + abs(rest) + 1.0)
        if n > 2 and np.all(bound <= SERIES_TOL * np.maximum(np.abs(acc), 1e-300)):
            break
        t = t * ((a + m + n) * (b + m + n) / ((n + 1.0) * (n + m + 1.0))) * w
        psi1 += 1.0 / (n + 1.0)
        psi_nm += 1.0 / (n + m + 1.0)
        psi_a += 1.0 / (a + m + n)
        psi_b += 1.0 / (b + m + n)
    return finite - (-w) ** m * pref * acc


def _near_one_exact_integer(a, b, m, w):
    if m >= 0:
        return _near_one_integer(a, b, m, w)
    # Euler transformation moves the exponent to -m > 0
    c = a + b + m
    return w**m * _near_one_integer(c - a, c - b, -m, w)


def _near_one(a, b, c, w):
    d = c - a - b
    m = round(d)
    off = d - m
    if abs(off) < INTEGER_TOL:
        return _near_one_exact_integer(a, b, m, w)
    if abs(off) < NEAR_INTEGER_BAND:
        h = NEAR_INTEGER_STEP
        t = off / h
        out = 0.0
        for j, sj in enumerate(_NODES):
            weight = 1.0
            for i, si in enumerate(_NODES):
                if i != j:
                    weight *= (t - si) / (sj - si)
            if sj == 0.0:
                val = _near_one_exact_integer(a, b, m, w)
            else:
                val = _near_one_noninteger(a, b, a + b + m + sj * h, w)
            out = out + weight * val
        return out
    return _near_one_noninteger(a, b, c, w)


def _f21(a, b, c, z, w=None):
    """Unvalidated 2F1; ``w`` optionally supplies 1 - z exactly."""
    z = np.asarray(z, dtype=float)
    w = 1.0 - z if w is None else np.asarray(w, dtype=float)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    w = np.atleast_1d(w)
    out = np.empty_like(z)

    low = z <= SERIES_SWITCH
    if np.any(low):
        out[low] = _series(a, b, c, z[low])
    if np.any(~low):
        out[~low] = _near_one(a, b, c, np.maximum(w[~low], 1e-300))
    return float(out[0]) if scalar else out


def _check(a, b, c, z):
    if a < 0 or b <= 0 or c <= 0:
        raise ValueError(f"need a >= 0, b > 0, c > 0; got a={a}, b={b}, c={c}")
    if c - b <= 0:
        raise ValueError(f"need c - b > 0 for the integral representation; got {c - b}")
    zz = np.asarray(z, dtype=float)
    if np.any(zz >= 1.0):
        raise ValueError("z must be < 1; use f21_limit for z -> 1")
    if np.any(zz < 0.0):
        raise ValueError("z must be >= 0")


def f21(a, b, c, z):
    """Gauss hypergeometric function F(a, b; c; z) for 0 <= z < 1.

    Accepts a scalar or array ``z``. F(a, b; c; 0) is exactly 1.
    """
    _check(a, b, c, z)
    return _f21(a, b, c, z)


def f21_limit(a, b, c):
    """Value of F(a, b; c; z) as z -> 1, finite when c > a + b."""
    if c <= a + b:
        raise ValueError(f"limit is infinite unless c > a + b (c={c}, a+b={a + b})")
    if a == 0:
        return 1.0
    return gamma(c) * gamma(c - a - b) * rgamma(c - a) * rgamma(c - b)


def f21_transformed(a, b, c, z):
    """Right-hand side of F(a,b;c;z) = (1-z)^(c-a-b) F(c-a, c-b; c; z)."""
    _check(a, b, c, z)
    if c - a <= 0:
        raise ValueError("need c - a > 0")
    z = np.asarray(z, dtype=float)
    val = (1.0 - z) ** (c - a - b) * _f21(c - a, c - b, c, z)
    return float(val) if np.ndim(val) == 0 else val


def f21_derivative(a, b, c, z):
    """dF/dz via (ab/c) (1-z)^(c-a-b-1) F(c-a, c-b; c+1; z)."""
    _check(a, b, c, z)
    z = np.asarray(z, dtype=float)
    val = (a * b / c) * (1.0 - z) ** (c - a - b - 1.0) * _f21(c - a, c - b, c + 1.0, z)
    return float(val) if np.ndim(val) == 0 else val


def h_integral(a, b, c, z, w=None):
    """H(a,b;c;z) = int_0^1 (1-zt)^(-a) (1-t)^(c-b-1) t^(b-1) dt.

    Equal to B(b, c-b) F(a, b; c; z).
    """
    _check(a, b, c, z)
    val = gamma(b) * gamma(c - b) / gamma(c) * _f21(a, b, c, z, w)
    return val


def extrapolate_limit(a, b, c, eps=1e-6):
    """Estimate F(a, b; c; 1) from values at z = 1 - eps, 1 - 2 eps, ...

    Near z = 1, F = F(1) + A e + B e^s + C e^(s+1) + ... with e = 1 - z and
    s = c - a - b, so four samples determine F(1) by a linear solve. The
    e and e^s terms merge when s is near 1 (a log term appears), which is
    rejected.
    """
    s = c - a - b
    if not s > 0:
        raise ValueError("the limit is finite only for c > a + b")
    if abs(s - 1.0) < 0.05:
        raise ValueError("c - a - b too close to 1 for power extrapolation")
    e = eps * np.array([1.0, 2.0, 4.0, 8.0])
    basis = np.stack([np.ones_like(e), e, e**s, e ** (s + 1.0)], axis=1)
    vals = np.array([f21(a, b, c, 1.0 - x) for x in e])
    return float(np.linalg.solve(basis, vals)[0])
