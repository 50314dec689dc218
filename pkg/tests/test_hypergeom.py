import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from aggdiff.hypergeom import (
    extrapolate_limit,
    f21,
    f21_derivative,
    f21_limit,
    f21_transformed,
    h_integral,
)
from aggdiff.special import gamma

# mpmath.hyp2f1 at 40 digits
FROZEN = [
    ((1.0, 1.0, 2.0, 0.5), 1.3862943611198906188),
    ((0.75, 1.0, 2.0, 0.9), 1.9451496658206708445),
    ((1.25, 0.5, 2.0, 0.99), 2.3930072656337463999),
    ((0.25, 1.0, 2.0, 0.999999), 1.3332925029236998076),
    ((0.5, 0.5, 1.0, 0.9), 1.6412644143423707998),
    ((1.5, 1.0, 3.0, 0.7), 1.66983579583402255),
    ((0.6, 1.3, 2.90001, 0.8), 1.3843755564091695814),
    ((0.6, 1.3, 1.8999899999999998, 0.95), 2.6470141157600805136),
    ((0.75, 1.0, 2.0, 0.9999999999), 3.9873508894964135859),
    ((1.25, 1.0, 2.0, 0.9999), 36.003600360037104655),
    ((0.2, 0.7, 1.4, 0.3), 1.0346667400265269802),
]


@pytest.mark.parametrize("args,ref", FROZEN)
def test_f21_against_frozen_mpmath(args, ref):
    assert f21(*args) == pytest.approx(ref, rel=1e-10)


def test_value_at_zero_is_exactly_one():
    assert f21(0.5, 1.0, 3.0, 0.0) == 1.0


def test_log_closed_form():
    assert f21(1, 1, 2, 0.5) == pytest.approx(-math.log(0.5) / 0.5, rel=1e-14)


def test_integral_representation_quadrature():
    # (0.75, 1, 2, 0.9): Gamma(2)/(Gamma(1)Gamma(1)) int_0^1 (1 - 0.9 t)^(-0.75) dt
    ref = integrate.quad(lambda t: (1 - 0.9 * t) ** -0.75, 0, 1, epsabs=0, epsrel=1e-13)[0]
    assert f21(0.75, 1.0, 2.0, 0.9) == pytest.approx(ref, rel=1e-10)


def test_h_integral_against_quadrature():
    ref = integrate.quad(lambda t: (1 - 0.5 * t) ** -0.25, 0, 1, epsabs=0, epsrel=1e-13)[0]
    assert ref == pytest.approx(1.081057179996371911, rel=1e-14)
    assert h_integral(0.25, 1.0, 2.0, 0.5) == pytest.approx(ref, rel=1e-10)


def test_h_integral_at_zero_is_beta():
    a, b, c = 0.4, 0.7, 2.1
    assert h_integral(a, b, c, 0.0) == pytest.approx(gamma(b) * gamma(c - b) / gamma(c), rel=1e-14)


def test_transformed_example():
    a, b, c, z = 1.25, 0.5, 2.0, 0.99
    assert abs(f21(a, b, c, z) - f21_transformed(a, b, c, z)) / f21(a, b, c, z) < 1e-9


def test_transformed_singular_bound():
    # c - a - b < 0: (1-z)^(a+b-c) F stays below Gamma(c)Gamma(a+b-c)/(Gamma(a)Gamma(b))
    a, b, c = 1.25, 1.0, 2.0
    bound = gamma(c) * gamma(a + b - c) / (gamma(a) * gamma(b))
    for z in 1 - np.logspace(-1, -10, 10):
        scaled = f21_transformed(a, b, c, z) * (1 - z) ** (a + b - c)
        assert scaled <= bound * (1 + 1e-12)
    assert scaled == pytest.approx(bound, rel=1e-2)


def test_limit_example():
    a, b, c = 0.5, 1.0001, 3.0
    want = gamma(3.0) * gamma(1.4999) / (gamma(2.5) * gamma(1.9999))
    assert f21_limit(a, b, c) == pytest.approx(want, rel=1e-14)
    assert f21_limit(a, b, c) == pytest.approx(1.3333, abs=2e-4)
    assert abs(f21(a, b, c, 1 - 1e-6) - f21_limit(a, b, c)) < 1e-5


def test_limit_with_a_zero():
    assert f21_limit(0.0, 0.7, 2.5) == 1.0


def test_rejections():
    with pytest.raises(ValueError):
        f21(0.5, 1.0, 2.0, 1.0)
    with pytest.raises(ValueError):
        f21(0.5, 2.0, 2.0, 0.5)
    with pytest.raises(ValueError):
        f21_limit(1.0, 1.0, 2.0)
    with pytest.raises(ValueError):
        extrapolate_limit(0.5, 0.5, 2.0)


admissible = st.tuples(
    st.floats(0.05, 1.5), st.floats(0.1, 2.0), st.floats(0.1, 2.0), st.floats(0.0, 0.999)
).map(lambda t: (t[0], t[1], max(t[1] + t[2], t[0] + 0.05), t[3]))


@settings(max_examples=300, deadline=None)
@given(admissible)
def test_transformation_identity(p):
    a, b, c, z = p
    assert f21_transformed(a, b, c, z) == pytest.approx(f21(a, b, c, z), rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(admissible)
def test_derivative_matches_central_differences(p):
    a, b, c, z = p
    z = min(max(z, 1e-4), 0.95)
    h = 1e-5
    fd = (f21(a, b, c, z + h) - f21(a, b, c, z - h)) / (2 * h)
    assert f21_derivative(a, b, c, z) == pytest.approx(fd, rel=1e-6)


@settings(max_examples=100, deadline=None)
@given(admissible)
def test_monotone_in_z(p):
    a, b, c, _ = p
    zs = np.linspace(0, 0.999, 40)
    vals = np.array([f21(a, b, c, z) for z in zs])
    assert np.all(np.diff(vals) > 0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 1.5), st.floats(0.1, 2.0), st.floats(0.05, 0.5))
def test_series_agrees_with_integral_form(a, b, z):
    c = b + 1.0 + 0.5 * a
    # endpoint powers go into the algebraic weight t^(b-1) (1-t)^(c-b-1)
    ref = integrate.quad(
        lambda t: (1 - z * t) ** -a, 0, 1, weight="alg", wvar=(b - 1, c - b - 1), epsabs=0, epsrel=1e-13
    )[0]
    assert h_integral(a, b, c, z) == pytest.approx(ref, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 1.0), st.floats(0.1, 1.0), st.floats(0.5, 2.5))
def test_increases_to_limit(a, b, s):
    c = a + b + s
    lim = f21_limit(a, b, c)
    assert f21(a, b, c, 1 - 1e-6) < lim
    assert f21(a, b, c, 0.5) < f21(a, b, c, 0.99) < lim * (1 + 1e-12)
