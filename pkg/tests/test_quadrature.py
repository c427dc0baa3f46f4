import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from fermi_rpa.quadrature import (
    QuadratureError,
    QuadratureSpec,
    integrate_interval,
    integrate_semi_infinite,
)

TIGHT = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12)


def test_arctan_tail():
    val, err = integrate_semi_infinite(lambda m: 1.0 / (1.0 + m * m), TIGHT)
    assert abs(val - math.pi / 2) < 1e-12
    assert err < 1e-10


def test_polynomial_exact():
    # G7-K15 is exact for degree <= 22
    val, _ = integrate_interval(lambda x: x**10, 0.0, 2.0)
    assert abs(val - 2.0**11 / 11) < 1e-11


def test_breakpoint_kink():
    val, _ = integrate_interval(lambda x: np.abs(x - 0.3), 0.0, 1.0, TIGHT, breakpoints=[0.3])
    assert abs(val - (0.3**2 + 0.7**2) / 2) < 1e-14


@given(st.floats(0.05, 20.0))
def test_lorentzian_scale(lam):
    val, _ = integrate_semi_infinite(lambda m: lam / (m * m + lam * lam), TIGHT, breakpoints=[lam])
    assert abs(val - math.pi / 2) < 1e-10


@given(st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_damped_cosine(a, b):
    ours, _ = integrate_semi_infinite(lambda x: np.exp(-a * x) * np.cos(b * x), TIGHT)
    assert abs(ours - a / (a * a + b * b)) < 1e-10


@given(st.floats(0.2, 3.0))
def test_against_scipy_quad(c):
    def f(x):
        return 1.0 / (1.0 + x**4) * np.exp(-c * x)

    ours, _ = integrate_semi_infinite(f, TIGHT)
    ref, _ = integrate.quad(lambda x: math.exp(-c * x) / (1 + x**4), 0, np.inf, epsabs=1e-14, epsrel=1e-12)
    assert abs(ours - ref) < 1e-11


def test_resolvent_kernel_integrates_to_zero():
    # antiderivative -mu/(mu^2+lam^2) vanishes at both ends
    for lam in (0.1, 0.5, 1.0, 2.0):
        val, _ = integrate_semi_infinite(
            lambda m: (m * m - lam * lam) / (m * m + lam * lam) ** 2, TIGHT, breakpoints=[lam]
        )
        assert abs(val) < 1e-10


def test_budget_exhaustion_raises():
    spec = QuadratureSpec(abs_tol=0.0, rel_tol=0.0, max_subdivisions=4)
    with pytest.raises(QuadratureError):
        integrate_interval(lambda x: np.sin(50 * x) ** 2, 0.0, 10.0, spec)


def test_cutoff_transform():
    spec = QuadratureSpec(transform="none", cutoff=1.0)
    val, _ = integrate_semi_infinite(lambda x: 3 * x * x, spec)
    assert abs(val - 1.0) < 1e-13
    with pytest.raises(ValueError):
        integrate_semi_infinite(lambda x: x, QuadratureSpec(transform="none"))


def test_bad_spec():
    with pytest.raises(ValueError):
        QuadratureSpec(transform="tanh")
    with pytest.raises(ValueError):
        integrate_interval(lambda x: x, 1.0, 0.0)
