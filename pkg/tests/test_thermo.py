import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermi_rpa.quadrature import QuadratureSpec, integrate_interval
from fermi_rpa.thermo import (
    Q_SR,
    ThermoParams,
    coulomb_sr_vhat,
    dv_nq,
    dv_nq_detail,
    dv_Q,
    lambda_integral_closed_form,
    thermo_nq,
)

TIGHT = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-12)


def coulomb(kF, R=2.5, e2=1.0):
    return ThermoParams(kF, R, coulomb_sr_vhat(e2, kF), e_coul=math.sqrt(e2))


def test_outside_range_is_zero():
    tp = ThermoParams(20, 2.5, lambda r: 1.0)
    assert thermo_nq(22.5, tp) == 0.0
    assert thermo_nq(17.0, tp) == 0.0
    assert thermo_nq(21.0, tp) > 0.0


@given(st.floats(0.01, 0.99), st.floats(0.0, 50.0))
def test_lambda_integral(lmin, mu):
    val = integrate_interval(
        lambda l: (mu * mu - l * l) / (mu * mu + l * l) ** 2, lmin, 1.0, TIGHT
    )[0]
    assert float(lambda_integral_closed_form(lmin, mu)) == pytest.approx(val, rel=1e-10, abs=1e-12)


@given(st.floats(0.0, 100.0))
def test_inner_edge_vanishes(mu):
    assert abs(float(lambda_integral_closed_form(1.0, mu))) < 1e-15


def test_thermo_symmetric_in_offset():
    tp = ThermoParams(30, 2.5, lambda r: 1.0)
    assert thermo_nq(31.0, tp) == pytest.approx(thermo_nq(29.0, tp), rel=1e-12)


def test_thermo_decreases_with_offset():
    tp = ThermoParams(30, 2.5, lambda r: 1.0)
    vals = [thermo_nq(30 + d, tp) for d in (0.25, 0.5, 1.0, 2.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_dv_Q_limits():
    tp = coulomb(50)
    assert float(dv_Q(1e3, 1.0, tp)) < 1e-4
    assert float(Q_SR(0.0)) == pytest.approx(4 * math.pi, rel=1e-15)
    with pytest.raises(ValueError):
        dv_Q(1.0, 0.0, tp)


def test_dv_Q_short_range_limit():
    mu = np.linspace(0.0, 5.0, 26)
    gaps = []
    for kF in (50.0, 100.0, 200.0):
        tp = coulomb(kF)
        gaps.append(np.abs(dv_Q(mu, 1.0, tp) - Q_SR(mu)).max())
    # O(1/kF) bound: kF * gap stays bounded and shrinks (measured rate is (k/kF)^2)
    scaled = [g * kF for g, kF in zip(gaps, (50.0, 100.0, 200.0))]
    assert scaled[0] < 0.05
    assert scaled[0] > scaled[1] > scaled[2]


def test_dv_zero_charge():
    tp = ThermoParams(50, 2.5, lambda r: 1.0, e_coul=0.0)
    assert dv_nq(50.5, "outside", tp) == 0.0


def test_dv_bad_arguments():
    tp = coulomb(50)
    with pytest.raises(ValueError):
        dv_nq(50.0, "outside", tp)
    with pytest.raises(ValueError):
        dv_nq(50.5, "sideways", tp)


def test_dv_sides_merge_at_high_density():
    gaps = []
    for kF in (50.0, 100.0):
        tp = coulomb(kF)
        out = dv_nq(kF + 0.5, "outside", tp, cutoff_R=2.5, q_fun="sr")
        inn = dv_nq(kF - 0.5, "inside", tp, cutoff_R=2.5, q_fun="sr")
        gaps.append(abs(out - inn) / (out + inn))
    assert gaps[1] < gaps[0]


def test_dv_tail_estimate_only_without_cutoff():
    tp = coulomb(50)
    _, tail_cut = dv_nq_detail(49.5, "inside", tp, cutoff_R=2.5)
    assert tail_cut == 0.0
