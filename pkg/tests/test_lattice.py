import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fermi_rpa.lattice import (
    KAPPA_INF,
    FermiGeometry,
    InteractionFourier,
    closed_shell_params,
    default_patch_count,
    enumerate_fermi_ball,
    half_space_member,
    half_space_mask,
    in_Q_epsilon,
    lambda_qk,
    min_positive_lambda,
    momentum_set_Cq,
    norm_sq_threshold,
)


def brute_count(kF):
    n = math.floor(kF)
    r2 = kF * kF
    return sum(
        1
        for x, y, z in itertools.product(range(-n, n + 1), repeat=3)
        if x * x + y * y + z * z <= r2
    )


@pytest.mark.parametrize("kF, N", [(1, 7), (2, 33), (0.5, 1)])
def test_ball_counts(kF, N):
    assert len(enumerate_fermi_ball(kF)) == N


@given(st.floats(0.01, 9.0))
def test_ball_matches_triple_loop(kF):
    assert len(enumerate_fermi_ball(kF)) == brute_count(kF)


def test_sqrt_radius_is_inclusive():
    assert norm_sq_threshold(math.sqrt(5.0)) == 5
    assert norm_sq_threshold(Fraction(5, 2)) == 6


def test_kappa_values():
    assert closed_shell_params(2, R=1.5).kappa == pytest.approx(2 * 33 ** (-1 / 3), abs=1e-12)
    assert closed_shell_params(1, R=1.5).kappa == pytest.approx(7 ** (-1 / 3), abs=1e-12)
    assert KAPPA_INF == pytest.approx(0.620350, abs=1e-6)


def test_half_space_examples():
    assert half_space_member((0, 0, 1))
    assert not half_space_member((0, -1, 0))
    assert not half_space_member((0, 0, 0))


@given(st.tuples(*[st.integers(-4, 4)] * 3))
def test_half_space_partition(k):
    kn = tuple(-c for c in k)
    if any(k):
        assert half_space_member(k) != half_space_member(kn)
    mask = half_space_mask(np.array([k]))
    assert bool(mask[0]) == half_space_member(k)


@pytest.mark.parametrize("q, k, lam", [((0, 0, 5), (0, 0, 1), 1.0), ((0, 0, 5), (1, 0, 0), 0.0), ((3, 4, 0), (1, 0, 0), 0.6)])
def test_lambda_examples(q, k, lam):
    assert lambda_qk(q, k) == pytest.approx(lam, abs=1e-15)


def test_q_epsilon_examples():
    g = FermiGeometry(7, 1.5)
    assert in_Q_epsilon((0, 0, 7), 0.5, g)
    assert not in_Q_epsilon((1, 1, 10), 0.5, g)
    assert lambda_qk((1, 1, 10), (1, 0, 0)) == pytest.approx(1 / math.sqrt(102))
    q = (1, 2, 9)
    assert in_Q_epsilon(q, 0.99 * min_positive_lambda(q, FermiGeometry(9, 2.5)), FermiGeometry(9, 2.5))


def test_default_patch_count():
    assert default_patch_count(515) == 8
    assert default_patch_count(2109) == 12
    assert default_patch_count(1) == 2


def test_interaction_fourier_validation():
    with pytest.raises(ValueError):
        InteractionFourier(1.5, {(0, 0, 1): 1.0})  # not inversion symmetric
    with pytest.raises(ValueError):
        InteractionFourier(1.0, {(0, 0, 1): 1.0, (0, 0, -1): 1.0})  # |k| = R is outside
    with pytest.raises(ValueError):
        InteractionFourier(1.5, {(0, 0, 1): -1.0, (0, 0, -1): -1.0})
    v = InteractionFourier.constant(2.0, 1.5)
    assert v((1, 0, 0)) == 2.0 and v((1, 1, 0)) == 2.0 and v((1, 1, 1)) == 0.0


def test_cq_deep_inside_is_empty():
    g = FermiGeometry(6, 1.5)
    assert momentum_set_Cq((0, 0, 1), g) == []


def test_cq_example_on_shell():
    g = FermiGeometry(3, 2.0)
    q = (0, 0, 3)
    assert (0, 0, 1) in momentum_set_Cq(q, g) or (0, 0, -1) in momentum_set_Cq(q, g)


@given(st.sampled_from(list(FermiGeometry(4, 2.5).shell.tolist())))
def test_cq_brute_force(q):
    g = FermiGeometry(4, 2.5)
    r2 = 16
    inside = lambda p: p[0] ** 2 + p[1] ** 2 + p[2] ** 2 <= r2
    q_in = inside(q)
    expect = set()
    for k in g.gamma_nor:
        for s in (1, -1):
            p = (q[0] - s * k[0], q[1] - s * k[1], q[2] - s * k[2])
            if inside(p) != q_in:
                expect.add(tuple(k))
    got = {tuple(k) for k in momentum_set_Cq(q, g)}
    assert got == expect


def test_shell_is_open_annulus():
    g = FermiGeometry(5, 1.5)
    d = np.abs(np.linalg.norm(g.shell, axis=1) - 5)
    assert d.max() < 1.5
