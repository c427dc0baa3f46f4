import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from fermi_rpa.kernel import (
    KernelError,
    abcd_terms,
    build_kernel,
    kernel_from_data,
    matrix_abs,
    sherman_morrison_inverse,
    spd_power,
    verify_integral_identities,
)
from fermi_rpa.quadrature import QuadratureSpec, integrate_semi_infinite

TIGHT = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-12)


def random_spd(rng, n):
    A = rng.standard_normal((n, n))
    return A @ A.T + n * np.eye(n)


# -- elementary matrix functions -------------------------------------------------


def test_spd_power_examples():
    assert np.allclose(spd_power(np.eye(3), 0.37), np.eye(3))
    assert np.allclose(spd_power(np.diag([4.0, 9.0]), 0.5), np.diag([2.0, 3.0]), atol=1e-15)
    with pytest.raises(KernelError):
        spd_power(np.diag([1.0, -1.0]), 0.5)


@given(st.integers(0, 10_000), st.integers(1, 7))
def test_spd_sqrt_squares_back(seed, n):
    A = random_spd(np.random.default_rng(seed), n)
    r = spd_power(A, 0.5)
    assert np.linalg.norm(r @ r - A) <= 1e-12 * np.linalg.norm(A)


def test_matrix_abs_examples():
    assert np.allclose(matrix_abs(np.diag([-2.0, 3.0])), np.diag([2.0, 3.0]))
    c, s = math.cos(0.3), math.sin(0.3)
    assert np.allclose(matrix_abs(np.array([[c, -s], [s, c]])), np.eye(2), atol=1e-14)


@given(st.integers(0, 10_000))
def test_matrix_abs_polar(seed):
    A = np.random.default_rng(seed).standard_normal((4, 4)) + 3 * np.eye(4)
    P = matrix_abs(A)
    assert np.allclose(P, P.T, atol=0)
    assert np.linalg.norm(P @ P - A.T @ A) <= 1e-12 * np.linalg.norm(A.T @ A)
    # the transposed argument gives the other polar factor
    Q = matrix_abs(A.T)
    assert np.linalg.norm(Q @ Q - A @ A.T) <= 1e-12 * np.linalg.norm(A @ A.T)


def test_sherman_morrison_examples():
    e1 = np.array([1.0, 0.0])
    assert np.allclose(sherman_morrison_inverse(np.eye(2), e1, e1), np.diag([0.5, 1.0]))
    Ainv = np.array([[2.0, 0.1], [0.1, 3.0]])
    assert np.array_equal(sherman_morrison_inverse(Ainv, np.zeros(2), np.zeros(2)), Ainv)


@given(st.integers(0, 10_000), st.integers(1, 8))
def test_sherman_morrison_residual(seed, n):
    rng = np.random.default_rng(seed)
    A = random_spd(rng, n)
    v = rng.standard_normal(n)
    inv = sherman_morrison_inverse(np.linalg.inv(A), v, v)
    assert np.abs(inv @ (A + np.outer(v, v)) - np.eye(n)).max() < 1e-10


def test_identities_scalar_and_identity():
    r = verify_integral_identities(np.array([[4.0]]))
    assert r.ok and r.max_dev < 1e-10
    assert verify_integral_identities(np.eye(3)).max_dev < 1e-10


def test_identities_random_spd():
    rng = np.random.default_rng(7)
    for _ in range(3):
        A = random_spd(rng, 5) / 5
        assert verify_integral_identities(A).max_dev < 1e-8


# -- kernel bundles ----------------------------------------------------------------


def single_pair_closed_form(lam, n2, g):
    c = g * n2
    r = math.sqrt(lam / (lam + 2 * c))
    return 0.5 * (r + 1 / r) - 1


@given(st.floats(0.05, 1.0), st.integers(1, 200), st.floats(1e-4, 0.5))
def test_single_pair_matches_quadrature(lam, n2, g):
    kb = kernel_from_data([lam], [n2], g)
    exact = single_pair_closed_form(lam, n2, g)

    def f(mu):
        m2 = mu * mu
        return 2 * g * n2 * (m2 - lam * lam) / (m2 + lam * lam) ** 2 / (1 + 2 * g * n2 * lam / (m2 + lam * lam))

    quad = integrate_semi_infinite(f, TIGHT, breakpoints=[lam])[0] / math.pi
    assert kb.diag(1) == pytest.approx(exact, rel=1e-10, abs=1e-15)
    assert quad == pytest.approx(exact, rel=1e-8, abs=1e-14)
    assert kb.diag(2) == pytest.approx(exact, rel=1e-10, abs=1e-15)


def test_zero_coupling_gives_zero_kernel():
    kb = kernel_from_data([0.3, 0.7], [4, 9], 0.0)
    assert np.abs(kb.K).max() < 1e-14
    assert np.abs(kb.cosh2Kminus1).max() < 1e-14


bundle_data = st.integers(1, 6).flatmap(
    lambda m: st.tuples(
        arrays(float, m, elements=st.floats(0.05, 1.0)),
        arrays(np.int64, m, elements=st.integers(1, 60)),
        st.floats(1e-4, 0.05),
    )
)


@given(bundle_data)
def test_abcd_and_routes_agree(data):
    lam, cnt, g = data
    kb = kernel_from_data(lam, cnt, g)
    for a in range(1, len(lam) + 1):
        A, B, C, D = abcd_terms(kb, a)
        assert abs(A - D) <= 1e-9 * abs(A)
        assert abs(B - C) <= 1e-9 * abs(B)
        diag = kb.diag(a)
        assert diag == pytest.approx(0.25 * (A + B + C + D) - 1.0, rel=1e-8, abs=1e-13)
        assert kb.integral_diag(a, TIGHT) == pytest.approx(diag, rel=1e-8, abs=1e-13)
        # the series coefficients produce half of cosh 2K - 1
        assert kb.series_diag(a, 25) == pytest.approx(diag / 2, rel=1e-10, abs=1e-15)
        assert kb.diag(kb.minus[kb.plus.index(a)]) == pytest.approx(diag, rel=1e-10, abs=1e-15)


@given(bundle_data, st.randoms(use_true_random=False))
def test_relabeling_symmetry(data, rnd):
    lam, cnt, g = data
    m = len(lam)
    base = kernel_from_data(lam, cnt, g)
    plus = list(range(1, m + 1))
    minus = [m + i for i in plus]
    rnd.shuffle(minus)
    kb = kernel_from_data(lam, cnt, g, plus_labels=plus, minus_labels=minus)
    for a in plus:
        assert kb.diag(a) == pytest.approx(base.diag(a), rel=1e-10, abs=1e-16)
    # exchanging the halves leaves the diagonal invariant
    swap = kernel_from_data(lam, cnt, g, plus_labels=minus, minus_labels=plus)
    for a in plus:
        assert swap.diag(a) == pytest.approx(base.diag(a), rel=1e-10, abs=1e-16)


def test_series_zero_terms():
    kb = kernel_from_data([0.4, 0.9], [3, 5], 0.02)
    assert kb.series_diag(1, 0) == 0.0
    assert kb.series_diag(1, 1) == pytest.approx((kb.K @ kb.K)[0, 0], rel=1e-14)


def test_build_kernel_errors(engine8):
    p = engine8.params
    with pytest.raises(KernelError):
        build_kernel((3, 0, 0), engine8.ps, p)  # outside the support of V


def test_build_kernel_antipodal_layout(engine8):
    kb = build_kernel((0, 1, 1), engine8.ps, engine8.params, engine8.geom)
    assert list(kb.plus) == sorted(kb.plus)
    assert list(kb.minus) == sorted(kb.minus)
    for a in kb.plus:
        b = engine8.ps.antipode(a)
        assert kb.count(a) == kb.count(b) and kb.lam(a) == kb.lam(b)


def test_dump_roundtrip(tmp_path):
    kb = kernel_from_data([0.4, 0.9], [3, 5], 0.02, k=(0, 0, 1))
    path = tmp_path / "k.txt"
    kb.dump(path)
    rows = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    K = np.array([[float(x) for x in r.split()] for r in rows[:4]])
    assert np.array_equal(K, kb.K)
