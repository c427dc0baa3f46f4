"""Bogoliubov kernel matrices for one interaction momentum k.

Matrix functions go through symmetric eigendecompositions.  Index lists
are ``I_k^+`` ascending followed by ``I_k^-`` ascending; the blocks are
filled entrywise from the patch labels, so the pairing between a plus
entry and its antipode never depends on list position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import FermiGeometry, ModelParams, Momentum3, as_momentum
from .patches import PatchSet, index_sets, pair_counts
from .quadrature import DEFAULT_SPEC, QuadratureSpec, integrate_semi_infinite

__all__ = [
    "KernelError",
    "KernelBundle",
    "build_kernel",
    "kernel_from_data",
    "matrix_abs",
    "spd_power",
    "sherman_morrison_inverse",
    "verify_integral_identities",
    "abcd_terms",
]

EIG_FLOOR = 1e-13


class KernelError(ArithmeticError):
    """A matrix that must be positive definite is not."""


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


def spd_power(A, s: float, floor: float = EIG_FLOOR) -> np.ndarray:
    """``A**s`` for symmetric positive definite ``A``.

    Eigenvalues below ``floor * trace(A)`` raise :class:`KernelError`.
    """
    A = _sym(np.asarray(A, dtype=float))
    w, V = np.linalg.eigh(A)
    tiny = floor * max(float(np.trace(A)), np.finfo(float).tiny)
    if w.min() <= tiny:
        raise KernelError(f"eigenvalue {w.min():.3e} below floor {tiny:.3e}")
    return _sym((V * w**s) @ V.T)


def matrix_abs(A, max_cond: float = 1e12) -> np.ndarray:
    """Polar absolute value ``|A| = (A^T A)^(1/2)``.

    This is the convention under which the block formulas of the
    occupation route hold; see :func:`build_kernel`.
    """
    A = np.asarray(A, dtype=float)
    P = A.T @ A
    c = np.linalg.cond(P)
    if not c < max_cond:
        raise KernelError(f"matrix close to singular (cond(A^T A) = {c:.3e})")
    return spd_power(P, 0.5)


def sherman_morrison_inverse(Ainv, v, w, tol: float = 1e-14) -> np.ndarray:
    """``(A + v w^T)^-1`` from ``A^-1``."""
    Ainv = np.asarray(Ainv, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    Av = Ainv @ v
    wA = w @ Ainv
    den = 1.0 + float(w @ Av)
    if abs(den) < tol:
        raise KernelError(f"Sherman-Morrison denominator {den:.3e} vanishes")
    return Ainv - np.outer(Av, wA) / den


@dataclass(frozen=True)
class IdentityReport:
    sqrt_dev: float
    inv_sqrt_dev: float
    tol: float

    @property
    def max_dev(self) -> float:
        return max(self.sqrt_dev, self.inv_sqrt_dev)

    @property
    def ok(self) -> bool:
        return self.max_dev < self.tol


def verify_integral_identities(A, tol: float = 1e-8, spec: QuadratureSpec | None = None) -> IdentityReport:
    """Check the resolvent integrals for ``A**(1/2)`` and ``A**(-1/2)`` entrywise."""
    A = _sym(np.asarray(A, dtype=float))
    n = A.shape[0]
    spec = spec or QuadratureSpec(abs_tol=1e-12, rel_tol=1e-12)
    eye = np.eye(n)

    def resolvent(mu):
        return np.linalg.inv(A[None, :, :] + (mu * mu)[:, None, None] * eye[None])

    root = spd_power(A, 0.5)
    inv_root = spd_power(A, -0.5)
    d_sqrt = 0.0
    d_inv = 0.0
    for i in range(n):
        for j in range(i, n):
            def f_sqrt(mu, i=i, j=j):
                return eye[i, j] - mu * mu * resolvent(mu)[:, i, j]

            def f_inv(mu, i=i, j=j):
                return resolvent(mu)[:, i, j]

            v1 = 2.0 / math.pi * integrate_semi_infinite(f_sqrt, spec)[0]
            v2 = 2.0 / math.pi * integrate_semi_infinite(f_inv, spec)[0]
            d_sqrt = max(d_sqrt, abs(v1 - root[i, j]))
            d_inv = max(d_inv, abs(v2 - inv_root[i, j]))
    return IdentityReport(d_sqrt, d_inv, tol)


@dataclass(frozen=True)
class KernelBundle:
    """Kernel data for one k.

    ``index_list`` holds the patch labels (plus half first), ``lambdas`` and
    ``counts`` the matching lambda_alpha and n_alpha**2.
    """

    k: Momentum3 | None
    index_list: tuple[int, ...]
    n_plus: int
    lambdas: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    g: float
    E: np.ndarray = field(repr=False)
    S1: np.ndarray = field(repr=False)
    K: np.ndarray = field(repr=False)
    cosh2Kminus1: np.ndarray = field(repr=False)
    dropped: tuple[int, ...] = ()
    # Plus-half position paired with each position of index_list.
    plus_position: tuple[int, ...] = ()

    @property
    def plus(self) -> tuple[int, ...]:
        return self.index_list[: self.n_plus]

    @property
    def minus(self) -> tuple[int, ...]:
        return self.index_list[self.n_plus:]

    def position(self, alpha: int) -> int:
        return self.index_list.index(alpha)

    def count(self, alpha: int) -> int:
        return int(self.counts[self.position(alpha)])

    def lam(self, alpha: int) -> float:
        return float(self.lambdas[self.position(alpha)])

    def diag(self, alpha: int) -> float:
        i = self.position(alpha)
        return float(self.cosh2Kminus1[i, i])

    def Q(self, mu):
        """``Q_k(mu) = 2 g sum_{I_k^+} n_a^2 lambda_a / (mu^2 + lambda_a^2)``."""
        mu = np.asarray(mu, dtype=float)
        lam = self.lambdas[: self.n_plus]
        c = self.counts[: self.n_plus]
        return 2.0 * self.g * (c * lam / (mu[..., None] ** 2 + lam**2)).sum(axis=-1)

    def integral_diag(self, alpha: int, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
        """Closed-form resolvent integral for ``(cosh 2K - 1)_{alpha alpha}``."""
        lam = self.lam(alpha)
        n2 = self.count(alpha)
        g = self.g

        def f(mu):
            m2 = mu * mu
            return 2.0 * g * n2 * (m2 - lam * lam) / (m2 + lam * lam) ** 2 / (1.0 + self.Q(mu))

        return integrate_semi_infinite(f, spec, breakpoints=[lam])[0] / math.pi

    def series_diag(self, alpha: int, m_max: int) -> float:
        """Partial cosh-series ``sum_{m=1}^{m_max} 2^(2m-1)/(2m)! (K^(2m))_{aa}``."""
        i = self.position(alpha)
        K2 = self.K @ self.K
        P = np.eye(len(K2))
        total = 0.0
        for m in range(1, m_max + 1):
            P = P @ K2
            total += 2.0 ** (2 * m - 1) / math.factorial(2 * m) * P[i, i]
        return total

    def dump(self, path) -> None:
        """Row-major text dump of K and cosh(2K) - 1 with 17 significant digits."""
        with open(path, "w") as fh:
            fh.write(f"# k={tuple(self.k) if self.k else None} g={self.g:.17g}\n")
            fh.write("# index_list " + " ".join(map(str, self.index_list)) + "\n")
            for name, A in (("K", self.K), ("cosh2Kminus1", self.cosh2Kminus1)):
                fh.write(f"# {name} {A.shape[0]}x{A.shape[1]}\n")
                for row in A:
                    fh.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def _blocks(lambdas, counts, half, g):
    n = np.sqrt(counts)
    B = g * np.outer(n, n)
    same = half[:, None] == half[None, :]
    D = np.diag(lambdas)
    W = np.where(same, B, 0.0)
    Wt = np.where(same, 0.0, B)
    return D, W, Wt


def kernel_from_data(lambdas_plus, counts_plus, g: float, k=None,
                     plus_labels=None, minus_labels=None, dropped=()) -> KernelBundle:
    """Kernel from raw ``(lambda_alpha, n_alpha**2)`` on the plus half.

    ``minus_labels[i]`` is the antipode of ``plus_labels[i]``; both default
    to ``1..m`` and ``m+1..2m``.  The minus half is stored ascending.
    """
    lam_p = np.asarray(lambdas_plus, dtype=float)
    cnt_p = np.asarray(counts_plus, dtype=float)
    m = len(lam_p)
    if m == 0 or cnt_p.shape != lam_p.shape:
        raise ValueError("need matching non-empty lambda and count arrays")
    if np.any(lam_p <= 0) or np.any(cnt_p <= 0):
        raise ValueError("lambdas and counts must be positive")
    if g < 0:
        raise ValueError("coupling must be non-negative")
    plus_labels = list(plus_labels) if plus_labels is not None else list(range(1, m + 1))
    minus_labels = list(minus_labels) if minus_labels is not None else list(range(m + 1, 2 * m + 1))
    order = np.argsort(minus_labels, kind="stable")
    labels = tuple(int(a) for a in plus_labels) + tuple(int(minus_labels[i]) for i in order)
    lambdas = np.concatenate([lam_p, lam_p[order]])
    counts = np.concatenate([cnt_p, cnt_p[order]])
    half = np.array([1] * m + [-1] * m)
    D, W, Wt = _blocks(lambdas, counts, half, g)
    X = D + W - Wt
    Y = D + W + Wt
    try:
        Xh = spd_power(X, 0.5)
        E = spd_power(Xh @ Y @ Xh, 0.5)
        S1 = Xh @ spd_power(E, -0.5)
        # |S1^T|^2 = S1 S1^T; K is half its logarithm.
        w, V = np.linalg.eigh(_sym(S1 @ S1.T))
    except KernelError as exc:
        raise KernelError(f"kernel for k={k}: {exc}") from exc
    if w.min() <= 0:
        raise KernelError(f"kernel for k={k}: S1 is singular")
    kap = 0.5 * np.log(w)
    K = _sym((V * kap) @ V.T)
    C = _sym((V * (2.0 * np.sinh(kap) ** 2)) @ V.T)
    pos = tuple(range(m)) + tuple(int(i) for i in order)
    return KernelBundle(
        as_momentum(k) if k is not None else None,
        labels, m, lambdas, counts, float(g), E, S1, K, C, tuple(dropped), pos,
    )


def build_kernel(k, ps: PatchSet, params: ModelParams, geom: FermiGeometry | None = None) -> KernelBundle:
    """Kernel bundle for ``k`` in Gamma^nor.

    Patches of ``I_k^+`` with zero pair count are dropped together with
    their antipodes and listed in ``dropped``.
    """
    k = as_momentum(k)
    geom = geom or FermiGeometry.from_params(params)
    if params.vhat(k) <= 0:
        raise KernelError(f"V_k vanishes at k={k}; skip this momentum")
    plus, _ = index_sets(k, ps, params)
    counts = pair_counts(k, 1, ps, geom)
    kv = np.array(k, dtype=float)
    khat = kv / np.linalg.norm(kv)
    keep = [a for a in plus if counts[a] > 0]
    dropped = [a for a in plus if counts[a] == 0]
    dropped += [ps.antipode(a) for a in dropped]
    if not keep:
        raise KernelError(f"I_k is empty after dropping zero counts at k={k}")
    lam = [abs(float(khat @ ps.omega_hat[a - 1])) for a in keep]
    cnt = [int(counts[a]) for a in keep]
    return kernel_from_data(
        lam, cnt, params.coupling(k), k,
        plus_labels=keep, minus_labels=[ps.antipode(a) for a in keep],
        dropped=sorted(dropped),
    )


def abcd_terms(bundle: KernelBundle, alpha: int) -> tuple[float, float, float, float]:
    """The four functional-calculus matrix elements on the plus half.

    ``alpha`` may be a plus or a minus label; minus labels use their
    position in the antipodal pairing.
    """
    m = bundle.n_plus
    i = bundle.plus_position[bundle.position(alpha)]
    d = np.diag(bundle.lambdas[:m])
    n = np.sqrt(bundle.counts[:m])
    b = bundle.g * np.outer(n, n)
    d2b = d + 2.0 * b
    dh = spd_power(d, 0.5)
    dmh = spd_power(d, -0.5)
    eh = spd_power(d2b, 0.5)
    emh = spd_power(d2b, -0.5)
    P = dh @ d2b @ dh
    Pm = eh @ d @ eh
    A = dh @ spd_power(P, -0.5) @ dh
    B = eh @ spd_power(Pm, -0.5) @ eh
    C = dmh @ spd_power(P, 0.5) @ dmh
    Dm = emh @ spd_power(Pm, 0.5) @ emh
    return float(A[i, i]), float(B[i, i]), float(C[i, i]), float(Dm[i, i])
