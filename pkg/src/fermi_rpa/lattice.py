"""Integer momentum sets: Fermi ball, shell, northern half-space and the
per-q interaction sets.

Momenta are integer triples.  Ball membership is always decided on the
integer ``|k|**2`` against an integer threshold, never in floating point.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Mapping, NamedTuple

import numpy as np

KAPPA_INF = (3.0 / (4.0 * math.pi)) ** (1.0 / 3.0)


class Momentum3(NamedTuple):
    x: int
    y: int
    z: int

    @property
    def norm_sq(self) -> int:
        return self.x * self.x + self.y * self.y + self.z * self.z

    @property
    def norm(self) -> float:
        return math.sqrt(self.norm_sq)

    def __neg__(self):
        return Momentum3(-self.x, -self.y, -self.z)


def as_momentum(k) -> Momentum3:
    x, y, z = (int(c) for c in k)
    return Momentum3(x, y, z)


def norm_sq_threshold(radius) -> int:
    """Largest integer ``n`` with ``n <= radius**2``.

    ``radius`` may be an int, a :class:`~fractions.Fraction` (exact) or a
    float.  A float is converted to its exact binary rational and its square
    is bumped up by one ulp-relative unit before flooring, so ``sqrt(5.0)``
    still admits points with norm_sq == 5.
    """
    if isinstance(radius, (int, Fraction)):
        r2 = Fraction(radius) ** 2
    else:
        r2 = Fraction(float(radius)) ** 2 * (1 + Fraction(1, 2**52))
    return math.floor(r2)


def strict_norm_sq_threshold(radius) -> int:
    """Largest integer ``n`` with ``n < radius**2`` (open ball)."""
    if isinstance(radius, (int, Fraction)):
        r2 = Fraction(radius) ** 2
    else:
        r2 = Fraction(float(radius)) ** 2 * (1 - Fraction(1, 2**52))
    n = math.floor(r2)
    return n - 1 if n == r2 else n


def _box(n_max: int) -> np.ndarray:
    r = math.isqrt(n_max)
    ax = np.arange(-r, r + 1, dtype=np.int64)
    g = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
    return g


def points_with_norm_sq_at_most(n_max: int) -> np.ndarray:
    """All integer triples with ``|k|**2 <= n_max``, lexicographically sorted."""
    if n_max < 0:
        return np.zeros((0, 3), dtype=np.int64)
    g = _box(n_max)
    return g[(g * g).sum(axis=1) <= n_max]


def enumerate_fermi_ball(kF) -> np.ndarray:
    """Lattice points with ``|k| <= kF`` as an ``(N, 3)`` int array."""
    if not kF > 0:
        raise ValueError("kF must be positive")
    return points_with_norm_sq_at_most(norm_sq_threshold(kF))


def half_space_member(k) -> bool:
    """Northern half-space: ``k3 > 0``, else ``k2 > 0``, else ``k1 > 0``."""
    x, y, z = k
    if z != 0:
        return z > 0
    if y != 0:
        return y > 0
    return x > 0


def half_space_mask(ks: np.ndarray) -> np.ndarray:
    ks = np.asarray(ks)
    x, y, z = ks[:, 0], ks[:, 1], ks[:, 2]
    return (z > 0) | ((z == 0) & (y > 0)) | ((z == 0) & (y == 0) & (x > 0))


def lambda_qk(q, k) -> float:
    """Direction cosine ``|k.q| / (|k||q|)``."""
    q = as_momentum(q)
    k = as_momentum(k)
    if q.norm_sq == 0 or k.norm_sq == 0:
        raise ValueError("lambda_qk needs nonzero q and k")
    dot = q.x * k.x + q.y * k.y + q.z * k.z
    return abs(dot) / math.sqrt(q.norm_sq * k.norm_sq)


@dataclass(frozen=True)
class InteractionFourier:
    """Non-negative Fourier coefficients supported in the open ball ``|k| < R``."""

    R: float
    entries: Mapping[Momentum3, float]

    def __post_init__(self):
        n_open = strict_norm_sq_threshold(self.R)
        clean = {}
        for k, v in self.entries.items():
            k = as_momentum(k)
            v = float(v)
            if v < 0:
                raise ValueError(f"negative Fourier coefficient at {k}: {v}")
            if k.norm_sq > n_open:
                raise ValueError(f"{k} lies outside the open ball of radius {self.R}")
            clean[k] = v
        for k, v in clean.items():
            if clean.get(-k) != v:
                raise ValueError(f"coefficients not inversion symmetric at {k}")
        object.__setattr__(self, "entries", clean)

    def __call__(self, k) -> float:
        return self.entries.get(as_momentum(k), 0.0)

    def scaled(self, s: float) -> "InteractionFourier":
        return InteractionFourier(self.R, {k: s * v for k, v in self.entries.items()})

    @classmethod
    def radial(cls, R: float, profile: Callable[[float], float]) -> "InteractionFourier":
        pts = points_with_norm_sq_at_most(strict_norm_sq_threshold(R))
        entries = {}
        for p in pts:
            k = as_momentum(p)
            if k.norm_sq == 0:
                continue
            entries[k] = float(profile(k.norm))
        return cls(R, entries)

    @classmethod
    def constant(cls, v: float, R: float) -> "InteractionFourier":
        return cls.radial(R, lambda r: v)

    @classmethod
    def zero(cls, R: float) -> "InteractionFourier":
        return cls(R, {})


def default_patch_count(N: int) -> int:
    """Nearest even integer to ``N**(1/3)`` (at least 2)."""
    c = N ** (1.0 / 3.0)
    m = 2 * round(c / 2)
    return max(2, int(m))


@dataclass(frozen=True)
class ModelParams:
    kF: float
    N: int
    kappa: float
    hbar: float
    M: int
    delta: float
    R: float
    vhat: InteractionFourier
    # Soft-constraint flag for N**(2 delta) <= M <= N**(2/3 - 2 delta).
    M_out_of_range: bool = False

    @property
    def belt(self) -> float:
        """Cutoff ``N**(-delta)`` on ``|k . omega_hat|`` for the index sets."""
        return self.N ** (-self.delta)

    def coupling(self, k) -> float:
        """``g_k = V_k / (2 hbar kappa N |k|)``."""
        k = as_momentum(k)
        return self.vhat(k) / (2.0 * self.hbar * self.kappa * self.N * k.norm)


def closed_shell_params(
    kF,
    M: int | None = None,
    delta: float = 1.0 / 12.0,
    R: float | None = None,
    vhat: InteractionFourier | None = None,
) -> ModelParams:
    """Derive N, kappa, hbar (and default M) from the Fermi radius."""
    if not 0.0 < delta < 1.0 / 6.0:
        raise ValueError(f"delta must lie in (0, 1/6), got {delta}")
    if vhat is None:
        if R is None:
            raise ValueError("need R or vhat")
        vhat = InteractionFourier.zero(R)
    if R is None:
        R = vhat.R
    if float(R) != float(vhat.R):
        raise ValueError("R disagrees with the support radius of vhat")
    N = int(len(enumerate_fermi_ball(kF)))
    if M is None:
        M = default_patch_count(N)
    if M < 2 or M % 2:
        raise ValueError(f"M must be even and >= 2, got {M}")
    kappa = float(kF) * N ** (-1.0 / 3.0)
    hbar = N ** (-1.0 / 3.0)
    lo, hi = N ** (2 * delta), N ** (2.0 / 3.0 - 2 * delta)
    out = not (lo <= M <= hi)
    if out:
        warnings.warn(
            f"M={M} outside [{lo:.3g}, {hi:.3g}] for N={N}, delta={delta:.4g}",
            stacklevel=2,
        )
    return ModelParams(float(kF), N, kappa, hbar, int(M), float(delta), float(R), vhat, out)


@dataclass(frozen=True)
class FermiGeometry:
    """Lattice sets attached to a Fermi radius and an interaction radius."""

    kF: float
    R: float
    kF2: int = field(init=False)
    R2_open: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "kF2", norm_sq_threshold(self.kF))
        object.__setattr__(self, "R2_open", strict_norm_sq_threshold(self.R))

    @classmethod
    def from_params(cls, params: ModelParams) -> "FermiGeometry":
        return cls(params.kF, params.R)

    def inside(self, k) -> bool:
        x, y, z = k
        return x * x + y * y + z * z <= self.kF2

    def inside_mask(self, ks: np.ndarray) -> np.ndarray:
        ks = np.asarray(ks)
        return (ks * ks).sum(axis=-1) <= self.kF2

    @cached_property
    def fermi_ball(self) -> np.ndarray:
        return points_with_norm_sq_at_most(self.kF2)

    @cached_property
    def shell(self) -> np.ndarray:
        """Points at distance < R from the Fermi sphere ``|k| = kF``."""
        lo = max(0.0, float(self.kF) - float(self.R))
        hi = float(self.kF) + float(self.R)
        pts = points_with_norm_sq_at_most(math.ceil(hi * hi))
        r = np.sqrt((pts * pts).sum(axis=1).astype(float))
        return pts[(r > lo) & (r < hi)]

    @cached_property
    def interaction_ball(self) -> np.ndarray:
        """Nonzero lattice points with ``|k| < R``."""
        pts = points_with_norm_sq_at_most(self.R2_open)
        return pts[(pts != 0).any(axis=1)]

    @cached_property
    def gamma_nor(self) -> list[Momentum3]:
        pts = self.interaction_ball
        return [as_momentum(p) for p in pts[half_space_mask(pts)]]


def momentum_set_Cq(q, geom: FermiGeometry) -> list[Momentum3]:
    """k in Gamma^nor with q+k or q-k on the opposite side of the Fermi sphere.

    For q outside the ball this is ``B_R n H^nor n ((B_F - q) u (B_F + q))``;
    for q inside, the same with the complement of the ball.
    """
    q = as_momentum(q)
    if q.norm_sq == 0:
        raise ValueError("q must be nonzero")
    q_in = geom.inside(q)
    out = []
    for k in geom.gamma_nor:
        plus = geom.inside((q.x + k.x, q.y + k.y, q.z + k.z))
        minus = geom.inside((q.x - k.x, q.y - k.y, q.z - k.z))
        if q_in:
            hit = (not plus) or (not minus)
        else:
            hit = plus or minus
        if hit:
            out.append(k)
    return out


def min_positive_lambda(q, geom: FermiGeometry) -> float:
    """Smallest nonzero ``lambda_{q,k}`` over the lattice ball ``|k| < R``."""
    q = as_momentum(q)
    best = math.inf
    for p in geom.interaction_ball:
        lam = lambda_qk(q, p)
        if lam > 0.0 and lam < best:
            best = lam
    return best


def in_Q_epsilon(q, epsilon: float, geom: FermiGeometry) -> bool:
    """True iff no lattice k with ``0 < |k| < R`` has ``lambda_{q,k}`` in (0, eps).

    Only lattice points are scanned; the continuum condition over the whole
    ball is stronger.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    q = as_momentum(q)
    if q.norm_sq == 0:
        raise ValueError("q must be nonzero")
    for p in geom.interaction_ball:
        lam = lambda_qk(q, p)
        if 0.0 < lam < epsilon:
            return False
    return True


def default_epsilon(q, geom: FermiGeometry) -> float:
    """Half the smallest positive lambda_{q,k} over the lattice scan."""
    return 0.5 * min_positive_lambda(q, geom)


def nonzero_momenta(ks: Iterable) -> list[Momentum3]:
    return [as_momentum(k) for k in ks if any(int(c) != 0 for c in k)]
