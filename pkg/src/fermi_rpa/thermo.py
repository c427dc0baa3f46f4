"""Continuum (infinite-volume, high-density) formulas.

``thermo_nq`` is the radial double integral obtained when the lattice sum
over k becomes an integral and the Fermi surface is locally flat.  The
``dv_*`` functions transcribe the Daniel-Vosko RPA momentum distribution
for the Coulomb gas, with an optional cutoff of the |k| range at R (the
short-range variant).  No spin factor is folded into either side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lattice import KAPPA_INF
from .occupation import lindhard
from .quadrature import QuadratureSpec, integrate_interval, integrate_semi_infinite

__all__ = [
    "ThermoParams",
    "coulomb_sr_vhat",
    "lambda_integral_closed_form",
    "thermo_nq",
    "dv_Q",
    "Q_SR",
    "dv_nq",
    "dv_nq_detail",
]

INNER_SPEC = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-11)
OUTER_SPEC = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-9)


@dataclass(frozen=True)
class ThermoParams:
    """Continuum model.  ``hbar`` defaults to ``1/kF``.

    ``hbar`` may be set to ``N**(-1/3)`` to match a finite lattice run.
    """

    kF: float
    R: float
    vhat_radial: Callable[[float], float]
    e_coul: float = 0.0
    hbar: float | None = None
    kappa: float = KAPPA_INF

    def __post_init__(self):
        if not self.kF > 0 or not self.R > 0:
            raise ValueError("kF and R must be positive")
        if self.hbar is None:
            object.__setattr__(self, "hbar", 1.0 / self.kF)

    def vhat(self, r: float) -> float:
        return float(self.vhat_radial(r)) if r < self.R else 0.0

    @property
    def alpha(self) -> float:
        """Coulomb coupling ``e^2 / (pi^2 kF)``."""
        return self.e_coul**2 / (math.pi**2 * self.kF)

    def q0_scale(self, r: float) -> float:
        """``Q^(0)(0)`` in continuum units: ``3 V / (2 kappa hbar kF)``."""
        return 3.0 * self.vhat(r) / (2.0 * self.kappa * self.hbar * self.kF)


def coulomb_sr_vhat(e2: float, kF: float, hbar: float | None = None, kappa: float = KAPPA_INF):
    """Radial ``V(k) = 8 kappa e^2 hbar kF^2 / (3 pi k^2)`` matched to the Coulomb formulas."""
    hb = 1.0 / kF if hbar is None else hbar
    c = 8.0 * kappa * e2 * hb * kF**2 / (3.0 * math.pi)
    return lambda r: c / (r * r)


def lambda_integral_closed_form(lmin: float, mu):
    """``int_{lmin}^1 (mu^2 - l^2)/(mu^2 + l^2)^2 dl``."""
    mu = np.asarray(mu, dtype=float)
    return 1.0 / (1.0 + mu * mu) - lmin / (lmin * lmin + mu * mu)


def _thermo_inner(r: float, Rq: float, tp: ThermoParams, spec: QuadratureSpec) -> float:
    lmin = Rq / r
    c0 = tp.q0_scale(r)

    def f(mu):
        return lambda_integral_closed_form(lmin, mu) / (1.0 + c0 * lindhard(mu))

    return integrate_semi_infinite(f, spec, breakpoints=[lmin])[0]


def thermo_nq(q_norm: float, tp: ThermoParams, inner: QuadratureSpec = INNER_SPEC,
              outer: QuadratureSpec = OUTER_SPEC) -> float:
    """Continuum n_q at ``|q| = q_norm`` (zero unless ``||q| - kF| < R``)."""
    Rq = abs(float(q_norm) - tp.kF)
    if Rq >= tp.R:
        return 0.0
    pref = 3.0 / (4.0 * math.pi * tp.hbar * tp.kF**3 * tp.kappa)

    def f(rs):
        return np.array([
            r * pref * tp.vhat(r) * _thermo_inner(r, Rq, tp, inner) if r > Rq else 0.0
            for r in rs
        ])

    return integrate_interval(f, Rq, tp.R, outer)[0]


def dv_Q(mu, k_norm: float, tp: ThermoParams):
    """Bracketed Daniel-Vosko function times ``2 pi``."""
    mu = np.asarray(mu, dtype=float)
    kF = tp.kF
    k = float(k_norm)
    if not k > 0:
        raise ValueError("k_norm must be positive")
    den = (kF - k / 2) ** 2 + kF**2 * mu * mu
    # log of ((kF + k/2)^2 + kF^2 mu^2) / den, numerator minus den = 2 kF k
    log = np.log1p(2.0 * kF * k / den)
    coef = (kF**2 * (1.0 + mu * mu) - k * k / 4.0) / (2.0 * k * kF)
    a = 1.0 + k / (2.0 * kF)
    b = 1.0 - k / (2.0 * kF)
    return 2.0 * math.pi * (1.0 + coef * log - mu * np.arctan2(a, mu) - mu * np.arctan2(b, mu))


def Q_SR(mu):
    """Short-range limit ``4 pi (1 - mu arctan(1/mu))``."""
    return 4.0 * math.pi * lindhard(mu)


def _dv_radial(k: float, num, tp: ThermoParams, q_fun: str, spec: QuadratureSpec) -> float:
    kF = tp.kF
    al = tp.alpha

    if q_fun == "dv":
        def Qf(mu):
            return dv_Q(mu, k, tp)
    elif q_fun == "sr":
        Qf = Q_SR
    else:
        raise ValueError(f"unknown Q function {q_fun!r}")

    def f(mu):
        return num(mu) / (k * k / kF**2 + al * Qf(mu))

    return integrate_semi_infinite(f, spec)[0]


def dv_nq_detail(q_norm: float, side: str, tp: ThermoParams, cutoff_R: float | None = None,
                 q_fun: str = "dv", inner: QuadratureSpec = INNER_SPEC,
                 outer: QuadratureSpec = OUTER_SPEC) -> tuple[float, float]:
    """``(value, tail_bound)`` of the Daniel-Vosko formulas.

    ``side="outside"`` uses the formula printed for ``|q| > kF``,
    ``side="inside"`` the two-term formula; the caller picks the side.
    ``cutoff_R`` truncates every |k| range.
    The semi-infinite second term of the inside formula is cut at
    ``50 kF``; ``tail_bound`` estimates the dropped part from the
    ``|k|^-3`` decay.
    """
    q = float(q_norm)
    kF = tp.kF
    if q == kF:
        raise ValueError("q_norm must differ from kF")
    if tp.e_coul == 0.0:
        return 0.0, 0.0
    al = tp.alpha
    kF2 = kF * kF

    def radial(lo, hi, make_num):
        if cutoff_R is not None:
            hi = min(hi, cutoff_R)
        if not hi > lo:
            return 0.0

        def f(ks):
            return np.array([k * _dv_radial(k, make_num(k), tp, q_fun, inner) for k in ks])

        return integrate_interval(f, lo, hi, outer)[0]

    tail = 0.0
    if side == "outside":
        def make_num(k):
            a = q - k / 2
            c = (q * q - kF2) / (2 * k)
            return lambda mu: a / (a * a + kF2 * mu * mu) - c / (c * c + kF2 * mu * mu)

        val = radial(q - kF, q + kF, make_num)
    elif side == "inside":
        def num1(k):
            a = q + k / 2
            c = (kF2 - q * q) / (2 * k)
            return lambda mu: a / (a * a + kF2 * mu * mu) - c / (c * c + kF2 * mu * mu)

        def num2(k):
            a = q + k / 2
            c = k / 2 - q
            return lambda mu: a / (a * a + kF2 * mu * mu) - c / (c * c + kF2 * mu * mu)

        val = radial(kF - q, kF + q, num1)
        top = 50.0 * kF
        val += radial(kF + q, top, num2)
        if cutoff_R is None or cutoff_R > top:
            edge = top * _dv_radial(top, num2(top), tp, q_fun, inner)
            tail = abs(edge) * top / 2.0
    else:
        raise ValueError(f"side must be 'outside' or 'inside', got {side!r}")
    return al / q * val, al / q * tail


def dv_nq(q_norm: float, side: str, tp: ThermoParams, cutoff_R: float | None = None,
          q_fun: str = "dv") -> float:
    return dv_nq_detail(q_norm, side, tp, cutoff_R, q_fun)[0]
