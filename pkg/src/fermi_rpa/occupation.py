"""Bosonized momentum distribution n_q and its asymptotic form.

Three equivalent routes evaluate the bosonic n_q for q inside a patch:
the diagonal of ``cosh(2K) - 1`` (``matrix``), its truncated power series
(``series``) and the resolvent integral with the finite-patch function
Q_k (``integral``).  The ``asymptotic`` route replaces Q_k by its
half-sphere limit and sums over the unrestricted set C^q.

Per-k contributions depend only on ``(k, alpha_q)`` and are cached, so a
full shell scan costs one kernel per k plus one integral per pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .kernel import KernelBundle, KernelError, build_kernel
from .lattice import (
    FermiGeometry,
    ModelParams,
    Momentum3,
    as_momentum,
    in_Q_epsilon,
)
from .patches import PatchSet, build_patchset
from .quadrature import QuadratureSpec, integrate_interval, integrate_semi_infinite

__all__ = [
    "ROUTES",
    "Contribution",
    "OccupationResult",
    "ScanResult",
    "OccupationEngine",
    "lindhard",
    "Q0",
    "half_sphere_closed_form",
    "half_sphere_quadrature",
    "ctilde_q",
    "nq_boson_matrix",
    "nq_boson_series",
    "nq_boson_integral",
    "nq_asymptotic",
    "quasiparticle_weight",
    "error_diagnostics",
    "Qk_vs_Q0_report",
]

ROUTES = ("matrix", "series", "integral", "asymptotic")
OCC_SPEC = QuadratureSpec(abs_tol=1e-15, rel_tol=1e-11)


def lindhard(mu):
    """``1 - mu * arctan(1/mu)``, with a series for large mu."""
    mu = np.asarray(mu, dtype=float)
    out = np.empty_like(mu)
    big = mu > 10.0
    small = ~big
    out[small] = 1.0 - mu[small] * np.arctan2(1.0, mu[small])
    # x/3 - x^2/5 + x^3/7 - ... with x = mu^-2, Horner form
    x = 1.0 / mu[big] ** 2
    acc = np.zeros_like(x)
    for j in range(12, 0, -1):
        acc = 1.0 / (2 * j + 1) - x * acc
    out[big] = x * acc
    return out


def Q0(mu, k, params: ModelParams):
    """Half-sphere limit ``2 pi kappa V_k (1 - mu arctan(1/mu))``."""
    return 2.0 * math.pi * params.kappa * params.vhat(k) * lindhard(mu)


def half_sphere_closed_form(mu: float) -> float:
    return 2.0 * math.pi * float(lindhard(np.array([mu]))[0])


def half_sphere_quadrature(mu: float, spec: QuadratureSpec | None = None) -> float:
    """``int_{half sphere} cos^2 / (cos^2 + mu^2) dOmega`` by polar quadrature."""
    spec = spec or QuadratureSpec(abs_tol=1e-13, rel_tol=1e-13)
    m2 = float(mu) ** 2

    def f(theta):
        c = np.cos(theta)
        c2 = c * c
        with np.errstate(invalid="ignore"):
            val = np.where(c2 + m2 > 0, c2 / (c2 + m2), 1.0)
        return np.sin(theta) * val

    return 2.0 * math.pi * integrate_interval(f, 0.0, math.pi / 2, spec)[0]


@dataclass(frozen=True)
class Contribution:
    """One k term of n_q for a fixed ``alpha_q``."""

    k: Momentum3
    sign: int
    count: int
    matrix: float
    series: float
    integral: float
    integral_q0: float  # lambda_{alpha,k} with Q_k replaced by Q_k^(0)
    asymptotic_same_k: float = math.nan  # lambda_{q,k} with Q_k^(0)


@dataclass
class OccupationResult:
    q: Momentum3
    alpha_q: int | None
    inside_fermi: bool
    in_Q_eps: bool | None
    contributions: list[Contribution] = field(default_factory=list)
    nq_matrix: float = 0.0
    nq_series: float = 0.0
    nq_integral: float = 0.0
    nq_asymptotic: float = 0.0
    diag_EII: float = 0.0
    diag_EIII: float = 0.0
    # k in the literal C~^q whose sign-consistent pair indicator vanishes
    sign_mismatch: list[Momentum3] = field(default_factory=list)
    # k in C^q with lambda_{q,k} = 0 (integral diverges; left out)
    skipped_lambda0: list[Momentum3] = field(default_factory=list)

    def route(self, name: str) -> float:
        return getattr(self, "nq_" + name)


@dataclass
class ScanResult:
    """Vectorized n_q over a list of q (rows follow ``q``)."""

    q: np.ndarray
    alpha: np.ndarray
    inside: np.ndarray
    values: dict[str, np.ndarray]
    sign_mismatches: int

    def sup(self, route: str, inside: bool) -> float:
        v = self.values[route][self.inside == inside]
        return float(v.max()) if len(v) else 0.0


def _clip(x: float) -> float:
    if x < -1e-12:
        raise ArithmeticError(f"negative occupation {x!r} beyond roundoff")
    return max(x, 0.0)


class OccupationEngine:
    """Caches kernels and per-(k, alpha) terms for one model.

    ``force_q0`` replaces Q_k by Q_k^(0) in the integral route (a
    diagnostic switch; the matrix route is unaffected).
    """

    def __init__(
        self,
        params: ModelParams,
        ps: PatchSet | None = None,
        geom: FermiGeometry | None = None,
        spec: QuadratureSpec = OCC_SPEC,
        m_max: int = 25,
        force_q0: bool = False,
    ):
        self.params = params
        self.geom = geom or FermiGeometry.from_params(params)
        self.ps = ps or build_patchset(params)
        self.spec = spec
        self.m_max = int(m_max)
        self.force_q0 = force_q0
        self._kernels: dict[Momentum3, KernelBundle | None] = {}
        self._terms: dict[tuple[Momentum3, int], Contribution] = {}
        self._asym: dict[tuple, float] = {}
        self.gamma = [k for k in self.geom.gamma_nor if params.vhat(k) > 0]
        self.gamma_arr = np.array(self.gamma, dtype=np.int64).reshape(-1, 3)

    # -- kernels and per-k terms ---------------------------------------------------

    def kernel(self, k) -> KernelBundle | None:
        k = as_momentum(k)
        if k not in self._kernels:
            try:
                self._kernels[k] = build_kernel(k, self.ps, self.params, self.geom)
            except KernelError as exc:
                if "vanishes" in str(exc) or "empty" in str(exc):
                    self._kernels[k] = None
                else:
                    raise
        return self._kernels[k]

    def _resolvent_integral(self, lam: float, Qfun) -> float:
        l2 = lam * lam

        def f(mu):
            m2 = mu * mu
            return (m2 - l2) / (m2 + l2) ** 2 / (1.0 + Qfun(mu))

        return integrate_semi_infinite(f, self.spec, breakpoints=[lam])[0] / math.pi

    def term(self, k, alpha: int) -> Contribution:
        k = as_momentum(k)
        key = (k, alpha)
        if key in self._terms:
            return self._terms[key]
        kb = self.kernel(k)
        if kb is None or alpha not in kb.index_list:
            raise KeyError(f"no kernel entry for patch {alpha} at k={k}")
        n2 = kb.count(alpha)
        lam = kb.lam(alpha)
        g = self.params.coupling(k)
        c0 = 2.0 * math.pi * self.params.kappa * self.params.vhat(k)

        def q0(mu):
            return c0 * lindhard(mu)

        i0 = g * self._resolvent_integral(lam, q0)
        integral = i0 if self.force_q0 else g * self._resolvent_integral(lam, kb.Q)
        sign = 1 if alpha in kb.plus else -1
        t = Contribution(
            k, sign, n2,
            0.5 * kb.diag(alpha) / n2,
            kb.series_diag(alpha, self.m_max) / n2,
            integral,
            i0,
        )
        self._terms[key] = t
        return t

    def asymptotic_term(self, q, k) -> float:
        """``g_k / pi * int (mu^2-l^2)/(mu^2+l^2)^2 / (1 + Q_k^(0))`` with l = lambda_{q,k}."""
        q = as_momentum(q)
        k = as_momentum(k)
        dot = abs(q.x * k.x + q.y * k.y + q.z * k.z)
        if dot == 0:
            raise ZeroDivisionError("lambda_{q,k} = 0")
        v = self.params.vhat(k)
        key = (dot, k.norm_sq, q.norm_sq, v)
        if key not in self._asym:
            lam = dot / math.sqrt(k.norm_sq * q.norm_sq)
            c0 = 2.0 * math.pi * self.params.kappa * v

            def q0(mu):
                return c0 * lindhard(mu)

            self._asym[key] = self._resolvent_integral(lam, q0)
        return self.params.coupling(k) * self._asym[key]

    # -- set membership --------------------------------------------------------------

    def _opposite(self, pts: np.ndarray, q_inside: np.ndarray) -> np.ndarray:
        """Points on the other side of the Fermi sphere than their q."""
        return self.geom.inside_mask(pts) != q_inside

    def _k_masks(self, Q: np.ndarray, alpha: np.ndarray, inside: np.ndarray, k: np.ndarray):
        """Per-q masks ``(in_I, sign, literal, rho, in_Cq)`` for one k."""
        belt = self.params.belt
        has = alpha > 0
        proj = np.zeros(len(Q))
        proj[has] = self.ps.omega_hat[alpha[has] - 1] @ k.astype(float)
        in_I = has & (np.abs(proj) >= belt)
        sign = np.where(proj >= 0, 1, -1)
        qp = Q + k
        qm = Q - k
        opp_p = self._opposite(qp, inside)
        opp_m = self._opposite(qm, inside)
        lab_p = self.ps.label_of(qp)
        lab_m = self.ps.label_of(qm)
        in_p = opp_p & (lab_p == alpha) & has
        in_m = opp_m & (lab_m == alpha) & has
        literal = in_I & (in_p | in_m)
        # Outside q pairs with the hole q -/+ k, inside q with the particle q +/- k.
        use_plus = np.where(inside, sign > 0, sign < 0)
        rho = in_I & np.where(use_plus, in_p, in_m)
        in_Cq = opp_p | opp_m
        return in_I, sign, literal, rho, in_Cq

    # -- single q ----------------------------------------------------------------------

    def ctilde_q(self, q) -> list[Momentum3]:
        q = as_momentum(q)
        Q = np.array([q], dtype=np.int64)
        alpha = self.ps.patch_of(Q)
        if alpha[0] == 0:
            return []
        inside = self.geom.inside_mask(Q)
        out = []
        for k in self.geom.gamma_nor:
            _, _, lit, _, _ = self._k_masks(Q, alpha, inside, np.array(k))
            if lit[0]:
                out.append(k)
        return out

    def patch_interior(self, q) -> bool:
        """Lattice form of the patch-interior condition for ``q``.

        Every lattice point within distance ``R`` of ``q`` on the other side
        of the Fermi sphere must lie in ``B_{alpha_q}``.
        """
        q = as_momentum(q)
        a = self.ps.alpha_of(q)
        if a is None:
            return False
        ball = self.geom.interaction_ball
        pts = ball[np.any(ball != 0, axis=1)] + np.array(q, dtype=np.int64)
        far = self.geom.inside_mask(pts) != self.geom.inside(q)
        return bool((self.ps.label_of(pts[far]) == a).all())

    def Cq(self, q) -> list[Momentum3]:
        from .lattice import momentum_set_Cq

        return momentum_set_Cq(q, self.geom)

    def evaluate(self, q, routes: Sequence[str] = ROUTES, epsilon: float | None = None) -> OccupationResult:
        q = as_momentum(q)
        if q.norm_sq == 0:
            raise ValueError("q must be nonzero")
        Q = np.array([q], dtype=np.int64)
        alpha = self.ps.patch_of(Q)
        inside = self.geom.inside_mask(Q)
        a = int(alpha[0]) or None
        eps_flag = in_Q_epsilon(q, epsilon, self.geom) if epsilon else None
        res = OccupationResult(q, a, bool(inside[0]), eps_flag)
        sums = dict.fromkeys(("matrix", "series", "integral", "integral_q0", "tilde_q0"), 0.0)
        if a is not None:
            for k in self.gamma:
                _, _, lit, rho, _ = self._k_masks(Q, alpha, inside, np.array(k))
                if lit[0] and not rho[0]:
                    res.sign_mismatch.append(k)
                if not rho[0]:
                    continue
                t = self.term(k, a)
                if k.norm_sq and abs(np.dot(q, k)) > 0:
                    tilde = self.asymptotic_term(q, k)
                else:
                    tilde = math.nan
                t = Contribution(k, t.sign, t.count, t.matrix, t.series, t.integral, t.integral_q0, tilde)
                res.contributions.append(t)
                sums["matrix"] += t.matrix
                sums["series"] += t.series
                sums["integral"] += t.integral
                sums["integral_q0"] += t.integral_q0
                sums["tilde_q0"] += tilde
            res.nq_matrix = _clip(sums["matrix"])
            res.nq_series = _clip(sums["series"])
            res.nq_integral = _clip(sums["integral"])
            res.diag_EII = abs(sums["integral"] - sums["integral_q0"])
            res.diag_EIII = abs(sums["integral_q0"] - sums["tilde_q0"])
        if "asymptotic" in routes:
            total = 0.0
            for k in self.Cq(q):
                if self.params.vhat(k) <= 0:
                    continue
                if q.x * k.x + q.y * k.y + q.z * k.z == 0:
                    res.skipped_lambda0.append(k)
                    continue
                total += self.asymptotic_term(q, k)
            res.nq_asymptotic = total
        return res

    # -- many q ------------------------------------------------------------------------

    def scan(self, Q: np.ndarray | None = None, routes: Sequence[str] = ("matrix", "series", "integral")) -> ScanResult:
        """Vectorized routes over ``Q`` (default: the whole shell)."""
        Q = self.geom.shell if Q is None else np.atleast_2d(np.asarray(Q, dtype=np.int64))
        alpha = self.ps.patch_of(Q)
        inside = self.geom.inside_mask(Q)
        vals = {r: np.zeros(len(Q)) for r in routes}
        mismatches = 0
        for k in self.gamma:
            kv = np.array(k, dtype=np.int64)
            _, _, lit, rho, in_Cq = self._k_masks(Q, alpha, inside, kv)
            mismatches += int((lit & ~rho).sum())
            for a in np.unique(alpha[rho]):
                t = self.term(k, int(a))
                sel = rho & (alpha == a)
                for r in routes:
                    if r != "asymptotic":
                        vals[r][sel] += getattr(t, r)
            if "asymptotic" in routes:
                dots = np.abs(Q @ kv)
                for i in np.flatnonzero(in_Cq & (dots > 0)):
                    vals["asymptotic"][i] += self.asymptotic_term(Q[i], k)
        for r in routes:
            if np.any(vals[r] < -1e-12):
                raise ArithmeticError(f"negative occupation in route {r}")
            np.maximum(vals[r], 0.0, out=vals[r])
        return ScanResult(Q, alpha, inside, vals, mismatches)

    def Qk_vs_Q0(self, k, mu_grid: Iterable[float]) -> float:
        kb = self.kernel(k)
        mu = np.asarray(list(mu_grid), dtype=float)
        c0 = 2.0 * math.pi * self.params.kappa * self.params.vhat(k)
        # no pairs at all: Q_k vanishes identically
        qk = kb.Q(mu) if kb is not None else 0.0
        return float(np.max(np.abs(qk - c0 * lindhard(mu))))


# -- functional API ------------------------------------------------------------------


def ctilde_q(q, ps: PatchSet, geom: FermiGeometry, params: ModelParams) -> list[Momentum3]:
    """Literal patch-restricted set C~^q (empty for q in a corridor)."""
    return OccupationEngine(params, ps, geom).ctilde_q(q)


def nq_boson_matrix(q, engine: OccupationEngine) -> float:
    return engine.evaluate(q, routes=()).nq_matrix


def nq_boson_series(q, engine: OccupationEngine, m_max: int = 25) -> float:
    if m_max == engine.m_max:
        return engine.evaluate(q, routes=()).nq_series
    sub = OccupationEngine(engine.params, engine.ps, engine.geom, engine.spec, m_max)
    sub._kernels = engine._kernels
    return sub.evaluate(q, routes=()).nq_series


def nq_boson_integral(q, engine: OccupationEngine) -> float:
    return engine.evaluate(q, routes=()).nq_integral


def nq_asymptotic(q, engine: OccupationEngine) -> float:
    return engine.evaluate(q, routes=("asymptotic",)).nq_asymptotic


def quasiparticle_weight(results, route: str = "matrix") -> float:
    """``Z = 1 - sup_{inside} n_q - sup_{outside} n_q``."""
    if isinstance(results, ScanResult):
        return 1.0 - results.sup(route, True) - results.sup(route, False)
    sup_in = max((r.route(route) for r in results if r.inside_fermi), default=0.0)
    sup_out = max((r.route(route) for r in results if not r.inside_fermi), default=0.0)
    return 1.0 - sup_in - sup_out


def error_diagnostics(q, engine: OccupationEngine) -> tuple[float, float]:
    r = engine.evaluate(q, routes=())
    return r.diag_EII, r.diag_EIII


@dataclass(frozen=True)
class QReport:
    kF: float
    N: int
    max_gap: float
    worst_k: Momentum3 | None
    per_k: dict = field(repr=False, default_factory=dict)


def Qk_vs_Q0_report(engine: OccupationEngine, mu_grid: Iterable[float] | None = None, ks=None) -> QReport:
    """``sup_mu |Q_k - Q_k^(0)|`` per k and its maximum over k."""
    mu = list(mu_grid) if mu_grid is not None else list(np.concatenate([[0.0], np.logspace(-3, 3, 61)]))
    ks = engine.gamma if ks is None else [as_momentum(k) for k in ks]
    per_k = {k: engine.Qk_vs_Q0(k, mu) for k in ks}
    worst = max(per_k, key=per_k.get) if per_k else None
    return QReport(engine.params.kF, engine.params.N, per_k[worst] if worst else 0.0, worst, per_k)
