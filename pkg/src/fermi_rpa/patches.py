"""Patch decomposition of the shell around the Fermi sphere.

The northern hemisphere is cut into ``M/2`` equal-area zonal cells
(latitude bands split into azimuthal sectors).  Each cell is shrunk by an
angular margin so that distinct cells are at chordal distance >= 2R on the
sphere of radius kF, then extended radially to thickness 2R.  Southern
patches are the point reflections ``k -> -k`` of the northern ones.

Margins
-------
With ``r = R / kF`` the polar margin is ``arcsin(r)`` on each internal band
edge and the azimuthal margin at polar angle theta is
``arcsin(r / sin(theta))``.  Two points on different sides of an azimuthal
cut then satisfy ``|x - y|^2 >= 4 sin(t) sin(t') sin^2(dphi / 2) >= 4 r^2``
by log-concavity of ``sin``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .lattice import FermiGeometry, ModelParams, Momentum3, as_momentum, points_with_norm_sq_at_most
from .quadrature import QuadratureSpec, integrate_interval

__all__ = [
    "Band",
    "Patch",
    "PatchSet",
    "PairData",
    "PatchConstructionError",
    "build_patchset",
    "build_patchset_for",
    "pair_counts",
    "index_sets",
    "pair_count",
]

_AREA_SPEC = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-8)


class PatchConstructionError(ValueError):
    """The corridor width does not fit inside the cells."""


@dataclass(frozen=True)
class Band:
    theta_lo: float
    theta_hi: float
    sectors: int
    first_index: int  # 1-based index of the band's first cell


@dataclass(frozen=True)
class Patch:
    index: int
    omega: np.ndarray = field(repr=False)
    omega_hat: np.ndarray = field(repr=False)
    theta: tuple[float, float]
    phi: tuple[float, float]
    antipode: int

    @property
    def northern(self) -> bool:
        return self.index < self.antipode


def _phi_margin(theta, r):
    s = np.sin(theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(s > 0, r / s, np.inf)
    return np.where(ratio < 1.0, np.arcsin(np.minimum(ratio, 1.0)), np.inf)


def _band_area(band: Band, r: float) -> float:
    """Solid angle of one shrunk cell of ``band``."""
    m = math.asin(r)
    lo = band.theta_lo + (m if band.theta_lo > 0 else 0.0)
    hi = band.theta_hi - m
    if hi <= lo:
        return 0.0
    if band.sectors == 1:
        return 2.0 * math.pi * (math.cos(lo) - math.cos(hi))
    width = 2.0 * math.pi / band.sectors

    def f(t):
        return np.sin(t) * np.clip(width - 2.0 * _phi_margin(t, r), 0.0, None)

    # The azimuthal cells only open where width > 2 arcsin(r / sin t).
    s_min = r / math.sin(width / 2) if width < math.pi else r
    brk = [math.asin(s_min)] if s_min < 1 else []
    if s_min >= 1:
        return 0.0
    return integrate_interval(f, lo, hi, _AREA_SPEC, breakpoints=brk)[0]


def _bands_from_counts(counts: Sequence[int]) -> list[Band]:
    total = sum(counts)
    bands = []
    cum = 0
    for c in counts:
        c_lo = 1.0 - cum / total
        cum += c
        c_hi = 1.0 - cum / total
        bands.append(
            Band(
                math.acos(min(1.0, max(-1.0, c_lo))),
                math.acos(min(1.0, max(-1.0, c_hi))) if cum < total else math.pi / 2,
                c,
                cum - c + 1,
            )
        )
    return bands


def _round_with_carry(ideal: Sequence[float]) -> list[int]:
    out = []
    carry = 0.0
    for x in ideal:
        n = int(math.floor(x + carry + 0.5))
        carry += x - n
        out.append(n)
    return out


def candidate_layouts(half: int) -> list[tuple[int, ...]]:
    """Cells-per-band sequences for ``half`` equal-area cells.

    Bands are spaced evenly in polar angle and the cell counts follow the
    band areas (Leopardi-style zonal partition), with and without a polar
    cap cell.  Only the first band may hold a single cell.
    """
    if half == 1:
        return [(1,)]
    out = []
    for cap in (True, False):
        rest = half - 1 if cap else half
        theta0 = math.acos(1.0 - 1.0 / half) if cap else 0.0
        for n_b in range(1, rest + 1):
            edges = np.linspace(theta0, math.pi / 2, n_b + 1)
            areas = np.cos(edges[:-1]) - np.cos(edges[1:])
            ideal = areas / areas.sum() * rest
            counts = _round_with_carry(ideal)
            if sum(counts) != rest or min(counts) < 2:
                continue
            layout = ((1,) if cap else ()) + tuple(counts)
            if layout not in out:
                out.append(layout)
    return out


def _cell_direction(band: Band, s: int) -> tuple[np.ndarray, tuple[float, float]]:
    if band.sectors == 1:
        phi = (0.0, 2.0 * math.pi)
        if band.theta_lo == 0.0:
            return np.array([0.0, 0.0, 1.0]), phi
        phi_c = 0.0
    else:
        w = 2.0 * math.pi / band.sectors
        phi = (s * w, (s + 1) * w)
        phi_c = (s + 0.5) * w
    c = 0.5 * (math.cos(band.theta_lo) + math.cos(band.theta_hi))
    t = math.acos(c)
    return np.array([math.sin(t) * math.cos(phi_c), math.sin(t) * math.sin(phi_c), c]), phi


class PatchSet:
    """M patches with corridor margins; see the module docstring."""

    def __init__(self, kF: float, R: float, M: int, bands: Sequence[Band], N: int | None = None):
        if M < 2 or M % 2:
            raise ValueError(f"M must be even and >= 2, got {M}")
        self.kF = float(kF)
        self.R = float(R)
        self.M = int(M)
        self.N = N
        self.bands = list(bands)
        self.r = self.R / self.kF
        if not self.r < 1:
            raise PatchConstructionError("interaction radius exceeds kF")
        half = M // 2
        patches = []
        for band in self.bands:
            for s in range(band.sectors):
                d, phi = _cell_direction(band, s)
                a = band.first_index + s
                patches.append(
                    Patch(a, self.kF * d, d, (band.theta_lo, band.theta_hi), phi, a + half)
                )
        south = [
            Patch(p.index + half, -p.omega, -p.omega_hat, p.theta, p.phi, p.index)
            for p in patches
        ]
        self.patches: list[Patch] = patches + south
        if len(patches) != half:
            raise ValueError("band layout does not hold M/2 cells")
        self.omega_hat = np.array([p.omega_hat for p in self.patches])

    # -- geometry -----------------------------------------------------------------

    def patch(self, alpha: int) -> Patch:
        return self.patches[alpha - 1]

    def antipode(self, alpha: int) -> int:
        half = self.M // 2
        return alpha + half if alpha <= half else alpha - half

    @cached_property
    def shrunk_areas(self) -> np.ndarray:
        """Solid angle of each northern shrunk cell."""
        out = []
        for band in self.bands:
            out.extend([_band_area(band, self.r)] * band.sectors)
        return np.array(out)

    @property
    def fill_fraction(self) -> float:
        return float(self.shrunk_areas.sum() / (2.0 * math.pi))

    def _north_cell(self, d: np.ndarray) -> np.ndarray:
        """Cell index (1-based, 0 = corridor) of unit vectors with d_z > 0."""
        out = np.zeros(len(d), dtype=np.int64)
        if len(d) == 0:
            return out
        theta = np.arccos(np.clip(d[:, 2], -1.0, 1.0))
        phi = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2.0 * math.pi)
        m = math.asin(self.r)
        for band in self.bands:
            lo = band.theta_lo + (m if band.theta_lo > 0 else 0.0)
            hi = band.theta_hi - m
            sel = (theta >= lo) & (theta <= hi)
            if not sel.any():
                continue
            if band.sectors == 1:
                out[sel] = band.first_index
                continue
            w = 2.0 * math.pi / band.sectors
            s = np.minimum(np.floor(phi / w).astype(np.int64), band.sectors - 1)
            local = phi - s * w
            mphi = _phi_margin(theta, self.r)
            ok = sel & (local >= mphi) & (local <= w - mphi)
            out[ok] = band.first_index + s[ok]
        return out

    def direction_cell(self, d: np.ndarray) -> np.ndarray:
        """Cell index of arbitrary unit vectors (equator points get 0)."""
        d = np.atleast_2d(np.asarray(d, dtype=float))
        out = np.zeros(len(d), dtype=np.int64)
        north = d[:, 2] > 0
        south = d[:, 2] < 0
        out[north] = self._north_cell(d[north])
        s = self._north_cell(-d[south])
        out[south] = np.where(s > 0, s + self.M // 2, 0)
        return out

    def patch_of(self, points) -> np.ndarray:
        """Patch index of lattice points (0 = not in any patch)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        r = np.linalg.norm(p, axis=1)
        slack = 1e-12 * self.kF
        radial = (r >= self.kF - self.R - slack) & (r <= self.kF + self.R + slack)
        out = np.zeros(len(p), dtype=np.int64)
        if radial.any():
            d = p[radial] / r[radial, None]
            out[radial] = self.direction_cell(d)
        return out

    def alpha_of(self, q) -> int | None:
        a = int(self.patch_of([tuple(q)])[0])
        return a or None

    @cached_property
    def _grid(self):
        L = int(math.ceil(self.kF + self.R)) + 2
        pts = points_with_norm_sq_at_most(3 * L * L)
        pts = pts[(np.abs(pts) <= L).all(axis=1)]
        labels = np.zeros((2 * L + 1,) * 3, dtype=np.int32)
        alpha = self.patch_of(pts)
        idx = pts + L
        labels[idx[:, 0], idx[:, 1], idx[:, 2]] = alpha
        member = pts[alpha > 0]
        return L, labels, member, alpha[alpha > 0]

    def label_grid(self):
        """``(L, labels)`` with ``labels[k + L]`` the patch index of ``k``."""
        L, labels, _, _ = self._grid
        return L, labels

    def label_of(self, points) -> np.ndarray:
        """Patch index of integer points via the label grid (0 off-grid)."""
        L, labels = self.label_grid()
        p = np.atleast_2d(np.asarray(points, dtype=np.int64))
        ok = (np.abs(p) <= L).all(axis=1)
        out = np.zeros(len(p), dtype=np.int64)
        idx = p[ok] + L
        out[ok] = labels[idx[:, 0], idx[:, 1], idx[:, 2]]
        return out

    def members(self):
        """``(points, alpha)`` of all lattice points inside some patch."""
        _, _, pts, alpha = self._grid
        return pts, alpha

    # -- audits -------------------------------------------------------------------

    def diameters(self, samples: int = 64) -> np.ndarray:
        """Chordal diameter (length units) of each unshrunk northern cell."""
        out = []
        for band in self.bands:
            for s in range(band.sectors):
                pts = self._cell_boundary(band, s, samples)
                diff = pts[:, None, :] - pts[None, :, :]
                out.append(self.kF * float(np.sqrt((diff * diff).sum(-1)).max()))
        return np.array(out)

    def _cell_boundary(self, band: Band, s: int, n: int) -> np.ndarray:
        if band.sectors == 1:
            phis = np.linspace(0.0, 2.0 * math.pi, 4 * n, endpoint=False)
            rings = [band.theta_hi] if band.theta_lo == 0 else [band.theta_lo, band.theta_hi]
            th = np.concatenate([np.full_like(phis, t) for t in rings])
            ph = np.concatenate([phis for _ in rings])
        else:
            w = 2.0 * math.pi / band.sectors
            ts = np.linspace(band.theta_lo, band.theta_hi, n)
            ps = np.linspace(s * w, (s + 1) * w, n)
            th = np.concatenate([ts, ts, np.full(n, band.theta_lo), np.full(n, band.theta_hi)])
            ph = np.concatenate([np.full(n, s * w), np.full(n, (s + 1) * w), ps, ps])
        return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)

    def diameter_constant(self) -> float:
        """``max diam * M**(1/2) * N**(-1/3)``."""
        if self.N is None:
            raise ValueError("particle number unknown")
        return float(self.diameters().max() * math.sqrt(self.M) * self.N ** (-1.0 / 3.0))

    def corridor_audit(self, n_samples: int = 20000) -> float:
        """Smallest sampled chordal distance (radius kF) between distinct cells."""
        from scipy.spatial import cKDTree

        i = np.arange(n_samples) + 0.5
        z = 1.0 - 2.0 * i / n_samples
        rho = np.sqrt(1.0 - z * z)
        ang = math.pi * (1.0 + math.sqrt(5.0)) * i
        d = np.stack([rho * np.cos(ang), rho * np.sin(ang), z], axis=1)
        cell = self.direction_cell(d)
        best = math.inf
        for a in range(1, self.M + 1):
            mine = d[cell == a]
            other = d[(cell > 0) & (cell != a)]
            if len(mine) == 0 or len(other) == 0:
                continue
            dist, _ = cKDTree(other).query(mine)
            best = min(best, float(dist.min()))
        return best * self.kF

    def dump_csv(self, path, geom: FermiGeometry | None = None) -> None:
        """Write ``kx, ky, kz, alpha`` for every lattice point in a patch."""
        pts, alpha = self.members()
        order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kx", "ky", "kz", "alpha"])
            for i in order:
                w.writerow([int(pts[i, 0]), int(pts[i, 1]), int(pts[i, 2]), int(alpha[i])])


def build_patchset(params: ModelParams) -> PatchSet:
    """Pick the zonal layout whose smallest shrunk cell is largest."""
    return build_patchset_for(params.kF, params.R, params.M, params.N)


def build_patchset_for(kF: float, R: float, M: int, N: int | None = None) -> PatchSet:
    if M < 2 or M % 2:
        raise ValueError(f"M must be even and >= 2, got {M}")
    r = float(R) / float(kF)
    if not r < 1:
        raise PatchConstructionError(f"R={R} is not smaller than kF={kF}")
    best = None
    for layout in candidate_layouts(M // 2):
        bands = _bands_from_counts(layout)
        score = min(_band_area(b, r) for b in bands)
        if best is None or score > best[0] + 1e-15:
            best = (score, bands)
    if best is None or best[0] <= 0.0:
        raise PatchConstructionError(
            f"corridor width 2R={2 * R} leaves an empty cell for M={M}, kF={kF}"
        )
    return PatchSet(kF, R, M, best[1], N)


# -- index sets and pair counts --------------------------------------------------


def index_sets(k, ps: PatchSet, params: ModelParams) -> tuple[list[int], list[int]]:
    """``(I_k^+, I_k^-)`` as ascending lists; ``antipode`` maps one onto the other."""
    k = as_momentum(k)
    proj = ps.omega_hat @ np.array(k, dtype=float)
    cut = params.belt
    plus = [a + 1 for a in np.flatnonzero(proj >= cut)]
    minus = [int(a) + 1 for a in np.flatnonzero(proj <= -cut)]
    if sorted(ps.antipode(a) for a in plus) != minus:
        raise AssertionError("index sets are not antipodally paired")
    return [int(a) for a in plus], minus


@dataclass(frozen=True)
class PairData:
    alpha: int
    k: Momentum3
    count: int
    sign: int
    pairs: np.ndarray | None = field(default=None, repr=False)


def pair_counts(k, sign: int, ps: PatchSet, geom: FermiGeometry, return_pairs: bool = False):
    """Pair counts per patch for ``p = h + sign * k``.

    Returns an array ``c`` of length ``M + 1`` with ``c[alpha]`` the number
    of particles ``p`` in patch alpha outside the ball whose hole
    ``h = p - sign*k`` is inside the ball and in the same patch.
    """
    k = np.array(as_momentum(k), dtype=np.int64) * int(sign)
    L, labels = ps.label_grid()
    pts, alpha = ps.members()
    outside = ~geom.inside_mask(pts)
    p = pts[outside]
    a = alpha[outside]
    h = p - k
    ok = (np.abs(h) <= L).all(axis=1)
    hi = h[ok] + L
    same = np.zeros(len(p), dtype=bool)
    same[ok] = labels[hi[:, 0], hi[:, 1], hi[:, 2]] == a[ok]
    same &= geom.inside_mask(h)
    counts = np.bincount(a[same], minlength=ps.M + 1)
    if return_pairs:
        return counts, p[same], a[same]
    return counts


def pair_count(alpha: int, k, ps: PatchSet, geom: FermiGeometry, params: ModelParams,
               return_pairs: bool = False) -> PairData:
    """``n_{alpha,k}^2`` with the sign fixed by the index set holding alpha."""
    k = as_momentum(k)
    plus, minus = index_sets(k, ps, params)
    if alpha in plus:
        sign = 1
    elif alpha in minus:
        sign = -1
    else:
        raise ValueError(f"patch {alpha} is not in I_k for k={k}")
    if return_pairs:
        counts, p, a = pair_counts(k, sign, ps, geom, return_pairs=True)
        sel = a == alpha
        pairs = np.concatenate([p[sel], p[sel] - sign * np.array(k)], axis=1)
        return PairData(alpha, k, int(counts[alpha]), sign, pairs)
    counts = pair_counts(k, sign, ps, geom)
    return PairData(alpha, k, int(counts[alpha]), sign)
