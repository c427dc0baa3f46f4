"""INI run configuration.

Sections: ``[run]``, ``[model]``, ``[potential]``, ``[quadrature]`` and
``[output]``.  ``RunConfig.to_ini`` writes a file that parses back to an
equal object.

Example::

    [run]
    mode = sweep-n
    kf_list = 5, 8, 12
    routes = matrix, series, integral

    [model]
    kf = 8
    r = 2.5

    [potential]
    kind = const
    value = 1.0
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields, replace

from .lattice import InteractionFourier, ModelParams, as_momentum, closed_shell_params, enumerate_fermi_ball
from .quadrature import QuadratureSpec

MODES = ("occupation", "scan", "sweep-n", "q-convergence", "dv-compare", "geometry-audit")
POTENTIALS = ("const", "coulomb-sr", "radial-table", "explicit")
ALL_ROUTES = ("matrix", "series", "integral", "asymptotic")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


@dataclass(frozen=True)
class PotentialSpec:
    """``const``: V = value on |k| < R.  ``coulomb-sr``: V = 8 kappa e2 hbar kF^2 / (3 pi |k|^2).

    ``radial-table`` maps ``|k|^2 -> V`` and ``explicit`` maps triples to V;
    missing momenta get 0.
    """

    kind: str = "const"
    value: float = 1.0
    table: tuple[tuple[int, float], ...] = ()
    entries: tuple[tuple[tuple[int, int, int], float], ...] = ()

    def __post_init__(self):
        if self.kind not in POTENTIALS:
            raise ConfigError(f"unknown potential kind {self.kind!r}")

    @classmethod
    def parse_preset(cls, text: str) -> tuple["PotentialSpec", float]:
        """``const:v,R`` or ``coulomb-sr:e2,R`` -> (spec, R)."""
        try:
            kind, rest = text.split(":", 1)
            v, R = (float(x) for x in rest.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad potential preset {text!r}") from exc
        if kind not in ("const", "coulomb-sr"):
            raise ConfigError(f"unknown potential preset {kind!r}")
        return cls(kind, v), R

    def build(self, kF: float, R: float) -> InteractionFourier:
        if self.kind == "const":
            return InteractionFourier.constant(self.value, R)
        if self.kind == "coulomb-sr":
            N = len(enumerate_fermi_ball(kF))
            kappa = kF * N ** (-1.0 / 3.0)
            hbar = N ** (-1.0 / 3.0)
            c = 8.0 * kappa * self.value * hbar * kF**2 / (3.0 * math.pi)
            return InteractionFourier.radial(R, lambda r: c / (r * r))
        if self.kind == "radial-table":
            tab = dict(self.table)
            return InteractionFourier.radial(R, lambda r: tab.get(int(round(r * r)), 0.0))
        return InteractionFourier(R, {as_momentum(k): v for k, v in self.entries})


@dataclass(frozen=True)
class RunConfig:
    mode: str
    kF: float = 8.0
    R: float = 2.5
    M: int | None = None
    delta: float = 1.0 / 12.0
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    routes: tuple[str, ...] = ("matrix", "series", "integral")
    q: tuple[tuple[int, int, int], ...] = ()
    kF_list: tuple[float, ...] = ()
    m_max: int = 25
    epsilon: float | None = None
    q_offsets: tuple[float, ...] = (0.5, 1.0, -0.5, -1.0)
    mu_grid: tuple[float, ...] = ()
    abs_tol: float = 1e-15
    rel_tol: float = 1e-11
    max_subdivisions: int = 2**14
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        bad = [r for r in self.routes if r not in ALL_ROUTES]
        if bad:
            raise ConfigError(f"unknown routes {bad}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if not self.kF > 0 or not self.R > 0:
            raise ConfigError("kF and R must be positive")
        if self.M is not None and (self.M < 2 or self.M % 2):
            raise ConfigError(f"M must be even and >= 2, got {self.M}")
        if not 0.0 < self.delta < 1.0 / 6.0:
            raise ConfigError(f"delta must lie in (0, 1/6), got {self.delta}")
        if self.mode == "occupation" and not self.q:
            raise ConfigError("mode occupation needs a q list")
        if self.m_max < 0:
            raise ConfigError("m_max must be non-negative")

    # -- derived objects ------------------------------------------------------------

    def spec(self) -> QuadratureSpec:
        return QuadratureSpec(self.abs_tol, self.rel_tol, self.max_subdivisions)

    def params(self, kF: float | None = None) -> ModelParams:
        kF = self.kF if kF is None else kF
        vhat = self.potential.build(kF, self.R)
        # An explicit M only applies to single-kF runs.
        M = None if self.kF_list else self.M
        return closed_shell_params(kF, M=M, delta=self.delta, R=self.R, vhat=vhat)

    def kF_values(self) -> tuple[float, ...]:
        return self.kF_list or (self.kF,)

    # -- INI ------------------------------------------------------------------------

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["run"] = {
            "mode": self.mode,
            "routes": ", ".join(self.routes),
            "q": "; ".join(",".join(str(c) for c in k) for k in self.q),
            "kf_list": _floats(self.kF_list),
            "m_max": str(self.m_max),
            "epsilon": "" if self.epsilon is None else repr(self.epsilon),
            "q_offsets": _floats(self.q_offsets),
            "mu_grid": _floats(self.mu_grid),
        }
        cp["model"] = {
            "kf": repr(self.kF),
            "r": repr(self.R),
            "m": "" if self.M is None else str(self.M),
            "delta": repr(self.delta),
        }
        pot = self.potential
        cp["potential"] = {
            "kind": pot.kind,
            "value": repr(pot.value),
            "table": "; ".join(f"{n}:{v!r}" for n, v in pot.table),
            "entries": "; ".join(f"{k[0]},{k[1]},{k[2]}:{v!r}" for k, v in pot.entries),
        }
        cp["quadrature"] = {
            "abs_tol": repr(self.abs_tol),
            "rel_tol": repr(self.rel_tol),
            "max_subdivisions": str(self.max_subdivisions),
        }
        cp["output"] = {"path": self.out or "", "format": self.format}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"unreadable config: {exc}") from exc
        known = {"run", "model", "potential", "quadrature", "output"}
        extra = set(cp.sections()) - known
        if extra:
            raise ConfigError(f"unknown sections {sorted(extra)}")
        run = cp["run"] if cp.has_section("run") else {}
        model = cp["model"] if cp.has_section("model") else {}
        pot = cp["potential"] if cp.has_section("potential") else {}
        quad = cp["quadrature"] if cp.has_section("quadrature") else {}
        out = cp["output"] if cp.has_section("output") else {}
        if "mode" not in run:
            raise ConfigError("[run] mode is required")
        try:
            kw = dict(mode=run["mode"].strip())
            if "routes" in run and run["routes"].strip():
                kw["routes"] = tuple(r.strip() for r in run["routes"].split(",") if r.strip())
            if run.get("q", "").strip():
                kw["q"] = tuple(_triple(t) for t in run["q"].split(";") if t.strip())
            for key, name in (("kf_list", "kF_list"), ("q_offsets", "q_offsets"), ("mu_grid", "mu_grid")):
                if run.get(key, "").strip():
                    kw[name] = tuple(float(x) for x in run[key].split(","))
            if run.get("m_max", "").strip():
                kw["m_max"] = int(run["m_max"])
            if run.get("epsilon", "").strip():
                kw["epsilon"] = float(run["epsilon"])
            if model.get("kf", "").strip():
                kw["kF"] = float(model["kf"])
            if model.get("r", "").strip():
                kw["R"] = float(model["r"])
            if model.get("m", "").strip():
                kw["M"] = int(model["m"])
            if model.get("delta", "").strip():
                kw["delta"] = float(model["delta"])
            if pot.get("preset", "").strip():
                spec, R = PotentialSpec.parse_preset(pot["preset"].strip())
                kw["potential"] = spec
                kw["R"] = R
            elif pot:
                pk = dict(kind=pot.get("kind", "const").strip())
                if pot.get("value", "").strip():
                    pk["value"] = float(pot["value"])
                if pot.get("table", "").strip():
                    pk["table"] = tuple(_pair_int(t) for t in pot["table"].split(";") if t.strip())
                if pot.get("entries", "").strip():
                    pk["entries"] = tuple(_pair_triple(t) for t in pot["entries"].split(";") if t.strip())
                kw["potential"] = PotentialSpec(**pk)
            if quad.get("abs_tol", "").strip():
                kw["abs_tol"] = float(quad["abs_tol"])
            if quad.get("rel_tol", "").strip():
                kw["rel_tol"] = float(quad["rel_tol"])
            if quad.get("max_subdivisions", "").strip():
                kw["max_subdivisions"] = int(quad["max_subdivisions"])
            if out.get("path", "").strip():
                kw["out"] = out["path"].strip()
            if out.get("format", "").strip():
                kw["format"] = out["format"].strip()
        except (KeyError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value: {exc}") from exc
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                return cls.from_ini(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def with_overrides(self, **kw) -> "RunConfig":
        names = {f.name for f in fields(self)}
        return replace(self, **{k: v for k, v in kw.items() if k in names and v is not None})


def _floats(xs) -> str:
    return ", ".join(repr(float(x)) for x in xs)


def _triple(text: str) -> tuple[int, int, int]:
    parts = [int(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"expected a triple, got {text!r}")
    return tuple(parts)  # type: ignore[return-value]


def _pair_int(text: str) -> tuple[int, float]:
    a, b = text.split(":")
    return int(a), float(b)


def _pair_triple(text: str):
    a, b = text.split(":")
    return _triple(a), float(b)
