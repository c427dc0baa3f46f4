"""Command-line front end.

``fermi-rpa <mode> --config <path> [--out <path>] [--format csv|json]
[--no-timestamp] [--threads n] [--potential const:v,R]``

Exit status: 0 on success, 1 for an invalid configuration, 2 for a
numerical failure (the failing operation is named on stderr).
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .config import MODES, ConfigError, PotentialSpec, RunConfig
from .lattice import FermiGeometry, as_momentum
from .occupation import OccupationEngine, Qk_vs_Q0_report, lindhard, quasiparticle_weight
from .patches import PatchConstructionError, build_patchset
from .quadrature import QuadratureError
from .thermo import ThermoParams, coulomb_sr_vhat, dv_nq, thermo_nq

# Column order per mode; JSON rows use the same keys.
COLUMNS = {
    "occupation": ["qx", "qy", "qz", "q_norm", "alpha_q", "inside", "in_Q_eps",
                   "nq_matrix", "nq_series", "nq_integral", "nq_asymptotic",
                   "EII", "EIII", "n_terms", "sign_mismatch", "Z"],
    "scan": ["qx", "qy", "qz", "q_norm", "alpha_q", "inside",
             "nq_matrix", "nq_series", "nq_integral", "nq_asymptotic", "Z"],
    "sweep-n": ["kF", "N", "M", "kappa", "fill_fraction", "sup_nq_inside",
                "sup_nq_outside", "Z", "max_route_gap"],
    "q-convergence": ["kF", "N", "M", "kx", "ky", "kz", "max_gap", "Q0_at_0"],
    "dv-compare": ["kF", "q_offset", "side", "thermo_nq", "dv_sr", "ratio"],
    "geometry-audit": ["kF", "N", "M", "alpha", "antipode", "theta_lo", "theta_hi",
                       "phi_lo", "phi_hi", "omega_x", "omega_y", "omega_z",
                       "members", "shrunk_area", "diameter", "fill_fraction",
                       "corridor_min", "corridor_ok"],
}


class NumericFailure(RuntimeError):
    def __init__(self, operation: str, exc: Exception):
        super().__init__(f"{operation}: {exc}")
        self.operation = operation


def _guard(operation: str, fn: Callable, *args, **kw):
    try:
        return fn(*args, **kw)
    except (ArithmeticError, QuadratureError, PatchConstructionError, np.linalg.LinAlgError) as exc:
        raise NumericFailure(operation, exc) from exc


def _pmap(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- modes --------------------------------------------------------------------------


def _engine(cfg: RunConfig, kF=None) -> OccupationEngine:
    params = cfg.params(kF)
    return _guard("build_patchset", lambda: OccupationEngine(params, spec=cfg.spec(), m_max=cfg.m_max))


def run_occupation(cfg: RunConfig, threads: int = 1) -> list[dict]:
    eng = _engine(cfg)
    res = [_guard(f"evaluate q={q}", eng.evaluate, q, cfg.routes, cfg.epsilon) for q in cfg.q]
    Z = quasiparticle_weight(res, "matrix")
    rows = []
    for r in res:
        rows.append({
            "qx": r.q.x, "qy": r.q.y, "qz": r.q.z, "q_norm": r.q.norm,
            "alpha_q": r.alpha_q or 0, "inside": int(r.inside_fermi),
            "in_Q_eps": "" if r.in_Q_eps is None else int(r.in_Q_eps),
            "nq_matrix": r.nq_matrix, "nq_series": r.nq_series,
            "nq_integral": r.nq_integral,
            "nq_asymptotic": r.nq_asymptotic if "asymptotic" in cfg.routes else "",
            "EII": r.diag_EII, "EIII": r.diag_EIII,
            "n_terms": len(r.contributions), "sign_mismatch": len(r.sign_mismatch), "Z": Z,
        })
    return rows


def run_scan(cfg: RunConfig, threads: int = 1) -> list[dict]:
    eng = _engine(cfg)
    Q = np.array(cfg.q, dtype=np.int64) if cfg.q else None
    s = _guard("scan", eng.scan, Q, cfg.routes)
    Z = quasiparticle_weight(s, "matrix") if "matrix" in cfg.routes else ""
    rows = []
    for i, q in enumerate(s.q):
        row = {"qx": int(q[0]), "qy": int(q[1]), "qz": int(q[2]),
               "q_norm": float(np.linalg.norm(q)), "alpha_q": int(s.alpha[i]),
               "inside": int(s.inside[i])}
        for r in ("matrix", "series", "integral", "asymptotic"):
            row["nq_" + r] = float(s.values[r][i]) if r in s.values else ""
        row["Z"] = Z
        rows.append(row)
    return rows


def _sweep_row(cfg: RunConfig, kF: float) -> dict:
    eng = _engine(cfg, kF)
    routes = [r for r in cfg.routes if r != "asymptotic"] or ["matrix"]
    s = _guard(f"scan kF={kF}", eng.scan, None, routes)
    base = s.values[routes[0]]
    gap = 0.0
    for r in routes[1:]:
        rel = np.abs(s.values[r] - base) / np.maximum(base, 1e-12)
        gap = max(gap, float(rel.max()) if len(rel) else 0.0)
    p = eng.params
    return {
        "kF": kF, "N": p.N, "M": p.M, "kappa": p.kappa,
        "fill_fraction": eng.ps.fill_fraction,
        "sup_nq_inside": s.sup(routes[0], True), "sup_nq_outside": s.sup(routes[0], False),
        "Z": quasiparticle_weight(s, routes[0]), "max_route_gap": gap,
    }


def run_sweep(cfg: RunConfig, threads: int = 1) -> list[dict]:
    return _pmap(lambda kF: _sweep_row(cfg, kF), cfg.kF_values(), threads)


def run_q_convergence(cfg: RunConfig, threads: int = 1) -> list[dict]:
    rows = []
    mu = cfg.mu_grid or None
    for kF in cfg.kF_values():
        eng = _engine(cfg, kF)
        rep = _guard(f"Qk_vs_Q0_report kF={kF}", Qk_vs_Q0_report, eng, mu)
        p = eng.params
        for k, gap in rep.per_k.items():
            rows.append({
                "kF": kF, "N": p.N, "M": p.M, "kx": k.x, "ky": k.y, "kz": k.z,
                "max_gap": gap,
                "Q0_at_0": 2.0 * math.pi * p.kappa * p.vhat(k),
            })
    return rows


def run_dv_compare(cfg: RunConfig, threads: int = 1) -> list[dict]:
    if cfg.potential.kind != "coulomb-sr":
        raise ConfigError("dv-compare needs potential kind coulomb-sr")
    e2 = cfg.potential.value
    jobs = [(kF, dq) for kF in cfg.kF_values() for dq in cfg.q_offsets]

    def one(job):
        kF, dq = job
        tp = ThermoParams(kF, cfg.R, coulomb_sr_vhat(e2, kF), e_coul=math.sqrt(e2))
        side = "outside" if dq > 0 else "inside"
        th = _guard(f"thermo_nq kF={kF}", thermo_nq, kF + dq, tp)
        dv = _guard(f"dv_nq kF={kF}", dv_nq, kF + dq, side, tp, cfg.R)
        return {"kF": kF, "q_offset": dq, "side": side, "thermo_nq": th, "dv_sr": dv,
                "ratio": dv / th if th else ""}

    return _pmap(one, jobs, threads)


def run_geometry_audit(cfg: RunConfig, threads: int = 1) -> list[dict]:
    rows = []
    for kF in cfg.kF_values():
        p = cfg.params(kF)
        ps = _guard(f"build_patchset kF={kF}", build_patchset, p)
        corridor = ps.corridor_audit()
        diam = ps.diameters()
        _, alpha = ps.members()
        members = np.bincount(alpha, minlength=ps.M + 1)
        half = ps.M // 2
        for pt in ps.patches:
            a = pt.index
            j = (a - 1) % half
            rows.append({
                "kF": kF, "N": p.N, "M": p.M, "alpha": a, "antipode": pt.antipode,
                "theta_lo": pt.theta[0], "theta_hi": pt.theta[1],
                "phi_lo": pt.phi[0], "phi_hi": pt.phi[1],
                "omega_x": float(pt.omega_hat[0]), "omega_y": float(pt.omega_hat[1]),
                "omega_z": float(pt.omega_hat[2]),
                "members": int(members[a]), "shrunk_area": float(ps.shrunk_areas[j]),
                "diameter": float(diam[j]), "fill_fraction": ps.fill_fraction,
                "corridor_min": corridor, "corridor_ok": int(corridor >= 2 * p.R * (1 - 1e-9)),
            })
    return rows


RUNNERS = {
    "occupation": run_occupation,
    "scan": run_scan,
    "sweep-n": run_sweep,
    "q-convergence": run_q_convergence,
    "dv-compare": run_dv_compare,
    "geometry-audit": run_geometry_audit,
}


# -- output -------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def render(rows: Sequence[dict], mode: str, fmt: str, timestamp: bool = True) -> str:
    cols = COLUMNS[mode]
    if fmt == "json":
        clean = [{c: (float(r[c]) if isinstance(r[c], np.floating) else r[c]) for c in cols} for r in rows]
        return json.dumps(clean, indent=1) + "\n"
    buf = io.StringIO()
    if timestamp:
        buf.write("# generated " + _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds") + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()


def run(cfg: RunConfig, threads: int = 1) -> list[dict]:
    return RUNNERS[cfg.mode](cfg, threads)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fermi-rpa", description=__doc__.splitlines()[0])
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("--config", required=True, help="INI run configuration")
    ap.add_argument("--out", help="output file (default: stdout)")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--no-timestamp", action="store_true", help="omit the CSV timestamp line")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--potential", help="preset const:v,R or coulomb-sr:e2,R")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        over = {"mode": args.mode, "out": args.out, "format": args.format}
        if args.potential:
            spec, R = PotentialSpec.parse_preset(args.potential)
            over.update(potential=spec, R=R)
        cfg = cfg.with_overrides(**over)
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
    except ConfigError as exc:
        print(f"fermi-rpa: invalid config: {exc}", file=sys.stderr)
        return 1
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            rows = run(cfg, args.threads)
    except ConfigError as exc:
        print(f"fermi-rpa: invalid config: {exc}", file=sys.stderr)
        return 1
    except NumericFailure as exc:
        print(f"fermi-rpa: numeric failure in {exc}", file=sys.stderr)
        return 2
    text = render(rows, cfg.mode, cfg.format, timestamp=not args.no_timestamp)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
