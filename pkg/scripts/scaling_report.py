"""Finite-size report behind acceptance criteria 5 and 6.

Prints N, patch fill fraction, sup n_q, 1 - Z and the log-log slope of
sup n_q against N, with and without the smallest kF.

    python scripts/scaling_report.py [kF ...]
"""

import sys
import warnings

import numpy as np

from fermi_rpa import InteractionFourier, OccupationEngine, closed_shell_params, quasiparticle_weight


def main(argv=None) -> int:
    kFs = [float(x) for x in (argv if argv is not None else sys.argv[1:])] or [5, 8, 12, 17, 25]
    rows = []
    for kF in kFs:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = closed_shell_params(kF, R=2.5, vhat=InteractionFourier.constant(1.0, 2.5))
        eng = OccupationEngine(p)
        s = eng.scan(routes=("matrix",))
        sup = float(s.values["matrix"].max())
        rows.append((kF, p.N, p.M, eng.ps.fill_fraction, sup, 1 - quasiparticle_weight(s)))
        print(f"kF={kF:5.1f} N={p.N:7d} M={p.M:3d} fill={rows[-1][3]:.3f} sup_nq={sup:.3e} 1-Z={rows[-1][5]:.3e}")
    N = np.array([r[1] for r in rows], dtype=float)
    sup = np.array([r[4] for r in rows])
    print(f"slope (all)        {np.polyfit(np.log(N), np.log(sup), 1)[0]:+.3f}")
    if len(rows) > 2:
        print(f"slope (drop first) {np.polyfit(np.log(N[1:]), np.log(sup[1:]), 1)[0]:+.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
