"""Run every example config in scripts/configs and write CSVs to results/.

    python scripts/run_all.py [--out-dir results] [--threads 1]
"""

import argparse
import pathlib
import sys
import time

from fermi_rpa.cli import main as cli_main
from fermi_rpa.config import RunConfig

HERE = pathlib.Path(__file__).resolve().parent


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for cfg in sorted((HERE / "configs").glob("*.ini")):
        mode = RunConfig.load(cfg).mode
        target = out / f"{cfg.stem}.csv"
        t = time.perf_counter()
        rc = cli_main([mode, "--config", str(cfg), "--out", str(target),
                       "--no-timestamp", "--threads", str(args.threads)])
        print(f"{cfg.name:22s} {mode:15s} rc={rc} {time.perf_counter() - t:6.1f}s -> {target}")
        status = max(status, rc)
    return status


if __name__ == "__main__":
    sys.exit(main())
