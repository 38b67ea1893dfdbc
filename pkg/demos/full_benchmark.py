"""End-to-end benchmark: train all four presets, then build both comparison
panels (l1 solver and l0 solver) against the 1/L and 2.1/L baselines.

At full scale this is a long run (roughly half an hour per trained variant on
one desktop core); pass --desk-scale for a coffee-break version. Outputs land
in one directory per preset plus eval-ista/ and eval-iht/ panel directories,
each with a manifest for bit-exact reruns.

Usage:
    python3 demos/full_benchmark.py --out runs/full_scale
    python3 demos/full_benchmark.py --out runs/desk --desk-scale
"""

import argparse
import csv
import sys
import time
from pathlib import Path

from proxunfold.cli import main as cli_main
from proxunfold.presets import PRESET_NAMES


def read_panel(path):
    with open(path) as f:
        rows = list(csv.reader(f))
    header = rows[0]
    cols = {name: [float(r[i]) for r in rows[1:]] for i, name in enumerate(header)}
    return cols


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/full_scale")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--desk-scale", action="store_true")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    out = Path(args.out)
    flags = []
    if args.seed is not None:
        flags += ["--seed", str(args.seed)]
    if args.desk_scale:
        flags += ["--desk-scale"]

    for name in PRESET_NAMES:
        t0 = time.time()
        print(f"=== training {name} ===", flush=True)
        rc = cli_main(["train", name, "--out", str(out / name)] + flags)
        if rc != 0:
            print(f"training {name} failed with exit code {rc}", file=sys.stderr)
            return rc
        print(f"=== {name} done in {time.time() - t0:.0f}s ===", flush=True)

    for alg in ("ista", "iht"):
        t0 = time.time()
        print(f"=== evaluating {alg} panel ===", flush=True)
        rc = cli_main(["eval", f"{alg}-supervised",
                       str(out / f"{alg}-supervised" / "schedule.csv"),
                       str(out / f"{alg}-unsupervised" / "schedule.csv"),
                       "--out", str(out / f"eval-{alg}"),
                       "--threads", str(args.threads)] + flags)
        if rc != 0:
            print(f"evaluating {alg} failed with exit code {rc}", file=sys.stderr)
            return rc
        print(f"=== eval-{alg} done in {time.time() - t0:.0f}s ===", flush=True)

    # Qualitative summary of the final iteration, mirroring the figure panels.
    for alg in ("ista", "iht"):
        mse = read_panel(out / f"eval-{alg}" / "mse.csv")
        obj = read_panel(out / f"eval-{alg}" / "objective.csv")
        print(f"--- {alg}: final iteration ---")
        for label in mse:
            if label == "t":
                continue
            print(f"  {label:24s} mse {mse[label][-1]:9.3f} dB   "
                  f"objective {obj[label][-1]:.6f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
