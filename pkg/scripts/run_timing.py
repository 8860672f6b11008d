#!/usr/bin/env python3
"""Timing protocol: model-discovery wall time for the 2D linear and Lorenz
systems over half-decade series lengths, one core, one thread.

Full scale (reps=30, n up to 1e5) runs for hours; trim --reps/--max-n for a
quick look.  Writes per-rep times plus the fitted log-log cost curve.
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from argos import io as aio
from argos.bench import TIMING_N_GRID, timing_run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--systems", nargs="*", default=["linear2d", "lorenz"])
    parser.add_argument("--methods", nargs="*", default=["lasso", "alasso"])
    parser.add_argument("--reps", type=int, default=30)
    parser.add_argument("--max-n", type=int, default=TIMING_N_GRID[-1])
    parser.add_argument("--bootstrap-reps", type=int, default=2000)
    parser.add_argument("--master-seed", type=int, default=0)
    parser.add_argument("--output-dir", default="timing_results")
    args = parser.parse_args()

    grid = tuple(n for n in TIMING_N_GRID if n <= args.max_n)
    outdir = Path(args.output_dir)
    for system in args.systems:
        for method in args.methods:
            t0 = time.time()
            summary = timing_run(system, method, n_grid=grid, reps=args.reps,
                                 master_seed=args.master_seed,
                                 bootstrap_reps=args.bootstrap_reps)
            aio.save_timing(outdir, summary, f"{system}_{method}")
            print(f"{system}/{method}: slope {summary.slope:.2f} "
                  f"(95% CI {summary.slope_ci[0]:.2f}..{summary.slope_ci[1]:.2f}) "
                  f"medians {summary.medians} [{time.time() - t0:.0f}s]")


if __name__ == "__main__":
    main()
