#!/usr/bin/env python3
"""Reproduce the success-rate panels for all eight systems and both methods.

Desk-scale by default (20 seeds, reduced grids); pass --full for the
100-seed protocol over the complete grids.  Expect hours at full scale.

Outputs per (system, method, axis): success CSV, term-frequency CSV,
record JSONL, and the resolved config, all under --output-dir.
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from argos import io as aio
from argos.bench import PAPER_N_GRID, PAPER_SNR_GRID, sweep_n, sweep_snr
from argos.systems import SYSTEM_NAMES

DESK_N_GRID = tuple(PAPER_N_GRID[::3])        # every third decade step
DESK_SNR_GRID = tuple(PAPER_SNR_GRID[::3]) + (PAPER_SNR_GRID[-1],)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--systems", nargs="*", default=list(SYSTEM_NAMES))
    parser.add_argument("--methods", nargs="*", default=["lasso", "alasso"])
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--bootstrap-reps", type=int, default=2000)
    parser.add_argument("--jobs", type=int, default=2)
    parser.add_argument("--master-seed", type=int, default=0)
    parser.add_argument("--full", action="store_true",
                        help="100 seeds over the complete grids")
    parser.add_argument("--output-dir", default="sweep_results")
    args = parser.parse_args()

    seeds = 100 if args.full else args.seeds
    n_grid = PAPER_N_GRID if args.full else DESK_N_GRID
    snr_grid = PAPER_SNR_GRID if args.full else DESK_SNR_GRID
    outdir = Path(args.output_dir)

    for system in args.systems:
        for method in args.methods:
            t0 = time.time()
            summary = sweep_n(system, method, n_grid, seeds=seeds,
                              master_seed=args.master_seed, jobs=args.jobs,
                              bootstrap_reps=args.bootstrap_reps)
            aio.save_sweep(outdir, summary, f"n_{system}_{method}")
            print(f"{system}/{method} n-sweep: {summary.success_rate} "
                  f"[{time.time() - t0:.0f}s]")

            t0 = time.time()
            summary = sweep_snr(system, method, snr_grid, seeds=seeds,
                                master_seed=args.master_seed, jobs=args.jobs,
                                bootstrap_reps=args.bootstrap_reps)
            aio.save_sweep(outdir, summary, f"snr_{system}_{method}")
            print(f"{system}/{method} snr-sweep: {summary.success_rate} "
                  f"[{time.time() - t0:.0f}s]")


if __name__ == "__main__":
    main()
