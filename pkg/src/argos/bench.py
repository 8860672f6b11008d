"""Benchmark harness: success-rate sweeps over n and SNR, and timing curves.

Every (system, method, n, snr, seed) cell is computed independently from
streams derived from the master seed, so results are identical whatever the
worker count or execution order.  Initial conditions depend only on
(master seed, system, seed index), mirroring a fixed ensemble of starts
reused across the whole grid; noise and fitting streams also vary with the
grid cell.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed
from .design import term_name
from .errors import ArgosError
from .pipeline import DEFAULT_BOOTSTRAP_REPS, IdentifiedSystem, identify_system
from .systems import NoiseSpec, SystemDescriptor, add_noise, get_system, integrate, sample_initial_conditions

DEFAULT_SNR_DB = 49.0
DEFAULT_SWEEP_N = 5000

# observation grid 10^2 .. 10^5 in 0.1-decade steps, rounded up
PAPER_N_GRID = tuple(math.ceil(10 ** (2 + 0.1 * k) - 1e-9) for k in range(31))
# SNR grid 1, 4, ..., 61 dB plus the noiseless system
PAPER_SNR_GRID = tuple(float(s) for s in range(1, 62, 3)) + (math.inf,)
# timing grid 10^2 .. 10^5 in half-decade steps
TIMING_N_GRID = tuple(math.ceil(10 ** (2 + 0.5 * k) - 1e-9) for k in range(7))


@dataclass(frozen=True)
class BenchmarkRecord:
    system: str
    method: str
    n: int
    snr_db: float
    seed: int
    success: bool
    selected_terms: tuple[tuple[str, ...], ...]
    wall_seconds: float
    error: str | None = None


@dataclass(frozen=True)
class SweepSummary:
    axis: str                        # "n" or "snr"
    values: tuple[float, ...]
    success_rate: tuple[float, ...]
    n_seeds: int
    # rows (axis value, equation index, term, count, is_correct)
    term_frequency: tuple[tuple[float, int, str, int, bool], ...]
    records: tuple[BenchmarkRecord, ...]


def true_term_names(descriptor: SystemDescriptor) -> tuple[frozenset[str], ...]:
    return tuple(
        frozenset(term_name(e) for e in eq) for eq in descriptor.true_support
    )


def judge_success(identified: IdentifiedSystem, truth: SystemDescriptor) -> bool:
    """Exact support-set equality per equation; coefficients play no role."""
    if identified.dim != truth.dim:
        raise ValueError(
            f"identified system has {identified.dim} equations, truth has {truth.dim}"
        )
    return identified.supports() == true_term_names(truth)


def run_case(system: str, method: str, n: int, snr_db: float, seed_index: int,
             master_seed: int = 0, bootstrap_reps: int = DEFAULT_BOOTSTRAP_REPS,
             degree: int = 5, params: dict | None = None) -> BenchmarkRecord:
    """One benchmark cell: sample an IC, integrate, corrupt, identify, judge.

    Any pipeline error is folded into the record (success False, empty
    selection) so sweeps are total functions of their grid.
    """
    descriptor = get_system(system, params)
    snr_tag = "inf" if math.isinf(snr_db) else f"{snr_db:g}"
    x0 = sample_initial_conditions(
        descriptor, 1, seed=derive_seed(master_seed, system, "ic", seed_index))[0]
    traj = integrate(descriptor, x0, n=n, dt=descriptor.default_dt)
    noisy = add_noise(traj.states, NoiseSpec(
        snr_db, seed=derive_seed(master_seed, system, "noise", seed_index, n, snr_tag)))

    start = time.perf_counter()
    try:
        identified = identify_system(
            noisy, descriptor.default_dt, method=method, degree=degree,
            seed=derive_seed(master_seed, system, "fit", seed_index, n, snr_tag),
            bootstrap_reps=bootstrap_reps)
        wall = time.perf_counter() - start
        return BenchmarkRecord(
            system=system, method=method, n=n, snr_db=snr_db, seed=seed_index,
            success=judge_success(identified, descriptor),
            selected_terms=tuple(tuple(sorted(eq.support)) for eq in identified.equations),
            wall_seconds=wall,
        )
    except ArgosError as exc:
        wall = time.perf_counter() - start
        return BenchmarkRecord(
            system=system, method=method, n=n, snr_db=snr_db, seed=seed_index,
            success=False,
            selected_terms=tuple(() for _ in range(descriptor.dim)),
            wall_seconds=wall, error=str(exc),
        )


def _run_case_tuple(args):
    return run_case(**args)


def _run_grid(tasks, jobs):
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_case_tuple(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_case_tuple, tasks, chunksize=1))


def _summarize(axis, axis_values, per_value_records, descriptor, n_seeds):
    truth = true_term_names(descriptor)
    rates = []
    freq_rows = []
    for value, records in zip(axis_values, per_value_records):
        rates.append(float(np.mean([r.success for r in records])) if records else 0.0)
        counts: dict[tuple[int, str], int] = {}
        for record in records:
            for eq_index, terms in enumerate(record.selected_terms):
                for term in terms:
                    counts[(eq_index, term)] = counts.get((eq_index, term), 0) + 1
        for (eq_index, term), count in sorted(counts.items()):
            freq_rows.append((float(value), eq_index, term, count,
                              term in truth[eq_index]))
    all_records = tuple(r for recs in per_value_records for r in recs)
    return SweepSummary(
        axis=axis, values=tuple(float(v) for v in axis_values),
        success_rate=tuple(rates), n_seeds=n_seeds,
        term_frequency=tuple(freq_rows), records=all_records,
    )


def sweep_n(system: str, method: str, n_grid, snr_db: float = DEFAULT_SNR_DB,
            seeds: int = 20, master_seed: int = 0, jobs: int = 1,
            bootstrap_reps: int = DEFAULT_BOOTSTRAP_REPS) -> SweepSummary:
    """Success rate versus series length at fixed SNR."""
    descriptor = get_system(system)
    n_grid = [int(n) for n in n_grid]
    if min(n_grid) < 13:
        raise ValueError(f"series length below the filter floor 13: {min(n_grid)}")
    tasks = [
        dict(system=system, method=method, n=n, snr_db=snr_db, seed_index=s,
             master_seed=master_seed, bootstrap_reps=bootstrap_reps)
        for n in n_grid for s in range(seeds)
    ]
    records = _run_grid(tasks, jobs)
    per_value = [records[i * seeds:(i + 1) * seeds] for i in range(len(n_grid))]
    return _summarize("n", n_grid, per_value, descriptor, seeds)


def sweep_snr(system: str, method: str, snr_grid, n: int = DEFAULT_SWEEP_N,
              seeds: int = 20, master_seed: int = 0, jobs: int = 1,
              bootstrap_reps: int = DEFAULT_BOOTSTRAP_REPS) -> SweepSummary:
    """Success rate versus SNR at fixed series length."""
    descriptor = get_system(system)
    snr_grid = [float(s) for s in snr_grid]
    tasks = [
        dict(system=system, method=method, n=n, snr_db=snr, seed_index=s,
             master_seed=master_seed, bootstrap_reps=bootstrap_reps)
        for snr in snr_grid for s in range(seeds)
    ]
    records = _run_grid(tasks, jobs)
    per_value = [records[i * seeds:(i + 1) * seeds] for i in range(len(snr_grid))]
    return _summarize("snr", snr_grid, per_value, descriptor, seeds)


@dataclass(frozen=True)
class TimingSummary:
    system: str
    method: str
    rows: tuple[tuple[int, int, float], ...]   # (n, rep, wall seconds)
    medians: dict
    quartiles: dict
    slope: float
    intercept: float
    slope_ci: tuple[float, float]


def timing_run(system: str, method: str, n_grid=TIMING_N_GRID, reps: int = 30,
               master_seed: int = 0,
               bootstrap_reps: int = DEFAULT_BOOTSTRAP_REPS) -> TimingSummary:
    """Wall-clock cost of model discovery alone, single worker, no noise sweep.

    Times only :func:`identify_system` (trajectory generation excluded) at
    SNR 49 dB.  Reports per-n medians and quartiles plus a log10-log10
    least-squares fit of seconds against n with a normal-approximation 95%
    interval on the slope.
    """
    if system not in ("linear2d", "lorenz"):
        raise ValueError(f"timing protocol covers linear2d and lorenz, got {system!r}")
    rows = []
    for n in n_grid:
        for rep in range(reps):
            record = run_case(system, method, int(n), DEFAULT_SNR_DB, rep,
                              master_seed=master_seed, bootstrap_reps=bootstrap_reps)
            rows.append((int(n), rep, record.wall_seconds))
    medians = {}
    quartiles = {}
    for n in n_grid:
        walls = np.array([w for (m, _, w) in rows if m == int(n)])
        medians[int(n)] = float(np.median(walls))
        quartiles[int(n)] = (float(np.percentile(walls, 25)),
                             float(np.percentile(walls, 75)))
    log_n = np.log10([r[0] for r in rows])
    log_w = np.log10([max(r[2], 1e-12) for r in rows])
    if len(set(int(n) for n in n_grid)) < 2:
        # slope undefined on a single-point grid
        return TimingSummary(system=system, method=method, rows=tuple(rows),
                             medians=medians, quartiles=quartiles,
                             slope=math.nan, intercept=math.nan,
                             slope_ci=(math.nan, math.nan))
    a = np.column_stack([np.ones_like(log_n), log_n])
    coef, *_ = np.linalg.lstsq(a, log_w, rcond=None)
    resid = log_w - a @ coef
    dof = max(len(rows) - 2, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(a.T @ a)
    half = 1.96 * math.sqrt(cov[1, 1])
    return TimingSummary(
        system=system, method=method, rows=tuple(rows),
        medians=medians, quartiles=quartiles,
        slope=float(coef[1]), intercept=float(coef[0]),
        slope_ci=(float(coef[1] - half), float(coef[1] + half)),
    )
