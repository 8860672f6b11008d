"""Command-line front end: simulate, identify, sweep-n, sweep-snr, timing.

Config precedence is flags > config file (--config, JSON) > defaults.  Every
artifact embeds (or is accompanied by) the fully resolved configuration and
master seed, so a run can be reproduced from its outputs alone.  Invalid
configurations exit nonzero with a single-line error on stderr and remove
any partially written outputs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._rng import derive_seed
from .bench import (
    PAPER_N_GRID,
    PAPER_SNR_GRID,
    TIMING_N_GRID,
    sweep_n,
    sweep_snr,
    timing_run,
)
from .errors import ArgosError
from .pipeline import identify_system, percentile_rank_indices
from .systems import (
    NoiseSpec,
    Trajectory,
    add_noise,
    get_system,
    integrate,
    sample_initial_conditions,
)
from . import io as aio

OUTPUT_DIR_ENV = "ARGOS_OUTPUT_DIR"
METHODS = ("lasso", "alasso")
COMMANDS = ("simulate", "identify", "sweep-n", "sweep-snr", "timing")


@dataclass
class RunConfig:
    command: str
    system: str | None = None
    method: str = "lasso"
    n: int | None = None
    dt: float | None = None
    snr_db: float = math.inf
    seeds: int = 20
    degree: int = 5
    bootstrap_reps: int = 2000
    alpha: float = 0.05
    master_seed: int = 0
    jobs: int = 1
    output_dir: str = "."
    stem: str | None = None
    input: str | None = None
    n_grid: tuple[int, ...] = ()
    snr_grid: tuple[float, ...] = ()
    reps: int = 30

    def validate(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.command != "identify" or self.input is None:
            if self.system is None:
                raise ValueError("--system is required")
            get_system(self.system)
        if self.n is not None and self.n < 13:
            raise ValueError(f"n must be >= 13, got {self.n}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.snr_db >= 0:
            raise ValueError(f"snr must be >= 0 dB or inf, got {self.snr_db}")
        if self.seeds < 1:
            raise ValueError(f"seeds must be >= 1, got {self.seeds}")
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        percentile_rank_indices(self.bootstrap_reps, self.alpha)
        if self.jobs < 1:
            raise ValueError(f"jobs must be >= 1, got {self.jobs}")
        if any(n < 13 for n in self.n_grid):
            raise ValueError("n grid values must be >= 13")
        return self


def _parse_grid(text, cast):
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        out.append(cast(part))
    if not out:
        raise ValueError(f"empty grid: {text!r}")
    return tuple(out)


def _parse_snr_value(text):
    value = aio.parse_snr(text)
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # single-line machine-parsable errors
        raise _UsageError(message)


class _UsageError(ValueError):
    pass


def build_parser() -> _Parser:
    parser = _Parser(prog="argos", add_help=True,
                     description="sparse identification of governing equations")
    parser.add_argument("--version", action="version",
                        version=f"argos {__version__} (python {sys.version.split()[0]}, "
                                f"numpy {np.__version__})")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with defaults for any flag")
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--stem", help="basename for output files")
        p.add_argument("--seed", dest="master_seed", type=int)
        p.add_argument("--method", choices=METHODS)
        p.add_argument("--degree", type=int)
        p.add_argument("--bootstrap-reps", dest="bootstrap_reps", type=int)
        p.add_argument("--alpha", type=float)
        p.add_argument("--jobs", type=int)

    p = sub.add_parser("simulate", help="integrate a benchmark system to CSV")
    common(p)
    p.add_argument("--system")
    p.add_argument("--n", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--snr", dest="snr_db", type=_parse_snr_value)

    p = sub.add_parser("identify", help="identify equations from a trajectory")
    common(p)
    p.add_argument("--system")
    p.add_argument("--input", help="trajectory CSV (otherwise simulate inline)")
    p.add_argument("--n", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--snr", dest="snr_db", type=_parse_snr_value)

    p = sub.add_parser("sweep-n", help="success rate versus series length")
    common(p)
    p.add_argument("--system")
    p.add_argument("--snr", dest="snr_db", type=_parse_snr_value)
    p.add_argument("--seeds", type=int)
    p.add_argument("--n-grid", dest="n_grid", type=lambda s: _parse_grid(s, int))

    p = sub.add_parser("sweep-snr", help="success rate versus SNR")
    common(p)
    p.add_argument("--system")
    p.add_argument("--n", type=int)
    p.add_argument("--seeds", type=int)
    p.add_argument("--snr-grid", dest="snr_grid",
                   type=lambda s: _parse_grid(s, aio.parse_snr))

    p = sub.add_parser("timing", help="wall-clock cost of model discovery")
    common(p)
    p.add_argument("--system")
    p.add_argument("--n-grid", dest="n_grid", type=lambda s: _parse_grid(s, int))
    p.add_argument("--reps", type=int)

    return parser


_COMMAND_DEFAULTS = {
    "simulate": {"snr_db": math.inf, "n": 1000},
    "identify": {"snr_db": 49.0, "n": 1000},
    "sweep-n": {"snr_db": 49.0, "n_grid": PAPER_N_GRID},
    "sweep-snr": {"n": 5000, "snr_grid": PAPER_SNR_GRID},
    "timing": {"n_grid": TIMING_N_GRID},
}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    given = {k: v for k, v in vars(args).items()
             if v is not None and k not in ("config",)}
    command = given.pop("command")
    merged: dict = {"output_dir": os.environ.get(OUTPUT_DIR_ENV, ".")}
    merged.update(_COMMAND_DEFAULTS.get(command, {}))
    if getattr(args, "config", None):
        file_conf = json.loads(Path(args.config).read_text())
        if not isinstance(file_conf, dict):
            raise ValueError(f"config file must hold a JSON object: {args.config}")
        for key, value in file_conf.items():
            key = key.replace("-", "_")
            if key in ("snr_db", "snr"):
                merged["snr_db"] = aio.parse_snr(value)
            elif key == "seed":
                merged["master_seed"] = int(value)
            elif key == "snr_grid":
                merged[key] = tuple(aio.parse_snr(v) for v in value)
            elif key == "n_grid":
                merged[key] = tuple(int(v) for v in value)
            else:
                merged[key] = value
    merged.update(given)
    fields = {f for f in RunConfig.__dataclass_fields__}
    unknown = set(merged) - fields
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(command=command, **merged).validate()


def _config_payload(config: RunConfig) -> dict:
    payload = asdict(config)
    payload["n_grid"] = list(config.n_grid)
    payload["snr_grid"] = list(config.snr_grid)
    return payload


class _Artifacts:
    """Tracks written files so a failing run leaves nothing behind."""

    def __init__(self):
        self.paths: list[Path] = []

    def add(self, item):
        if isinstance(item, dict):
            self.paths.extend(item.values())
        elif isinstance(item, (list, tuple)):
            self.paths.extend(item)
        else:
            self.paths.append(item)
        return item

    def discard_all(self):
        for path in self.paths:
            try:
                Path(path).unlink()
            except OSError:
                pass


def _simulated_states(config: RunConfig):
    descriptor = get_system(config.system)
    dt = config.dt if config.dt is not None else descriptor.default_dt
    x0 = sample_initial_conditions(
        descriptor, 1, seed=derive_seed(config.master_seed, config.system, "ic", 0))[0]
    traj = integrate(descriptor, x0, n=config.n, dt=dt)
    noise_seed = derive_seed(config.master_seed, config.system, "noise", 0)
    states = add_noise(traj.states, NoiseSpec(config.snr_db, seed=noise_seed))
    return descriptor, traj, states, dt, noise_seed


def _cmd_simulate(config: RunConfig, artifacts: _Artifacts):
    descriptor, traj, states, dt, noise_seed = _simulated_states(config)
    stem = config.stem or f"{config.system}_n{config.n}_seed{config.master_seed}"
    out = Path(config.output_dir) / f"{stem}.csv"
    noisy_traj = Trajectory(times=traj.times, states=states,
                            descriptor=descriptor, seed=config.master_seed)
    csv_path, sidecar_path = artifacts.add(
        aio.save_trajectory(out, noisy_traj, snr_db=config.snr_db,
                            noise_seed=noise_seed))
    sidecar = json.loads(Path(sidecar_path).read_text())
    sidecar["config"] = _config_payload(config)
    artifacts.add(aio.write_text(sidecar_path, aio.canonical_json(sidecar)))
    print(csv_path)


def _cmd_identify(config: RunConfig, artifacts: _Artifacts):
    if config.input is not None:
        times, states, sidecar = aio.load_trajectory(config.input)
        dt = config.dt
        if dt is None and sidecar is not None:
            dt = float(sidecar["dt"])
        if dt is None:
            dt = float(times[1] - times[0])
        stem = config.stem or Path(config.input).stem
    else:
        _, _, states, dt, _ = _simulated_states(config)
        stem = config.stem or (f"{config.system}_n{config.n}_"
                               f"{config.method}_seed{config.master_seed}")
    identified = identify_system(
        states, dt, method=config.method, degree=config.degree,
        seed=config.master_seed, bootstrap_reps=config.bootstrap_reps,
        alpha=config.alpha)
    outdir = Path(config.output_dir)
    artifacts.add(aio.save_identified_system(
        outdir / f"{stem}_model.json", identified, config=_config_payload(config)))
    artifacts.add(aio.save_residuals(outdir, identified, stem=f"{stem}_residuals"))
    print(outdir / f"{stem}_model.json")


def _cmd_sweep(config: RunConfig, artifacts: _Artifacts):
    if config.command == "sweep-n":
        summary = sweep_n(config.system, config.method, config.n_grid,
                          snr_db=config.snr_db, seeds=config.seeds,
                          master_seed=config.master_seed, jobs=config.jobs,
                          bootstrap_reps=config.bootstrap_reps)
        stem = config.stem or f"sweep_n_{config.system}_{config.method}"
    else:
        summary = sweep_snr(config.system, config.method, config.snr_grid,
                            n=config.n, seeds=config.seeds,
                            master_seed=config.master_seed, jobs=config.jobs,
                            bootstrap_reps=config.bootstrap_reps)
        stem = config.stem or f"sweep_snr_{config.system}_{config.method}"
    outdir = Path(config.output_dir)
    paths = artifacts.add(aio.save_sweep(outdir, summary, stem))
    artifacts.add(aio.write_text(outdir / f"{stem}_config.json",
                                 aio.canonical_json(_config_payload(config))))
    print(paths["summary"])


def _cmd_timing(config: RunConfig, artifacts: _Artifacts):
    # the measured region is single-threaded by protocol
    summary = timing_run(config.system, config.method, n_grid=config.n_grid,
                         reps=config.reps, master_seed=config.master_seed,
                         bootstrap_reps=config.bootstrap_reps)
    stem = config.stem or f"timing_{config.system}_{config.method}"
    outdir = Path(config.output_dir)
    paths = artifacts.add(aio.save_timing(outdir, summary, stem))
    artifacts.add(aio.write_text(outdir / f"{stem}_config.json",
                                 aio.canonical_json(_config_payload(config))))
    print(paths["rows"])


def main(argv=None) -> int:
    parser = build_parser()
    artifacts = _Artifacts()
    try:
        args = parser.parse_args(argv)
        config = resolve_config(args)
        handler = {
            "simulate": _cmd_simulate,
            "identify": _cmd_identify,
            "sweep-n": _cmd_sweep,
            "sweep-snr": _cmd_sweep,
            "timing": _cmd_timing,
        }[config.command]
        handler(config, artifacts)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArgosError, OSError, json.JSONDecodeError) as exc:
        artifacts.discard_all()
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
