"""File formats: trajectory CSV + sidecar, model JSON, sweep CSVs, JSONL.

All writers emit canonical bytes: fixed key order, ``repr``-shortest floats
in JSON (17 significant digits in trajectory CSVs), LF newlines, and the
string "inf" for infinite SNR values.  Reading a file and re-serializing it
therefore reproduces it byte for byte, which the test suite enforces.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path

import numpy as np

from .bench import BenchmarkRecord, SweepSummary, TimingSummary
from .pipeline import IdentifiedSystem
from .systems import SystemDescriptor, Trajectory, get_system


def _f17(x: float) -> str:
    return format(float(x), ".17g")


def _jsonify(obj):
    """Make an object JSON-safe; infinities become the string 'inf'."""
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def parse_snr(value) -> float:
    if isinstance(value, str):
        return math.inf if value.strip().lower() in ("inf", "infinity") else float(value)
    return float(value)


def canonical_json(payload) -> str:
    return json.dumps(_jsonify(payload), indent=2, sort_keys=True,
                      ensure_ascii=False) + "\n"


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")
    return path


# ----------------------------------------------------------------- trajectory

def trajectory_csv_text(trajectory: Trajectory) -> str:
    m = trajectory.states.shape[1]
    buf = _io.StringIO()
    buf.write("t," + ",".join(f"x{j + 1}" for j in range(m)) + "\n")
    for t, row in zip(trajectory.times, trajectory.states):
        buf.write(_f17(t) + "," + ",".join(_f17(v) for v in row) + "\n")
    return buf.getvalue()


def save_trajectory(path, trajectory: Trajectory, snr_db: float = math.inf,
                    noise_seed: int | None = None) -> tuple[Path, Path]:
    """Write `<path>` CSV plus the `<path>.json` descriptor sidecar."""
    csv_path = write_text(path, trajectory_csv_text(trajectory))
    sidecar = {
        "system": trajectory.descriptor.name,
        "parameters": trajectory.descriptor.params,
        "dim": trajectory.descriptor.dim,
        "dt": trajectory.dt,
        "n": int(trajectory.states.shape[0]),
        "seed": int(trajectory.seed),
        "snr_db": snr_db,
        "noise_seed": noise_seed,
    }
    sidecar_path = write_text(str(csv_path) + ".json", canonical_json(sidecar))
    return csv_path, sidecar_path


def load_trajectory(path) -> tuple[np.ndarray, np.ndarray, dict | None]:
    """Read (times, states, sidecar-dict-or-None) from a trajectory CSV."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "t":
            raise ValueError(f"{path}: expected header starting with 't'")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.asarray(rows)
    sidecar_path = Path(str(path) + ".json")
    sidecar = None
    if sidecar_path.exists():
        sidecar = json.loads(sidecar_path.read_text())
        sidecar["snr_db"] = parse_snr(sidecar.get("snr_db", "inf"))
    return data[:, 0], data[:, 1:], sidecar


def smoothed_signal_csv_text(times, smoothed) -> str:
    """Diagnostic CSV `t,x_smooth,x_dot` for one smoothed column."""
    buf = _io.StringIO()
    buf.write("t,x_smooth,x_dot\n")
    for t, s, d in zip(times, smoothed.x_smooth, smoothed.x_dot):
        buf.write(f"{_f17(t)},{_f17(s)},{_f17(d)}\n")
    return buf.getvalue()


def save_smoothed_signal(path, times, smoothed) -> Path:
    return write_text(path, smoothed_signal_csv_text(times, smoothed))


# ----------------------------------------------------------------- models

def identified_system_payload(identified: IdentifiedSystem,
                              config: dict | None = None) -> dict:
    equations = []
    for j, eq in enumerate(identified.equations):
        terms = {
            name: {
                "point": eq.point_estimates[name],
                "ci": [eq.ci_lower[name], eq.ci_upper[name]],
            }
            for name in eq.point_estimates
        }
        equations.append({
            "lhs": f"x{j + 1}_dot",
            "support": {name: eq.coefficients[name] for name in eq.support},
            "intercept": eq.intercept,
            "bic": eq.bic,
            "candidates": terms,
        })
    payload = {
        "equations": equations,
        "provenance": {
            "method": identified.method,
            "dt": identified.dt,
            "n": identified.n,
            "dim": identified.dim,
            "degree": identified.basis.degree,
            "seed": identified.seed,
            "bootstrap_reps": identified.bootstrap_reps,
            "alpha": identified.alpha,
            "trimmed_degrees": list(identified.trimmed_degrees),
            "smoothing_windows": list(identified.chosen_windows),
        },
    }
    if config is not None:
        payload["config"] = config
    return payload


def save_identified_system(path, identified: IdentifiedSystem,
                           config: dict | None = None) -> Path:
    return write_text(path, canonical_json(identified_system_payload(identified, config)))


def residuals_csv_text(equation) -> str:
    buf = _io.StringIO()
    buf.write("fitted,residual\n")
    for f, r in zip(equation.fitted, equation.residuals):
        buf.write(f"{float(f)!r},{float(r)!r}\n")
    return buf.getvalue()


def save_residuals(directory, identified: IdentifiedSystem, stem: str = "residuals") -> list[Path]:
    paths = []
    for j, eq in enumerate(identified.equations):
        paths.append(write_text(Path(directory) / f"{stem}_x{j + 1}.csv",
                                residuals_csv_text(eq)))
    return paths


# ----------------------------------------------------------------- benchmark

def record_payload(record: BenchmarkRecord, include_timing: bool = True) -> dict:
    payload = {
        "system": record.system,
        "method": record.method,
        "n": record.n,
        "snr_db": record.snr_db,
        "seed": record.seed,
        "success": record.success,
        "selected_terms": [list(terms) for terms in record.selected_terms],
        "error": record.error,
    }
    if include_timing:
        payload["wall_seconds"] = record.wall_seconds
    return payload


def records_jsonl_text(records, include_timing: bool = True) -> str:
    lines = [
        json.dumps(_jsonify(record_payload(r, include_timing)), sort_keys=True,
                   ensure_ascii=False)
        for r in records
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def save_records(path, records, include_timing: bool = True) -> Path:
    return write_text(path, records_jsonl_text(records, include_timing))


def load_records(path) -> list[dict]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            row = json.loads(line)
            row["snr_db"] = parse_snr(row["snr_db"])
            out.append(row)
    return out


def _axis_str(value: float) -> str:
    if math.isinf(value):
        return "inf"
    return repr(int(value)) if float(value).is_integer() else repr(float(value))


def sweep_summary_csv_text(summary: SweepSummary) -> str:
    buf = _io.StringIO()
    buf.write("axis_value,success_rate,n_seeds\n")
    for value, rate in zip(summary.values, summary.success_rate):
        buf.write(f"{_axis_str(value)},{rate!r},{summary.n_seeds}\n")
    return buf.getvalue()


def term_frequency_csv_text(summary: SweepSummary) -> str:
    buf = _io.StringIO()
    buf.write("axis_value,equation,term,count,is_correct\n")
    for value, eq_index, term, count, correct in summary.term_frequency:
        buf.write(f"{_axis_str(value)},x{eq_index + 1},{term},{count},"
                  f"{'true' if correct else 'false'}\n")
    return buf.getvalue()


def save_sweep(directory, summary: SweepSummary, stem: str,
               include_timing: bool = True) -> dict[str, Path]:
    directory = Path(directory)
    return {
        "summary": write_text(directory / f"{stem}_success.csv",
                              sweep_summary_csv_text(summary)),
        "terms": write_text(directory / f"{stem}_terms.csv",
                            term_frequency_csv_text(summary)),
        "records": write_text(directory / f"{stem}_records.jsonl",
                              records_jsonl_text(summary.records, include_timing)),
    }


def timing_csv_text(summary: TimingSummary) -> str:
    buf = _io.StringIO()
    buf.write("n,rep,wall_seconds\n")
    for n, rep, wall in summary.rows:
        buf.write(f"{n},{rep},{wall!r}\n")
    return buf.getvalue()


def timing_fit_payload(summary: TimingSummary) -> dict:
    return {
        "system": summary.system,
        "method": summary.method,
        "log10_fit": {
            "slope": summary.slope,
            "intercept": summary.intercept,
            "slope_ci95": list(summary.slope_ci),
        },
        "median_seconds": {str(k): v for k, v in summary.medians.items()},
        "quartiles": {str(k): list(v) for k, v in summary.quartiles.items()},
    }


def save_timing(directory, summary: TimingSummary, stem: str) -> dict[str, Path]:
    directory = Path(directory)
    return {
        "rows": write_text(directory / f"{stem}_times.csv", timing_csv_text(summary)),
        "fit": write_text(directory / f"{stem}_fit.json",
                          canonical_json(timing_fit_payload(summary))),
    }


def descriptor_from_sidecar(sidecar: dict) -> SystemDescriptor:
    return get_system(sidecar["system"], sidecar.get("parameters"))
