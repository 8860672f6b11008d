import json
import math

import numpy as np
import pytest

from argos import io as aio
from argos.bench import run_case, sweep_n
from argos.pipeline import identify_system
from argos.systems import NoiseSpec, Trajectory, add_noise, get_system, integrate


@pytest.fixture(scope="module")
def small_identified():
    d = get_system("linear2d")
    traj = integrate(d, [2.0, 0.0], n=300, dt=0.01)
    noisy = add_noise(traj.states, NoiseSpec(49.0, seed=1))
    return identify_system(noisy, 0.01, method="lasso", seed=2, bootstrap_reps=40)


def test_trajectory_roundtrip_bytes(tmp_path):
    d = get_system("lorenz")
    traj = integrate(d, [-8.0, 7.0, 27.0], n=50, dt=0.001)
    csv_path, sidecar_path = aio.save_trajectory(tmp_path / "traj.csv", traj,
                                                 snr_db=math.inf)
    times, states, sidecar = aio.load_trajectory(csv_path)
    assert np.array_equal(times, traj.times)
    assert np.array_equal(states, traj.states)
    assert sidecar["system"] == "lorenz"
    assert math.isinf(sidecar["snr_db"])

    # re-serializing the parsed data reproduces the file byte for byte
    re_traj = Trajectory(times=times, states=states, descriptor=d, seed=0)
    assert aio.trajectory_csv_text(re_traj) == csv_path.read_text()


def test_trajectory_17_digit_precision(tmp_path):
    d = get_system("linear2d")
    traj = integrate(d, [1.0 / 3.0, 2.0 / 7.0], n=20, dt=0.01)
    csv_path, _ = aio.save_trajectory(tmp_path / "t.csv", traj)
    _, states, _ = aio.load_trajectory(csv_path)
    assert np.array_equal(states, traj.states)  # exact float round-trip


def test_identified_json_roundtrip(tmp_path, small_identified):
    path = aio.save_identified_system(tmp_path / "model.json", small_identified,
                                      config={"note": 1})
    payload = json.loads(path.read_text())
    assert aio.canonical_json(payload) == path.read_text()
    assert payload["provenance"]["method"] == "lasso"
    assert payload["config"] == {"note": 1}
    eq1 = payload["equations"][0]
    assert set(eq1["support"]) == set(small_identified.equations[0].support)
    for name, entry in eq1["candidates"].items():
        assert entry["ci"][0] <= entry["ci"][1]


def test_residuals_csv(tmp_path, small_identified):
    paths = aio.save_residuals(tmp_path, small_identified, stem="resid")
    assert [p.name for p in paths] == ["resid_x1.csv", "resid_x2.csv"]
    lines = paths[0].read_text().splitlines()
    assert lines[0] == "fitted,residual"
    assert len(lines) == 1 + 300
    fitted, residual = map(float, lines[1].split(","))
    assert fitted == small_identified.equations[0].fitted[0]
    assert residual == small_identified.equations[0].residuals[0]


def test_records_jsonl_roundtrip(tmp_path):
    records = [
        run_case("linear2d", "lasso", n=300, snr_db=snr, seed_index=i,
                 master_seed=1, bootstrap_reps=40)
        for i, snr in enumerate([49.0, math.inf])
    ]
    path = aio.save_records(tmp_path / "records.jsonl", records)
    loaded = aio.load_records(path)
    assert len(loaded) == 2
    assert loaded[0]["snr_db"] == 49.0
    assert math.isinf(loaded[1]["snr_db"])
    assert loaded[0]["seed"] == 0

    # determinism-facing serialization: timing stripped, reruns byte-identical
    again = [
        run_case("linear2d", "lasso", n=300, snr_db=snr, seed_index=i,
                 master_seed=1, bootstrap_reps=40)
        for i, snr in enumerate([49.0, math.inf])
    ]
    a = aio.records_jsonl_text(records, include_timing=False)
    b = aio.records_jsonl_text(again, include_timing=False)
    assert a == b


def test_sweep_csvs(tmp_path):
    summary = sweep_n("linear2d", "lasso", [300], snr_db=49.0, seeds=2,
                      master_seed=2, bootstrap_reps=40)
    paths = aio.save_sweep(tmp_path, summary, "demo")
    success_lines = paths["summary"].read_text().splitlines()
    assert success_lines[0] == "axis_value,success_rate,n_seeds"
    assert success_lines[1].startswith("300,")
    assert success_lines[1].endswith(",2")

    term_lines = paths["terms"].read_text().splitlines()
    assert term_lines[0] == "axis_value,equation,term,count,is_correct"
    for line in term_lines[1:]:
        value, eq, term, count, flag = line.split(",")
        assert value == "300"
        assert eq in ("x1", "x2")
        assert flag in ("true", "false")
        assert 1 <= int(count) <= 2


def test_smoothed_signal_csv(tmp_path):
    import numpy as np
    from argos.savgol import auto_smooth

    t = np.arange(100) * 0.01
    x = np.sin(t) + 0.01 * np.random.default_rng(0).normal(size=100)
    sm = auto_smooth(x, dt=0.01)
    path = aio.save_smoothed_signal(tmp_path / "smooth.csv", t, sm)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x_smooth,x_dot"
    assert len(lines) == 101
    row = lines[1].split(",")
    assert float(row[1]) == sm.x_smooth[0]
    assert float(row[2]) == sm.x_dot[0]


def test_snr_axis_formatting():
    assert aio._axis_str(math.inf) == "inf"
    assert aio._axis_str(25.0) == "25"
    assert aio._axis_str(2.5) == "2.5"
    assert aio.parse_snr("inf") == math.inf
    assert aio.parse_snr("49") == 49.0
    assert aio.parse_snr(math.inf) == math.inf
