import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

import stressnet

TINY = json.dumps({"epochs": 1, "feature_dim": 4, "hidden_dim": 4,
                   "baseline_hidden_dim": 4, "baseline_feature_dim": 4})


def test_simulate_record():
    rec = stressnet.simulate(3)
    assert rec.steps == 228
    assert rec.stress_yy.shape == (228,)
    assert np.all(rec.stress_xx > 0)
    first, last = rec.frame(0), rec.frame(227)
    assert first.shape == (192, 128)
    assert np.all(last >= first)
    again = stressnet.simulate(3)
    assert np.array_equal(again.stress_yy, rec.stress_yy)
    with pytest.raises(IndexError):
        rec.frame(228)


def test_downsample_matches_numpy_block_max():
    rng = np.random.default_rng(0)
    frame = (rng.random((192, 128)) < 0.01).astype(np.uint8)
    expected = frame.reshape(24, 8, 16, 8).max(axis=(1, 3))
    assert np.array_equal(stressnet.downsample(frame), expected)
    with pytest.raises(ValueError):
        stressnet.downsample(np.zeros((10, 10), dtype=np.uint8))


def test_normalize_and_losses():
    x = np.array([2.0, 7.0, 12.0])
    n = stressnet.normalize(x, 2.0, 12.0)
    assert np.allclose(n, [0.0, 0.5, 1.0])
    assert np.allclose(stressnet.denormalize(n, 2.0, 12.0), x, rtol=0, atol=1e-12)
    assert stressnet.mape([1.1], [1.0]) == pytest.approx(0.1)
    assert stressnet.mse([1.0, 2.0], [1.0, 3.0]) == 0.5
    value, grad = stressnet.fused_loss([0.3, 0.6], [0.5, 0.5], 1.0)
    assert value == stressnet.mse([0.3, 0.6], [0.5, 0.5])
    assert grad.shape == (2,)
    assert stressnet.lambda_at(600) == 0.9
    assert stressnet.lambda_at(601) == 0.1
    with pytest.raises(ValueError):
        stressnet.mape([1.0], [0.0])


def read_rollout(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return [float(r["truth"]) for r in rows], [float(r["pred"]) for r in rows]


def test_workflow_and_independent_mape(tmp_path):
    data = tmp_path / "data"
    stressnet.generate(str(data), n_sims=4, seed=1, config_json=TINY)
    assert len(list(data.glob("sim_*"))) == 4
    hist = stressnet.train(str(data), model="stressnet", loss="dynamic", channel="xx", seed=1, config_json=TINY)
    assert len(hist["epochs"]) == 1
    assert Path(hist["checkpoint"]).exists()
    stressnet.train(str(data), model="lstm", loss="mse", channel="xx", seed=1, config_json=TINY)
    rows = stressnet.evaluate(str(data), seed=1, config_json=TINY)
    names = {(r["model"], r["channel"]) for r in rows}
    assert ("Historical Average", "yy") in names
    assert ("StressNet(Dynamic Loss)", "xx") in names

    run = data / "run"
    with open(run / "results_table.csv", newline="") as f:
        table = list(csv.DictReader(f))
    assert list(table[0].keys()) == ["model", "channel", "mape"]
    slugs = {"Historical Average": "historical_average", "LSTM": "lstm",
             "StressNet(Dynamic Loss)": "stressnet_dynamic_loss"}
    for row in table:
        files = sorted((run / slugs[row["model"]] / row["channel"]).glob("rollout_*.csv"))
        assert files
        per_sim = []
        for p in files:
            truth, pred = read_rollout(p)
            per_sim.append(sum(abs((a - b) / b) for a, b in zip(pred, truth)) / len(truth))
        assert abs(sum(per_sim) / len(per_sim) - float(row["mape"])) < 1e-12

    sim = files[0].stem.removeprefix("rollout_")
    out = stressnet.rollout(str(data), hist["checkpoint"], sim, str(tmp_path / "ro"))
    assert len(out["pred"]) == 228 - 10
    assert math.isfinite(out["mape"])
    assert (tmp_path / "ro" / f"rollout_{sim}.csv").exists()


def test_errors(tmp_path):
    with pytest.raises(stressnet.DataError):
        stressnet.evaluate(str(tmp_path / "missing"))
    with pytest.raises(ValueError):
        stressnet.generate(str(tmp_path / "d"), config_json='{"bogus": 1}')
    (tmp_path / "junk.ckpt").write_bytes(b"nonsense")
    stressnet.generate(str(tmp_path / "d"), n_sims=2, config_json=TINY)
    with pytest.raises(stressnet.CheckpointError):
        stressnet.rollout(str(tmp_path / "d"), str(tmp_path / "junk.ckpt"), "sim_0000", str(tmp_path))
