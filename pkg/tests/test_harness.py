import csv
import json

import numpy as np
import pytest

from recsparse.harness import (COLUMNS, ConfigError, ExperimentConfig, export, load_json, nmse,
                               run_experiment, run_realization, support_errors, track)
from recsparse.sensing import gen_bounded_uniform_noise, measure

from helpers import near_orthonormal


def _small(**kw):
    base = dict(model="assumptions1", m=24, S=4, S_a=1, r=1.0, d=2, n0=20, n=16, c0=0.001, c=0.005,
                T_max=12, realizations=3, master_seed=7)
    base.update(kw)
    return ExperimentConfig(**base)


def test_nmse_examples():
    truth = np.array([[3.0, 4.0]])
    assert nmse(truth, np.array([[3.0, 0.0]])) == pytest.approx(16 / 25)
    assert nmse(truth, truth) == 0.0
    assert np.isnan(nmse(np.zeros((1, 2)), np.ones((1, 2))))


def test_support_errors_example():
    assert support_errors([1, 2, 3, 4], [3, 4, 5]) == (0.25, 0.5)
    # two realizations: mean counts over mean support size
    assert support_errors([[1, 2], [1, 2, 3, 4]], [[1, 2, 9], [1]]) == pytest.approx((0.5 / 3, 1.5 / 3))


def test_orthonormal_noiseless_tracking_is_exact():
    A = near_orthonormal(12, 0, jitter=0.0)
    X = np.zeros((4, 12))
    X[:, [1, 5, 7]] = [2.0, -3.0, 1.5]
    frames = [(A, None, measure(A, x, np.zeros(12), t, 0.0)) for t, x in enumerate(X)]
    for alg in ("noisy_l1", "modcs", "addlsdel"):
        outs = track(alg, frames, X, check=True)
        est = np.vstack([o.x_hat for o in outs])
        assert np.all(nmse(X, est) < 1e-12)
        assert all(o.violations == [] for o in outs)


def test_export_formats(tmp_path):
    s = run_experiment(_small())
    export(s, tmp_path / "m.csv", "csv")
    export(s, tmp_path / "m.json", "json")
    with open(tmp_path / "m.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == COLUMNS
    assert len(rows) == 1 + 12 * 3
    d = load_json(tmp_path / "m.json")
    assert d["columns"] == list(COLUMNS) and len(d["rows"]) == 36
    assert ExperimentConfig.from_dict(d["config"]).to_dict() == s.config.to_dict()
    for (t, alg, a, *_), row in zip(d["rows"], rows[1:]):
        assert str(t) == row[0] and alg == row[1] and float(row[2]) == a
    with pytest.raises(ValueError):
        export(s, tmp_path / "m.xml", "xml")


def test_realizations_are_seed_isolated():
    one = run_realization(_small(realizations=1), 2)
    many = run_experiment(_small(realizations=4))
    assert np.array_equal(one["err2"], many.err2[2])


def test_small_run_deterministic(tmp_path):
    for k in range(2):
        export(run_experiment(_small()), tmp_path / f"{k}.json", "json")
    assert (tmp_path / "0.json").read_bytes() == (tmp_path / "1.json").read_bytes()


def test_small_run_tracks_well():
    s = run_experiment(_small(T_max=15, steady_start=5))
    summ = s.summary()
    assert summ["modcs"]["nmse"] < 0.01 and summ["addlsdel"]["nmse"] < 0.01
    assert all(v["violations"] == 0 for v in summ.values())


@pytest.mark.parametrize("kw", [dict(algorithms=()), dict(algorithms=("lasso",)), dict(realizations=0),
                                dict(matrix_mode="random"), dict(model="ar1"), dict(S=1, S_a=1, d=3),
                                dict(thresholds=3)])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        _small(**kw).validate()


def test_unknown_config_key():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"mm": 3})


def test_fixed_thresholds_are_used():
    s = run_experiment(_small(thresholds={"alpha": 0.3}, algorithms=("modcs",), realizations=1))
    assert s.summary()["modcs"]["mean_alpha"] == pytest.approx(0.3)


def test_json_nan_becomes_null(tmp_path):
    s = run_experiment(_small(realizations=1, T_max=3))
    s.energy[:] = 0.0
    export(s, tmp_path / "m.json", "json")
    d = json.loads((tmp_path / "m.json").read_text())
    assert d["rows"][0][2] is None
