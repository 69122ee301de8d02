import dataclasses
import json
import math
import random

import numpy as np
import pytest

from reupload_lab import experiments as E
from reupload_lab import measures
from reupload_lab.experiments import ConfigError, ExperimentConfig, RunRecord
from reupload_lab.model import TrainConfig


def small(exp_id, grid, seeds=(1,), epochs=3, **kw):
    base = E.profile_config(exp_id, "ci")
    return dataclasses.replace(base, grid=grid, seeds=list(seeds),
                               train=base.train.replace(epochs=epochs), **kw)


# -- aggregation ----------------------------------------------------------------------


def test_aggregate_examples():
    one = E.aggregate([RunRecord("x", 1, 1, 1, 10, 1, test_error=0.3)])
    assert one[0]["test_error"] == {"mean": 0.3, "min": 0.3, "max": 0.3}
    two = E.aggregate([RunRecord("x", 1, 1, 1, 10, s, test_error=v) for s, v in ((1, 0.4), (2, 0.6))])
    assert two[0]["runs"] == 2
    assert two[0]["test_error"]["mean"] == pytest.approx(0.5)
    assert (two[0]["test_error"]["min"], two[0]["test_error"]["max"]) == (0.4, 0.6)
    assert "div_pre" not in two[0]


def test_aggregate_permutation_invariant_and_grouped():
    g = np.random.default_rng(0)
    recs = [RunRecord("x", 1, layers, 1, 10, s, train_error=float(g.random()))
            for layers in (1, 2) for s in range(6)]
    a = E.aggregate(recs)
    shuffled = recs[:]
    random.Random(3).shuffle(shuffled)
    b = {r["L"]: r for r in E.aggregate(shuffled)}
    for r in a:
        for stat in ("min", "max"):
            assert r["train_error"][stat] == b[r["L"]]["train_error"][stat]
        assert r["train_error"]["mean"] == pytest.approx(b[r["L"]]["train_error"]["mean"], abs=1e-15)
    assert [r["L"] for r in a] == [1, 2]


# -- configuration ----------------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig("nope", [{"N": 1}], [1])
    with pytest.raises(ConfigError):
        ExperimentConfig("linsep_sweep", [], [1])
    with pytest.raises(ConfigError):
        ExperimentConfig("linsep_sweep", [{"N": 1}], [])
    with pytest.raises(ConfigError):
        ExperimentConfig("linsep_sweep", [{"N": 1, "depth": 3}], [1])


def test_config_from_dict_is_strict():
    with pytest.raises(ConfigError, match=r"\$\.bogus"):
        ExperimentConfig.from_dict({"id": "linsep_sweep", "grid": [{"N": 1}], "seeds": [1], "bogus": 1})
    with pytest.raises(ConfigError, match=r"\$\.train\.lr"):
        ExperimentConfig.from_dict({"id": "linsep_sweep", "grid": [{"N": 1}], "seeds": [1], "train": {"lr": 1}})


def test_config_round_trip_and_product_grid():
    cfg = ExperimentConfig.from_dict({"id": "linsep_sweep", "grid": {"L": [1, 2], "P": [1, 8]},
                                      "seeds": [3], "train": {"epochs": 4}})
    assert cfg.grid == [{"L": 1, "P": 1}, {"L": 1, "P": 8}, {"L": 2, "P": 1}, {"L": 2, "P": 8}]
    assert cfg.train == TrainConfig(epochs=4)
    back = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert back == cfg


@pytest.mark.parametrize("exp_id", E.EXPERIMENT_IDS)
@pytest.mark.parametrize("profile", E.PROFILES)
def test_profiles_build(exp_id, profile):
    cfg = E.profile_config(exp_id, profile)
    assert cfg.grid and cfg.seeds
    if profile == "paper" and exp_id not in ("bound_sweep", "approx_check"):
        assert cfg.seeds == list(range(1, 11)) and cfg.train.epochs == 1000


def test_paper_profile_sizes():
    assert E.profile_config("same_dataset", "paper").grid == [
        dict(N=n, L=8 // n, L_max=8 // n, P=8, M_train=600) for n in (1, 2, 4, 8)]
    lin = E.profile_config("linsep_sweep", "desk")
    assert {pt["L_max"] for pt in lin.grid} == {8} and lin.test_size == 10_000


def test_runner_rejects_wrong_id():
    with pytest.raises(ConfigError):
        E.run_linsep_sweep(E.profile_config("regression", "ci"))


# -- runs -------------------------------------------------------------------------------


def test_classification_error_identity():
    cfg = small("linsep_sweep", [dict(N=1, L=2, L_max=3, P=2, M_train=40)], seeds=(1, 2))
    out = E.run_experiment(cfg)
    for r in out.rows:
        assert abs(r.test_error - (1 - r.test_mean_h)) <= 1e-9
        assert 0 <= r.train_error <= 1 and 0 <= r.test_acc <= 1
    assert all(out.summary["checks"].values())
    assert "3" in out.summary["sigma2_effective"] or "6" in out.summary["sigma2_effective"]


def test_divergence_zero_layers_is_n():
    cfg = small("divergence", [dict(N=2, L=0, P=1, M_train=20), dict(N=1, L=1, P=1, M_train=20)],
                mc_samples=500)
    rows = E.run_experiment(cfg).rows
    assert rows[0].div_pre == pytest.approx(2) and rows[0].div_post == pytest.approx(2)
    assert rows[0].bound == 2
    assert 0 <= rows[1].div_pre <= 1 and rows[1].bound == pytest.approx(measures.divergence_bound(1, 1, 0.8))


def test_regression_run_has_no_accuracy_identity():
    cfg = small("regression", [dict(N=2, L=1, L_max=2, P=1, M_train=20)], test_size=50)
    out = E.run_experiment(cfg)
    assert "error_matches_mean_h" not in out.summary["checks"]
    assert out.rows[0].h_gap_test <= 1


def test_bound_sweep_rows_and_checks():
    cfg = small("bound_sweep", [dict(N=1, L=0, P=1), dict(N=1, L=3, P=1), dict(N=2, L=2, P=1)],
                mc_samples=20_000)
    out = E.run_experiment(cfg)
    rows = out.rows
    assert rows[0]["bound"] == 1 and rows[0]["d2_analytic"] == pytest.approx(1)
    thr = [r for r in rows if r["h_gap_mc"] is not None]
    assert {(r["N"], r["L"]) for r in thr} == {(1, 9), (2, measures.layer_threshold(2, 0.8, 0.1))}
    assert all(out.summary["checks"].values())
    assert out.csv_text.splitlines()[0] == ",".join(E.BOUND_COLUMNS)


def test_approx_check_ratio():
    cfg = dataclasses.replace(E.profile_config("approx_check", "ci"), instances=4)
    out = E.run_experiment(cfg)
    assert len(out.rows) == 4 * len(cfg.q_grid)
    assert 0 <= out.summary["worst_ratio"] <= 1
    assert out.summary["checks"]["measured_le_bound"]


def test_csv_layout_and_blank_seconds(tmp_path):
    cfg = small("counter_example", [dict(N=1, L=1, L_max=2, P=1, M_train=20)], test_size=40)
    out = E.run_experiment(cfg)
    lines = out.csv_text.split("\n")
    assert lines[0] == ",".join(E.RESULT_COLUMNS)
    assert lines[-1] == "" and len(lines) == 3
    assert lines[1].endswith(",,,,") and not lines[1].endswith(",,,,,")  # div_pre, div_post, bound, seconds
    csv_path, json_path = E.write_output(out, tmp_path)
    rows, cols = E.read_results(csv_path)
    assert cols == list(E.RESULT_COLUMNS) and rows[0]["seconds"] is None
    assert rows[0]["test_error"] == out.rows[0].test_error
    summary = json.loads(json_path.read_text())
    assert summary["experiment"] == "counter_example"
    timed = E.run_experiment(dataclasses.replace(cfg, record_seconds=True))
    assert not timed.csv_text.split("\n")[1].endswith(",")


def test_rerun_and_worker_count_give_identical_csv():
    cfg = small("linsep_sweep", [dict(N=1, L=1, L_max=2, P=1, M_train=30),
                                 dict(N=1, L=2, L_max=2, P=1, M_train=30)], seeds=(1, 2), test_size=60)
    a = E.run_experiment(cfg, jobs=1).csv_text
    b = E.run_experiment(cfg, jobs=1).csv_text
    c = E.run_experiment(cfg, jobs=2).csv_text
    assert a == b == c


def test_execute_keeps_order():
    assert E.execute(math.pow, [(2, k) for k in range(6)], jobs=3) == [2.0**k for k in range(6)]
