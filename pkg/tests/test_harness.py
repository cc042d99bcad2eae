import csv
import json

import numpy as np
import pytest

from sitl1.errors import ConfigError
from sitl1.harness.config import ExperimentConfig, load_config
from sitl1.harness.example31 import run_example_3_1
from sitl1.harness.generators import gen_detection_instance, gen_regression_instance
from sitl1.harness.runner import (
    make_instance,
    run_experiment,
    run_snbr_sweep,
    run_trial,
    score_support,
)


def small_cfg(tmp_path, **kw):
    base = dict(name="small", n=16, r=2, k=5, s=3, t_fraction=1.0, snbr=10, trials=3, seed=4,
                eps=1e-6, out_path=str(tmp_path / "small.csv"))
    base.update(kw)
    return ExperimentConfig(**base)


# --- generators -----------------------------------------------------------------


def test_regression_uniform_noiseless():
    p, x, e = gen_regression_instance("uniform", 0.0, 3)
    assert p.a.shape == (52, 2)
    np.testing.assert_array_equal(p.a[:, 0], np.arange(1, 53))
    resid = p.y - p.a @ x
    assert np.count_nonzero(np.abs(resid) > 1e-9) == 20
    np.testing.assert_allclose(resid[np.abs(resid) > 1e-9], 20.0, atol=1e-9)
    np.testing.assert_array_equal(np.flatnonzero(e), np.flatnonzero(np.abs(resid) > 1e-9))


def test_regression_tailored_jump():
    p, _, _ = gen_regression_instance("tailored", 0.0, 0)
    steps = np.diff(p.a[:, 0])
    assert steps[31] == 21.0
    assert np.all(np.delete(steps, 31) == 1.0)


def test_regression_reproducible():
    a = gen_regression_instance("uniform", 0.5, 11)
    b = gen_regression_instance("uniform", 0.5, 11)
    np.testing.assert_array_equal(a[0].y, b[0].y)
    with pytest.raises(ConfigError):
        gen_regression_instance("curved", 0.0, 0)


def test_detection_instance_counts():
    cfg = ExperimentConfig()
    p, _, e = gen_detection_instance(cfg, 1)
    assert p.a.shape == (64, 8)
    assert np.count_nonzero(e) == 9 and np.all(e[e != 0] == 10.0)


@pytest.mark.parametrize("t,last", [(1.0, 9), (0.0, 0), (0.6, 5)])
def test_detection_error_split(t, last):
    _, _, e = gen_detection_instance(ExperimentConfig(t_fraction=t), 2)
    assert np.count_nonzero(e[64 - 14:]) == last
    assert np.count_nonzero(e[:64 - 14]) == 9 - last


def test_detection_blocks():
    p, _, _ = gen_detection_instance(ExperimentConfig(n=400, r=4, k=200, s=3), 0)
    assert abs(p.a[:200].mean()) < 0.2
    assert abs(p.a[200:].mean() - 5.0) < 0.2


def test_detection_block_overflow():
    with pytest.raises(ConfigError):
        gen_detection_instance(ExperimentConfig(k=0, t_fraction=1.0), 0)
    with pytest.raises(ConfigError):
        gen_detection_instance(ExperimentConfig(k=5, s=9, t_fraction=1.0), 0)
    # all errors fit in the first block
    gen_detection_instance(ExperimentConfig(k=0, t_fraction=0.0), 0)


# --- config ---------------------------------------------------------------------


@pytest.mark.parametrize("bad", [
    dict(r=0), dict(r=64), dict(s=64), dict(k=65), dict(t_fraction=1.5), dict(trials=0),
    dict(snbr=0), dict(eps=-1.0), dict(sigma=-0.1), dict(methods=("sit", "magic")),
    dict(methods=()), dict(methods=("sit", "sit")), dict(name="regression_uniform", n=64),
])
def test_config_rejects(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig(**bad)


def test_config_sigma_default():
    assert ExperimentConfig(noise_std=0.5, n=16, r=2, s=2, k=3).bpdn_sigma == pytest.approx(2.0)
    assert ExperimentConfig(noise_std=0.5, sigma=0.1).bpdn_sigma == 0.1


def test_config_round_trip(tmp_path):
    cfg = small_cfg(tmp_path, methods=("sit", "lad"))
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert load_config(path) == cfg


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 10, "colour": "red"}))
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


# --- runner ---------------------------------------------------------------------


def test_score_support():
    e = np.array([0.0, 1.0, 0.0, 2.0])
    assert score_support((1, 3), e) == (True, 1.0)
    assert score_support((1,), e) == (False, 0.75)
    assert score_support((), np.zeros(3)) == (True, 1.0)


def test_trivial_trial_all_exact(tmp_path):
    cfg = small_cfg(tmp_path, s=0, trials=1)
    for rec in run_trial(cfg, 0):
        assert rec.exact_support_match and rec.per_entry_accuracy == 1.0 and not rec.error


def test_instances_depend_only_on_seed_and_trial(tmp_path):
    cfg = small_cfg(tmp_path)
    a = make_instance(cfg, 2)[0].y
    b = make_instance(small_cfg(tmp_path, trials=50), 2)[0].y
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, make_instance(cfg, 1)[0].y)


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_experiment_outputs(tmp_path):
    cfg = small_cfg(tmp_path)
    recs = run_experiment(cfg)
    assert [r.trial_id for r in recs] == [t for t in range(3) for _ in cfg.methods]
    rows = read(cfg.out_path)
    assert len(rows) == 9
    for row in rows:
        acc = float(row["per_entry_accuracy"])
        assert 0.0 <= acc <= 1.0
        if row["exact_support_match"] == "1":
            assert acc == 1.0
        if row["method"] == "sit":
            assert row["certificate"] == "Exact" or row["certificate"].startswith("SuboptimalBy")
    summary = read(tmp_path / "summary.csv")
    assert {r["method"] for r in summary} == set(cfg.methods)
    for r in summary:
        assert 0.0 <= float(r["exact_rate"]) <= 1.0
    assert len(read(tmp_path / "timing.csv")) == 9


def test_run_experiment_deterministic(tmp_path):
    second = small_cfg(tmp_path / "b", out_path=str(tmp_path / "b" / "small.csv"))
    first = small_cfg(tmp_path, out_path=str(tmp_path / "a" / "small.csv"))
    run_experiment(first)
    run_experiment(second, workers=2)
    for name in ("small.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_summary_merges_experiments(tmp_path):
    run_experiment(small_cfg(tmp_path, name="one", trials=1, methods=("lad",)))
    run_experiment(small_cfg(tmp_path, name="two", trials=1, methods=("lad",)))
    run_experiment(small_cfg(tmp_path, name="one", trials=1, methods=("lad",)))
    names = [r["experiment"] for r in read(tmp_path / "summary.csv")]
    assert names == ["one", "two"]


def test_noisy_regression_trial(tmp_path):
    cfg = ExperimentConfig(name="regression_uniform", n=52, r=2, s=20, k=0, t_fraction=0.0,
                           noise_std=0.1, eps=0.3, snbr=5, trials=1,
                           out_path=str(tmp_path / "reg.csv"))
    recs = run_trial(cfg, 0)
    assert {r.method for r in recs} == {"sit", "lad", "reweighted"}
    assert all(r.certificate == "" for r in recs)
    assert all(0.0 <= r.per_entry_accuracy <= 1.0 for r in recs)


def test_snbr_sweep(tmp_path):
    cfg = small_cfg(tmp_path, trials=4)
    out = tmp_path / "sweep.csv"
    res = run_snbr_sweep(cfg, [1, 3, 9], out_path=out)
    rates = [res["rates"][v] for v in (1, 3, 9)]
    assert rates == sorted(rates)
    assert res["knee"] in (1, 3, 9)
    assert len(read(out)) == 3


def test_example31_report():
    rep = run_example_3_1()
    failed = [name for name, ok in rep.checks.items() if not ok]
    # the printed Phi A carries the opposite sign on its first two entries
    assert failed == ["Phi A matches print within 1e-3"]
    np.testing.assert_allclose(np.abs(rep.phi_a), [7.0711, 7.0711, 1.4142], atol=1e-3)
    assert any("certificate" in line for line in rep.lines())
