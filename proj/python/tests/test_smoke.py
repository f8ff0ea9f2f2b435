import csv
import json

import numpy as np
import pytest

import groklab as gl


def test_task_and_split():
    task = gl.TaskSpec.addition(10)
    assert task.num_labels == 19 and task.commutative
    assert len(task.samples()) == 55
    train, valid = gl.split(task, "45/55", 7)
    assert len(train) == 45 and len(valid) == 10
    assert gl.split(task, "45/55", 7) == (train, valid)
    assert not gl.TaskSpec.s3().commutative


def test_parallelograms_and_nullity():
    task = gl.TaskSpec.addition(4)
    assert gl.full_permissible_set(task) == [(0, 2, 1, 1), (0, 3, 1, 2), (1, 3, 2, 2)]
    for p in range(4, 13):
        t = gl.TaskSpec.addition(p)
        assert gl.nullity(t, gl.full_permissible_set(t)) == 2
    assert gl.nullity(task, []) == 4


def test_rqi_and_closure():
    task = gl.TaskSpec.addition(10)
    line = (0.3 + 0.5 * np.arange(10)).reshape(10, 1)
    assert gl.rqi(task, line) == 1.0
    train, _ = gl.split(task, 0.6, 1)
    closure = gl.ideal_closure(task, train)
    assert set(gl.permissible_set(task, train)) <= set(closure)
    assert gl.predicted_acc(task, train, []) == pytest.approx(len(train) / 55)
    s3 = gl.TaskSpec.s3()
    d, _ = gl.split(s3, 0.5, 2)
    assert set(gl.permissible_set(s3, d)) <= set(gl.nonabelian_closure(s3, d))


def test_effective_theory():
    task = gl.TaskSpec.addition(4)
    p0 = gl.full_permissible_set(task)
    l_eff, l0, z0 = gl.eff_loss(task, np.array([[0.0], [1.0], [2.0], [4.0]]), p0)
    assert (l0, z0) == (2.0, 21.0)
    assert l_eff == pytest.approx(2 / 21)
    h = gl.hessian(task, p0, 1.0)
    assert np.allclose(h, h.T)
    assert np.sum(np.abs(np.linalg.eigvalsh(h)) < 1e-10) == 2

    t10 = gl.TaskSpec.addition(10)
    train, _ = gl.split(t10, "45/55", 1)
    rng = np.random.default_rng(0)
    e = rng.uniform(-0.5, 0.5, size=(10, 1))
    e -= e.mean()
    res = gl.flow(t10, e, gl.permissible_set(t10, train), steps=500)
    assert res["final"].shape == (10, 1)
    assert res["max_c_drift"] < 1e-12
    assert res["trajectory"].startswith("step,t,l_eff,rqi,Z0,C_norm\n")
    g = gl.eff_grad(t10, e, gl.permissible_set(t10, train))
    assert abs(np.sum(g * e)) < 1e-12


def test_critical_fraction():
    pts = gl.critical_fraction_mc(gl.TaskSpec.addition(10), [0.05, 1.0], trials=20, seed=3)
    assert pts == [(0.05, 0.0), (1.0, 1.0)]


def test_train_and_phase():
    rec = gl.train({"seed": 3, "optim.max_steps": 50, "model.hidden": [16]})
    assert rec["steps_run"] == 50
    assert len(rec["embeddings"]["rows"]) == 10
    assert gl.classify_phase(500, 50000, 100000) == "grokking"
    assert gl.classify_phase(None, None, 100000) == "confusion"
    with pytest.raises(gl.ConfigError):
        gl.train({"optim.max_steps": 5})
    with pytest.raises(gl.ConfigError):
        gl.train({"seed": 1, "optim.bogus": 5})


def test_run_commands(tmp_path):
    cfg = {"seed": 4, "optim.max_steps": 60, "model.hidden": [16]}
    out = gl.run("train", cfg, tmp_path / "t")
    assert "metrics.csv" in out["outputs"]
    with open(tmp_path / "t" / "metrics.csv") as f:
        assert next(csv.reader(f)) == ["step", "train_acc", "val_acc", "train_loss", "val_loss", "rqi"]
    manifest = json.loads((tmp_path / "t" / "manifest.json").read_text())
    assert manifest["seed"] == 4
    gl.run("analyze", cfg, tmp_path / "a", inputs=[tmp_path / "t"], pca=True)
    assert (tmp_path / "a" / "table.csv").exists()
    with pytest.raises(gl.ConfigError):
        gl.run("analyze", cfg, tmp_path / "b", inputs=[tmp_path / "missing"])
