import json
import math

import numpy as np
import pytest

import ensemble_langevin as el


def test_core_math():
    assert el.sphere_surface(2) == pytest.approx(2 * math.pi)
    assert el.alpha_d(1, 0.1) == pytest.approx(5.0)
    assert el.c_d(0.0, 3) == pytest.approx(1.0, abs=1e-9)
    assert el.c_d(3 * math.sqrt(5) / 10, 1) == pytest.approx(math.erfc(3 * math.sqrt(5) / 20), abs=1e-9)


def test_targets():
    t = el.make_target("example1")
    assert t.dim == 2
    assert t.f(np.array([1.0, 2.0])) == pytest.approx(1.0)
    np.testing.assert_allclose(t.grad_f(np.array([1.0, 2.0])), [1.0, 0.5])
    with pytest.raises(ValueError):
        el.make_target("nope")


def test_cenlmc_degenerates_to_lmc():
    c = el.SamplerConfig()
    c.n, c.m_iters, c.n_star, c.seed = 200, 15, 200, 3
    a = el.run_sampler("cenlmc", c, "example1")
    b = el.run_sampler("lmc", c, "example1")
    assert a["iterations"] == b["iterations"]
    for x, z in zip(a["snapshots"], b["snapshots"]):
        np.testing.assert_array_equal(x, z)
    assert a["true_gradient_flags"].shape == (16, 200)
    assert all(r == 1.0 for r in a["ratio"])


def test_coupled_and_threads():
    c = el.SamplerConfig()
    c.n, c.m_iters, c.n_star = 300, 10, 20
    one = el.run_sampler("coupled", c, "example1", threads=1)
    two = el.run_sampler("coupled", c, "example1", threads=2)
    np.testing.assert_array_equal(one["x"]["snapshots"][0], one["z"]["snapshots"][0])
    assert one["coupling"] == two["coupling"]
    assert one["coupling"][0] == 0.0


def test_diagnostics():
    a = np.arange(10.0)
    assert el.w1_1d(a, a + 1.5) == pytest.approx(1.5)
    flags = np.array([[1, 1], [0, 1], [0, 0]], dtype=np.uint8)
    assert el.gradient_call_ratio(flags, 2) == 0.25
    x = el.direct_samples("example1", n=500, seed=1)
    assert x.shape == (500, 2)
    assert el.sliced_w1(x, x) == 0.0
    est = el.blowup_probe([1000, 10000, 100000], seed=2)
    assert est == el.blowup_probe([1000, 10000, 100000], seed=2)
    p = el.neighbor_scarcity("quadratic", 3, 1.0, [0.2], 200)
    assert 0.0 <= p[0] <= 1.0


def test_calibrate():
    r = el.calibrate(alpha=0.1, d=2, kappa=1.0)
    assert r["params"]["m_f"] == pytest.approx(120.0)
    assert el.c_d(r["params"]["r1"], 2) == pytest.approx(0.1 / 3, abs=1e-6)


def test_run_experiment(tmp_path):
    cfg = {"target": "example1", "params": {"n": 100, "m_iters": 4, "n_star": 10}, "checkpoints": [0, 4]}
    out = el.run_experiment(cfg, tmp_path / "run")
    names = sorted(p.rsplit("/", 1)[-1] for p in out["files"])
    assert names == ["diagnostics.csv", "run_meta.json", "samples.csv", "scatter_0.svg", "scatter_4.svg"]
    meta = json.loads((tmp_path / "run" / "run_meta.json").read_text())
    assert meta["config"]["params"]["n"] == 100
    with pytest.raises(ValueError, match="target"):
        el.run_experiment({"sampler": "lmc"}, tmp_path / "bad")
