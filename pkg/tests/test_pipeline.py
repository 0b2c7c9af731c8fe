import json

import numpy as np
import pytest

from certimeasure.pipeline import CERTIFIED, FAILED, bound_fields, one_grid, run, two_grid


def test_doubling_small_grid():
    r = one_grid("doubling", "ulam", 16)
    assert r.status == CERTIFIED
    assert r.error.bound <= 0.01
    assert np.max(np.abs(r.u_tilde - 1)) <= r.error.bound


def test_lanford_tiny_grid_reports_a_bound():
    r = one_grid("lanford", "ulam", 2)
    # two cells: contraction may or may not be certified, but never a crash
    assert r.status in (CERTIFIED, FAILED)
    if r.status == FAILED:
        assert r.failure["stage"] and r.failure["reason"]


def test_lanford_one_grid_bound_and_sources():
    r = one_grid("lanford", "ulam", 256)
    assert r.status == CERTIFIED
    assert r.error.bound < 1
    assert r.norm_bounds.C[0] == 1.0
    assert set(r.norm_bounds.source) <= {"apriori_power", "apriori_LY", "submult", "computed", "coarse_fine"}
    assert r.error.m_used is not None and r.norm_bounds.C[r.error.m_used] < 1


def test_hat_without_lipschitz_coefficients_fails_at_dfly():
    r = one_grid("lanford", "hat", 64)
    assert r.status == FAILED and r.failure["stage"] == "dfly"


def test_two_grid_equal_grids():
    r = two_grid("doubling", "ulam", 64, 64)
    assert r.status == CERTIFIED
    assert r.coarse_bounds is not None
    assert r.error.bound < 1e-6


def test_two_grid_perturbed_hat():
    r = two_grid("perturbed_4x", "hat", 256, 1024, lyapunov=True)
    assert r.status == CERTIFIED
    assert r.lyapunov.value.lo < 1.3853 < r.lyapunov.value.hi


def test_two_grid_validation():
    with pytest.raises(ValueError):
        two_grid("doubling", "ulam", 64, 96)
    with pytest.raises(ValueError):
        one_grid("doubling", "ulam", 1)


def test_coarse_failure_is_a_status():
    # the coarse grid never contracts within a budget of 2 powers
    r = two_grid("lanford", "ulam", 16, 64, k_max=2, k_budget=2)
    assert r.status == FAILED
    assert "n_C" in r.failure["recommendation"]


def test_report_write(tmp_path):
    r = one_grid("linear3", "hat", 32, lyapunov=True)
    r.write(tmp_path, dump_matrix=True)
    d = json.loads((tmp_path / "report.json").read_text())
    assert d["status"] == CERTIFIED and d["map"]["name"] == "linear3"
    assert d["error"]["bound"] == r.error.bound
    assert d["lyapunov"]["value"][0] <= np.log(3) <= d["lyapunov"]["value"][1]
    for f in ("density.csv", "norms.csv", "matrix.coo", "matrix.coo.json"):
        assert (tmp_path / f).exists()


def test_reproducible():
    a = one_grid("nonlinear_nonmarkov", "ulam", 128)
    b = one_grid("nonlinear_nonmarkov", "ulam", 128)
    assert json.dumps(bound_fields(a), default=str) == json.dumps(bound_fields(b), default=str)
    assert np.array_equal(a.u_tilde, b.u_tilde)


def test_run_from_flat_config():
    r = run({"map": "perturbed_4x", "params": {"eps": "1/50"}, "scheme": "hat", "one_grid": True, "n": 128})
    assert r.status == CERTIFIED
    assert r.map["name"] == "perturbed_4x"
    r = run({"map": "doubling", "coarse_n": 32, "fine_n": 128})
    assert r.mode == "two_grid" and r.status == CERTIFIED
