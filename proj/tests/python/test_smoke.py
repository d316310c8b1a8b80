import math

import numpy as np
import pytest

import capedp


def test_gaussian_tau_closed_form():
    tau = capedp.gaussian_tau(0.01, 1.0, 1e-5)
    assert tau == pytest.approx(0.01 * math.sqrt(2 * math.log(1.25 / 1e-5)), rel=1e-12)


def test_max_colluders():
    assert [capedp.max_colluders(s) for s in (3, 4, 6, 7, 10)] == [0, 1, 1, 2, 3]


def test_moment_identity():
    mu, var = capedp.cape_moments(10, 3, 0.01, 1000.0)
    assert var == 2 * mu


def test_cape_delta_below_conventional():
    delta, log_delta, vacuous = capedp.cape_delta(1.0, 4, 1, 0.05, 400.0)
    conv = capedp.conventional_delta(1.0, 4, 400.0, 0.05 / 4)
    assert not vacuous
    assert log_delta < conv[1]


def test_cape_aggregate_noise_free_mean():
    out = capedp.cape_aggregate([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]], [0.0, 0.0, 0.0])
    assert out["num_active"] == 3
    assert out["aggregate"] == pytest.approx([3.0, 4.0], abs=1e-9)


def test_cape_aggregate_dropout():
    values = [[float(s)] for s in range(6)]
    out = capedp.cape_aggregate(values, [0.0] * 6, dropped=[2])
    assert out["num_active"] == 5
    assert out["releases"][2] == []
    assert out["aggregate"][0] == pytest.approx((0 + 1 + 3 + 4 + 5) / 5, abs=1e-9)


def test_errors_carry_code():
    with pytest.raises(capedp.CapeError) as info:
        capedp.cape_moments(5, 4, 0.1, 100.0)
    assert info.value.code == "protocol-assumption error"


def test_ols_through_coefficients():
    x, y, w_true = capedp.gen_synthetic_regression(5, 400, 0.0, 3)
    c = capedp.build_coeffs(x, y)
    w, ridge, flagged = capedp.minimize_quadratic(c["l0"], c["l1"], c["l2"])
    assert ridge == 0.0 and not flagged
    np.testing.assert_allclose(w, w_true, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(w, np.linalg.lstsq(x, y, rcond=None)[0], rtol=1e-8, atol=1e-10)


def test_run_cape_fm_shapes():
    x, y, _ = capedp.gen_synthetic_regression(4, 300, 0.1, 5)
    sites = [(x[i::3], y[i::3]) for i in range(3)]
    c = capedp.run_cape_fm(sites, 1.0, 1e-5, seed=2)
    assert np.asarray(c["l1"]).shape == (4,)
    assert np.asarray(c["l2"]).shape == (4, 4)


def test_sensitivity_table():
    assert capedp.sensitivity_table("linear", 100) == pytest.approx([0.01, 0.04, math.sqrt(2) / 100])
    assert capedp.sensitivity_table("logistic", 100)[0] == 0.0


def test_h_ratio():
    assert capedp.h_ratio([250.0] * 4) == pytest.approx(1.0, abs=1e-12)
    assert capedp.h_ratio([997.0, 1.0, 1.0, 1.0]) <= capedp.h_ratio_upper_bound(1000.0, 4) * (1 + 1e-12)


def test_communication_cost():
    conv = capedp.communication_cost(5, 7, "conv")
    assert conv["aggregator_scalars_received"] == 35
    cape = capedp.communication_cost(5, 7, "cape")
    assert cape["per_site_scalars"][0] == 5 + 2 * 7


def test_run_experiment_small():
    out = capedp.run_experiment(
        {"experiment": "linreg", "grid": [1.0], "seeds": [1], "num_samples": 1000, "dim": 4}
    )
    assert out["ok"]
    assert not out["cell_errors"]
    modes = {r["mode"] for r in out["summary"]}
    assert {"non-priv", "capeFM", "conv", "local", "dpfm", "pooled-dp"} <= modes


def test_run_experiment_delta_compare():
    out = capedp.run_experiment({"experiment": "delta-compare"})
    assert out["ok"]
