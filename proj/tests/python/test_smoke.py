import math

import numpy as np
import pytest

import bistab


def oracle():
    return bistab.SpectralSystem([1j, -1j], np.eye(2, dtype=complex), label="oracle")


def test_quadratic_feedback_matches_closed_form():
    y0 = np.array([0.6, 0.8j])
    tr = bistab.simulate(oracle(), y0, r=0.0, dt=1e-3, t_final=5.0, stride=100)
    s = 2.0 * tr["energy"]
    assert np.max(np.abs(s - 1.0 / (1.0 + 2.0 * tr["t"])) / s) < 1e-6
    assert tr["states"].shape == (51, 2)
    assert tr["dissipation_residual"] < 1e-6


def test_observability_of_identity_control():
    rep = bistab.estimate_delta(oracle(), 2.0)
    assert abs(rep["delta_estimate"] - 2.0) < 1e-9
    assert rep["classification"] == "exact observability corroborated"


def test_damped_wave_decays():
    sys = bistab.build_model("wave1d", n_modes=8)
    assert sys.dim == 16
    y0 = np.zeros(sys.dim, dtype=complex)
    y0[0] = 1.0
    tr = bistab.simulate(sys, y0, r=2.0, dt=0.02, t_final=50.0, stride=50)
    assert np.all(np.diff(tr["energy"]) <= 1e-14)
    assert tr["energy"][-1] < 1e-2 * tr["energy"][0]


def test_lemma1_and_fits():
    r = bistab.lemma1_verify(1.0, 1.0, 0.0, 1000)
    assert r["holds"] and r["m_empirical"] <= r["m_analytic"]
    t = np.geomspace(1.0, 1e4, 200)
    fit = bistab.fit_power(t, 3.0 / t, (1.0, 1e4))
    assert fit["exponent_or_constant"] == pytest.approx(-1.0, abs=1e-6)
    v = bistab.validate_bound(t, 3.0 / t, "power:1", 1.0, (1.0, 1e4))
    assert v["validated"]


def test_config_round_trip_and_errors(tmp_path):
    text = "mode = simulate\nmodel.family = wave1d\nmodel.n_modes = 4\nnumerics.t_final = 1\n"
    expanded = bistab.parse_config(text)
    assert bistab.parse_config(expanded) == expanded
    with pytest.raises(ValueError, match="line 2"):
        bistab.parse_config("mode = simulate\ncontrol.r = 3\n")
    assert bistab.run_config(text + "output.emit_plots = false\n", str(tmp_path)) == 0
    assert (tmp_path / "trajectory.csv").exists()
    assert not math.isnan(float((tmp_path / "trajectory.csv").read_text().splitlines()[1].split(",")[1]))
