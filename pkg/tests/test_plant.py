import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hammerff.csvio import read_rows
from hammerff.errors import ConfigurationError
from hammerff.lifted_lti import TransferFunction, lift, process_sensitivity, sensitivity
from hammerff.plant import (PlantConfig, SaturationModel, loop_metrics, make_noise, run_trial,
                            saturate, two_mass_plant)


def test_saturation_examples():
    g = SaturationModel(70.0)
    assert g(0.0) == 0.0
    assert g(70.0) == pytest.approx(70 * math.tanh(1.0), rel=1e-15)
    assert g(70.0) == pytest.approx(53.3116, abs=5e-5)
    assert abs(g(0.07) - 0.07) / 0.07 < 1e-6
    assert np.array_equal(saturate(None, [1.0, -2.0]), [1.0, -2.0])


@given(st.floats(-1e6, 1e6), st.floats(0.1, 1e3))
def test_saturation_odd_bounded_increasing(u, imax):
    g = SaturationModel(imax)
    assert g(-u) == -g(u)
    assert abs(g(u)) <= imax
    assert g(u + 1.0) >= g(u)


def test_noise_statistics_and_determinism():
    n = make_noise(7, 2.5e-3, 1_000_000)
    assert np.var(n) == pytest.approx(2.5e-3, rel=0.01)
    assert np.array_equal(make_noise((1, 2), 1.0, 10), make_noise((1, 2), 1.0, 10))
    assert not np.array_equal(make_noise((1, 2), 1.0, 10), make_noise((1, 3), 1.0, 10))
    assert np.array_equal(make_noise(0, 0.0, 5), np.zeros(5))


def test_zero_trial(default_cfg):
    cfg = default_cfg.trial_plant().without_noise()
    z = np.zeros(200)
    rec = run_trial(cfg, z, z)
    for s in (rec.u, rec.x, rec.y, rec.e):
        assert np.array_equal(s, z)


def test_linear_trial_matches_lifted_prediction(default_cfg, rng):
    cfg = default_cfg.trial_plant().without_noise().without_saturation()
    r = default_cfg.references.training_reference(cfg.sample_time)
    f = 20 * rng.standard_normal(r.size)
    rec = run_trial(cfg, r, f)
    P, C = cfg.linear_plant, cfg.controller
    n = r.size
    e_ref = lift(sensitivity(P, C), n) @ r - lift(process_sensitivity(P, C), n) @ f
    assert np.max(np.abs(rec.e - e_ref)) <= 1e-8
    assert np.array_equal(rec.e, rec.r - rec.y)


def test_saturation_bound_holds(default_cfg):
    cfg = default_cfg.trial_plant()
    r = default_cfg.references.trial_reference(5, cfg.sample_time)
    f = np.full(r.size, 500.0)
    rec = run_trial(cfg, r, f)
    assert np.max(np.abs(rec.u)) > 70.0
    assert np.max(np.abs(rec.x)) < 70.0


def test_small_signal_equivalence(default_cfg):
    cfg = default_cfg.trial_plant().without_noise()
    r = 0.0 * default_cfg.references.trial_reference(0, cfg.sample_time)
    f = 1.5 * np.sin(np.linspace(0, 20, r.size))
    a = run_trial(cfg, r, f)
    b = run_trial(cfg.without_saturation(), r, f)
    assert np.max(np.abs(a.u)) <= 0.05 * 70
    rms = np.sqrt(np.mean(b.y ** 2))
    assert np.sqrt(np.mean((a.y - b.y) ** 2)) < 1e-3 * rms


def test_trial_deterministic(default_cfg):
    cfg = default_cfg.trial_plant()
    r = default_cfg.references.trial_reference(0, cfg.sample_time)
    f = np.zeros_like(r)
    a, b = run_trial(cfg, r, f), run_trial(cfg, r, f)
    for name in ("u", "x", "y", "e"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()
    c = run_trial(cfg, r, f, noise_seed=(cfg.seed, 1))
    assert not np.array_equal(a.e, c.e)


def test_noise_level_scales_with_distance(default_cfg):
    cfg = default_cfg.trial_plant()
    assert math.sqrt(cfg.noise_variance) == pytest.approx(math.sqrt(7.5e-6) * 0.01, rel=1e-12)


def test_rejects_biproper_plant():
    cfg = PlantConfig(TransferFunction([1.0], [1.0, -0.5]), TransferFunction([1.0], [1.0]))
    with pytest.raises(ConfigurationError):
        run_trial(cfg, np.zeros(3), np.zeros(3))


def test_trial_csv(tmp_path, default_cfg):
    cfg = default_cfg.trial_plant()
    r = default_cfg.references.trial_reference(0, cfg.sample_time)[:50]
    rec = run_trial(cfg, r, np.ones_like(r))
    rec.to_csv(tmp_path / "t.csv", cfg.sample_time)
    rows = read_rows(tmp_path / "t.csv")
    assert rows[0] == ["t", "r", "f", "u", "x", "y", "e"]
    assert np.array_equal(np.array([float(v[6]) for v in rows[1:]]), rec.e)
    assert (tmp_path / "t.csv").read_bytes().count(b"\r\n") == 51


def test_config_round_trip(default_cfg):
    cfg = default_cfg.plant
    assert PlantConfig.from_dict(cfg.to_dict()) == cfg


def test_surrogate_loop_meets_design_targets(default_cfg):
    m = loop_metrics(default_cfg.plant.linear_plant, default_cfg.plant.controller)
    assert m["stable"]
    assert 18.0 <= m["bandwidth_hz"] <= 22.0
    assert m["max_sensitivity"] <= 2.0  # >= 6 dB modulus margin


def test_free_mass_plant_double_integrator():
    ts = 1e-3
    P, _ = two_mass_plant(ts, mass=2.0, motor_constant=4.0, load_fraction=0.0)
    # ZOH of k/s^2: k ts^2 / 2 (z + 1) / (z - 1)^2
    k = 2.0
    u = np.ones(50)
    y = lift(P, 50) @ u
    t = np.arange(50) * ts
    assert np.allclose(y, 0.5 * k * t ** 2, rtol=1e-9, atol=1e-15)
