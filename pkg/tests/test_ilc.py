import numpy as np
import pytest
from hypothesis import given, strategies as st

from hammerff.errors import DegenerateBasisError, SingularNormalMatrixError
from hammerff.experiment import seed_tag
from hammerff.ilc import (NoilcLearner, basis_matrix, bfilc_update, difference_filter, noilc_train,
                          noilc_update, preview_shift, rigid_body_filter)
from hammerff.lifted_lti import TransferFunction, lift, process_sensitivity
from hammerff.plant import PlantConfig, run_trial
from hammerff.trajectory import QuinticSpec, quintic

import oracles


def _linear(default_cfg):
    return default_cfg.trial_plant().without_noise().without_saturation()


def _model(cfg, n):
    return lift(process_sensitivity(cfg.linear_plant, cfg.controller), n)


@pytest.fixture(scope="module")
def short_ref(default_cfg):
    return default_cfg.references.trial_reference(0, default_cfg.sample_time)


def test_noilc_fixed_point(rng):
    J = np.tril(rng.standard_normal((6, 6))) + 3 * np.eye(6)
    f = rng.standard_normal(6)
    rec = oracles._trial(J, np.zeros(6), f)
    assert np.array_equal(noilc_update(NoilcLearner(J), rec), f)


def test_noilc_matches_bruteforce():
    assert oracles.noilc_vs_bruteforce() <= 1e-6


def test_noilc_tiny_system_bruteforce():
    J = np.array([[1.0, 0, 0, 0], [0.5, 1.0, 0, 0], [0.25, 0.5, 1.0, 0], [0.125, 0.25, 0.5, 1.0]])
    e = np.array([1.0, -2.0, 0.5, 3.0])
    got = noilc_update(NoilcLearner(J, eps=0.0), oracles._trial(J, e))
    # exact model, invertible J: the optimum zeroes the predicted error
    assert np.allclose(J @ got, e, atol=1e-12)


def test_normal_equation_residual(rng):
    n = 30
    J = np.array(lift(TransferFunction([1.0, 0.4], [1.0, -0.7]), n))
    A = rng.standard_normal((n, n))
    W = A @ A.T + n * np.eye(n)
    e = rng.standard_normal(n)
    df = noilc_update(NoilcLearner(J, weight=W, eps=0.0), oracles._trial(J, e))
    e_next = e - J @ df
    assert np.linalg.norm(J.T @ W @ e_next) <= 1e-8 * np.linalg.norm(J.T @ W @ e)


def test_eps_zero_singular_raises(default_cfg, short_ref):
    # strictly proper SP: first row of J is zero
    J = _model(_linear(default_cfg), short_ref.size)
    with pytest.raises(SingularNormalMatrixError, match="eps > 0"):
        NoilcLearner(J, eps=0.0)


def test_one_step_deadbeat(default_cfg):
    cfg = _linear(default_cfg)
    r = default_cfg.references.training_reference(cfg.sample_time)
    learner = NoilcLearner(_model(cfg, r.size))
    f1 = noilc_update(learner, run_trial(cfg, r, np.zeros_like(r)))
    assert run_trial(cfg, r, f1).error_norm <= 1e-8 * np.linalg.norm(r)


def test_train_first_entry_is_feedback_only(default_cfg, short_ref):
    cfg = default_cfg.trial_plant()
    learner = NoilcLearner(_model(cfg, short_ref.size))
    _, hist = noilc_train(learner, cfg, short_ref, 1, seed_key=(5,), fresh_noise=True)
    fb = run_trial(cfg, short_ref, np.zeros_like(short_ref), noise_seed=(cfg.seed, 5, 0))
    assert hist[0] == fb.error_norm


def test_train_repeated_noise_uses_one_realization(default_cfg, short_ref):
    cfg = default_cfg.trial_plant()
    learner = NoilcLearner(_model(cfg, short_ref.size))
    _, hist = noilc_train(learner, cfg, short_ref, 1, seed_key=(5,))
    fb = run_trial(cfg, short_ref, np.zeros_like(short_ref), noise_seed=(cfg.seed, 5))
    assert hist[0] == fb.error_norm


@pytest.mark.parametrize("alpha", [0.3, 0.7, 1.0])
def test_linear_plant_monotone(default_cfg, short_ref, alpha):
    cfg = _linear(default_cfg)
    learner = NoilcLearner(_model(cfg, short_ref.size), alpha=alpha, eps_rel=1e-3)
    _, hist = noilc_train(learner, cfg, short_ref, 8)
    assert np.all(np.diff(hist) <= 1e-12 * hist[0])


def test_mismatch_robustness(default_cfg):
    cfg = default_cfg.trial_plant()
    r = default_cfg.references.training_reference(cfg.sample_time)
    learner = NoilcLearner(_model(cfg, r.size), eps_rel=default_cfg.noilc_eps_rel)
    _, hist = noilc_train(learner, cfg, r, 10, seed_key=(seed_tag("noilc"),), fresh_noise=True)
    assert hist[-1] <= hist[0] / 10


def test_noilc_validates_inputs():
    with pytest.raises(ValueError):
        NoilcLearner(np.eye(3), alpha=0.0)
    with pytest.raises(ValueError):
        NoilcLearner(np.eye(3), weight=np.triu(np.ones((3, 3))))
    with pytest.raises(ValueError):
        noilc_update(NoilcLearner(np.eye(3)), oracles._trial(np.eye(4), np.zeros(4)))


def test_basis_columns_are_lifted_differences(short_ref):
    Psi = basis_matrix(short_ref)
    for k in (1, 2):
        assert np.allclose(Psi[:, k - 1], lift(difference_filter(k), short_ref.size) @ short_ref,
                           rtol=0, atol=1e-16)


def test_preview_basis_is_lifted_rigid_body_filter(short_ref):
    theta = (3.0, 7.0)
    F = rigid_body_filter(theta, preview=2)
    n = short_ref.size
    got = basis_matrix(short_ref, 2) @ theta
    # the lift pads with zeros past the horizon, the basis holds the final value instead
    assert np.allclose(got[:-2], (lift(F, n) @ short_ref)[:-2], rtol=0, atol=1e-15)
    assert np.allclose(got[-2:], 0.0, atol=1e-15)
    assert np.array_equal(preview_shift([1.0, 2.0, 3.0], 1), [2.0, 3.0, 3.0])


def test_bfilc_fixed_point(rng):
    J = np.tril(rng.standard_normal((20, 20)))
    r = np.cumsum(np.cumsum(rng.standard_normal(20)))
    th = np.array([1.0, 2.0])
    assert np.array_equal(bfilc_update(basis_matrix(r), J, oracles._trial(J, np.zeros(20)), th), th)


def test_bfilc_matches_bruteforce():
    assert oracles.bfilc_vs_bruteforce() <= 1e-6


def test_bfilc_zero_reference_degenerate():
    # with zero initial conditions only r = 0 makes both difference columns vanish
    J = np.eye(10)
    with pytest.raises(DegenerateBasisError):
        bfilc_update(basis_matrix(np.zeros(10)), J, oracles._trial(J, np.ones(10)), (0.0, 0.0))
    # a basis with parallel columns is rejected as well
    Psi = np.column_stack([np.arange(10.0), 2 * np.arange(10.0)])
    with pytest.raises(DegenerateBasisError):
        bfilc_update(Psi, J, oracles._trial(J, np.ones(10)), (0.0, 0.0))


def test_bfilc_recovers_rigid_body_inverse():
    # plant P = z^-1 / (t1 (1 - z^-1) + t2 (1 - z^-1)^2); F(theta*) with one-sample preview inverts it
    ts = 1.0
    t1, t2 = 2.0, 40.0
    P = TransferFunction([0.0, 1.0], [t1 + t2, -t1 - 2 * t2, t2], ts)
    C = TransferFunction([12.0, -11.0], [1.0], ts)
    cfg = PlantConfig(P, C, saturation=None, noise_variance_rel=0.0)
    r = quintic(QuinticSpec(1.0, 60.0, dwell_before=5.0, dwell_after=40.0), ts)
    J = lift(process_sensitivity(P, C), r.size)
    Psi = basis_matrix(r, 1)
    th = np.zeros(2)
    for _ in range(3):
        rec = run_trial(cfg, r, Psi @ th)
        th = bfilc_update(Psi, J, rec, th)
    assert th == pytest.approx([t1, t2], rel=1e-2)
    assert run_trial(cfg, r, Psi @ th).error_norm <= 1e-9 * np.linalg.norm(r)


@given(st.integers(0, 2 ** 32 - 1))
def test_noilc_predicted_error_not_larger(seed):
    rng = np.random.default_rng(seed)
    P, C = oracles.random_loop(rng)
    n = int(rng.integers(5, 40))
    J = np.array(lift(process_sensitivity(P, C), n))
    e = rng.standard_normal(n)
    alpha = float(rng.uniform(0.05, 1.0))
    df = noilc_update(NoilcLearner(J, alpha=alpha, eps_rel=1e-6), oracles._trial(J, e))
    assert np.linalg.norm(e - J @ df) <= np.linalg.norm(e) * (1 + 1e-12)
