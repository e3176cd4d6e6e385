import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import toeplitz

from hammerff.errors import MalformedSystemError, StabilityError
from hammerff.lifted_lti import (TransferFunction, closed_loop_denominator, impulse_response, is_stable,
                                 lift, poles, process_sensitivity, sensitivity, simulate)

import oracles


def test_identity_and_delay_impulse():
    assert np.array_equal(impulse_response(TransferFunction([1.0], [1.0]), 4), [1, 0, 0, 0])
    assert np.array_equal(impulse_response(TransferFunction([0.0, 1.0], [1.0]), 4), [0, 1, 0, 0])


def test_geometric_impulse():
    h = impulse_response(TransferFunction([1.0], [1.0, -0.5]), 4)
    assert np.allclose(h, [1, 0.5, 0.25, 0.125], atol=0, rtol=1e-15)


def test_lift_small_cases():
    assert np.array_equal(lift(TransferFunction([1.0], [1.0]), 3), np.eye(3))
    assert np.array_equal(lift(TransferFunction([0.0, 1.0], [1.0]), 3), np.eye(3, k=-1))


def test_lift_is_read_only():
    H = lift(TransferFunction([1.0], [1.0, -0.5]), 5)
    with pytest.raises(ValueError):
        H[0, 0] = 2.0


def test_simulate_examples():
    assert np.allclose(simulate(TransferFunction([0.0, 1.0], [1.0]), [1, 2, 3]), [0, 1, 2])
    g = TransferFunction([1.0], [1.0, -0.5])
    assert np.allclose(simulate(g, [1, 0, 0]), impulse_response(g, 3))


def test_den_normalized_monic():
    g = TransferFunction([2.0, 4.0], [2.0, -1.0])
    assert g.den[0] == 1.0
    assert np.allclose(g.num, [1.0, 2.0])


def test_malformed():
    with pytest.raises(MalformedSystemError):
        TransferFunction([1.0], [0.0, 1.0])
    with pytest.raises(MalformedSystemError):
        TransferFunction([np.nan], [1.0])
    with pytest.raises(MalformedSystemError):
        simulate(TransferFunction([1.0], [1.0], advance=1), np.ones(3))


def test_relative_degree():
    assert TransferFunction([0.0, 0.0, 1.0], [1.0, -0.9]).relative_degree == 2
    assert TransferFunction([1.0], [1.0]).relative_degree == 0
    assert not TransferFunction([1.0], [1.0]).is_strictly_proper
    assert TransferFunction([1.0], [1.0], advance=1).relative_degree == -1


def test_lift_vs_simulate_100_random_systems():
    assert oracles.lift_vs_simulate(100) <= 1e-10


def test_noncausal_two_sided_fir():
    # h(-1) = 2, h(0) = 1, h(1) = 3
    g = TransferFunction([2.0, 1.0, 3.0], [1.0], advance=1)
    H = lift(g, 5)
    ref = toeplitz([1.0, 3.0, 0, 0, 0], [1.0, 2.0, 0, 0, 0])
    assert np.array_equal(H, ref)
    u = np.arange(1.0, 6.0)
    full = np.convolve(u, [2.0, 1.0, 3.0])  # index k holds output at time k - 1
    assert np.allclose(H @ u, full[1:6])


def test_sensitivity_trivial():
    P = TransferFunction([0.0, 1.0], [1.0, -0.5])
    zero = TransferFunction([0.0], [1.0])
    S = sensitivity(P, zero)
    assert np.allclose(lift(S, 6), np.eye(6))
    assert np.allclose(lift(process_sensitivity(P, zero), 6), lift(P, 6))
    assert np.allclose(lift(sensitivity(zero, TransferFunction([3.0], [1.0])), 4), np.eye(4))


def test_sensitivity_identity():
    assert oracles.sensitivity_identity() <= 1e-8


def test_sensitivity_identity_default_loop(default_cfg):
    P, C = default_cfg.plant.linear_plant, default_cfg.plant.controller
    assert oracles.sensitivity_identity(0, extra=[(P, C)]) <= 1e-8


def test_unstable_loop_raises():
    P = TransferFunction([0.0, 1.0], [1.0, -1.0])
    with pytest.raises(StabilityError) as exc:
        sensitivity(P, TransferFunction([5.0], [1.0]))
    assert exc.value.pole_moduli[0] > 1.0


def test_default_loop_poles_inside_unit_circle(default_cfg):
    P, C = default_cfg.plant.linear_plant, default_cfg.plant.controller
    cl = closed_loop_denominator(P, C)
    # companion-free oracle: roots of the z-polynomial via numpy's polynomial class
    r = np.polynomial.Polynomial(cl[::-1]).roots()
    assert np.all(np.abs(r) < 1.0)
    assert is_stable(TransferFunction([1.0], cl, P.sample_time))


def test_algebra_matches_lifted_products(rng):
    A, B = oracles.random_stable_tf(rng), oracles.random_stable_tf(rng)
    n = 40
    u = rng.standard_normal(n)
    assert np.allclose(lift(A * B, n) @ u, lift(A, n) @ (lift(B, n) @ u), atol=1e-10)
    assert np.allclose(lift(A + B, n), lift(A, n) + lift(B, n), atol=1e-10)


def test_frequency_response_of_delay():
    g = TransferFunction([0.0, 1.0], [1.0], sample_time=0.01)
    f = np.array([1.0, 10.0])
    assert np.allclose(g.frequency_response(f), np.exp(-2j * np.pi * f * 0.01))


def test_dict_round_trip():
    g = TransferFunction([0.0, 1.5], [1.0, -0.2, 0.01], sample_time=5e-4, advance=0)
    assert TransferFunction.from_dict(g.to_dict()) == g


seeds = st.integers(0, 2 ** 32 - 1)


@given(seeds)
def test_lift_toeplitz_and_lower_triangular(seed):
    rng = np.random.default_rng(seed)
    g = oracles.random_stable_tf(rng)
    n = int(rng.integers(2, 30))
    H = lift(g, n)
    for k in range(-n + 1, n):
        d = np.diagonal(H, k)
        assert np.all(d == d[0])
    assert np.array_equal(H, np.tril(H))


@given(seeds)
def test_lifted_products_commute(seed):
    rng = np.random.default_rng(seed)
    A, B = oracles.random_stable_tf(rng), oracles.random_stable_tf(rng)
    n = int(rng.integers(32, 60))
    u = rng.standard_normal(n)
    ref = simulate(A * B, u)
    scale = 1.0 + np.max(np.abs(ref))
    assert np.max(np.abs(lift(A, n) @ lift(B, n) @ u - ref)) <= 1e-8 * scale
    assert np.max(np.abs(lift(B, n) @ lift(A, n) @ u - ref)) <= 1e-8 * scale


@given(seeds, st.floats(-10, 10), st.floats(-10, 10))
def test_simulate_linear(seed, a, b):
    rng = np.random.default_rng(seed)
    g = oracles.random_stable_tf(rng)
    u1, u2 = rng.standard_normal((2, 50))
    lhs = simulate(g, a * u1 + b * u2)
    rhs = a * simulate(g, u1) + b * simulate(g, u2)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1.0 + np.max(np.abs(rhs)))


@given(seeds)
def test_poles_match_denominator_roots(seed):
    g = oracles.random_stable_tf(np.random.default_rng(seed))
    p = poles(g)
    assert np.all(np.abs(np.polyval(g.den, p)) < 1e-9)
