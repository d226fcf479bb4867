import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cirrt.primitives import (
    FeasibilityLimits,
    MotionPrimitive,
    VehicleState,
    cost,
    evaluate,
    generate_primitive,
    input_feasible,
    sample,
)

REST0 = VehicleState.of((0, 0, 0))
REST1 = VehicleState.of((1, 0, 0))


def unit_rest_to_rest():
    return generate_primitive(REST0, 0.0, REST1, 1.0)


def solve_oracle(s0, sf, T):
    """Per-axis 3x3 solve of the terminal conditions for (a0, a1, a2)."""
    M = np.array(
        [
            [T**5, T**4, T**3],
            [5 * T**4, 4 * T**3, 3 * T**2],
            [20 * T**3, 12 * T**2, 6 * T],
        ]
    )
    out = []
    for i in range(3):
        x0, v0, a0 = s0.position[i], s0.velocity[i], s0.acceleration[i]
        rhs = np.array(
            [
                sf.position[i] - (x0 + v0 * T + 0.5 * a0 * T * T),
                sf.velocity[i] - (v0 + a0 * T),
                sf.acceleration[i] - a0,
            ]
        )
        out.append(np.linalg.solve(M, rhs))
    return np.array(out).T  # rows a0, a1, a2


def dense_profile(p, limits, n=10_001):
    ts = np.linspace(p.t0, p.tf, n)
    acc = sample(p, ts, 2)
    jerk = sample(p, ts, 3)
    f = np.linalg.norm(acc - np.asarray(limits.gravity), axis=1)
    return f, np.linalg.norm(jerk, axis=1) / f


def random_state(rng, pos=5.0, vel=3.0, acc=3.0):
    return VehicleState.of(rng.uniform(-pos, pos, 3), rng.uniform(-vel, vel, 3), rng.uniform(-acc, acc, 3))


# -------------------------------------------------------------------- generate


def test_stationary_primitive_has_zero_coefficients():
    p = generate_primitive(REST0, 0.0, REST0, 1.0)
    assert p.a0 == p.a1 == p.a2 == (0, 0, 0)
    assert evaluate(p, 0.5) == (0, 0, 0)


def test_unit_rest_to_rest_coefficients():
    p = unit_rest_to_rest()
    assert p.a0 == pytest.approx((6, 0, 0), abs=1e-12)
    assert p.a1 == pytest.approx((-15, 0, 0), abs=1e-12)
    assert p.a2 == pytest.approx((10, 0, 0), abs=1e-12)


def test_constant_velocity_is_a_straight_line():
    s0 = VehicleState.of((0, 0, 0), (1, 0, 0))
    sf = VehicleState.of((2, 0, 0), (1, 0, 0))
    p = generate_primitive(s0, 0.0, sf, 2.0)
    assert p.a0 == p.a1 == p.a2 == (0, 0, 0)
    assert evaluate(p, 0.7) == pytest.approx((0.7, 0, 0))


@pytest.mark.parametrize("tf", [0.0, -1.0, 5e-7])
def test_bad_durations(tf):
    with pytest.raises(ValueError):
        generate_primitive(REST0, 0.0, REST1, tf)


def test_coefficients_match_linear_solve(rng):
    for _ in range(200):
        s0, sf = random_state(rng), random_state(rng)
        T = rng.uniform(0.1, 10)
        p = generate_primitive(s0, 1.5, sf, 1.5 + T)
        expected = solve_oracle(s0, sf, T)
        got = np.array([p.a0, p.a1, p.a2])
        np.testing.assert_allclose(got, expected, rtol=1e-8, atol=1e-10)


def test_boundary_conditions_exact(rng):
    for _ in range(2000):
        s0, sf = random_state(rng), random_state(rng)
        t0 = rng.uniform(-5, 5)
        T = rng.uniform(0.1, 10)
        p = generate_primitive(s0, t0, sf, t0 + T)
        assert p.initial_state == s0
        for state, t in ((s0, t0), (sf, t0 + T)):
            for order, want in enumerate(state):
                got = evaluate(p, t, order)
                for g, w in zip(got, want):
                    assert abs(g - w) <= 1e-9 + 1e-9 * abs(w)


# -------------------------------------------------------------------- evaluate


def test_evaluate_examples():
    p = unit_rest_to_rest()
    assert evaluate(p, 1.0, 0) == pytest.approx((1, 0, 0), abs=1e-12)
    assert evaluate(p, 0.0, 3)[0] == pytest.approx(60)
    line = generate_primitive(VehicleState.of((0, 0, 0), (1, 0, 0)), 0, VehicleState.of((2, 0, 0), (1, 0, 0)), 2)
    for t in (0.0, 0.3, 2.0):
        assert evaluate(line, t, 2) == (0, 0, 0)


def test_evaluate_outside_interval():
    with pytest.raises(ValueError):
        evaluate(unit_rest_to_rest(), 1.5)
    with pytest.raises(ValueError):
        evaluate(unit_rest_to_rest(), 0.5, 4)


def test_sample_matches_evaluate(rng):
    p = generate_primitive(random_state(rng), 2.0, random_state(rng), 4.5)
    ts = np.linspace(2.0, 4.5, 37)
    for order in range(4):
        expected = np.array([evaluate(p, t, order) for t in ts])
        np.testing.assert_allclose(sample(p, ts, order), expected, rtol=0, atol=1e-9)


def test_derivatives_match_finite_differences(rng):
    p = generate_primitive(random_state(rng), 0.0, random_state(rng), 2.0)
    h = 1e-5
    for t in (0.3, 1.0, 1.7):
        for order in (1, 2, 3):
            fd = (np.array(evaluate(p, t + h, order - 1)) - np.array(evaluate(p, t - h, order - 1))) / (2 * h)
            np.testing.assert_allclose(evaluate(p, t, order), fd, rtol=1e-6, atol=1e-5)


# ------------------------------------------------------------------------ cost


def simpson_cost(p, intervals=10_000):
    from scipy.integrate import simpson

    ts = np.linspace(p.t0, p.tf, intervals + 1)
    j2 = np.array([sum(c * c for c in evaluate(p, t, 3)) for t in ts])
    return simpson(j2, x=ts)


def test_cost_examples():
    assert cost(generate_primitive(REST0, 0, REST0, 1)) == 0
    assert cost(unit_rest_to_rest()) == pytest.approx(720, rel=1e-12)
    assert cost(generate_primitive(REST0, 0, VehicleState.of((2, 0, 0)), 2)) == pytest.approx(90, rel=1e-12)


def test_cost_matches_quadrature(rng):
    for _ in range(20):
        p = generate_primitive(random_state(rng), 0.0, random_state(rng), rng.uniform(0.2, 5))
        assert cost(p) == pytest.approx(simpson_cost(p), rel=1e-6)


@settings(max_examples=200, deadline=None)
@given(D=st.floats(0.01, 100), T=st.floats(0.1, 10))
def test_rest_to_rest_scaling_law(D, T):
    p = generate_primitive(REST0, 0.0, VehicleState.of((D, 0, 0)), T)
    assert cost(p) == pytest.approx(720 * D * D / T**5, rel=1e-9)


def test_cost_is_locally_optimal(rng):
    # boundary-preserving variations: add eta(t) * direction with eta = t^3 (T - t)^3
    for _ in range(50):
        T = rng.uniform(0.5, 4)
        p = generate_primitive(random_state(rng), 0.0, random_state(rng), T)
        base = cost(p)
        ts = np.linspace(0, T, 4001)
        from scipy.integrate import simpson

        jerk = np.array([evaluate(p, t, 3) for t in ts])
        # third derivative of t^3 (T - t)^3, expanded: t^3 T^3 - 3 t^4 T^2 + 3 t^5 T - t^6
        eta3 = 6 * T**3 - 72 * T**2 * ts + 180 * T * ts**2 - 120 * ts**3
        for _ in range(5):
            d = rng.normal(size=3) * 1e-3
            perturbed = jerk + eta3[:, None] * d
            new = simpson((perturbed**2).sum(axis=1), x=ts)
            old = simpson((jerk**2).sum(axis=1), x=ts)
            assert new - old >= -1e-12 * max(1.0, base)


def test_cost_zero_only_for_zero_jerk(rng):
    for _ in range(200):
        p = generate_primitive(random_state(rng), 0.0, random_state(rng), rng.uniform(0.1, 10))
        assert cost(p) >= 0
        if cost(p) == 0:
            assert p.a0 == p.a1 == p.a2 == (0, 0, 0)


def test_time_translation_invariance(rng):
    limits = FeasibilityLimits()
    for _ in range(50):
        s0, sf = random_state(rng), random_state(rng)
        T = rng.uniform(0.2, 5)
        shift = rng.uniform(-100, 100)
        p = generate_primitive(s0, 0.0, sf, T)
        q = generate_primitive(s0, shift, sf, shift + T)
        assert q.coeffs == pytest.approx(p.coeffs, rel=1e-9, abs=1e-12)
        assert cost(p) == pytest.approx(cost(q), rel=1e-9)
        assert input_feasible(p, limits) == input_feasible(q, limits)


# ----------------------------------------------------------------- feasibility


LIMITS = FeasibilityLimits(f_min=5, f_max=20, omega_max=20)


def test_hover_is_feasible():
    hover = generate_primitive(REST0, 0, REST0, 1)
    assert input_feasible(hover, LIMITS)
    f, w = dense_profile(hover, LIMITS, 11)
    assert np.allclose(f, 9.81) and np.all(w == 0)


def test_violent_primitive_is_infeasible():
    p = generate_primitive(REST0, 0, VehicleState.of((100, 0, 0)), 0.5)
    f, _ = dense_profile(p, LIMITS)
    assert f.max() > 20
    assert not input_feasible(p, LIMITS)


def test_gentle_primitive_is_feasible():
    p = generate_primitive(REST0, 0, REST1, 2)
    f, w = dense_profile(p, LIMITS)
    assert 5 <= f.min() and f.max() <= 20 and w.max() <= 20
    assert input_feasible(p, LIMITS)


def test_free_fall_is_rejected():
    falling = VehicleState.of((0, 0, 10), (0, 0, 0), (0, 0, -9.81))
    sf = VehicleState.of((0, 0, 10 - 0.5 * 9.81), (0, 0, -9.81), (0, 0, -9.81))
    p = generate_primitive(falling, 0, sf, 1.0)
    assert not input_feasible(p, FeasibilityLimits(f_min=0, f_max=30, omega_max=100))


def test_feasibility_agrees_with_dense_oracle(rng):
    """Random primitives against 1e4-sample oracle, skipping near-boundary cases."""
    disagreements = 0
    checked = 0
    for _ in range(1000):
        p = generate_primitive(random_state(rng, 3, 4, 6), 0.0, random_state(rng, 3, 4, 6), rng.uniform(0.3, 3))
        f, w = dense_profile(p, LIMITS)
        margin = min(abs(f.min() - LIMITS.f_min), abs(f.max() - LIMITS.f_max), abs(w.max() - LIMITS.omega_max))
        if margin < 1e-6 * 1e3:  # dense sampling resolves extrema only to ~1e-3 relative
            continue
        checked += 1
        oracle = f.min() >= LIMITS.f_min and f.max() <= LIMITS.f_max and w.max() <= LIMITS.omega_max
        disagreements += oracle != input_feasible(p, LIMITS)
    assert checked > 900
    assert disagreements == 0


def test_screen_matches_scalar_calls(backend, rng):
    limits = FeasibilityLimits()
    S0 = rng.uniform(-2, 2, (300, 9))
    S1 = rng.uniform(-2, 2, (300, 9))
    T = rng.uniform(0.3, 3, 300)
    costs, ok = backend.screen(S0, S1, T, *limits.args())
    for a, b, t, c, f in zip(S0, S1, T, costs, ok):
        p = generate_primitive(VehicleState.of(a[:3], a[3:6], a[6:]), 0.0, VehicleState.of(b[:3], b[3:6], b[6:]), t)
        assert c == pytest.approx(cost(p), rel=1e-12)
        assert f == input_feasible(p, limits)
    assert 0 < ok.sum() < len(ok)
