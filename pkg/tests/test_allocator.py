import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualtilt.actuation import OMEGA, SaturationBox, STATE_DIM, total_wrench, wrench_jacobian
from dualtilt.allocator import AllocatorParams, ObjectiveSpec, allocation_stiffness, \
    allocator_step, command_filter, curvature_blocks, effective_jacobian, flow_multipliers, \
    null_projector, objective_gradient, objective_value, right_pseudoinverse
from dualtilt.errors import RankDeficientWarning
from dualtilt.simulation import Scenario, allocator_response
from dualtilt.trajectory import HoverReference

from conftest import HOVER_SPIN, interior_state, rng_from, seeds

SPEC = ObjectiveSpec()
kinds = st.sampled_from(["symmetric", "alpha", "beta"])


def test_objective_examples(frame, box):
    # J is evaluated at sat(x), so zero spin needs a box whose spin intervals contain 0
    x = np.zeros(STATE_DIM)
    assert objective_value(x, SPEC, SaturationBox.symmetric(omega_min=0.0)) == 0.0
    assert objective_value(x, SPEC, box) == pytest.approx(6 * 100.0**2 / 200)
    hover = frame.hover_state(2.0)
    assert objective_value(hover, SPEC, box) == pytest.approx(11420.25611175786, rel=1e-12)
    tilted = hover.copy()
    tilted[0] = np.deg2rad(15.0)
    diff = objective_value(tilted, SPEC, box) - objective_value(hover, SPEC, box)
    assert diff == pytest.approx(0.18310546875, rel=1e-9)


def test_gradient_examples(frame, box):
    hover = frame.hover_state(2.0)
    g = objective_gradient(hover, SPEC, box)
    np.testing.assert_array_equal(g[:12], 0.0)
    assert g[12] == pytest.approx(2 * HOVER_SPIN / 200, rel=1e-12)
    assert g[12] == pytest.approx(6.170, abs=5e-4)


@given(seeds, kinds)
def test_gradient_matches_finite_differences(box, seed, kind):
    spec = ObjectiveSpec.named(kind)
    x = interior_state(rng_from(seed), box)
    g = objective_gradient(x, spec, box)
    fd = np.empty(STATE_DIM)
    for k in range(STATE_DIM):
        h = 1e-6 * max(1.0, abs(x[k]))
        e = np.zeros(STATE_DIM)
        e[k] = h
        fd[k] = (objective_value(x + e, spec, box) - objective_value(x - e, spec, box)) / (2 * h)
    assert np.linalg.norm(g - fd) <= 1e-6 * np.linalg.norm(g)


def test_named_objectives():
    assert ObjectiveSpec.named("alpha").alpha_exponent == 2
    assert ObjectiveSpec.named("beta").beta_exponent == 2
    assert ObjectiveSpec.named("beta").kind == "beta"
    with pytest.raises(ValueError):
        ObjectiveSpec.named("gamma")
    with pytest.raises(ValueError):
        ObjectiveSpec(alpha_exponent=3)


def test_pseudoinverse_of_selector():
    M = np.hstack([np.eye(3), np.zeros((3, 3))])
    np.testing.assert_allclose(right_pseudoinverse(M), np.vstack([np.eye(3), np.zeros((3, 3))]))


def test_rank_deficient_warning():
    M = np.random.default_rng(0).normal(size=(6, 18))
    M[2] = 0.0
    with pytest.warns(RankDeficientWarning):
        P = right_pseudoinverse(M)
    assert np.all(np.isfinite(P))


@given(seeds)
def test_pseudoinverse_and_projector_random(seed):
    rng = rng_from(seed)
    M = rng.normal(size=(6, 18))
    v = rng.normal(size=18)
    np.testing.assert_allclose(M @ right_pseudoinverse(M), np.eye(6), atol=1e-9)
    P = null_projector(M)
    assert np.linalg.norm(M @ P @ v) <= 1e-9 * np.linalg.norm(v)
    np.testing.assert_allclose(P @ P, P, atol=1e-9)
    assert np.trace(P) == pytest.approx(12.0, abs=1e-6)


@given(seeds)
def test_projector_on_actuator_jacobian(frame, box, seed):
    x = interior_state(rng_from(seed), box)
    M = effective_jacobian(x, box, frame, 1e-3)
    P = null_projector(M)
    v = rng_from(seed + 1).normal(size=18)
    assert np.linalg.norm(M @ P @ v) <= 1e-9 * np.linalg.norm(M) * np.linalg.norm(v)
    np.testing.assert_allclose(P @ P, P, atol=1e-9)
    assert np.trace(P) == pytest.approx(12.0, abs=1e-6)


def test_params_validation():
    with pytest.raises(ValueError):
        AllocatorParams(K=-2.0 * np.eye(6))     # A - B K = -5 I + 10 I is not Hurwitz
    with pytest.raises(ValueError):
        AllocatorParams(gamma_p=0.0)
    assert AllocatorParams(K=[3.0] * 6).K.shape == (6, 6)


def test_command_filter_cases():
    p = AllocatorParams()
    u = np.array([1.0, -2.0, 19.0, 0.1, 0.0, -0.3])
    np.testing.assert_allclose(command_filter(u, np.zeros(6), u, p), u, atol=1e-15)
    slope = np.array([0.5, 0.0, -1.0, 0.2, 0.1, 0.0])
    np.testing.assert_allclose(command_filter(u, slope, u, p), u + slope / 5.0, atol=1e-15)


@given(seeds, st.sampled_from([0.0, 10.0]))
def test_wrench_error_rate(frame, box, seed, gamma_j):
    # M u_a = gamma_p (u_vc - u_v) = -(gamma_p (1 + k)) e for a held command
    rng = rng_from(seed)
    x = interior_state(rng, box)
    e = rng.normal(size=6)
    u_star = total_wrench(x, box, frame) - e
    p = AllocatorParams(gamma_j=gamma_j)
    u_a, diag = allocator_step(x, u_star, np.zeros(6), box, frame, p)
    M = effective_jacobian(x, box, frame, p.epsilon)
    np.testing.assert_allclose(M @ u_a, -20.0 * e, atol=1e-9 * (1 + np.linalg.norm(e)) * 20)


def test_zero_error_without_objective_is_still(frame, box):
    x = frame.hover_state(2.0)
    u_v = total_wrench(x, box, frame)
    u_a, diag = allocator_step(x, u_v, np.zeros(6), box, frame, AllocatorParams(gamma_j=0.0))
    np.testing.assert_allclose(diag.u_vc, u_v, atol=1e-14)
    assert np.linalg.norm(u_a) < 1e-9


@given(seeds, kinds)
def test_objective_term_in_null_space(frame, box, seed, kind):
    rng = rng_from(seed)
    x = interior_state(rng, box)
    p = AllocatorParams(objective=ObjectiveSpec.named(kind))
    _, diag = allocator_step(x, rng.normal(size=6), rng.normal(size=6), box, frame, p)
    M = effective_jacobian(x, box, frame, p.epsilon)
    grad = objective_gradient(x, p.objective, box)
    assert np.linalg.norm(M @ diag.u_j) <= 1e-9 * np.linalg.norm(grad)


def test_saturated_column_scaled(frame, box):
    x = frame.hover_state(2.0)
    x[[0, 7]] = [0.2, -0.1]
    sat = x.copy()
    sat[0] = 1.0                    # alpha_1 beyond +30 deg
    M_free = wrench_jacobian(sat, box, frame)   # evaluated at the clamped state
    M_sat = effective_jacobian(sat, box, frame, 1e-3)
    np.testing.assert_allclose(M_sat[:, 0], 1e-3 * M_free[:, 0], rtol=1e-15)
    np.testing.assert_array_equal(M_sat[:, 1:], M_free[:, 1:])


def test_single_saturated_component_stays_bounded():
    x0 = Scenario().initial_actuators.copy()
    x0[0] = np.deg2rad(29.0)
    sc = Scenario(trajectory=HoverReference(), initial_actuators=x0)
    u_star = total_wrench(x0, sc.box, sc.airframe) + np.array([0.0, 0.0, 0.0, 0.05, 0.0, 0.0])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientWarning)
        t, xs, u_v = allocator_response(sc, u_star, 0.5, actuators=x0)
    assert np.all(np.isfinite(xs))
    err = np.linalg.norm(u_v - u_star, axis=1)
    assert err.max() <= err[0] * (1 + 1e-9)


def lagrangian_hessian_fd(x, nu, spec, box, frame, h=1e-4):
    def grad_l(y):
        return objective_gradient(y, spec, box) - wrench_jacobian(y, box, frame).T @ nu
    H = np.empty((STATE_DIM, STATE_DIM))
    for k in range(STATE_DIM):
        step = h * max(1.0, abs(x[k]))
        e = np.zeros(STATE_DIM)
        e[k] = step
        H[:, k] = (grad_l(x + e) - grad_l(x - e)) / (2 * step)
    return H


@given(seeds, kinds)
def test_curvature_blocks_are_the_lagrangian_hessian(frame, box, seed, kind):
    rng = rng_from(seed)
    x = interior_state(rng, box, margin=0.05)
    spec = ObjectiveSpec.named(kind)
    nu = rng.normal(size=6) * [1e3, 1e3, 1e3, 1e4, 1e4, 1e4]
    H = lagrangian_hessian_fd(x, nu, spec, box, frame)
    blocks = curvature_blocks(x, nu, box, frame, spec)
    dense = np.zeros_like(H)
    for i in range(6):
        idx = [i, 6 + i, 12 + i]
        dense[np.ix_(idx, idx)] = blocks[i]
    assert np.abs(dense - H).max() <= 1e-5 * np.abs(H).max()


@settings(max_examples=40)
@given(seeds, st.sampled_from([0.0, 3.0, 10.0]), kinds)
def test_stiffness_bounds_spectrum_in_interior(frame, box, seed, gamma_j, kind):
    rng = rng_from(seed)
    x = interior_state(rng, box)
    u_star = np.concatenate([rng.normal(0, 2, 3) + [0, 0, 19.6], rng.normal(0, 0.2, 3)])
    u_star_dot = rng.normal(0, 3, 6)
    p = AllocatorParams(gamma_j=gamma_j, objective=ObjectiveSpec.named(kind))

    def flow(y):
        return allocator_step(y, u_star, u_star_dot, box, frame, p)[0]

    A = np.empty((STATE_DIM, STATE_DIM))
    for k in range(STATE_DIM):
        step = 1e-6 * max(1.0, abs(x[k]))
        e = np.zeros(STATE_DIM)
        e[k] = step
        A[:, k] = (flow(x + e) - flow(x - e)) / (2 * step)
    radius = np.abs(np.linalg.eigvals(A)).max()
    assert allocation_stiffness(x, u_star, u_star_dot, box, frame, p) >= radius


def test_multipliers_reconstruct_flow(frame, box):
    rng = np.random.default_rng(5)
    x = interior_state(rng, box)
    p = AllocatorParams()
    u_star, u_star_dot = rng.normal(size=6) + [0, 0, 19.6, 0, 0, 0], rng.normal(size=6)
    a, nu = flow_multipliers(x, u_star, u_star_dot, box, frame, p)
    M = effective_jacobian(x, box, frame, p.epsilon)
    _, diag = allocator_step(x, u_star, u_star_dot, box, frame, p)
    np.testing.assert_allclose(diag.u_y, p.gamma_p * M.T @ a, atol=1e-10)
    np.testing.assert_allclose(diag.u_j, p.gamma_j * (objective_gradient(x, p.objective, box)
                                                      - M.T @ nu), atol=1e-10)


@settings(max_examples=8)
@given(seeds, kinds)
def test_objective_descends_at_fixed_wrench(frame, box, seed, kind):
    rng = rng_from(seed)
    x0 = frame.hover_state(2.0)
    x0[:12] = rng.uniform(-0.35, 0.35, 12)
    x0[OMEGA] *= rng.uniform(0.9, 1.1, 6)
    sc = Scenario(trajectory=HoverReference(), initial_actuators=x0,
                  allocator=AllocatorParams(objective=ObjectiveSpec.named(kind)))
    u_star = total_wrench(x0, box, frame)
    _, xs, _ = allocator_response(sc, u_star, 0.2, actuators=x0)
    J = np.array([objective_value(x, sc.allocator.objective, box) for x in xs])
    assert np.all(np.diff(J) <= 1e-9)
    assert J[-1] < J[0]
