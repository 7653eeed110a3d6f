"""Series certificates, closed-form bounds, and basin thresholds."""

import math

import numpy as np
import pytest

from koopcert import (
    ContractionViolatedError,
    DivergenceError,
    DomainSpec,
    EtaSpec,
    InvalidInputError,
    SystemSpec,
    accumulated_costs,
    adjoint_coeffs,
    bound_report,
    build_lyapunov,
    build_zubov,
    c_nu,
    concentration_epsilons,
    doa_level_threshold,
    estimate_mu_table,
    generalization_bound,
    grid_eval,
    lyapunov_error_bound,
    lyapunov_value,
    lyapunov_values,
    mu_from_table,
    truncation_horizon,
    weight_values,
    zubov_error_bound,
    zubov_value,
    zubov_values,
)

from helpers import (
    example1_model,
    example2_model,
    linear_lyapunov_truth,
    linear_model,
    mp_generalization_bound,
    ring_points,
)


def test_truncation_horizon_frozen_case():
    assert truncation_horizon(0.5, 1.0, 1e-8) == 13
    assert truncation_horizon(0.0, 5.0, 1e-8) == 0
    assert truncation_horizon(0.9, 0.0, 1e-8) == 0


def test_truncation_horizon_is_minimal():
    alpha, c_max, tol = 0.8, 2.5, 1e-7
    T = truncation_horizon(alpha, c_max, tol)
    a2 = alpha * alpha
    assert a2 ** (T + 1) * c_max / (1.0 - a2) <= tol
    assert a2**T * c_max / (1.0 - a2) > tol


def test_truncation_horizon_invalid_inputs():
    with pytest.raises(InvalidInputError):
        truncation_horizon(1.0, 1.0, 1e-8)
    with pytest.raises(InvalidInputError):
        truncation_horizon(0.5, -1.0, 1e-8)
    with pytest.raises(InvalidInputError):
        truncation_horizon(0.5, 1.0, 0.0)
    with pytest.raises(DivergenceError):
        truncation_horizon(1.0 - 1e-12, 1.0, 1e-8)


def test_build_lyapunov_contractive_fit():
    _, _, model = linear_model(0.5, 200, 20, 11)
    est = build_lyapunov(model, tol=1e-6)
    assert est.alpha_source == "op_norm"
    assert est.alpha == model.diagnostics.op_norm < 1.0
    a2 = est.alpha**2
    c_max = float(np.max(weight_values(model.kw.weight, model.anchors_y) ** 2))
    expect_tail = a2 ** (est.horizon + 1) * c_max / (1.0 - a2)
    np.testing.assert_allclose(est.tail_bound, expect_tail, rtol=1e-12)
    assert est.tail_bound <= 1e-6
    est50 = build_lyapunov(model, horizon=50)
    assert est50.horizon == 50


def test_build_lyapunov_decay_ratio_fallback():
    _, _, model = example1_model()
    assert model.diagnostics.op_norm >= 1.0
    est = build_lyapunov(model, tol=1e-6)
    assert est.alpha_source == "decay_ratio"
    assert est.alpha < 1.0
    assert est.tail_bound <= 1e-6


def test_build_lyapunov_refuses_expanding_anchors():
    # hand-expanded pairs: both the fitted norm and the observed ratio
    # exceed one, so no geometric envelope exists
    from koopcert import RRRConfig, SnapshotDataset, fit_koopman

    from helpers import kw_gaussian

    rng = np.random.default_rng(13)
    X = rng.uniform(-1.0, 1.0, size=(30, 2))
    ds = SnapshotDataset(X=X, Y=2.0 * X, dt=1.0, seed=13)
    kw = kw_gaussian()
    model = fit_koopman(ds, kw, RRRConfig(rank=8))
    with pytest.raises(ContractionViolatedError):
        build_lyapunov(model)


def test_lyapunov_batch_matches_scalar():
    _, _, model = linear_model(0.5, 200, 20, 11)
    est = build_lyapunov(model, tol=1e-6)
    pts = ring_points(7, 0.4, 1.6, seed=2)
    batch = lyapunov_values(est, pts)
    for i, p in enumerate(pts):
        np.testing.assert_allclose(lyapunov_value(est, p), batch[i], rtol=1e-10)


def test_lyapunov_series_matches_term_recursion():
    _, kw, model = linear_model(0.5, 200, 20, 11)
    est = build_lyapunov(model, horizon=12)
    x = np.array([0.9, -0.2])
    total = float(weight_values(kw.weight, x[None, :])[0] ** 2)
    for t in range(1, 13):
        b = adjoint_coeffs(model, x, t)
        total += float(b @ (model.gram_target @ b))
    np.testing.assert_allclose(lyapunov_value(est, x), total, rtol=1e-10)


def test_lyapunov_close_to_linear_truth():
    _, _, model = linear_model(0.5, 200, 20, 11)
    est = build_lyapunov(model, tol=1e-6)
    pts = ring_points(50, 0.5, 1.5, seed=5)
    vals = lyapunov_values(est, pts)
    truth = linear_lyapunov_truth(pts, 0.5)
    rel = np.abs(vals - truth) / truth
    assert float(np.mean(rel)) <= 0.10


def test_build_zubov_requires_damped_fit():
    _, _, model = linear_model(0.5, 200, 20, 11)
    with pytest.raises(InvalidInputError):
        build_zubov(model, steps=3)


def test_zubov_steps_zero_is_observable():
    _, _, _, model = example2_model()
    est = build_zubov(model, steps=0, nu=1.0, varsigma=0.1)
    pts = ring_points(5, 0.3, 0.8, seed=6)
    wv = weight_values(model.kw.weight, pts)
    np.testing.assert_allclose(zubov_values(est, pts), wv / (wv + 0.1), rtol=1e-12)


def test_zubov_batch_matches_scalar():
    _, _, _, model = example2_model()
    est = build_zubov(model, steps=6, nu=1.0, varsigma=0.1)
    pts = ring_points(6, 0.2, 1.0, seed=7)
    batch = zubov_values(est, pts)
    for i, p in enumerate(pts):
        np.testing.assert_allclose(zubov_value(est, p), batch[i], rtol=1e-10)


def test_zubov_invalid_parameters():
    _, _, _, model = example2_model()
    with pytest.raises(InvalidInputError):
        build_zubov(model, steps=-1)
    with pytest.raises(InvalidInputError):
        build_zubov(model, steps=2, nu=0.5)
    with pytest.raises(InvalidInputError):
        build_zubov(model, steps=2, varsigma=0.0)


def test_c_nu_frozen_values():
    np.testing.assert_allclose(c_nu(1.0, 0.1), 10.0, rtol=1e-15)
    np.testing.assert_allclose(c_nu(2.0, 0.1), 5.0, rtol=1e-15)
    with pytest.raises(InvalidInputError):
        c_nu(0.9, 0.1)


def test_generalization_bound_matches_high_precision():
    for m, gamma, r, delta in ((100, 1.0, 10, 0.05), (5000, 3.5, 40, 0.01)):
        np.testing.assert_allclose(
            generalization_bound(m, gamma, r, delta),
            mp_generalization_bound(m, gamma, r, delta),
            rtol=1e-12,
        )
    np.testing.assert_allclose(
        generalization_bound(100, 1.0, 10, 0.05), 15.545283158035630, rtol=1e-13
    )


def test_generalization_bound_monotonicity():
    base = generalization_bound(1000, 1.0, 10, 0.05)
    assert generalization_bound(4000, 1.0, 10, 0.05) < base
    assert generalization_bound(1000, 2.0, 10, 0.05) > base
    assert generalization_bound(1000, 1.0, 40, 0.05) > base
    with pytest.raises(InvalidInputError):
        generalization_bound(0, 1.0, 10, 0.05)
    with pytest.raises(InvalidInputError):
        generalization_bound(100, 1.0, 10, 1.5)


def test_concentration_epsilons_formulas():
    m, delta = 200, 0.05
    l6 = math.log(6.0 / delta)
    l12 = math.log(12.0 * m * m / delta)
    eps_x, eps_y = concentration_epsilons(m, delta)
    np.testing.assert_allclose(eps_x, 6.0 * l12 / m + 3.0 * math.sqrt(l12 / m), rtol=1e-15)
    np.testing.assert_allclose(eps_y, l6 / m + math.sqrt(8.0 * l6 / m), rtol=1e-15)


def test_error_bound_frozen_values():
    np.testing.assert_allclose(lyapunov_error_bound(0.9, 1.0, 1.0), 49.86149584487538, rtol=1e-12)
    np.testing.assert_allclose(zubov_error_bound(3, 0.9, 0.01, 1.0, 0.1), 24.3, rtol=1e-12)
    with pytest.raises(InvalidInputError):
        lyapunov_error_bound(1.0, 1.0, 1.0)
    with pytest.raises(InvalidInputError):
        zubov_error_bound(0, 0.9, 1.0, 1.0, 0.1)


def test_doa_threshold_planted_crossing():
    # Plant a cost profile whose feasibility margin is exactly K*(a0 - a),
    # so the largest feasible level is a0 and bisection must land on it.
    eta_lower, alpha, vs, a0, slope = 2.0, 0.9, 0.05, 0.7, 3.0
    log_inv = math.log(1.0 / alpha)

    def mu_fn(a: float) -> float:
        return (
            math.log(alpha * a / vs) * eta_lower / log_inv
            - math.log(2.0)
            - slope * (a0 - a)
        )

    assert mu_fn(0.2) > 0.0 and mu_fn(1.0) > 0.0
    got = doa_level_threshold(eta_lower, mu_fn, alpha, vs, bracket=(0.2, 1.0))
    np.testing.assert_allclose(got, a0, rtol=1e-8)


def test_doa_threshold_step_cost_finds_discontinuity():
    # Cost jumps from benign to prohibitive at 0.7; the certified level
    # must converge to the jump from below.
    def mu_fn(a: float) -> float:
        return 0.0 if a <= 0.7 else 1e6

    got = doa_level_threshold(50.0, mu_fn, 0.9, 0.1, bracket=(0.2, 1.0))
    assert got is not None
    assert 0.7 - 1e-8 <= got <= 0.7


def test_doa_threshold_bracket_edges():
    # everything feasible: return the top of the bracket
    assert doa_level_threshold(5.0, lambda a: 0.0, 0.99, 0.01, bracket=(0.5, 1.0)) == 1.0
    # nothing feasible: report None
    assert doa_level_threshold(1e-3, lambda a: 50.0, 0.5, 0.1, bracket=(0.1, 1.0)) is None
    with pytest.raises(InvalidInputError):
        doa_level_threshold(0.0, lambda a: 0.0, 0.9, 0.1, bracket=(0.1, 1.0))
    with pytest.raises(InvalidInputError):
        doa_level_threshold(1.0, lambda a: 0.0, 0.9, 0.1, bracket=(1.0, 0.1))


def test_accumulated_costs_linear_closed_form():
    sys = SystemSpec.linear_contraction(0.6)
    eta = EtaSpec(kind="quadratic-norm", scale=0.25)
    pts = np.array([[1.0, 0.0], [0.5, -0.5]])
    costs = accumulated_costs(sys, eta, pts, dt=1.0, tail_tol=1e-12)
    truth = 0.25 * np.sum(pts * pts, axis=1) / (1.0 - 0.36)
    np.testing.assert_allclose(costs, truth, rtol=1e-9)


def test_accumulated_costs_divergent_orbit_is_infinite():
    sys = SystemSpec.example2()
    eta = EtaSpec(kind="quadratic-norm", scale=0.5)
    pts = np.array([[1.9, 1.9], [0.1, 0.1]])
    costs = accumulated_costs(sys, eta, pts, dt=0.025)
    assert math.isinf(costs[0]) and math.isfinite(costs[1])


def test_estimate_mu_table_monotone_and_bounded():
    sys = SystemSpec.linear_contraction(0.6)
    from helpers import kw_gaussian

    weight = kw_gaussian().weight
    eta = EtaSpec(kind="quadratic-norm", scale=0.25)
    levels = np.linspace(0.25, 1.0, 4)
    table = estimate_mu_table(sys, DomainSpec.ball(1.0), weight, eta, levels, 50, 1.0, seed=3)
    vals = [table[a] for a in sorted(table)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    # sup over the sublevel set w <= a is 0.25 a^2 / (1 - 0.36)
    for a in sorted(table):
        assert table[a] <= 0.25 * a * a / (1.0 - 0.36) + 1e-9


def test_mu_from_table_step_semantics():
    mu = mu_from_table({0.5: 1.0, 1.0: 3.0})
    assert mu(0.25) == 1.0
    assert mu(0.5) == 1.0
    assert mu(0.75) == 1.0
    assert mu(1.0) == 3.0
    with pytest.raises(InvalidInputError):
        mu(1.5)


def test_bound_report_fields():
    ds, _, model = linear_model(0.5, 100, 10, 7)
    from koopcert import make_dataset

    held = make_dataset(SystemSpec.linear_contraction(0.5), DomainSpec.ball(2.0), 100, 1.0, 8, model.kw.weight)
    rep = bound_report(model, delta=0.05, heldout=held)
    assert rep.m == 100 and rep.rank == 10 and rep.delta == 0.05
    # the observed decay ratio of the exact map x -> 0.5 x is exactly 0.5
    np.testing.assert_allclose(rep.alpha_plug, max(rep.op_norm, 0.5), rtol=1e-12)
    assert rep.heldout_risk is not None and rep.heldout_risk >= 0.0
    assert rep.lyapunov_const > 0.0 and rep.zubov_const is None
    assert rep.excess_risk == generalization_bound(100, rep.gamma, 10, 0.05)
    _, _, _, zmodel = example2_model()
    zrep = bound_report(zmodel, delta=0.05, nu=1.0, varsigma=0.1)
    np.testing.assert_allclose(zrep.zubov_const, c_nu(1.0, 0.1) / 0.1, rtol=1e-15)


def test_grid_eval_row_major_coords():
    dom = DomainSpec.box((0.0, 0.0), (1.0, 2.0))
    coords, vals = grid_eval(lambda pts: pts[:, 0] + pts[:, 1], dom, resolution=3)
    assert coords.shape == (9, 2)
    np.testing.assert_allclose(coords[0], [0.0, 0.0])
    np.testing.assert_allclose(coords[1], [0.0, 1.0])
    np.testing.assert_allclose(coords[3], [0.5, 0.0])
    np.testing.assert_allclose(vals, coords[:, 0] + coords[:, 1], rtol=1e-15)
    with pytest.raises(InvalidInputError):
        grid_eval(lambda pts: pts[:, 0], dom, resolution=1)
    with pytest.raises(InvalidInputError):
        grid_eval(lambda pts: np.zeros((3, 3)), dom, resolution=2)
