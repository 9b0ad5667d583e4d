"""Mixture model: densities, EM steps, the fit driver, model selection."""

import numpy as np
import pytest

from axcirc import (
    ComponentParams,
    Dataset,
    DomainError,
    Family,
    FitConfig,
    FitFailureError,
    MarginalSpec,
    MixtureModel,
    e_step,
    fit,
    joint_density,
    log_likelihood,
    m_step_beta,
    m_step_theta,
    mixing_weights,
    mixture_density,
    select_model,
    weighted_mle,
    weighted_rho_mle,
)
from axcirc.mixture import ALL_FAMILY_PAIRS, n_parameters

TWO_PI = 2.0 * np.pi


def _two_component_model(rho1=0.4, rho2=-0.3):
    comps = (
        ComponentParams(
            MarginalSpec(Family.VM_CIRC, 1.0, 3.0),
            MarginalSpec(Family.VM_AXIAL, 0.5, 2.0),
            rho1,
        ),
        ComponentParams(
            MarginalSpec(Family.VM_CIRC, 4.5, 3.0),
            MarginalSpec(Family.VM_AXIAL, 2.5, 2.0),
            rho2,
        ),
    )
    beta = np.array([[0.3, -1.2, 0.8]])
    return MixtureModel(comps, beta)


# ---------------------------------------------------------------------------
# Containers


def test_dataset_reduces_angles():
    data = Dataset(
        x=[7.0, -0.5], y=[3.5, -0.2], z=[[1.0, 0.2, 1.0], [1.0, -0.4, 0.0]]
    )
    assert data.n == 2 and data.q == 2
    assert np.all((data.x >= 0.0) & (data.x < TWO_PI))
    assert np.all((data.y >= 0.0) & (data.y < np.pi))
    assert data.x[0] == pytest.approx(7.0 - TWO_PI)
    assert data.y[0] == pytest.approx(3.5 - np.pi)
    with pytest.raises(ValueError):
        data.x[0] = 0.0


def test_dataset_from_rows():
    rows = [(0.1, 0.2, [1.0, 3.0]), (1.1, 1.2, [1.0, -1.0])]
    data = Dataset.from_rows(rows)
    assert data.n == 2 and data.q == 1
    np.testing.assert_allclose(data.z[:, 1], [3.0, -1.0])


def test_dataset_validation():
    z = [[1.0], [1.0]]
    with pytest.raises(DomainError):
        Dataset(x=[0.1, 0.2], y=[0.1], z=z)
    with pytest.raises(DomainError):
        Dataset(x=[0.1, 0.2], y=[0.1, 0.2], z=[[1.0]])
    with pytest.raises(DomainError):
        Dataset(x=[0.1, 0.2], y=[0.1, 0.2], z=[[0.5], [1.0]])
    with pytest.raises(DomainError):
        Dataset(x=[0.1, np.nan], y=[0.1, 0.2], z=z)
    with pytest.raises(DomainError):
        Dataset(x=[0.1, 0.2], y=[np.inf, 0.2], z=z)
    with pytest.raises(DomainError):
        Dataset(x=[0.1, 0.2], y=[0.1, 0.2], z=[[1.0, np.nan], [1.0, 0.0]])
    with pytest.raises(DomainError):
        Dataset(x=[], y=[], z=np.ones((0, 1)))


def test_mixture_model_validation():
    model = _two_component_model()
    assert model.J == 2
    assert model.families == (Family.VM_CIRC, Family.VM_AXIAL)
    mixed = (
        model.components[0],
        ComponentParams(
            MarginalSpec(Family.WC_CIRC, 1.0, 0.5),
            MarginalSpec(Family.VM_AXIAL, 1.0, 1.0),
            0.1,
        ),
    )
    with pytest.raises(DomainError):
        MixtureModel(mixed, model.beta)
    with pytest.raises(DomainError):
        MixtureModel(model.components, np.zeros((2, 3)))
    with pytest.raises(DomainError):
        MixtureModel(model.components, np.array([[0.1, np.inf, 0.0]]))
    with pytest.raises(DomainError):
        MixtureModel((), np.zeros((0, 1)))
    single = MixtureModel(model.components[:1], np.zeros((0, 3)))
    assert single.J == 1 and single.beta.shape == (0, 3)
    with pytest.raises(DomainError):
        MixtureModel(model.components[:1], np.zeros((1, 3)))


def test_n_parameters():
    assert n_parameters(1, 0) == 5
    assert n_parameters(2, 2) == 13
    assert n_parameters(3, 1) == 19


# ---------------------------------------------------------------------------
# Mixing weights and densities


def test_mixing_weights_frozen_value():
    # reference computed with 30-digit arithmetic
    beta = np.array([[-2.41, 0.55, 2.17]])
    w = mixing_weights(beta, np.array([1.0, 0.0, 0.0]))
    assert w.shape == (2,)
    assert w[1] == pytest.approx(0.0824133181279128, abs=1e-15)
    assert w.sum() == pytest.approx(1.0, abs=1e-15)


def test_mixing_weights_matrix_and_stability():
    beta = np.array([[0.5, 1.0], [-0.25, -2.0]])
    z = np.array([[1.0, 0.0], [1.0, 2.0], [1.0, -3.0]])
    w = mixing_weights(beta, z)
    assert w.shape == (3, 3)
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-14)
    eta2 = z @ beta[0]
    eta3 = z @ beta[1]
    direct = np.exp(eta2) / (1.0 + np.exp(eta2) + np.exp(eta3))
    np.testing.assert_allclose(w[:, 1], direct, rtol=1e-12)
    huge = mixing_weights(np.array([[800.0, 0.0]]), z)
    assert np.all(np.isfinite(huge))
    np.testing.assert_allclose(huge[:, 1], 1.0, atol=1e-12)


def test_mixing_weights_dimension_mismatch():
    with pytest.raises(DomainError):
        mixing_weights(np.array([[0.1, 0.2]]), np.array([1.0, 0.0, 0.0]))


def test_mixture_density_two_components():
    model = _two_component_model()
    x = np.array([0.8, 3.9, 5.5])
    y = np.array([0.4, 2.2, 1.0])
    z = np.array([[1.0, 0.5, 0.0], [1.0, -1.0, 1.0], [1.0, 0.0, 0.0]])
    pi = mixing_weights(model.beta, z)
    expected = pi[:, 0] * joint_density(model.components[0], x, y) + pi[
        :, 1
    ] * joint_density(model.components[1], x, y)
    np.testing.assert_allclose(mixture_density(model, x, y, z), expected, rtol=1e-12)
    one = mixture_density(model, x[0], y[0], z[0])
    assert isinstance(one, float) and one == pytest.approx(expected[0], rel=1e-12)


def test_single_component_density_reduces_to_joint():
    theta = _two_component_model().components[0]
    model = MixtureModel((theta,), np.zeros((0, 2)))
    x, y = 2.0, 1.2
    z = np.array([1.0, 0.7])
    assert mixture_density(model, x, y, z) == pytest.approx(
        joint_density(theta, x, y), rel=1e-13
    )


def test_log_likelihood_matches_rowwise_density():
    model = _two_component_model()
    rng = np.random.default_rng(21)
    data = Dataset(
        x=rng.uniform(0, TWO_PI, 40),
        y=rng.uniform(0, np.pi, 40),
        z=np.column_stack(
            [np.ones(40), rng.normal(size=40), rng.integers(0, 2, 40)]
        ),
    )
    direct = np.sum(np.log(mixture_density(model, data.x, data.y, data.z)))
    assert log_likelihood(model, data) == pytest.approx(direct, rel=1e-12)


# ---------------------------------------------------------------------------
# E-step


def test_e_step_rows_sum_to_one():
    model = _two_component_model()
    rng = np.random.default_rng(3)
    data = Dataset(
        x=rng.uniform(0, TWO_PI, 30),
        y=rng.uniform(0, np.pi, 30),
        z=np.column_stack([np.ones(30), rng.normal(size=30), rng.normal(size=30)]),
    )
    resp = e_step(model, data)
    assert resp.shape == (30, 2)
    np.testing.assert_allclose(resp.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(resp >= 0.0)


def test_e_step_identical_components_split_evenly():
    theta = _two_component_model().components[0]
    model = MixtureModel((theta, theta), np.zeros((1, 2)))
    data = Dataset(
        x=[0.3, 2.0, 5.1], y=[0.2, 1.4, 2.8], z=np.column_stack([np.ones(3), np.zeros(3)])
    )
    resp = e_step(model, data)
    np.testing.assert_allclose(resp, 0.5, atol=1e-14)


def test_e_step_separated_components_recover_labels(rng):
    comps = (
        ComponentParams(
            MarginalSpec(Family.VM_CIRC, 1.0, 20.0),
            MarginalSpec(Family.VM_AXIAL, 0.5, 20.0),
            0.0,
        ),
        ComponentParams(
            MarginalSpec(Family.VM_CIRC, 4.2, 20.0),
            MarginalSpec(Family.VM_AXIAL, 2.4, 20.0),
            0.0,
        ),
    )
    model = MixtureModel(comps, np.zeros((1, 1)))
    from axcirc.circula import sample_pairs

    x0, y0 = sample_pairs(comps[0], rng, 100)
    x1, y1 = sample_pairs(comps[1], rng, 100)
    data = Dataset(
        x=np.concatenate([x0, x1]),
        y=np.concatenate([y0, y1]),
        z=np.ones((200, 1)),
    )
    labels = np.argmax(e_step(model, data), axis=1)
    truth = np.repeat([0, 1], 100)
    assert np.mean(labels == truth) > 0.99


# ---------------------------------------------------------------------------
# M-steps


def _logit_gradient(beta, z, resp):
    pi = mixing_weights(beta, z)
    return (resp[:, 1:] - pi[:, 1:]).T @ z


def test_m_step_beta_zeroes_the_gradient(rng):
    n, J = 400, 3
    z = np.column_stack([np.ones(n), rng.normal(size=n), rng.integers(0, 2, n)])
    raw = rng.random((n, J))
    resp = raw / raw.sum(axis=1, keepdims=True)
    beta = m_step_beta(resp, Dataset(np.zeros(n), np.zeros(n), z))
    assert beta.shape == (J - 1, 3)
    grad = _logit_gradient(beta, z, resp)
    assert np.max(np.abs(grad)) < 1e-6


def test_m_step_beta_recovers_generating_coefficients(rng):
    n = 6000
    z = np.column_stack([np.ones(n), rng.normal(size=n)])
    beta_true = np.array([[-0.4, 1.1]])
    resp = mixing_weights(beta_true, z)
    beta = m_step_beta(resp, Dataset(np.zeros(n), np.zeros(n), z))
    np.testing.assert_allclose(beta, beta_true, atol=1e-6)


def test_m_step_beta_warm_start_and_flag(rng):
    n = 200
    z = np.column_stack([np.ones(n), rng.normal(size=n)])
    raw = rng.random((n, 2))
    resp = raw / raw.sum(axis=1, keepdims=True)
    data = Dataset(np.zeros(n), np.zeros(n), z)
    cold = m_step_beta(resp, data)
    warm, flag = m_step_beta(resp, data, warm_start=cold, return_flag=True)
    assert isinstance(flag, bool)
    np.testing.assert_allclose(warm, cold, atol=1e-7)


def test_m_step_beta_single_component():
    data = Dataset([0.1, 0.2], [0.3, 0.4], [[1.0, 2.0], [1.0, 3.0]])
    beta = m_step_beta(np.ones((2, 1)), data)
    assert beta.shape == (0, 2)


def test_m_step_beta_resp_validation():
    data = Dataset([0.1, 0.2], [0.3, 0.4], [[1.0], [1.0]])
    with pytest.raises(DomainError):
        m_step_beta(np.full((2, 2), 0.4), data)
    with pytest.raises(DomainError):
        m_step_beta(np.array([[1.2, -0.2], [0.5, 0.5]]), data)
    with pytest.raises(DomainError):
        m_step_beta(np.full((3, 2), 0.5), data)


def test_m_step_theta_hard_labels_match_subset_mles(small_data):
    sc, data, labels = small_data
    J = labels.max() + 1
    resp = np.zeros((data.n, J))
    resp[np.arange(data.n), labels] = 1.0
    comps = m_step_theta(resp, data, sc.families)
    assert len(comps) == J
    for j in range(J):
        sub = labels == j
        w = np.ones(int(sub.sum()))
        circ = weighted_mle(sc.families[0], data.x[sub], w)
        axial = weighted_mle(sc.families[1], data.y[sub], w)
        assert comps[j].circ.mu == pytest.approx(circ.mu, abs=1e-7)
        assert comps[j].circ.kappa == pytest.approx(circ.kappa, rel=1e-7)
        assert comps[j].axial.mu == pytest.approx(axial.mu, abs=1e-5)
        assert comps[j].axial.kappa == pytest.approx(axial.kappa, rel=1e-4)
        pairs = np.column_stack([data.x[sub], data.y[sub]])
        rho = weighted_rho_mle(pairs, w, comps[j].circ, comps[j].axial)
        assert comps[j].rho == pytest.approx(rho, abs=1e-6)


def test_m_step_theta_collapse_raises(small_data):
    _, data, _ = small_data
    resp = np.zeros((data.n, 2))
    resp[:, 0] = 1.0
    with pytest.raises(FitFailureError):
        m_step_theta(resp, data, (Family.VM_CIRC, Family.VM_AXIAL))


# ---------------------------------------------------------------------------
# Fit driver


def test_fit_validation(small_data):
    _, data, _ = small_data
    fams = (Family.VM_CIRC, Family.VM_AXIAL)
    with pytest.raises(DomainError):
        fit(data, (Family.VM_AXIAL, Family.VM_CIRC), 2)
    with pytest.raises(DomainError):
        fit(data, fams, 0)
    with pytest.raises(DomainError):
        fit(data, fams, data.n + 1)


def test_fit_result_diagnostics(small_fit):
    sc, data, result = small_fit
    assert result.model.J == 2
    assert result.n_params == n_parameters(2, data.q)
    assert result.bic == pytest.approx(
        -2.0 * result.loglik + result.n_params * np.log(data.n)
    )
    assert result.loglik == pytest.approx(log_likelihood(result.model, data), rel=1e-12)
    assert result.responsibilities.shape == (data.n, 2)
    np.testing.assert_allclose(result.responsibilities.sum(axis=1), 1.0, atol=1e-10)
    np.testing.assert_array_equal(
        result.classification, np.argmax(result.responsibilities, axis=1)
    )
    assert result.restarts_used >= 6
    # the margins-then-correlation M-step is not a full maximizer, so the
    # trace may wobble; the returned fit must still beat its starting point
    trace = np.array(result.loglik_trace)
    assert trace[-1] >= trace[0]
    assert result.loglik_decreases == int(np.sum(np.diff(trace) < -1e-8))


def test_fit_recovers_classification(small_data, small_fit):
    _, _, labels = small_data
    _, _, result = small_fit
    hit = np.mean(result.classification == labels)
    assert max(hit, 1.0 - hit) > 0.85


def test_fit_is_deterministic(small_data):
    sc, data, _ = small_data
    config = FitConfig(restarts=3, seed=5)
    r1 = fit(data, sc.families, 2, config)
    r2 = fit(data, sc.families, 2, config)
    assert r1.loglik == r2.loglik
    np.testing.assert_array_equal(r1.model.beta, r2.model.beta)
    for a, b in zip(r1.model.components, r2.model.components):
        assert a.circ == b.circ and a.axial == b.axial and a.rho == b.rho


def test_fit_accepts_family_names(small_data):
    sc, data, _ = small_data
    result = fit(data, ("vm_circ", "vm_axial"), 1, FitConfig(seed=0))
    assert result.model.J == 1
    assert result.model.beta.shape == (0, data.q + 1)
    assert result.restarts_used == 1
    np.testing.assert_allclose(result.responsibilities, 1.0)


def test_fit_warm_model_converges_fast(small_data, small_fit):
    sc, data, _ = small_data
    _, _, base = small_fit
    warm = fit(
        data, sc.families, 2, FitConfig(restarts=1, seed=0, warm_model=base.model)
    )
    assert warm.converged
    assert warm.loglik >= base.loglik - 1e-4
    assert len(warm.loglik_trace) < len(base.loglik_trace) + 5


def test_fit_from_truth_never_ends_below_truth(small_data):
    sc, data, _ = small_data
    at_truth = log_likelihood(sc.truth, data)
    res = fit(
        data, sc.families, 2, FitConfig(restarts=1, seed=0, warm_model=sc.truth)
    )
    assert res.loglik >= at_truth - 1e-6


def test_fit_pruning_path(small_data, small_fit):
    sc, data, _ = small_data
    _, _, base = small_fit
    pruned = fit(
        data,
        sc.families,
        2,
        FitConfig(restarts=6, seed=3, prune_after=3, prune_margin=0.5),
    )
    assert pruned.converged
    assert pruned.loglik == pytest.approx(base.loglik, rel=1e-6)


# ---------------------------------------------------------------------------
# Model selection


def test_family_pair_grid():
    assert len(ALL_FAMILY_PAIRS) == 4
    for circ, axial in ALL_FAMILY_PAIRS:
        assert circ.is_circular and not axial.is_circular


def test_select_model_prefers_true_order(small_data):
    sc, data, _ = small_data
    sel = select_model(
        data,
        family_grid=[sc.families],
        J_range=(1, 2),
        config=FitConfig(restarts=4, seed=2),
    )
    assert len(sel.rows) == 2
    assert all(row.error == "" for row in sel.rows)
    assert sel.best_row.J == 2
    assert sel.best.bic == min(row.bic for row in sel.rows)
    by_j = {row.J: row for row in sel.rows}
    assert by_j[2].bic < by_j[1].bic
    assert by_j[2].loglik > by_j[1].loglik


def test_select_model_records_cell_failures(small_data):
    sc, data, _ = small_data
    sel = select_model(
        data,
        family_grid=[sc.families],
        J_range=(1, data.n + 5),
        config=FitConfig(restarts=1, seed=4),
    )
    good = [row for row in sel.rows if row.error == ""]
    bad = [row for row in sel.rows if row.error]
    assert len(good) == 1 and len(bad) == 1
    assert np.isnan(bad[0].loglik) and not bad[0].converged
    assert sel.best_row.J == 1


def test_select_model_empty_grid(small_data):
    _, data, _ = small_data
    with pytest.raises(DomainError):
        select_model(data, family_grid=[], J_range=(1,))
