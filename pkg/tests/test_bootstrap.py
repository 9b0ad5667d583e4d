"""Equal-tail intervals, label alignment, and the parametric bootstrap."""

import numpy as np
import pytest

from axcirc import (
    ComponentParams,
    Dataset,
    DomainError,
    Family,
    MarginalSpec,
    MixtureModel,
    align_labels,
    et_interval,
    log_likelihood,
    mixing_weights,
    parametric_bootstrap,
    permute_model,
)
from axcirc.bootstrap import parameter_names, parameter_vector

TWO_PI = 2.0 * np.pi


def _three_component_model():
    comps = tuple(
        ComponentParams(
            MarginalSpec(Family.VM_CIRC, mu_c, 2.0 + j),
            MarginalSpec(Family.VM_AXIAL, mu_a, 1.5 + j),
            rho,
        )
        for j, (mu_c, mu_a, rho) in enumerate(
            [(0.8, 0.4, 0.3), (2.9, 1.5, -0.5), (5.1, 2.6, 0.1)]
        )
    )
    beta = np.array([[0.4, -0.3], [-0.2, 0.6]])
    return MixtureModel(comps, beta)


# ---------------------------------------------------------------------------
# Equal-tail intervals


def test_et_interval_frozen_values():
    lo, hi = et_interval(np.arange(1.0, 101.0), 0.95)
    assert lo == pytest.approx(3.0, abs=1e-12)
    assert hi == pytest.approx(98.0, abs=1e-12)
    assert et_interval(np.array([1.0, 2.0, 3.0, 4.0]), 0.5) == (1.5, 3.5)


def test_et_interval_filters_nonfinite():
    draws = np.array([np.nan, 1.0, 2.0, 3.0, 4.0, np.inf])
    assert et_interval(draws, 0.5) == (1.5, 3.5)


def test_et_interval_periodic_recentering():
    draws = np.array([6.2, 6.25, 0.05, 0.1, 6.18, 0.02])
    naive_lo, naive_hi = et_interval(draws, 0.9)
    assert naive_hi - naive_lo > 5.0
    lo, hi = et_interval(draws, 0.9, period=TWO_PI, center=0.0)
    assert lo <= hi
    assert lo < 0.0 < hi
    assert hi - lo < 0.5
    # default center is the circular mean of the draws, same tight window
    lo2, hi2 = et_interval(draws, 0.9, period=TWO_PI)
    assert hi2 - lo2 == pytest.approx(hi - lo, abs=1e-12)


def test_et_interval_validation():
    with pytest.raises(DomainError):
        et_interval(np.array([1.0]), 0.95)
    with pytest.raises(DomainError):
        et_interval(np.array([1.0, np.nan]), 0.95)
    for level in (0.0, 1.0, -0.2):
        with pytest.raises(DomainError):
            et_interval(np.array([1.0, 2.0]), level)


# ---------------------------------------------------------------------------
# Label alignment


def test_align_labels_recovers_shuffle():
    model = _three_component_model()
    for perm in [(1, 2, 0), (2, 1, 0), (0, 1, 2)]:
        shuffled = permute_model(model, perm)
        found = align_labels(model, shuffled)
        # component found[i] of the shuffle is reference component i
        for i in range(3):
            assert shuffled.components[found[i]] == model.components[i]


def test_align_labels_count_mismatch():
    model = _three_component_model()
    with pytest.raises(DomainError):
        align_labels(model.components, model.components[:2])


def test_permute_model_preserves_likelihood(rng):
    model = _three_component_model()
    data = Dataset(
        x=rng.uniform(0, TWO_PI, 60),
        y=rng.uniform(0, np.pi, 60),
        z=np.column_stack([np.ones(60), rng.normal(size=60)]),
    )
    base = log_likelihood(model, data)
    for perm in [(1, 0, 2), (2, 0, 1), (1, 2, 0)]:
        assert log_likelihood(permute_model(model, perm), data) == pytest.approx(
            base, abs=1e-9
        )


def test_permute_model_mixing_weights(rng):
    model = _three_component_model()
    z = np.column_stack([np.ones(5), rng.normal(size=5)])
    pi = mixing_weights(model.beta, z)
    perm = (2, 0, 1)
    permuted = permute_model(model, perm)
    pi_new = mixing_weights(permuted.beta, z)
    np.testing.assert_allclose(pi_new, pi[:, list(perm)], atol=1e-12)


def test_permute_model_roundtrip():
    model = _three_component_model()
    perm = (1, 2, 0)
    inverse = tuple(np.argsort(perm))
    back = permute_model(permute_model(model, perm), inverse)
    np.testing.assert_allclose(back.beta, model.beta, atol=1e-12)
    assert back.components == model.components


def test_permute_model_validation():
    model = _three_component_model()
    with pytest.raises(DomainError):
        permute_model(model, (0, 1))
    with pytest.raises(DomainError):
        permute_model(model, (0, 0, 1))


# ---------------------------------------------------------------------------
# Parameter flattening


def test_parameter_names_and_vector():
    model = _three_component_model()
    names = parameter_names(3, 1)
    assert len(names) == 5 * 3 + 2 * 2
    assert names[:5] == [
        "mu_circ_1",
        "kappa_circ_1",
        "mu_axial_1",
        "kappa_axial_1",
        "rho_1",
    ]
    assert names[-4:] == ["beta_2_0", "beta_2_1", "beta_3_0", "beta_3_1"]
    vec = parameter_vector(model)
    assert vec.shape == (len(names),)
    assert vec[0] == model.components[0].circ.mu
    assert vec[9] == model.components[1].rho
    np.testing.assert_array_equal(vec[-4:], model.beta.ravel())


# ---------------------------------------------------------------------------
# Parametric bootstrap


def test_parametric_bootstrap_smoke(small_fit):
    sc, data, result = small_fit
    boot = parametric_bootstrap(
        result, data, B=8, level=0.9, rng=np.random.default_rng(17)
    )
    n_params = 5 * 2 + (data.q + 1)
    assert boot.names == tuple(parameter_names(2, data.q))
    np.testing.assert_array_equal(boot.point, parameter_vector(result.model))
    assert boot.replicates == 8
    assert boot.effective + boot.failures == 8
    assert boot.effective >= 2
    assert boot.samples.shape == (boot.effective, n_params)
    assert set(boot.intervals) == set(boot.names)
    for lo, hi in boot.intervals.values():
        assert lo <= hi
    assert len(boot.alignment_report) == boot.effective
    assert all(sorted(p) == [0, 1] for p in boot.alignment_report)
    if boot.effective == 8:
        assert boot.warnings == ()


def test_parametric_bootstrap_deterministic(small_fit):
    _, data, result = small_fit
    b1 = parametric_bootstrap(result, data, B=4, rng=np.random.default_rng(23))
    b2 = parametric_bootstrap(result, data, B=4, rng=np.random.default_rng(23))
    np.testing.assert_array_equal(b1.samples, b2.samples)
    assert b1.intervals == b2.intervals


def test_parametric_bootstrap_validation(small_fit):
    _, data, result = small_fit
    with pytest.raises(DomainError):
        parametric_bootstrap(result, data, B=1)
