"""Finite mixtures of copula-linked circular-axial densities.

Mixing weights depend on covariates through a multinomial-logistic link
with class 1 as the reference. Estimation is EM: the E-step computes
responsibilities, the M-step splits into a weighted multinomial logistic
regression for the link coefficients and an inference-functions-for-
margins pass per component (marginals first by weighted MLE, then the
copula correlation with the marginals held fixed).
"""

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from ._backend import kernels
from . import circula, directional
from .circula import ComponentParams, circula_log_density, _unit_clamp
from .directional import Family, MarginalSpec
from ._errors import (
    AxcircError,
    DomainError,
    FitFailureError,
    NumericalError,
)

__all__ = [
    "Dataset",
    "MixtureModel",
    "FitConfig",
    "FitResult",
    "SelectionRow",
    "SelectionResult",
    "ALL_FAMILY_PAIRS",
    "mixing_weights",
    "mixture_density",
    "log_likelihood",
    "e_step",
    "m_step_beta",
    "m_step_theta",
    "fit",
    "select_model",
    "n_parameters",
]

ALL_FAMILY_PAIRS = (
    (Family.VM_CIRC, Family.VM_AXIAL),
    (Family.VM_CIRC, Family.WC_AXIAL),
    (Family.WC_CIRC, Family.VM_AXIAL),
    (Family.WC_CIRC, Family.WC_AXIAL),
)

_COLLAPSE_TOL = 1e-8
_BETA_GRAD_TOL = 1e-8
_BETA_MAX_ITER = 100
_BETA_RIDGE = 1e-6


@dataclass(frozen=True)
class Dataset:
    """Observations: circular angle x, axial angle y, covariate rows z.

    z must carry a leading intercept column of ones; angles are reduced
    to their periods at construction.
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=np.float64))
        y = np.atleast_1d(np.asarray(self.y, dtype=np.float64))
        z = np.atleast_2d(np.asarray(self.z, dtype=np.float64))
        if x.ndim != 1 or y.shape != x.shape:
            raise DomainError("x and y must be equal-length vectors")
        if x.size < 1:
            raise DomainError("dataset must contain at least one row")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DomainError("angles must be finite")
        x = directional.circular_angle(x)
        y = directional.axial_angle(y)
        if z.shape[0] != x.size:
            raise DomainError("z must have one row per observation")
        if not np.all(np.isfinite(z)):
            raise DomainError("covariates must be finite")
        if not np.allclose(z[:, 0], 1.0):
            raise DomainError("z must carry a leading intercept column of ones")
        x.setflags(write=False)
        y.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)

    @classmethod
    def from_rows(cls, rows):
        """Build from an iterable of (x, y, z_vector) triples."""
        xs, ys, zs = zip(*rows)
        return cls(np.asarray(xs), np.asarray(ys), np.asarray(zs))

    @property
    def n(self):
        return self.x.size

    @property
    def q(self):
        """Number of covariates beyond the intercept."""
        return self.z.shape[1] - 1


@dataclass(frozen=True)
class MixtureModel:
    """J components plus the multinomial-logistic coefficient matrix.

    beta has shape (J - 1, q + 1); row j - 2 holds the coefficients of
    class j against reference class 1 (beta_1 is identically zero).
    """

    components: tuple
    beta: np.ndarray

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) < 1:
            raise DomainError("a mixture needs at least one component")
        for c in comps:
            if not isinstance(c, ComponentParams):
                raise DomainError("components must be ComponentParams")
        fams = {(c.circ.family, c.axial.family) for c in comps}
        if len(fams) != 1:
            raise DomainError("all components must share one family pair")
        beta = np.atleast_2d(np.asarray(self.beta, dtype=np.float64))
        if len(comps) == 1:
            if beta.size:
                raise DomainError("a single-component model takes an empty beta")
            beta = beta.reshape(0, beta.shape[1] if beta.shape[1] else 1)
        if beta.shape[0] != len(comps) - 1:
            raise DomainError("beta must have J - 1 rows")
        if beta.size and not np.all(np.isfinite(beta)):
            raise DomainError("beta must be finite")
        beta.setflags(write=False)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "beta", beta)

    @property
    def J(self):
        return len(self.components)

    @property
    def families(self):
        c = self.components[0]
        return (c.circ.family, c.axial.family)


def n_parameters(J, q):
    """Free parameters: 5 per component plus (J - 1)(q + 1) link coefficients."""
    return 5 * J + (J - 1) * (q + 1)


# ---------------------------------------------------------------------------
# Densities and likelihood


def _log_mixing(beta, z):
    """Row-wise log mixing weights; beta (J-1, p), z (n, p) or (p,)."""
    z2 = np.atleast_2d(np.asarray(z, dtype=np.float64))
    J = beta.shape[0] + 1
    eta = np.zeros((z2.shape[0], J))
    if J > 1:
        if beta.shape[1] != z2.shape[1]:
            raise DomainError(
                f"covariate length {z2.shape[1]} does not match beta columns {beta.shape[1]}"
            )
        eta[:, 1:] = z2 @ beta.T
    shift = eta.max(axis=1, keepdims=True)
    logden = shift[:, 0] + np.log(np.sum(np.exp(eta - shift), axis=1))
    return eta - logden[:, None]


def mixing_weights(coeffs, z):
    """Class probabilities pi_j(z) from the multinomial-logistic link.

    pi_1 = 1 / (1 + sum_j exp(z' beta_j)) and pi_j = exp(z' beta_j) pi_1
    for j >= 2, evaluated with max-shift stabilization. Returns a vector
    of length J for a single z, or an (n, J) matrix for a matrix of rows.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=np.float64))
    out = np.exp(_log_mixing(coeffs, z))
    out /= out.sum(axis=1, keepdims=True)
    return out[0] if np.ndim(z) == 1 else out


def _component_log_density(theta, x, y):
    u = _unit_clamp(directional.cdf(theta.circ, x))
    v = _unit_clamp(directional.cdf(theta.axial, y))
    return (
        circula_log_density(theta.rho, u, v)
        + directional.log_pdf(theta.circ, x)
        + directional.log_pdf(theta.axial, y)
    )


def _log_density_matrix(model, x, y):
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    out = np.empty((x.size, model.J))
    for j, theta in enumerate(model.components):
        out[:, j] = _component_log_density(theta, x, y)
    return out


def mixture_density(model, x, y, z):
    """Mixture density sum_j pi_j(z) f(x, y; theta_j)."""
    scalar = np.ndim(x) == 0
    logf = _log_density_matrix(model, x, y)
    logpi = _log_mixing(model.beta, z)
    if logpi.shape[0] == 1 and logf.shape[0] > 1:
        logpi = np.broadcast_to(logpi, logf.shape)
    m = logpi + logf
    shift = m.max(axis=1)
    out = np.exp(shift) * np.sum(np.exp(m - shift[:, None]), axis=1)
    return float(out[0]) if scalar else out


def _loglik_rows(model, data):
    logf = _log_density_matrix(model, data.x, data.y)
    logpi = _log_mixing(model.beta, data.z)
    m = logpi + logf
    shift = m.max(axis=1)
    return shift + np.log(np.sum(np.exp(m - shift[:, None]), axis=1))

def log_likelihood(model, data):
    """Total log-likelihood of the dataset under the model."""
    rows = _loglik_rows(model, data)
    bad = np.nonzero(~np.isfinite(rows))[0]
    if bad.size:
        raise NumericalError(f"non-finite log-likelihood at row {int(bad[0])}")
    return float(np.sum(rows))


def e_step(model, data):
    """Responsibilities u_ij, each row normalized to sum 1."""
    logf = _log_density_matrix(model, data.x, data.y)
    logpi = _log_mixing(model.beta, data.z)
    return _resp_from_log(logpi + logf)[0]


def _resp_from_log(m):
    shift = m.max(axis=1, keepdims=True)
    e = np.exp(m - shift)
    rowsum = e.sum(axis=1, keepdims=True)
    resp = e / rowsum
    loglik = float(np.sum(shift[:, 0] + np.log(rowsum[:, 0])))
    return resp, loglik


# ---------------------------------------------------------------------------
# M-step, link coefficients: weighted multinomial logistic regression


def _standardize_design(z):
    """Center and scale non-intercept, non-binary columns for the Newton solver."""
    mean = np.zeros(z.shape[1])
    scale = np.ones(z.shape[1])
    for k in range(1, z.shape[1]):
        col = z[:, k]
        if np.all((col == 0.0) | (col == 1.0)):
            continue
        sd = float(np.std(col))
        if sd > 1e-12:
            mean[k] = float(np.mean(col))
            scale[k] = sd
    zs = (z - mean) / scale
    zs[:, 0] = 1.0
    return zs, mean, scale


def _beta_to_std(beta, mean, scale):
    b = beta * scale
    b[:, 0] = beta[:, 0] + beta[:, 1:] @ mean[1:]
    return b


def _beta_from_std(b, mean, scale):
    beta = b / scale
    beta[:, 0] = b[:, 0] - (b[:, 1:] / scale[1:]) @ mean[1:]
    return beta


def _soft_logit_objective(b, zs, targets, ridge):
    eta = np.column_stack([np.zeros(zs.shape[0]), zs @ b.T])
    shift = eta.max(axis=1, keepdims=True)
    logden = shift[:, 0] + np.log(np.sum(np.exp(eta - shift), axis=1))
    q = float(np.sum(targets * (eta - logden[:, None])))
    if ridge:
        q -= ridge * float(np.sum(b * b))
    return q


def _newton_soft_logit(zs, targets, b0, ridge):
    """Maximize the soft-label multinomial log-likelihood by Newton steps.

    targets is the full (n, J) responsibility matrix. Backtracking keeps
    the objective nondecreasing; returns (b, converged).
    """
    n, p = zs.shape
    J = targets.shape[1]
    b = b0.copy()
    obj = _soft_logit_objective(b, zs, targets, ridge)
    for _ in range(_BETA_MAX_ITER):
        eta = np.column_stack([np.zeros(n), zs @ b.T])
        shift = eta.max(axis=1, keepdims=True)
        e = np.exp(eta - shift)
        probs = e / e.sum(axis=1, keepdims=True)
        grad = (targets[:, 1:] - probs[:, 1:]).T @ zs
        if ridge:
            grad -= 2.0 * ridge * b
        if np.max(np.abs(grad)) < _BETA_GRAD_TOL:
            return b, True
        dim = (J - 1) * p
        hess = np.empty((dim, dim))
        for j in range(J - 1):
            for k in range(J - 1):
                w = probs[:, j + 1] * ((1.0 if j == k else 0.0) - probs[:, k + 1])
                hess[j * p : (j + 1) * p, k * p : (k + 1) * p] = (zs * w[:, None]).T @ zs
        if ridge:
            hess += 2.0 * ridge * np.eye(dim)
        try:
            step = np.linalg.solve(hess + 1e-10 * np.eye(dim), grad.ravel())
        except np.linalg.LinAlgError:
            return b, False
        step = step.reshape(J - 1, p)
        t = 1.0
        for _ in range(40):
            cand = b + t * step
            cand_obj = _soft_logit_objective(cand, zs, targets, ridge)
            if cand_obj >= obj - 1e-12:
                break
            t *= 0.5
        else:
            return b, False
        if not np.all(np.isfinite(cand)):
            return b, False
        b, obj = cand, cand_obj
    return b, np.max(np.abs(grad)) < _BETA_GRAD_TOL


def _m_beta(resp, z, warm, design=None):
    """Internal beta M-step; returns (beta, ridge_flag).

    design caches _standardize_design(z) across EM iterations.
    """
    zs, mean, scale = design if design is not None else _standardize_design(z)
    b0 = _beta_to_std(warm, mean, scale)
    b, ok = _newton_soft_logit(zs, resp, b0, ridge=0.0)
    flag = False
    if not ok or not np.all(np.isfinite(b)):
        b, ok = _newton_soft_logit(zs, resp, np.zeros_like(b0), ridge=_BETA_RIDGE)
        flag = True
        if not ok:
            raise NumericalError("link-coefficient Newton failed to converge")
    return _beta_from_std(b, mean, scale), flag


def _check_resp(resp, n, J=None):
    resp = np.asarray(resp, dtype=np.float64)
    if resp.ndim != 2 or resp.shape[0] != n:
        raise DomainError("responsibilities must be an (n, J) matrix")
    if J is not None and resp.shape[1] != J:
        raise DomainError("responsibilities have the wrong number of columns")
    if np.any(resp < -1e-12) or not np.all(np.isfinite(resp)):
        raise DomainError("responsibilities must be finite and nonnegative")
    if np.max(np.abs(resp.sum(axis=1) - 1.0)) > 1e-8:
        raise DomainError("responsibility rows must sum to 1")
    return resp


def m_step_beta(responsibilities, data, warm_start=None, return_flag=False):
    """Maximize Q(beta), the responsibility-weighted multinomial logit.

    Newton-Raphson with fractional targets, gradient max-norm tolerance
    1e-8, at most 100 iterations, and an internally standardized design.
    Separation or divergence triggers a ridge-penalized retry
    (penalty 1e-6 ||beta||^2), reported through return_flag.
    """
    resp = _check_resp(responsibilities, data.n)
    J = resp.shape[1]
    p = data.z.shape[1]
    if J == 1:
        beta = np.zeros((0, p))
        return (beta, False) if return_flag else beta
    if warm_start is None:
        warm = np.zeros((J - 1, p))
    else:
        warm = np.array(warm_start, dtype=np.float64).reshape(J - 1, p)
    beta, flag = _m_beta(resp, data.z, warm)
    return (beta, flag) if return_flag else beta


# ---------------------------------------------------------------------------
# M-step, component parameters: IFM per component


class _Collapse(AxcircError):
    def __init__(self, j):
        super().__init__(f"component {j + 1} collapsed")
        self.component = j


class _Pruned(AxcircError):
    pass


class _Arrays:
    """Per-dataset trigonometric caches consumed by the MLE kernels."""

    def __init__(self, data):
        self.x = data.x
        self.y = data.y
        self.z = data.z
        self.cosx = np.cos(data.x)
        self.sinx = np.sin(data.x)
        self.cosy = np.cos(data.y)
        self.siny = np.sin(data.y)
        self.cos2y = np.cos(2.0 * data.y)
        self.sin2y = np.sin(2.0 * data.y)


# Initial simplex edges for the axial direct search when warm-started
# from the previous EM iteration: the optimum moves little between
# iterations, so a small simplex skips most of the contraction phase.
_VMAX_WARM_STEPS = (0.05, 0.1)


def _fit_circ(family, arr, w, warm):
    if family is Family.VM_CIRC:
        mu, kappa = directional._vm_circ_mle_trig(arr.cosx, arr.sinx, w)
    else:
        mu, kappa = directional._wc_circ_mle_trig(arr.cosx, arr.sinx, w)
    return MarginalSpec(family, mu, kappa)


def _fit_axial(family, arr, w, warm):
    if family is Family.VM_AXIAL:
        if warm is not None:
            starts = np.array([[warm.mu, np.log(max(warm.kappa, 1e-3))]])
            mu, kappa = kernels.vmax_mle(arr.cosy, arr.siny, w, starts, *_VMAX_WARM_STEPS)
        else:
            mu, kappa = kernels.vmax_mle(arr.cosy, arr.siny, w, directional._VMAX_STARTS)
    else:
        mu2, kappa2 = directional._wc_circ_mle_trig(arr.cos2y, arr.sin2y, w)
        mu = directional.axial_angle(0.5 * mu2)
        kappa = min(np.sqrt(kappa2), directional.KAPPA_MAX_WC)
    return MarginalSpec(family, mu, kappa)


def _m_theta(resp, arr, families, warm):
    """IFM pass for every component; returns (components, log-density matrix)."""
    n, J = resp.shape
    circ_family, axial_family = families
    comps = []
    logf = np.empty((n, J))
    colsum = resp.sum(axis=0)
    for j in range(J):
        if colsum[j] <= _COLLAPSE_TOL:
            raise _Collapse(j)
        w = resp[:, j]
        warm_j = warm[j] if warm is not None else None
        circ = _fit_circ(circ_family, arr, w, warm_j.circ if warm_j else None)
        axial = _fit_axial(axial_family, arr, w, warm_j.axial if warm_j else None)
        u = _unit_clamp(directional.cdf(circ, arr.x))
        v = _unit_clamp(directional.cdf(axial, arr.y))
        rho = float(kernels.rho_mle(u, v, w))
        comps.append(ComponentParams(circ, axial, rho))
        logf[:, j] = (
            circula_log_density(rho, u, v)
            + directional.log_pdf(circ, arr.x)
            + directional.log_pdf(axial, arr.y)
        )
    return comps, logf


def m_step_theta(responsibilities, data, families):
    """IFM estimates per component given responsibilities.

    For each component: weighted MLE of the circular marginal, weighted
    MLE of the axial marginal, then the profile MLE of rho with those
    marginals fixed. A responsibility column summing below 1e-8 raises
    FitFailureError (component collapse).
    """
    resp = _check_resp(responsibilities, data.n)
    families = (Family(families[0]), Family(families[1]))
    try:
        comps, _ = _m_theta(resp, _Arrays(data), families, warm=None)
    except _Collapse as exc:
        raise FitFailureError(str(exc)) from None
    return comps


# ---------------------------------------------------------------------------
# EM driver


@dataclass(frozen=True)
class FitConfig:
    """EM settings.

    restarts counts initializations: one informed start (clustering on
    the embedded angles, or the warm model when given) plus restarts - 1
    random-label starts. Convergence requires a relative log-likelihood
    change below tol for `consecutive` iterations. prune_after, when set,
    abandons a non-first restart whose running log-likelihood trails the
    incumbent best final value by more than prune_margin at that
    iteration.
    """

    restarts: int = 20
    max_iter: int = 500
    tol: float = 1e-8
    consecutive: int = 3
    seed: object = None
    warm_model: object = None
    prune_after: object = None
    prune_margin: float = 5.0

    def replace(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class FitResult:
    """One fitted mixture with its EM diagnostics."""

    model: MixtureModel
    loglik: float
    loglik_trace: tuple
    responsibilities: np.ndarray
    classification: np.ndarray
    bic: float
    n_params: int
    converged: bool
    restarts_used: int
    loglik_decreases: int
    collapsed_restarts: int
    beta_ridge_flag: bool


def _kmeans_labels(embed, J, rng):
    from scipy.cluster.vq import kmeans2

    if J == 1:
        return np.zeros(embed.shape[0], dtype=np.int64)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, labels = kmeans2(embed, J, minit="++", seed=rng)
    if np.unique(labels).size < J:
        labels = rng.integers(0, J, embed.shape[0])
    return labels


def _labels_to_resp(labels, J):
    resp = np.zeros((labels.size, J))
    resp[np.arange(labels.size), labels] = 1.0
    return resp


def _run_em(arr, families, J, config, resp0, incumbent_best):
    n = arr.x.size
    p = arr.z.shape[1]
    beta = np.zeros((J - 1, p))
    resp = resp0
    comps = None
    trace = []
    consec = 0
    decreases = 0
    ridge_flag = False
    converged = False
    design = _standardize_design(arr.z) if J > 1 else None
    for it in range(config.max_iter):
        if J > 1:
            beta, flag = _m_beta(resp, arr.z, beta, design)
            ridge_flag = ridge_flag or flag
        comps, logf = _m_theta(resp, arr, families, warm=comps if it > 0 else None)
        logpi = _log_mixing(beta, arr.z)
        resp, loglik = _resp_from_log(logpi + logf)
        if trace:
            prev = trace[-1]
            if loglik < prev - 1e-8:
                decreases += 1
            if abs(loglik - prev) / max(1.0, abs(prev)) < config.tol:
                consec += 1
            else:
                consec = 0
        trace.append(loglik)
        if consec >= config.consecutive:
            converged = True
            break
        if (
            incumbent_best is not None
            and config.prune_after is not None
            and it + 1 == int(config.prune_after)
            and loglik < incumbent_best - config.prune_margin
        ):
            raise _Pruned()
    model = MixtureModel(tuple(comps), beta)
    return {
        "model": model,
        "loglik": trace[-1],
        "trace": tuple(trace),
        "resp": resp,
        "converged": converged,
        "decreases": decreases,
        "ridge_flag": ridge_flag,
    }


def fit(data, families, J, config=None):
    """Fit a J-component mixture by multistart EM.

    Parameters
    ----------
    data : Dataset
    families : (Family, Family)
        Circular family first, axial family second.
    J : int
        Number of components, at least 1.
    config : FitConfig, optional

    Returns
    -------
    FitResult
        The restart with the highest final log-likelihood.
    """
    config = config or FitConfig()
    families = (Family(families[0]), Family(families[1]))
    if not families[0].is_circular or families[1].is_circular:
        raise DomainError("families must be (circular, axial)")
    J = int(J)
    if J < 1:
        raise DomainError("J must be at least 1")
    if data.n <= J:
        raise DomainError("need more observations than components")
    rng = np.random.default_rng(config.seed)
    arr = _Arrays(data)
    n_starts = 1 if J == 1 else max(1, int(config.restarts))

    def informed_resp():
        if config.warm_model is not None:
            return e_step(config.warm_model, data)
        embed = np.column_stack([arr.cosx, arr.sinx, arr.cos2y, arr.sin2y])
        return _labels_to_resp(_kmeans_labels(embed, J, rng), J)

    best = None
    attempts = 0
    collapsed = 0
    pruned = 0
    queue = list(range(n_starts))
    extra_budget = 5
    while queue:
        idx = queue.pop(0)
        resp0 = informed_resp() if idx == 0 else _labels_to_resp(rng.integers(0, J, data.n), J)
        attempts += 1
        incumbent = best["loglik"] if (best is not None and idx != 0) else None
        try:
            cand = _run_em(arr, families, J, config, resp0, incumbent)
        except _Collapse:
            collapsed += 1
            if extra_budget > 0:
                extra_budget -= 1
                queue.append(n_starts + collapsed)
            continue
        except _Pruned:
            pruned += 1
            continue
        if best is None or cand["loglik"] > best["loglik"]:
            best = cand
    if best is None:
        raise FitFailureError(
            "every EM start collapsed",
            diagnostics={"attempts": attempts, "collapsed": collapsed},
        )
    n_params = n_parameters(J, data.q)
    bic = -2.0 * best["loglik"] + n_params * np.log(data.n)
    return FitResult(
        model=best["model"],
        loglik=best["loglik"],
        loglik_trace=best["trace"],
        responsibilities=best["resp"],
        classification=np.argmax(best["resp"], axis=1),
        bic=float(bic),
        n_params=n_params,
        converged=best["converged"],
        restarts_used=attempts,
        loglik_decreases=best["decreases"],
        collapsed_restarts=collapsed,
        beta_ridge_flag=best["ridge_flag"],
    )


# ---------------------------------------------------------------------------
# Model selection


@dataclass(frozen=True)
class SelectionRow:
    circ_family: Family
    axial_family: Family
    J: int
    loglik: float
    n_params: int
    bic: float
    converged: bool
    error: str = ""


@dataclass(frozen=True)
class SelectionResult:
    rows: tuple
    best: object
    best_row: object


def select_model(data, family_grid=None, J_range=(1, 2, 3), config=None):
    """Fit every (family pair, J) combination and rank by BIC.

    Individual fit failures are recorded in their rows rather than
    raised. Returns the full table plus the BIC-minimizing fit.
    """
    config = config or FitConfig()
    if family_grid is None:
        family_grid = ALL_FAMILY_PAIRS
    cells = [
        (pair, J) for pair in family_grid for J in J_range
    ]
    if not cells:
        raise DomainError("empty selection grid")
    seeds = np.random.default_rng(config.seed).spawn(len(cells))
    rows = []
    best = None
    best_row = None
    for (pair, J), seed in zip(cells, seeds):
        circ_family, axial_family = Family(pair[0]), Family(pair[1])
        try:
            res = fit(data, (circ_family, axial_family), J, config.replace(seed=seed))
        except AxcircError as exc:
            rows.append(
                SelectionRow(circ_family, axial_family, int(J),
                             float("nan"), n_parameters(int(J), data.q),
                             float("nan"), False, error=str(exc))
            )
            continue
        row = SelectionRow(circ_family, axial_family, int(J),
                           res.loglik, res.n_params, res.bic, res.converged)
        rows.append(row)
        if best is None or res.bic < best.bic:
            best, best_row = res, row
    if best is None:
        raise FitFailureError("every selection cell failed")
    return SelectionResult(rows=tuple(rows), best=best, best_row=best_row)
