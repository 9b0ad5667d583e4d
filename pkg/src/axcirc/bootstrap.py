"""Parametric bootstrap for fitted mixtures.

Each replicate redraws labels and angles from the fitted model with the
covariate rows held fixed, refits with a warm start plus a few random
restarts, aligns the refit's component labels to the point estimate,
and records the parameter vector. Intervals are equal-tail quantiles.
"""

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .circula import ComponentParams
from .directional import Family, MarginalSpec, circular_angle, axial_angle
from .mixture import FitConfig, MixtureModel, e_step, fit
from ._errors import AxcircError, DomainError

__all__ = [
    "BootstrapResult",
    "et_interval",
    "align_labels",
    "permute_model",
    "parameter_names",
    "parameter_vector",
    "parametric_bootstrap",
]

_REFIT_RESTARTS = 3
_REFIT_PRUNE_AFTER = 8
_REFIT_PRUNE_MARGIN = 5.0
_MIN_YIELD = 0.8


def et_interval(samples, level, period=None, center=None):
    """Equal-tail interval from bootstrap draws.

    Quantiles use Hazen interpolation (plotting positions (i - 0.5)/n).
    For a periodic parameter, pass its period: draws are first shifted
    into the half-period window around `center` (the point estimate;
    defaults to the circular mean of the draws), so the reported
    endpoints can lie outside [0, period) but always satisfy
    lower <= upper.
    """
    samples = np.asarray(samples, dtype=np.float64).ravel()
    samples = samples[np.isfinite(samples)]
    if samples.size < 2:
        raise DomainError("need at least two finite draws for an interval")
    if not 0.0 < level < 1.0:
        raise DomainError("level must be strictly between 0 and 1")
    if period is not None:
        if center is None:
            center = float(
                np.arctan2(
                    np.mean(np.sin(2.0 * np.pi * samples / period)),
                    np.mean(np.cos(2.0 * np.pi * samples / period)),
                )
                * period
                / (2.0 * np.pi)
            )
        half = 0.5 * period
        samples = center + np.mod(samples - center + half, period) - half
    alpha = 0.5 * (1.0 - level)
    lo = float(np.quantile(samples, alpha, method="hazen"))
    hi = float(np.quantile(samples, 1.0 - alpha, method="hazen"))
    return lo, hi


def _components_of(obj):
    if isinstance(obj, MixtureModel):
        return obj.components
    return tuple(obj)


def _circ_dist(a, b, period):
    d = abs(a - b) % period
    return min(d, period - d)


def align_labels(reference, candidate):
    """Permutation matching candidate components to reference components.

    Minimizes, over all label permutations, the summed circular distance
    between circular means plus twice the axial distance between axial
    means. Returns perm such that candidate component perm[i] plays the
    role of reference component i.
    """
    ref = _components_of(reference)
    cand = _components_of(candidate)
    if len(ref) != len(cand):
        raise DomainError("component counts differ")
    J = len(ref)
    cost = np.empty((J, J))
    for i, r in enumerate(ref):
        for k, c in enumerate(cand):
            cost[i, k] = _circ_dist(r.circ.mu, c.circ.mu, 2.0 * np.pi) + 2.0 * _circ_dist(
                r.axial.mu, c.axial.mu, np.pi
            )
    best, best_cost = None, np.inf
    for perm in itertools.permutations(range(J)):
        total = sum(cost[i, perm[i]] for i in range(J))
        if total < best_cost - 1e-15:
            best, best_cost = perm, total
    return best


def permute_model(model, perm):
    """Relabel components by perm and re-express the link coefficients.

    The linear predictors are invariant up to a shared offset, so the
    new reference class (old class perm[0]) is subtracted from every
    row: new beta_j = eta_{perm[j]} - eta_{perm[0]}, where eta_1 = 0.
    """
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(model.J)):
        raise DomainError("perm must be a permutation of the component labels")
    comps = tuple(model.components[p] for p in perm)
    if model.J == 1:
        return MixtureModel(comps, model.beta)
    eta = np.vstack([np.zeros(model.beta.shape[1]), model.beta])
    rows = eta[list(perm)]
    beta = rows[1:] - rows[0]
    return MixtureModel(comps, beta)


def parameter_names(J, q):
    """Flat parameter names in reporting order."""
    names = []
    for j in range(1, J + 1):
        names += [
            f"mu_circ_{j}",
            f"kappa_circ_{j}",
            f"mu_axial_{j}",
            f"kappa_axial_{j}",
            f"rho_{j}",
        ]
    for j in range(2, J + 1):
        names += [f"beta_{j}_{k}" for k in range(q + 1)]
    return names


def parameter_vector(model):
    """Model parameters flattened in the parameter_names order."""
    vals = []
    for comp in model.components:
        vals += [comp.circ.mu, comp.circ.kappa, comp.axial.mu, comp.axial.kappa, comp.rho]
    vals += list(model.beta.ravel())
    return np.array(vals, dtype=np.float64)


def _refit_config(model, seed):
    return FitConfig(
        restarts=_REFIT_RESTARTS,
        warm_model=model,
        prune_after=_REFIT_PRUNE_AFTER,
        prune_margin=_REFIT_PRUNE_MARGIN,
        seed=seed,
    )


def _one_replicate(args):
    index, model, z, families, child = args
    from .simstudy import simulate_dataset

    sim, _ = simulate_dataset(model, z, child)
    try:
        res = fit(sim, families, model.J, _refit_config(model, child))
    except AxcircError:
        return index, None, None
    perm = align_labels(model, res.model)
    return index, parameter_vector(permute_model(res.model, perm)), perm


@dataclass(frozen=True)
class BootstrapResult:
    """Draws and equal-tail intervals, keyed by parameter name."""

    names: tuple
    point: np.ndarray
    samples: np.ndarray
    intervals: dict
    level: float
    replicates: int
    effective: int
    failures: int
    alignment_report: tuple
    warnings: tuple


def parametric_bootstrap(fit_result, data, B, level=0.95, rng=None, workers=1):
    """Design-fixed parametric bootstrap around a fitted mixture.

    Parameters
    ----------
    fit_result : FitResult
        The point estimate to resample from and recenter on.
    data : Dataset
        Supplies the fixed covariate rows (and the sample size).
    B : int
        Number of replicates to attempt.
    level : float
        Interval coverage, e.g. 0.95.
    rng : numpy.random.Generator, optional
    workers : int
        Process count for refitting; 1 runs in-process. Replicate
        streams are spawned up front, so results do not depend on
        scheduling.

    Returns
    -------
    BootstrapResult
        Draw matrix (effective x n_params), intervals per parameter,
        and a warning when fewer than 80% of replicates survived.
    """
    B = int(B)
    if B < 2:
        raise DomainError("need at least two bootstrap replicates")
    if rng is None:
        rng = np.random.default_rng()
    model = fit_result.model
    families = model.families
    J, q = model.J, data.q
    children = rng.spawn(B)
    jobs = [(b, model, data.z, families, children[b]) for b in range(B)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_one_replicate, jobs, chunksize=8))
    else:
        raw = [_one_replicate(job) for job in jobs]
    raw.sort(key=lambda r: r[0])
    rows = [vec for _, vec, _ in raw if vec is not None]
    perms = tuple(perm for _, vec, perm in raw if vec is not None)
    failures = B - len(rows)
    if len(rows) < 2:
        raise DomainError("too few successful replicates to form intervals")
    samples = np.vstack(rows)
    names = tuple(parameter_names(J, q))
    point = parameter_vector(model)
    intervals = {}
    for k, name in enumerate(names):
        period = None
        if name.startswith("mu_circ"):
            period = 2.0 * np.pi
        elif name.startswith("mu_axial"):
            period = np.pi
        intervals[name] = et_interval(
            samples[:, k], level, period=period,
            center=float(point[k]) if period else None,
        )
    warnings = ()
    if len(rows) < _MIN_YIELD * B:
        warnings = (
            f"only {len(rows)} of {B} replicates refit successfully; "
            "intervals may be unreliable",
        )
    return BootstrapResult(
        names=names,
        point=point,
        samples=samples,
        intervals=intervals,
        level=level,
        replicates=B,
        effective=len(rows),
        failures=failures,
        alignment_report=perms,
        warnings=warnings,
    )
