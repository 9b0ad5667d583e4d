"""Univariate circular and axial distribution families.

Four families are provided: the circular von Mises and wrapped Cauchy on
[0, 2pi), and their axial counterparts on [0, pi) obtained by wrapping
the circular density onto the semicircle. Each family supports density,
cdf, inverse cdf, sampling by inverse transform, and weighted maximum
likelihood, which is what the mixture EM consumes.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._backend import kernels
from ._errors import DegenerateInputError, DomainError

__all__ = [
    "Family",
    "MarginalSpec",
    "circular_angle",
    "axial_angle",
    "pdf",
    "log_pdf",
    "cdf",
    "inv_cdf",
    "sample",
    "weighted_mle",
]

TWO_PI = 2.0 * np.pi

# Concentration caps. Beyond these the densities are numerically point
# masses at double precision.
KAPPA_MAX_VM = 500.0
KAPPA_MAX_WC = 1.0 - 1e-6

_KAPPA_TINY = 1e-14

# Quadrant initializers for the axial von Mises direct search, as
# (mu, log kappa) rows.
_VMAX_STARTS = np.array(
    [
        [np.pi / 4.0, -3.0],
        [np.pi / 4.0, 3.0],
        [3.0 * np.pi / 4.0, -3.0],
        [3.0 * np.pi / 4.0, 3.0],
    ]
)


class Family(str, Enum):
    """Distribution family tags.

    VM_CIRC and WC_CIRC live on [0, 2pi); VM_AXIAL and WC_AXIAL on [0, pi).
    """

    VM_CIRC = "vm_circ"
    WC_CIRC = "wc_circ"
    VM_AXIAL = "vm_axial"
    WC_AXIAL = "wc_axial"

    @property
    def period(self):
        return TWO_PI if self.is_circular else np.pi

    @property
    def is_circular(self):
        return self in (Family.VM_CIRC, Family.WC_CIRC)

    @property
    def is_von_mises(self):
        return self in (Family.VM_CIRC, Family.VM_AXIAL)

    @property
    def kappa_max(self):
        return KAPPA_MAX_VM if self.is_von_mises else KAPPA_MAX_WC


def _wrap(value, period):
    out = np.mod(value, period)
    # np.mod can round up to the period itself for tiny negative inputs
    if np.ndim(out) == 0:
        return 0.0 if out >= period else float(out)
    out = np.asarray(out, dtype=np.float64)
    out[out >= period] = 0.0
    return out


def circular_angle(value):
    """Reduce any real angle (radians) to the circular range [0, 2pi)."""
    return _wrap(value, TWO_PI)


def axial_angle(value):
    """Reduce any real orientation (radians) to the axial range [0, pi)."""
    return _wrap(value, np.pi)


@dataclass(frozen=True)
class MarginalSpec:
    """One marginal distribution: family tag, location mu, concentration kappa.

    The location is reduced modulo the family period at construction.
    kappa must lie in [0, 500] for von Mises families and [0, 1 - 1e-6]
    for wrapped Cauchy families; values outside raise DomainError.
    """

    family: Family
    mu: float
    kappa: float

    def __post_init__(self):
        family = Family(self.family)
        mu = float(self.mu)
        kappa = float(self.kappa)
        if not np.isfinite(mu):
            raise DomainError(f"mu must be finite, got {mu!r}")
        if not np.isfinite(kappa) or kappa < 0.0:
            raise DomainError(f"kappa must be a nonnegative real, got {kappa!r}")
        if kappa > family.kappa_max:
            raise DomainError(
                f"kappa={kappa!r} exceeds the {family.value} cap {family.kappa_max!r}"
            )
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "mu", _wrap(mu, family.period))
        object.__setattr__(self, "kappa", kappa)

    @property
    def period(self):
        return self.family.period


def _log_cosh(a):
    aa = np.abs(a)
    return aa + np.log1p(np.exp(-2.0 * aa)) - np.log(2.0)


def log_pdf(spec, t):
    """Log density of the family at angle(s) t (reduced to the period first)."""
    t = _wrap(np.asarray(t, dtype=np.float64), spec.period)
    mu, kappa = spec.mu, spec.kappa
    if spec.family is Family.VM_CIRC:
        return kappa * np.cos(t - mu) - np.log(TWO_PI) - kernels.log_i0(kappa)
    if spec.family is Family.WC_CIRC:
        den = 1.0 + kappa * kappa - 2.0 * kappa * np.cos(t - mu)
        return np.log1p(-kappa * kappa) - np.log(TWO_PI) - np.log(den)
    if spec.family is Family.VM_AXIAL:
        return (
            _log_cosh(kappa * np.cos(t - mu)) - np.log(np.pi) - kernels.log_i0(kappa)
        )
    k2 = kappa * kappa
    den = 1.0 + k2 * k2 - 2.0 * k2 * np.cos(2.0 * (t - mu))
    return np.log1p(-k2 * k2) - np.log(np.pi) - np.log(den)


def pdf(spec, t):
    """Density of the family at angle(s) t.

    Examples
    --------
    >>> round(pdf(MarginalSpec(Family.WC_CIRC, np.pi, 0.0), 1.0), 6)
    0.159155
    """
    out = np.exp(log_pdf(spec, t))
    return float(out) if np.ndim(t) == 0 else out


# ---------------------------------------------------------------------------
# Wrapped Cauchy cdf and inverse in closed form.
#
# With c = (1+kappa)/(1-kappa), the location-zero antiderivative on
# (-pi, pi) is A(theta) = atan(c tan(theta/2))/pi; extending by
# H(theta) = m + A(theta - 2 pi m) with m = round(theta/(2 pi)) gives a
# continuous nondecreasing function with H(theta + 2 pi) = H(theta) + 1,
# so F(t) = H(t - mu) - H(-mu). The inverse runs the same pieces backward.
# The axial family is the circular one in doubled angles with
# concentration kappa^2.


def _wc_h(theta, kappa):
    theta = np.asarray(theta, dtype=np.float64)
    c = (1.0 + kappa) / (1.0 - kappa)
    m = np.round(theta / TWO_PI)
    delta = theta - TWO_PI * m
    return m + np.arctan(c * np.tan(0.5 * delta)) / np.pi


def _wc_cdf(t, mu, kappa):
    if kappa < _KAPPA_TINY:
        return np.asarray(t, dtype=np.float64) / TWO_PI
    return np.clip(_wc_h(t - mu, kappa) - _wc_h(-mu, kappa), 0.0, 1.0)


def _wc_invcdf(u, mu, kappa):
    """Closed-form wrapped Cauchy inverse cdf; mu may be an array."""
    u = np.asarray(u, dtype=np.float64)
    if kappa < _KAPPA_TINY:
        return u * TWO_PI
    w = u + _wc_h(-np.asarray(mu, dtype=np.float64), kappa)
    m = np.round(w)
    p = w - m
    theta = TWO_PI * m + 2.0 * np.arctan(np.tan(np.pi * p) * (1.0 - kappa) / (1.0 + kappa))
    return circular_angle(mu + theta)


def cdf(spec, t):
    """Cumulative distribution F(t) = integral of the density from 0 to t.

    Closed form for the wrapped Cauchy families; Fourier-series
    evaluation (backed by a quadrature cross-check in the test suite)
    for the von Mises families.
    """
    scalar = np.ndim(t) == 0
    t = _wrap(np.atleast_1d(np.asarray(t, dtype=np.float64)), spec.period)
    shape = t.shape
    t = np.ascontiguousarray(t.ravel())  # kernels take flat arrays only
    mu, kappa = spec.mu, spec.kappa
    if spec.family is Family.VM_CIRC:
        out = kernels.vm_cdf(t, mu, kappa)
    elif spec.family is Family.VM_AXIAL:
        out = kernels.vmax_cdf(t, mu, kappa)
    elif spec.family is Family.WC_CIRC:
        out = _wc_cdf(t, mu, kappa)
    else:
        out = _wc_cdf(2.0 * t, 2.0 * mu, kappa * kappa)
    return float(out[0]) if scalar else out.reshape(shape)


def inv_cdf(spec, u):
    """Inverse cdf: the angle t in [0, period) with cdf(t) = u, for u in [0, 1)."""
    scalar = np.ndim(u) == 0
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    if np.any(u < 0.0) or np.any(u >= 1.0) or not np.all(np.isfinite(u)):
        raise DomainError("u must lie in [0, 1)")
    shape = u.shape
    u = np.ascontiguousarray(u.ravel())  # kernels take flat arrays only
    mu, kappa = spec.mu, spec.kappa
    if spec.family is Family.VM_CIRC:
        out = kernels.vm_invcdf(u, mu, kappa)
    elif spec.family is Family.VM_AXIAL:
        out = kernels.vmax_invcdf(u, mu, kappa)
    elif spec.family is Family.WC_CIRC:
        out = _wc_invcdf(u, mu, kappa)
    else:
        out = axial_angle(0.5 * _wc_invcdf(u, 2.0 * mu, kappa * kappa))
    return float(out[0]) if scalar else out.reshape(shape)


def sample(spec, rng, size=None):
    """Draw from the family by inverse transform using the caller's rng."""
    u = rng.random() if size is None else rng.random(size)
    return inv_cdf(spec, u)


# ---------------------------------------------------------------------------
# Weighted maximum likelihood


def _check_weights(data, weights):
    data = np.atleast_1d(np.asarray(data, dtype=np.float64))
    weights = np.atleast_1d(np.asarray(weights, dtype=np.float64))
    if data.size == 0 or data.shape != weights.shape:
        raise DomainError("data and weights must be equal-length nonempty vectors")
    if not np.all(np.isfinite(data)) or not np.all(np.isfinite(weights)):
        raise DomainError("data and weights must be finite")
    if np.any(weights < 0.0):
        raise DomainError("weights must be nonnegative")
    if not np.any(weights > 0.0):
        raise DegenerateInputError("all weights are zero")
    return data, weights


def _vm_kappa_from_rbar(rbar):
    """Solve A(kappa) = rbar for kappa, A = I1/I0, by Newton with tolerance 1e-10."""
    if rbar < 1e-12:
        return 0.0
    if rbar >= kernels.bessel_ratio(KAPPA_MAX_VM):
        return KAPPA_MAX_VM
    if rbar < 0.53:
        k = 2.0 * rbar + rbar**3 + 5.0 * rbar**5 / 6.0
    elif rbar < 0.85:
        k = -0.4 + 1.39 * rbar + 0.43 / (1.0 - rbar)
    else:
        k = 1.0 / (rbar**3 - 4.0 * rbar**2 + 3.0 * rbar)
    k = min(max(k, 1e-8), KAPPA_MAX_VM)
    for _ in range(60):
        a = kernels.bessel_ratio(k)
        if abs(a - rbar) < 1e-10:
            break
        deriv = 1.0 - a * a - a / k
        step = (a - rbar) / deriv
        k = min(max(k - step, 1e-12), KAPPA_MAX_VM)
    return k


def _vm_circ_mle_trig(cx, sx, w):
    wsum = float(np.sum(w))
    s = float(np.sum(w * sx))
    c = float(np.sum(w * cx))
    rbar = np.hypot(s, c) / wsum
    mu = circular_angle(np.arctan2(s, c))
    if rbar >= 1.0 - 1e-12:
        return mu, KAPPA_MAX_VM
    return mu, _vm_kappa_from_rbar(rbar)


def _wc_circ_mle_trig(cx, sx, w):
    mu, kappa, converged = kernels.wc_mle(cx, sx, w)
    if not converged:
        from scipy.optimize import minimize

        wsum = float(np.sum(w))

        def negll(params):
            m, logit = params
            k = KAPPA_MAX_WC / (1.0 + np.exp(-logit))
            den = 1.0 + k * k - 2.0 * k * (cx * np.cos(m) + sx * np.sin(m))
            return -(wsum * np.log1p(-k * k) - float(w @ np.log(den)))

        k0 = min(max(kappa, 1e-6), KAPPA_MAX_WC - 1e-9)
        start = np.array([mu, np.log(k0 / (KAPPA_MAX_WC - k0))])
        res = minimize(negll, start, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
        mu = circular_angle(float(res.x[0]))
        kappa = float(KAPPA_MAX_WC / (1.0 + np.exp(-res.x[1])))
    return mu, min(kappa, KAPPA_MAX_WC)


def weighted_mle(family, data, weights):
    """Weighted maximum-likelihood fit of one family.

    Parameters
    ----------
    family : Family
        Which of the four families to fit.
    data : array_like
        Angles, reduced modulo the family period.
    weights : array_like
        Nonnegative weights, at least one positive.

    Returns
    -------
    MarginalSpec
        The fitted marginal. Concentrations are capped at the family
        maximum when the data are (numerically) perfectly concentrated.
    """
    family = Family(family)
    data, weights = _check_weights(data, weights)
    x = _wrap(data, family.period)
    if family is Family.VM_CIRC:
        mu, kappa = _vm_circ_mle_trig(np.cos(x), np.sin(x), weights)
    elif family is Family.WC_CIRC:
        mu, kappa = _wc_circ_mle_trig(np.cos(x), np.sin(x), weights)
    elif family is Family.VM_AXIAL:
        mu, kappa = kernels.vmax_mle(np.cos(x), np.sin(x), weights, _VMAX_STARTS)
    else:
        mu2, kappa2 = _wc_circ_mle_trig(np.cos(2.0 * x), np.sin(2.0 * x), weights)
        mu = axial_angle(0.5 * mu2)
        kappa = min(np.sqrt(kappa2), KAPPA_MAX_WC)
    return MarginalSpec(family, mu, kappa)
