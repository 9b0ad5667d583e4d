"""Numerical kernels, pure NumPy implementation.

This module is the fallback backend. axcirc._kernels (Cython) implements
the same functions with the same algorithms; axcirc._backend picks one at
import time. Keep the two in sync: any behavioral change here must be
mirrored in _kernels.pyx, and tests/test_backends.py checks agreement.

Conventions shared by both backends:

* angles are radians, already reduced to the family period by the caller;
* von Mises concentrations are capped at 500 upstream, wrapped Cauchy
  concentrations at 1 - 1e-6, so no overflow guards are needed beyond
  those documented inline;
* all array arguments are one-dimensional float64 arrays.
"""

import numpy as np

BACKEND_NAME = "python"

TWO_PI = 2.0 * np.pi

# Ascending-series stop rule for I0 and I1: terms until the relative term
# falls below this.
_SERIES_RTOL = 1e-16

# Fourier tail cutoff for the von Mises cdf series: coefficients
# I_k/I_0 below this contribute under 1e-17 per term to the cdf.
_COEF_CUTOFF = 1e-18

# kappa below this is treated as exactly uniform.
_KAPPA_TINY = 1e-14

_BISECT_WIDTH = 1e-6
_INVCDF_TOL = 1e-10

_QUAD_NODES, _QUAD_WEIGHTS = np.polynomial.legendre.leggauss(64)


# ---------------------------------------------------------------------------
# Bessel I0 / I1


def _i0_i1(kappa):
    """Return (I0(kappa), I1(kappa)) by their ascending power series."""
    half = 0.5 * kappa
    h2 = half * half
    t0 = 1.0
    t1 = half
    s0 = t0
    s1 = t1
    m = 1
    while True:
        t0 *= h2 / (m * m)
        t1 *= h2 / (m * (m + 1))
        s0 += t0
        s1 += t1
        if t0 < _SERIES_RTOL * s0 and t1 <= _SERIES_RTOL * max(s1, 1e-300):
            break
        m += 1
        if m > 100000:
            break
    return s0, s1


def i0(kappa):
    """Modified Bessel function of the first kind, order zero."""
    return _i0_i1(float(kappa))[0]


def log_i0(kappa):
    """log I0(kappa). The series sum stays representable for kappa <= 500."""
    return float(np.log(_i0_i1(float(kappa))[0]))


def bessel_ratio(kappa):
    """A(kappa) = I1(kappa) / I0(kappa)."""
    s0, s1 = _i0_i1(float(kappa))
    return s1 / s0


# ---------------------------------------------------------------------------
# von Mises cdf: truncated Fourier series
#
# The 2pi-periodic unnormalized density exp(kappa*cos(theta)) expands as
# I0 + 2*sum_k I_k cos(k theta), so the cdf from 0 has the exact form
#   F(x) = x/(2pi) + (1/pi) * sum_k (I_k/I_0) (sin(k(x-mu)) + sin(k mu)) / k.
# Coefficients are truncated once I_k/I_0 < 1e-18, which bounds the tail
# well below 1e-12. The composite Gauss-Legendre reference (vm_cdf_quad)
# evaluates the same integral by quadrature for cross-checking.


def _fourier_ratios(kappa):
    """Ratios I_k/I_0 for k = 1..K, K chosen so the tail is negligible.

    Uses the downward continued-fraction recurrence for rho_k = I_k/I_{k-1}
    (stable, no overflow), then a cumulative product.
    """
    if kappa < _KAPPA_TINY:
        return np.empty(0)
    m = int(kappa + 12.0 * np.sqrt(kappa + 1.0) + 30.0)
    rho = np.empty(m)
    r = 0.0
    for k in range(m, 0, -1):
        r = 1.0 / (2.0 * k / kappa + r)
        rho[k - 1] = r
    ratios = np.cumprod(rho)
    keep = np.nonzero(ratios > _COEF_CUTOFF)[0]
    if keep.size == 0:
        return ratios[:1]
    return ratios[: keep[-1] + 1]


def _vm_cdf_series(t, mu, kappa, ratios):
    k = np.arange(1.0, ratios.size + 1.0)
    coef = ratios / k
    s = np.sin(np.multiply.outer(t - mu, k)) @ coef + np.sin(k * mu) @ coef
    return t / TWO_PI + s / np.pi


def vm_cdf(t, mu, kappa):
    """Circular von Mises cdf F(t) = integral of the density from 0 to t."""
    t = np.asarray(t, dtype=np.float64)
    if kappa < _KAPPA_TINY:
        return t / TWO_PI
    out = _vm_cdf_series(t, mu, kappa, _fourier_ratios(kappa))
    return np.clip(out, 0.0, 1.0)


def vmax_cdf(t, mu, kappa):
    """Axial von Mises cdf on [0, pi).

    The axial density is the circular one wrapped onto the semicircle,
    so only even Fourier modes survive:
      F(y) = y/pi + (2/pi) * sum_{k even} (I_k/I_0)(sin(k(y-mu)) + sin(k mu))/k.
    """
    t = np.asarray(t, dtype=np.float64)
    if kappa < _KAPPA_TINY:
        return t / np.pi
    ratios = _fourier_ratios(kappa)
    even = ratios[1::2]
    if even.size == 0:
        return np.clip(t / np.pi, 0.0, 1.0)
    k = np.arange(2.0, 2.0 * even.size + 1.0, 2.0)
    coef = 2.0 * even / k
    s = np.sin(np.multiply.outer(t - mu, k)) @ coef + np.sin(k * mu) @ coef
    return np.clip(t / np.pi + s / np.pi, 0.0, 1.0)


# ---------------------------------------------------------------------------
# von Mises cdf: adaptive composite Gauss-Legendre reference
#
# Composite rule with 64 nodes per subinterval; the panel count doubles
# until prefix sums at shared panel edges agree to 1e-12. Retained as the
# verification reference for the series path and exposed for tests and
# benchmarks.


def _gl_panels(a_edges, b_edges, mu, kappa):
    mid = 0.5 * (a_edges + b_edges)
    half = 0.5 * (b_edges - a_edges)
    nodes = mid[:, None] + half[:, None] * _QUAD_NODES[None, :]
    vals = np.exp(kappa * (np.cos(nodes - mu) - 1.0))
    return half * (vals @ _QUAD_WEIGHTS)


def _vm_prefix_quad(period, mu, kappa):
    """Panel edges and cdf prefix values over [0, period] at the accepted level."""
    npan = 16
    edges = np.linspace(0.0, period, npan + 1)
    prefix = np.concatenate(
        ([0.0], np.cumsum(_gl_panels(edges[:-1], edges[1:], mu, kappa)))
    )
    while npan < 4096:
        npan2 = npan * 2
        edges2 = np.linspace(0.0, period, npan2 + 1)
        prefix2 = np.concatenate(
            ([0.0], np.cumsum(_gl_panels(edges2[:-1], edges2[1:], mu, kappa)))
        )
        agree = np.max(np.abs(prefix2[::2] - prefix)) <= 1e-12 * max(prefix2[-1], 1.0)
        edges, prefix, npan = edges2, prefix2, npan2
        if agree:
            break
    return edges, prefix


def vm_cdf_quad(t, mu, kappa):
    """Circular von Mises cdf by adaptive composite Gauss-Legendre quadrature."""
    t = np.asarray(t, dtype=np.float64)
    if kappa < _KAPPA_TINY:
        return t / TWO_PI
    edges, prefix = _vm_prefix_quad(TWO_PI, mu, kappa)
    h = edges[1] - edges[0]
    j = np.clip((t / h).astype(np.int64), 0, edges.size - 2)
    partial = _gl_panels(edges[j], np.maximum(t, edges[j]), mu, kappa)
    z = TWO_PI * np.exp(log_i0(kappa) - kappa)
    return np.clip((prefix[j] + partial) / z, 0.0, 1.0)


def vmax_cdf_quad(t, mu, kappa):
    """Axial von Mises cdf by the same quadrature applied to the wrapped density."""
    t = np.asarray(t, dtype=np.float64)
    if kappa < _KAPPA_TINY:
        return t / np.pi
    return np.clip(
        vm_cdf_quad(t, mu, kappa) + vm_cdf_quad(t, mu + np.pi, kappa), 0.0, 1.0
    )


# ---------------------------------------------------------------------------
# von Mises inverse cdf: bisection to a 1e-6 bracket, then Newton polish
# with the density as derivative until |cdf - u| < 1e-10.


def _invcdf_bisect_newton(u, period, cdf_fn, pdf_fn):
    u = np.asarray(u, dtype=np.float64)
    lo = np.zeros_like(u)
    hi = np.full_like(u, period)
    steps = int(np.ceil(np.log2(period / _BISECT_WIDTH)))
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        high = cdf_fn(mid) > u
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
    t = 0.5 * (lo + hi)
    for _ in range(40):
        f = cdf_fn(t) - u
        if np.max(np.abs(f)) < _INVCDF_TOL:
            break
        d = pdf_fn(t)
        step = np.where(d > 1e-300, f / np.maximum(d, 1e-300), 0.0)
        tn = t - step
        # fall back to the midpoint where Newton leaves the bracket or stalls
        bad = (tn <= lo) | (tn >= hi) | (d <= 1e-300)
        tn = np.where(bad, 0.5 * (lo + hi), tn)
        fb = cdf_fn(tn) - u
        high = fb > 0.0
        hi = np.where(high, tn, hi)
        lo = np.where(high, lo, tn)
        t = tn
    return t


def vm_invcdf(u, mu, kappa):
    """Inverse of vm_cdf on [0, 2pi)."""
    u = np.asarray(u, dtype=np.float64)
    if kappa < _KAPPA_TINY:
        return u * TWO_PI
    ratios = _fourier_ratios(kappa)
    lognorm = log_i0(kappa) + np.log(TWO_PI)

    def cdf_fn(t):
        return np.clip(_vm_cdf_series(t, mu, kappa, ratios), 0.0, 1.0)

    def pdf_fn(t):
        return np.exp(kappa * np.cos(t - mu) - lognorm)

    t = _invcdf_bisect_newton(u, TWO_PI, cdf_fn, pdf_fn)
    return np.where(t >= TWO_PI, 0.0, t)


def vmax_invcdf(u, mu, kappa):
    """Inverse of vmax_cdf on [0, pi)."""
    u = np.asarray(u, dtype=np.float64)
    if kappa < _KAPPA_TINY:
        return u * np.pi
    lognorm = log_i0(kappa) + np.log(np.pi)

    def cdf_fn(t):
        return vmax_cdf(t, mu, kappa)

    def pdf_fn(t):
        a = kappa * np.cos(t - mu)
        aa = np.abs(a)
        return np.exp(aa + np.log1p(np.exp(-2.0 * aa)) - np.log(2.0) - lognorm)

    t = _invcdf_bisect_newton(u, np.pi, cdf_fn, pdf_fn)
    return np.where(t >= np.pi, 0.0, t)


# ---------------------------------------------------------------------------
# Weighted MLE: axial von Mises
#
# Direct bounded search on (mu, log kappa) with a deterministic
# Nelder-Mead simplex; mu is periodic (period pi), log kappa is clipped
# to [-6, 6] with a quadratic penalty outside.


_NM_FTOL = 1e-13
_NM_XTOL = 1e-9
_NM_MAXITER = 500
_LOGK_BOUND = 6.0


def _vmax_negll(mu, logk, cy, sy, w, wsum):
    lk = min(max(logk, -_LOGK_BOUND), _LOGK_BOUND)
    penalty = 100.0 * (logk - lk) ** 2
    kappa = np.exp(lk)
    a = kappa * (cy * np.cos(mu) + sy * np.sin(mu))
    aa = np.abs(a)
    # log cosh(a) = |a| + log1p(exp(-2|a|)) - log 2, stable for large |a|
    ll = float(w @ (aa + np.log1p(np.exp(-2.0 * aa)))) - wsum * np.log(2.0)
    ll -= wsum * (np.log(np.pi) + log_i0(kappa))
    return -(ll) + penalty


def _nelder_mead_2d(fn, starts, step0, step1):
    """Minimize fn over R^2 from each start, return the best vertex found.

    Classic Nelder-Mead with standard coefficients. Deterministic given
    the start list; tolerances are fixed module constants. step0 and
    step1 set the initial simplex edge per coordinate: warm starts near
    the optimum pass small steps to skip the contraction phase.
    """
    best_x = None
    best_f = np.inf
    for x0 in starts:
        simplex = [np.asarray(x0, dtype=np.float64)]
        simplex.append(simplex[0] + np.array([step0, 0.0]))
        simplex.append(simplex[0] + np.array([0.0, step1]))
        fvals = [fn(p) for p in simplex]
        for _ in range(_NM_MAXITER):
            order = np.argsort(fvals, kind="stable")
            simplex = [simplex[i] for i in order]
            fvals = [fvals[i] for i in order]
            if (
                abs(fvals[2] - fvals[0]) <= _NM_FTOL * (1.0 + abs(fvals[0]))
                and max(
                    np.max(np.abs(simplex[1] - simplex[0])),
                    np.max(np.abs(simplex[2] - simplex[0])),
                )
                <= _NM_XTOL
            ):
                break
            centroid = 0.5 * (simplex[0] + simplex[1])
            xr = centroid + (centroid - simplex[2])
            fr = fn(xr)
            if fr < fvals[0]:
                xe = centroid + 2.0 * (centroid - simplex[2])
                fe = fn(xe)
                if fe < fr:
                    simplex[2], fvals[2] = xe, fe
                else:
                    simplex[2], fvals[2] = xr, fr
            elif fr < fvals[1]:
                simplex[2], fvals[2] = xr, fr
            else:
                if fr < fvals[2]:
                    xc = centroid + 0.5 * (centroid - simplex[2])
                    fc = fn(xc)
                    accept = fc <= fr
                else:
                    xc = centroid - 0.5 * (centroid - simplex[2])
                    fc = fn(xc)
                    accept = fc < fvals[2]
                if accept:
                    simplex[2], fvals[2] = xc, fc
                else:
                    for i in (1, 2):
                        simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                        fvals[i] = fn(simplex[i])
        order = np.argsort(fvals, kind="stable")
        if fvals[order[0]] < best_f:
            best_f = fvals[order[0]]
            best_x = simplex[order[0]]
    return best_x, best_f


def vmax_mle(cy, sy, w, starts, step_mu=0.25, step_logk=0.5):
    """Weighted axial von Mises MLE.

    cy, sy are cos(y) and sin(y); starts is a (k, 2) array of
    (mu, log kappa) initializers. Returns (mu, kappa).
    """
    w = np.asarray(w, dtype=np.float64)
    wsum = float(np.sum(w))

    def fn(p):
        return _vmax_negll(p[0], p[1], cy, sy, w, wsum)

    x, _ = _nelder_mead_2d(fn, np.asarray(starts, dtype=np.float64), step_mu, step_logk)
    mu = float(np.mod(x[0], np.pi))
    if mu >= np.pi:
        mu = 0.0
    lk = min(max(x[1], -_LOGK_BOUND), _LOGK_BOUND)
    return mu, float(np.exp(lk))


# ---------------------------------------------------------------------------
# Weighted MLE: circular wrapped Cauchy
#
# Fixed-point iteration on zeta = kappa * exp(i mu). The weighted score
# in the Poisson-kernel parameterization vanishes exactly at
#   zeta = sum_i s_i z_i / (W/(1-|zeta|^2) + sum_i s_i),
# with z_i = exp(i x_i) and s_i = w_i / |z_i - zeta|^2, which the
# iteration solves from the moment estimator start.


_WC_KAPPA_MAX = 1.0 - 1e-6
_WC_FP_TOL = 1e-12
_WC_FP_MAXITER = 200


def wc_mle(cx, sx, w):
    """Weighted circular wrapped Cauchy MLE from cos(x), sin(x), weights.

    Returns (mu, kappa, converged). The caller handles the direct-search
    fallback when converged is False.
    """
    w = np.asarray(w, dtype=np.float64)
    wsum = float(np.sum(w))
    z = cx + 1j * sx
    zeta = complex(np.sum(w * cx) / wsum, np.sum(w * sx) / wsum)
    if abs(zeta) > _WC_KAPPA_MAX:
        zeta *= _WC_KAPPA_MAX / abs(zeta)
    converged = False
    for _ in range(_WC_FP_MAXITER):
        d = z - zeta
        s = w / (d.real * d.real + d.imag * d.imag)
        ssum = float(np.sum(s))
        num = complex(np.sum(s * z.real) + 1j * np.sum(s * z.imag))
        denom = wsum / (1.0 - abs(zeta) ** 2) + ssum
        new = num / denom
        if abs(new) > _WC_KAPPA_MAX:
            new *= _WC_KAPPA_MAX / abs(new)
        if abs(new - zeta) < _WC_FP_TOL:
            zeta = new
            converged = True
            break
        zeta = new
    kappa = abs(zeta)
    mu = float(np.mod(np.angle(zeta), TWO_PI))
    if mu >= TWO_PI:
        mu = 0.0
    if kappa < 1e-15:
        mu = 0.0
    return mu, float(min(kappa, _WC_KAPPA_MAX)), converged


# ---------------------------------------------------------------------------
# Copula correlation: weighted profile likelihood in rho
#
# Golden-section over each sign half (the |rho| term makes the objective
# non-smooth at 0), then successive parabolic refinement, tolerance 1e-8.


_RHO_BOUND = 1.0 - 1e-6
_RHO_TOL = 1e-8
_GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)


def _rho_negll(rho, p, q, w, wsum):
    den = (1.0 + rho * rho) - 2.0 * abs(rho) * p - 2.0 * rho * q
    return -(wsum * np.log1p(-rho * rho) - float(w @ np.log(den)))


def _golden_min(fn, a, b, tol):
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1 = fn(x1)
    f2 = fn(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fn(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def _parabolic_polish(fn, x, fx, lo, hi):
    h = 1e-5
    for _ in range(12):
        a = max(lo, x - h)
        b = min(hi, x + h)
        if b - a < 1e-14:
            break
        fa = fn(a)
        fb = fn(b)
        denom = (a - x) * (fb - fx) - (b - x) * (fa - fx)
        if denom == 0.0:
            break
        num = (a - x) ** 2 * (fb - fx) - (b - x) ** 2 * (fa - fx)
        step = 0.5 * num / denom
        xn = min(max(x + step, lo), hi)
        fxn = fn(xn)
        if fa < fxn:
            xn, fxn = a, fa
        if fb < fxn:
            xn, fxn = b, fb
        if fxn <= fx:
            moved = abs(xn - x)
            x, fx = xn, fxn
            if moved < _RHO_TOL * 0.01:
                break
        h *= 0.25
    return x, fx


def rho_mle(u, v, w):
    """Maximize the weighted circula log-likelihood over rho."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    wsum = float(np.sum(w))
    au = TWO_PI * u
    av = TWO_PI * v
    p = np.cos(au) * np.cos(av)
    q = np.sin(au) * np.sin(av)

    def fn(rho):
        return _rho_negll(rho, p, q, w, wsum)

    xn, fn_neg = _golden_min(fn, -_RHO_BOUND, 0.0, _RHO_TOL)
    xp, fp = _golden_min(fn, 0.0, _RHO_BOUND, _RHO_TOL)
    if fn_neg <= fp:
        x, fx, lo, hi = xn, fn_neg, -_RHO_BOUND, 0.0
    else:
        x, fx, lo, hi = xp, fp, 0.0, _RHO_BOUND
    x, _ = _parabolic_polish(fn, x, fx, lo, hi)
    return float(x)


def circula_wll(rho, u, v, w):
    """Weighted circula log-likelihood at a fixed rho (diagnostics, tests)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    au = TWO_PI * u
    av = TWO_PI * v
    p = np.cos(au) * np.cos(av)
    q = np.sin(au) * np.sin(av)
    return -_rho_negll(float(rho), p, q, w, float(np.sum(w)))
