# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Numerical kernels, compiled implementation.

Mirrors axcirc._kernels_py function for function; keep the two in sync.
The hot loops (Fourier cdf series, cdf inversion, the axial von Mises
direct search, the wrapped Cauchy fixed point, and the rho profile
likelihood) run as C loops over flat float64 arrays.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, exp, fabs, log, log1p, sin, sqrt

cnp.import_array()

BACKEND_NAME = "cython"

TWO_PI = 6.283185307179586

cdef double C_TWO_PI = 6.283185307179586
cdef double C_PI = 3.141592653589793

cdef double _SERIES_RTOL = 1e-16
cdef double _COEF_CUTOFF = 1e-18
cdef double _KAPPA_TINY = 1e-14
cdef double _BISECT_WIDTH = 1e-6
cdef double _INVCDF_TOL = 1e-10


# ---------------------------------------------------------------------------
# Bessel I0 / I1


cdef void c_i0_i1(double kappa, double *s0_out, double *s1_out) noexcept nogil:
    cdef double half = 0.5 * kappa
    cdef double h2 = half * half
    cdef double t0 = 1.0
    cdef double t1 = half
    cdef double s0 = t0
    cdef double s1 = t1
    cdef long m = 1
    while True:
        t0 *= h2 / (m * m)
        t1 *= h2 / (m * (m + 1.0))
        s0 += t0
        s1 += t1
        if t0 < _SERIES_RTOL * s0 and t1 <= _SERIES_RTOL * max(s1, 1e-300):
            break
        m += 1
        if m > 100000:
            break
    s0_out[0] = s0
    s1_out[0] = s1


cdef double c_log_i0(double kappa) noexcept nogil:
    cdef double s0, s1
    c_i0_i1(kappa, &s0, &s1)
    return log(s0)


def i0(kappa):
    """Modified Bessel function of the first kind, order zero."""
    cdef double s0, s1
    c_i0_i1(float(kappa), &s0, &s1)
    return s0


def log_i0(kappa):
    """log I0(kappa). The series sum stays representable for kappa <= 500."""
    return c_log_i0(float(kappa))


def bessel_ratio(kappa):
    """A(kappa) = I1(kappa) / I0(kappa)."""
    cdef double s0, s1
    c_i0_i1(float(kappa), &s0, &s1)
    return s1 / s0


# ---------------------------------------------------------------------------
# von Mises cdf: truncated Fourier series (see the fallback module for the
# derivation). _fourier_ratios fills I_k/I_0 by the downward
# continued-fraction recurrence and truncates below the coefficient cutoff.


cdef cnp.ndarray _fourier_ratios_arr(double kappa):
    cdef long m = <long>(kappa + 12.0 * sqrt(kappa + 1.0) + 30.0)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rho = np.empty(m, dtype=np.float64)
    cdef double r = 0.0
    cdef long k
    for k in range(m, 0, -1):
        r = 1.0 / (2.0 * k / kappa + r)
        rho[k - 1] = r
    cdef double acc = 1.0
    cdef long last = 0
    for k in range(m):
        acc *= rho[k]
        rho[k] = acc
        if acc > _COEF_CUTOFF:
            last = k
    return rho[: last + 1]


def _fourier_ratios(kappa):
    """Ratios I_k/I_0 for k = 1..K, K chosen so the tail is negligible."""
    if kappa < _KAPPA_TINY:
        return np.empty(0)
    return _fourier_ratios_arr(float(kappa))


cdef double c_series_sum(double d, double[::1] coef) noexcept nogil:
    """sum_k coef[k-1] * sin(k d) by the rotation recurrence."""
    cdef double c1 = cos(d)
    cdef double s1 = sin(d)
    cdef double ck = c1
    cdef double sk = s1
    cdef double total = coef[0] * s1
    cdef double cn
    cdef Py_ssize_t k
    for k in range(1, coef.shape[0]):
        cn = ck * c1 - sk * s1
        sk = sk * c1 + ck * s1
        ck = cn
        total += coef[k] * sk
    return total


def vm_cdf(t, mu, kappa):
    """Circular von Mises cdf F(t) = integral of the density from 0 to t."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tt = np.ascontiguousarray(t, dtype=np.float64)
    cdef double dmu = float(mu)
    cdef double dk = float(kappa)
    if dk < _KAPPA_TINY:
        return tt / TWO_PI
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ratios = _fourier_ratios_arr(dk)
    cdef Py_ssize_t K = ratios.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] coef = np.empty(K, dtype=np.float64)
    cdef Py_ssize_t k
    for k in range(K):
        coef[k] = ratios[k] / (k + 1.0)
    cdef double[::1] cview = coef
    cdef double const = c_series_sum(dmu, cview)
    cdef Py_ssize_t n = tt.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double v
    cdef Py_ssize_t i
    for i in range(n):
        v = tt[i] / C_TWO_PI + (c_series_sum(tt[i] - dmu, cview) + const) / C_PI
        if v < 0.0:
            v = 0.0
        elif v > 1.0:
            v = 1.0
        out[i] = v
    return out


cdef cnp.ndarray _vmax_coef(double kappa):
    """Even-mode coefficients 2 (I_{2j}/I_0) / (2j) for the axial cdf."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ratios = _fourier_ratios_arr(kappa)
    cdef Py_ssize_t ne = ratios.shape[0] // 2
    cdef cnp.ndarray[cnp.float64_t, ndim=1] coef = np.empty(ne, dtype=np.float64)
    cdef Py_ssize_t j
    for j in range(ne):
        coef[j] = 2.0 * ratios[2 * j + 1] / (2.0 * (j + 1.0))
    return coef


def vmax_cdf(t, mu, kappa):
    """Axial von Mises cdf on [0, pi); only even Fourier modes survive."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tt = np.ascontiguousarray(t, dtype=np.float64)
    cdef double dmu = float(mu)
    cdef double dk = float(kappa)
    cdef Py_ssize_t n = tt.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double v
    if dk < _KAPPA_TINY:
        return tt / np.pi
    cdef cnp.ndarray[cnp.float64_t, ndim=1] coef = _vmax_coef(dk)
    if coef.shape[0] == 0:
        for i in range(n):
            v = tt[i] / C_PI
            out[i] = min(max(v, 0.0), 1.0)
        return out
    cdef double[::1] cview = coef
    cdef double const = c_series_sum(2.0 * dmu, cview)
    for i in range(n):
        v = tt[i] / C_PI + (c_series_sum(2.0 * (tt[i] - dmu), cview) + const) / C_PI
        if v < 0.0:
            v = 0.0
        elif v > 1.0:
            v = 1.0
        out[i] = v
    return out


# ---------------------------------------------------------------------------
# von Mises inverse cdf: bisection to a 1e-6 bracket, then Newton polish
# with the density as derivative until |cdf - u| < 1e-10, per element.


cdef double c_vm_cdf_one(double t, double dmu, double[::1] coef, double const) noexcept nogil:
    cdef double v = t / C_TWO_PI + (c_series_sum(t - dmu, coef) + const) / C_PI
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


cdef double c_vmax_cdf_one(double t, double dmu, double[::1] coef, double const) noexcept nogil:
    cdef double v = t / C_PI + (c_series_sum(2.0 * (t - dmu), coef) + const) / C_PI
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


cdef double c_invert_one(double u, double period, bint axial, double dmu,
                         double[::1] coef, double const, double dk,
                         double lognorm) noexcept nogil:
    cdef double lo = 0.0
    cdef double hi = period
    cdef double t, f, d, tn, a
    cdef long steps = <long>(log(period / _BISECT_WIDTH) / log(2.0)) + 1
    cdef long it
    for it in range(steps):
        t = 0.5 * (lo + hi)
        if axial:
            f = c_vmax_cdf_one(t, dmu, coef, const)
        else:
            f = c_vm_cdf_one(t, dmu, coef, const)
        if f > u:
            hi = t
        else:
            lo = t
    t = 0.5 * (lo + hi)
    for it in range(40):
        if axial:
            f = c_vmax_cdf_one(t, dmu, coef, const) - u
        else:
            f = c_vm_cdf_one(t, dmu, coef, const) - u
        if fabs(f) < _INVCDF_TOL:
            break
        a = dk * cos(t - dmu)
        if axial:
            # density of the wrapped pair: cosh form
            d = exp(fabs(a) + log1p(exp(-2.0 * fabs(a))) - log(2.0) - lognorm)
        else:
            d = exp(a - lognorm)
        if d > 1e-300:
            tn = t - f / d
        else:
            tn = 0.5 * (lo + hi)
        if tn <= lo or tn >= hi:
            tn = 0.5 * (lo + hi)
        if axial:
            f = c_vmax_cdf_one(tn, dmu, coef, const) - u
        else:
            f = c_vm_cdf_one(tn, dmu, coef, const) - u
        if f > 0.0:
            hi = tn
        else:
            lo = tn
        t = tn
        if fabs(f) < _INVCDF_TOL:
            break
    return t


def vm_invcdf(u, mu, kappa):
    """Inverse of vm_cdf on [0, 2pi)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double dmu = float(mu)
    cdef double dk = float(kappa)
    if dk < _KAPPA_TINY:
        return uu * TWO_PI
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ratios = _fourier_ratios_arr(dk)
    cdef Py_ssize_t K = ratios.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] coef = np.empty(K, dtype=np.float64)
    cdef Py_ssize_t k
    for k in range(K):
        coef[k] = ratios[k] / (k + 1.0)
    cdef double[::1] cview = coef
    cdef double const = c_series_sum(dmu, cview)
    cdef double lognorm = c_log_i0(dk) + log(C_TWO_PI)
    cdef Py_ssize_t n = uu.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double t
    for i in range(n):
        t = c_invert_one(uu[i], C_TWO_PI, False, dmu, cview, const, dk, lognorm)
        if t >= C_TWO_PI:
            t = 0.0
        out[i] = t
    return out


def vmax_invcdf(u, mu, kappa):
    """Inverse of vmax_cdf on [0, pi)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] uu = np.ascontiguousarray(u, dtype=np.float64)
    cdef double dmu = float(mu)
    cdef double dk = float(kappa)
    if dk < _KAPPA_TINY:
        return uu * np.pi
    cdef cnp.ndarray[cnp.float64_t, ndim=1] coef = _vmax_coef(dk)
    if coef.shape[0] == 0:
        # no surviving even mode: the series part is identically zero, but
        # the inversion still runs so both backends take the same path
        coef = np.zeros(1, dtype=np.float64)
    cdef double[::1] cview = coef
    cdef double const = c_series_sum(2.0 * dmu, cview)
    cdef double lognorm = c_log_i0(dk) + log(C_PI)
    cdef Py_ssize_t n = uu.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double t
    for i in range(n):
        t = c_invert_one(uu[i], C_PI, True, dmu, cview, const, dk, lognorm)
        if t >= C_PI:
            t = 0.0
        out[i] = t
    return out


# ---------------------------------------------------------------------------
# Weighted MLE: axial von Mises. Deterministic Nelder-Mead on
# (mu, log kappa), log kappa clipped to [-6, 6] with a quadratic penalty.


cdef double _NM_FTOL = 1e-13
cdef double _NM_XTOL = 1e-9
cdef long _NM_MAXITER = 500
cdef double _LOGK_BOUND = 6.0


cdef double c_vmax_negll(double mu, double logk, double[::1] cy, double[::1] sy,
                         double[::1] w, double wsum) noexcept nogil:
    cdef double lk = logk
    if lk < -_LOGK_BOUND:
        lk = -_LOGK_BOUND
    elif lk > _LOGK_BOUND:
        lk = _LOGK_BOUND
    cdef double penalty = 100.0 * (logk - lk) * (logk - lk)
    cdef double kappa = exp(lk)
    cdef double cm = cos(mu)
    cdef double sm = sin(mu)
    cdef double ll = 0.0
    cdef double a, aa
    cdef Py_ssize_t i
    for i in range(cy.shape[0]):
        a = kappa * (cy[i] * cm + sy[i] * sm)
        aa = fabs(a)
        # log cosh(a) = |a| + log1p(exp(-2|a|)) - log 2, stable for large |a|
        ll += w[i] * (aa + log1p(exp(-2.0 * aa)))
    ll -= wsum * log(2.0)
    ll -= wsum * (log(C_PI) + c_log_i0(kappa))
    return -ll + penalty


cdef void c_sort3(double *f, double *x0, double *x1) noexcept nogil:
    """Stable ascending sort of a 3-vertex simplex stored as parallel arrays."""
    cdef double tf, t0, t1
    cdef int i, j
    for i in range(1, 3):
        tf = f[i]
        t0 = x0[i]
        t1 = x1[i]
        j = i - 1
        while j >= 0 and f[j] > tf:
            f[j + 1] = f[j]
            x0[j + 1] = x0[j]
            x1[j + 1] = x1[j]
            j -= 1
        f[j + 1] = tf
        x0[j + 1] = t0
        x1[j + 1] = t1


def vmax_mle(cy, sy, w, starts, double step_mu=0.25, double step_logk=0.5):
    """Weighted axial von Mises MLE.

    cy, sy are cos(y) and sin(y); starts is a (k, 2) array of
    (mu, log kappa) initializers. Returns (mu, kappa). step_mu and
    step_logk set the initial simplex edge per coordinate: warm starts
    near the optimum pass small steps to skip the contraction phase.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] acy = np.ascontiguousarray(cy, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] asy = np.ascontiguousarray(sy, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] aw = np.ascontiguousarray(w, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] st = np.ascontiguousarray(
        np.atleast_2d(starts), dtype=np.float64
    )
    cdef double[::1] vcy = acy
    cdef double[::1] vsy = asy
    cdef double[::1] vw = aw
    cdef double wsum = 0.0
    cdef Py_ssize_t i
    for i in range(aw.shape[0]):
        wsum += aw[i]

    cdef double f[3]
    cdef double x0[3]
    cdef double x1[3]
    cdef double best_f = np.inf
    cdef double best_mu = 0.0
    cdef double best_lk = 0.0
    cdef Py_ssize_t s
    cdef long it
    cdef double c0, c1, xr0, xr1, fr, xe0, xe1, fe, xc0, xc1, fc
    cdef bint accept
    cdef double spread
    for s in range(st.shape[0]):
        x0[0] = st[s, 0]
        x1[0] = st[s, 1]
        x0[1] = x0[0] + step_mu
        x1[1] = x1[0]
        x0[2] = x0[0]
        x1[2] = x1[0] + step_logk
        for i in range(3):
            f[i] = c_vmax_negll(x0[i], x1[i], vcy, vsy, vw, wsum)
        for it in range(_NM_MAXITER):
            c_sort3(f, x0, x1)
            spread = max(
                max(fabs(x0[1] - x0[0]), fabs(x1[1] - x1[0])),
                max(fabs(x0[2] - x0[0]), fabs(x1[2] - x1[0])),
            )
            if fabs(f[2] - f[0]) <= _NM_FTOL * (1.0 + fabs(f[0])) and spread <= _NM_XTOL:
                break
            c0 = 0.5 * (x0[0] + x0[1])
            c1 = 0.5 * (x1[0] + x1[1])
            xr0 = c0 + (c0 - x0[2])
            xr1 = c1 + (c1 - x1[2])
            fr = c_vmax_negll(xr0, xr1, vcy, vsy, vw, wsum)
            if fr < f[0]:
                xe0 = c0 + 2.0 * (c0 - x0[2])
                xe1 = c1 + 2.0 * (c1 - x1[2])
                fe = c_vmax_negll(xe0, xe1, vcy, vsy, vw, wsum)
                if fe < fr:
                    x0[2] = xe0; x1[2] = xe1; f[2] = fe
                else:
                    x0[2] = xr0; x1[2] = xr1; f[2] = fr
            elif fr < f[1]:
                x0[2] = xr0; x1[2] = xr1; f[2] = fr
            else:
                if fr < f[2]:
                    xc0 = c0 + 0.5 * (c0 - x0[2])
                    xc1 = c1 + 0.5 * (c1 - x1[2])
                    fc = c_vmax_negll(xc0, xc1, vcy, vsy, vw, wsum)
                    accept = fc <= fr
                else:
                    xc0 = c0 - 0.5 * (c0 - x0[2])
                    xc1 = c1 - 0.5 * (c1 - x1[2])
                    fc = c_vmax_negll(xc0, xc1, vcy, vsy, vw, wsum)
                    accept = fc < f[2]
                if accept:
                    x0[2] = xc0; x1[2] = xc1; f[2] = fc
                else:
                    for i in range(1, 3):
                        x0[i] = x0[0] + 0.5 * (x0[i] - x0[0])
                        x1[i] = x1[0] + 0.5 * (x1[i] - x1[0])
                        f[i] = c_vmax_negll(x0[i], x1[i], vcy, vsy, vw, wsum)
        c_sort3(f, x0, x1)
        if f[0] < best_f:
            best_f = f[0]
            best_mu = x0[0]
            best_lk = x1[0]
    cdef double mu = best_mu - C_PI * (<long>(best_mu / C_PI))
    if mu < 0.0:
        mu += C_PI
    if mu >= C_PI:
        mu = 0.0
    cdef double lk = best_lk
    if lk < -_LOGK_BOUND:
        lk = -_LOGK_BOUND
    elif lk > _LOGK_BOUND:
        lk = _LOGK_BOUND
    return mu, exp(lk)


# ---------------------------------------------------------------------------
# Weighted MLE: circular wrapped Cauchy, fixed point on zeta = kappa e^{i mu}
# (see the fallback module for the score derivation).


cdef double _WC_KAPPA_MAX = 1.0 - 1e-6
cdef double _WC_FP_TOL = 1e-12
cdef long _WC_FP_MAXITER = 200


def wc_mle(cx, sx, w):
    """Weighted circular wrapped Cauchy MLE from cos(x), sin(x), weights.

    Returns (mu, kappa, converged). The caller handles the direct-search
    fallback when converged is False.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1] acx = np.ascontiguousarray(cx, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] asx = np.ascontiguousarray(sx, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] aw = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = acx.shape[0]
    cdef double wsum = 0.0
    cdef double zr = 0.0
    cdef double zi = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        wsum += aw[i]
        zr += aw[i] * acx[i]
        zi += aw[i] * asx[i]
    zr /= wsum
    zi /= wsum
    cdef double az = sqrt(zr * zr + zi * zi)
    if az > _WC_KAPPA_MAX:
        zr *= _WC_KAPPA_MAX / az
        zi *= _WC_KAPPA_MAX / az
    cdef bint converged = False
    cdef long it
    cdef double dr, di, s, ssum, nr, ni, denom, na, diff_r, diff_i
    for it in range(_WC_FP_MAXITER):
        ssum = 0.0
        nr = 0.0
        ni = 0.0
        for i in range(n):
            dr = acx[i] - zr
            di = asx[i] - zi
            s = aw[i] / (dr * dr + di * di)
            ssum += s
            nr += s * acx[i]
            ni += s * asx[i]
        denom = wsum / (1.0 - (zr * zr + zi * zi)) + ssum
        nr /= denom
        ni /= denom
        na = sqrt(nr * nr + ni * ni)
        if na > _WC_KAPPA_MAX:
            nr *= _WC_KAPPA_MAX / na
            ni *= _WC_KAPPA_MAX / na
        diff_r = nr - zr
        diff_i = ni - zi
        zr = nr
        zi = ni
        if sqrt(diff_r * diff_r + diff_i * diff_i) < _WC_FP_TOL:
            converged = True
            break
    cdef double kappa = sqrt(zr * zr + zi * zi)
    cdef double mu = atan2(zi, zr)
    if mu < 0.0:
        mu += C_TWO_PI
    if mu >= C_TWO_PI:
        mu = 0.0
    if kappa < 1e-15:
        mu = 0.0
    if kappa > _WC_KAPPA_MAX:
        kappa = _WC_KAPPA_MAX
    return mu, kappa, converged


# ---------------------------------------------------------------------------
# Copula correlation: weighted profile likelihood in rho. Golden-section
# over each sign half (the |rho| term kinks the objective at 0), then
# successive parabolic refinement, tolerance 1e-8.


cdef double _RHO_BOUND = 1.0 - 1e-6
cdef double _RHO_TOL = 1e-8
cdef double _GOLDEN = 0.6180339887498949


cdef double c_rho_negll(double rho, double[::1] p, double[::1] q,
                        double[::1] w, double wsum) noexcept nogil:
    cdef double ar = fabs(rho)
    cdef double r2 = rho * rho
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(p.shape[0]):
        acc += w[i] * log((1.0 + r2) - 2.0 * ar * p[i] - 2.0 * rho * q[i])
    return -(wsum * log1p(-r2) - acc)


cdef void c_golden(double a, double b, double[::1] p, double[::1] q,
                   double[::1] w, double wsum, double *xout, double *fout) noexcept nogil:
    cdef double x1 = b - _GOLDEN * (b - a)
    cdef double x2 = a + _GOLDEN * (b - a)
    cdef double f1 = c_rho_negll(x1, p, q, w, wsum)
    cdef double f2 = c_rho_negll(x2, p, q, w, wsum)
    while b - a > _RHO_TOL:
        if f1 <= f2:
            b = x2
            x2 = x1
            f2 = f1
            x1 = b - _GOLDEN * (b - a)
            f1 = c_rho_negll(x1, p, q, w, wsum)
        else:
            a = x1
            x1 = x2
            f1 = f2
            x2 = a + _GOLDEN * (b - a)
            f2 = c_rho_negll(x2, p, q, w, wsum)
    if f1 <= f2:
        xout[0] = x1
        fout[0] = f1
    else:
        xout[0] = x2
        fout[0] = f2


cdef void c_parabolic(double x, double fx, double lo, double hi,
                      double[::1] p, double[::1] q, double[::1] w, double wsum,
                      double *xout, double *fout) noexcept nogil:
    cdef double h = 1e-5
    cdef double a, b, fa, fb, denom, num, step, xn, fxn, moved
    cdef int it
    for it in range(12):
        a = max(lo, x - h)
        b = min(hi, x + h)
        if b - a < 1e-14:
            break
        fa = c_rho_negll(a, p, q, w, wsum)
        fb = c_rho_negll(b, p, q, w, wsum)
        denom = (a - x) * (fb - fx) - (b - x) * (fa - fx)
        if denom == 0.0:
            break
        num = (a - x) * (a - x) * (fb - fx) - (b - x) * (b - x) * (fa - fx)
        step = 0.5 * num / denom
        xn = x + step
        if xn < lo:
            xn = lo
        elif xn > hi:
            xn = hi
        fxn = c_rho_negll(xn, p, q, w, wsum)
        if fa < fxn:
            xn = a
            fxn = fa
        if fb < fxn:
            xn = b
            fxn = fb
        if fxn <= fx:
            moved = fabs(xn - x)
            x = xn
            fx = fxn
            if moved < _RHO_TOL * 0.01:
                break
        h *= 0.25
    xout[0] = x
    fout[0] = fx


def rho_mle(u, v, w):
    """Maximize the weighted circula log-likelihood over rho."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] au = np.ascontiguousarray(u, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] av = np.ascontiguousarray(v, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] aw = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = au.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] q = np.empty(n, dtype=np.float64)
    cdef double wsum = 0.0
    cdef double du, dv
    cdef Py_ssize_t i
    for i in range(n):
        du = C_TWO_PI * au[i]
        dv = C_TWO_PI * av[i]
        p[i] = cos(du) * cos(dv)
        q[i] = sin(du) * sin(dv)
        wsum += aw[i]
    cdef double[::1] vp = p
    cdef double[::1] vq = q
    cdef double[::1] vw = aw
    cdef double xn, fn_neg, xp, fp, x, fx, lo, hi
    c_golden(-_RHO_BOUND, 0.0, vp, vq, vw, wsum, &xn, &fn_neg)
    c_golden(0.0, _RHO_BOUND, vp, vq, vw, wsum, &xp, &fp)
    if fn_neg <= fp:
        x = xn; fx = fn_neg; lo = -_RHO_BOUND; hi = 0.0
    else:
        x = xp; fx = fp; lo = 0.0; hi = _RHO_BOUND
    c_parabolic(x, fx, lo, hi, vp, vq, vw, wsum, &x, &fx)
    return x


def circula_wll(rho, u, v, w):
    """Weighted circula log-likelihood at a fixed rho (diagnostics, tests)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] au = np.ascontiguousarray(u, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] av = np.ascontiguousarray(v, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] aw = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = au.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] q = np.empty(n, dtype=np.float64)
    cdef double wsum = 0.0
    cdef double du, dv
    cdef Py_ssize_t i
    for i in range(n):
        du = C_TWO_PI * au[i]
        dv = C_TWO_PI * av[i]
        p[i] = cos(du) * cos(dv)
        q[i] = sin(du) * sin(dv)
        wsum += aw[i]
    return -c_rho_negll(float(rho), p, q, aw, wsum)
