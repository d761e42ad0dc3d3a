# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loop of the block gradient ascent.

Same interface as ``_kernels_py``. All matrices are C-contiguous complex128.
The Hermitian eigensolver is LAPACK ``zheev`` reached through scipy's Cython
bindings, so nothing is linked at build time.
"""

import numpy as np

from libc.math cimport NAN, exp, expm1, fabs, log, sqrt
from scipy.linalg.cython_lapack cimport zheev

ctypedef double complex zc

cdef double OVERFLOW = 700.0
cdef double BISECT_WIDTH = 1e-14
cdef int BISECT_STEPS = 400
cdef int NEWTON_STEPS = 3
cdef int WARM_STEPS = 8
cdef double NU2_REJECT = 1e-10


cdef class _Work:
    cdef int d
    cdef int lwork
    cdef zc[::1] A
    cdef zc[::1] work
    cdef double[::1] w
    cdef double[::1] ew
    cdef double[::1] rwork
    cdef zc[:, ::1] G

    def __init__(self, int d):
        self.d = d
        self.lwork = 64 * d
        self.A = np.empty(d * d, dtype=np.complex128)
        self.work = np.empty(self.lwork, dtype=np.complex128)
        self.w = np.empty(d, dtype=np.float64)
        self.ew = np.empty(d, dtype=np.float64)
        self.rwork = np.empty(max(1, 3 * d - 2), dtype=np.float64)
        self.G = np.empty((d, d), dtype=np.complex128)


cdef double _fro(const zc[:, ::1] E):
    cdef Py_ssize_t i, j
    cdef double s = 0.0
    for i in range(E.shape[0]):
        for j in range(E.shape[1]):
            s += E[i, j].real * E[i, j].real + E[i, j].imag * E[i, j].imag
    return sqrt(s)


cdef double _evaluate(const zc[:, ::1] C, const zc[:, ::1] rho, const zc[:, ::1] sigma,
                      double eps, int d1, int d2,
                      const zc[:, ::1] U, const zc[:, ::1] V,
                      zc[:, ::1] E1, zc[:, ::1] E2,
                      _Work ws, double* lam) except? -1.0:
    cdef int d = d1 * d2
    cdef int i1, i2, j1, j2, r, c, i, j, k, info = 0
    cdef int n = d, lda = d, lwork = ws.lwork
    cdef char jobz = b'V'
    cdef char uplo = b'L'
    cdef zc val, s
    cdef double inv_eps = 1.0 / eps
    cdef double dual, tr_exp
    cdef zc[::1] A = ws.A
    cdef zc[:, ::1] G = ws.G
    cdef double[::1] w = ws.w
    cdef double[::1] ew = ws.ew

    # row-major (U ⊕ V - C)/eps read as column-major is its transpose,
    # whose eigenvectors are the complex conjugates of the wanted ones
    for i1 in range(d1):
        for i2 in range(d2):
            r = i1 * d2 + i2
            for j1 in range(d1):
                for j2 in range(d2):
                    c = j1 * d2 + j2
                    val = -C[r, c]
                    if i2 == j2:
                        val = val + U[i1, j1]
                    if i1 == j1:
                        val = val + V[i2, j2]
                    A[r * d + c] = val * inv_eps

    zheev(&jobz, &uplo, &n, &A[0], &lda, &w[0], &ws.work[0], &lwork, &ws.rwork[0], &info)
    if info != 0:
        raise ArithmeticError(f"zheev failed with info={info}")
    if w[d - 1] > OVERFLOW:
        raise OverflowError(f"largest exponent eigenvalue {w[d - 1]:.6g} exceeds {OVERFLOW:g}")

    tr_exp = 0.0
    for k in range(d):
        ew[k] = exp(w[k])
        tr_exp += ew[k]

    # G[i, j] = sum_k e^{w_k} conj(Y[i, k]) Y[j, k] with Y[i, k] = A[k*d + i]
    for i in range(d):
        s = 0.0
        for k in range(d):
            val = A[k * d + i]
            s = s + ew[k] * (val.real * val.real + val.imag * val.imag)
        G[i, i] = s.real
        for j in range(i + 1, d):
            s = 0.0
            for k in range(d):
                s = s + ew[k] * A[k * d + i].conjugate() * A[k * d + j]
            G[i, j] = s
            G[j, i] = s.conjugate()

    dual = eps - eps * tr_exp
    for i in range(d1):
        for j in range(d1):
            dual += (U[i, j] * rho[j, i]).real
    for i in range(d2):
        for j in range(d2):
            dual += (V[i, j] * sigma[j, i]).real

    for i in range(d1):
        for j in range(d1):
            s = 0.0
            for k in range(d2):
                s = s + G[i * d2 + k, j * d2 + k]
            E1[i, j] = rho[i, j] - s
    for i in range(d2):
        for j in range(d2):
            s = 0.0
            for k in range(d1):
                s = s + G[k * d2 + i, k * d2 + j]
            E2[i, j] = sigma[i, j] - s

    lam[0] = eps * w[0]
    lam[1] = eps * w[d - 1]
    return dual


def evaluate_point(const zc[:, ::1] C, const zc[:, ::1] rho, const zc[:, ::1] sigma,
                   double eps, int d1, int d2,
                   const zc[:, ::1] U, const zc[:, ::1] V,
                   zc[:, ::1] E1, zc[:, ::1] E2):
    """Fill ``E1``, ``E2`` at ``(U, V)``; return ``(dual, lam_min, lam_max)``."""
    cdef double lam[2]
    cdef _Work ws = _Work(d1 * d2)
    cdef double dual = _evaluate(C, rho, sigma, eps, d1, d2, U, V, E1, E2, ws, lam)
    return dual, lam[0], lam[1]


def run_iterations(const zc[:, ::1] C, const zc[:, ::1] rho, const zc[:, ::1] sigma,
                   double eps, int d1, int d2,
                   zc[:, ::1] U, zc[:, ::1] V, zc[:, ::1] E1, zc[:, ::1] E2,
                   double eta1, double eta2, double delta, int n_max,
                   double[::1] stale, double[:, ::1] rec):
    """Run up to ``n_max`` full iterations in place.

    On entry ``E1``/``E2`` hold the marginal errors at ``(U, V)`` and
    ``stale`` the norms of the errors last used for a U and a V update. The
    loop stops early once all four norms are below ``delta``. Row ``2m`` of
    ``rec`` describes the point after the m-th U update, row ``2m + 1`` the
    point after the m-th V update, as ``dual, |E1|, |E2|, lam_min, lam_max``.
    Returns the number of completed iterations.
    """
    cdef _Work ws = _Work(d1 * d2)
    cdef double lam[2]
    cdef double dual, f1, f2
    cdef int n = 0, i, j
    while n < n_max:
        f1 = _fro(E1)
        f2 = _fro(E2)
        if stale[0] < delta and stale[1] < delta and f1 < delta and f2 < delta:
            break
        stale[0] = f1
        for i in range(d1):
            for j in range(d1):
                U[i, j] = U[i, j] + eta1 * E1[i, j]
        dual = _evaluate(C, rho, sigma, eps, d1, d2, U, V, E1, E2, ws, lam)
        f2 = _fro(E2)
        rec[2 * n, 0] = dual
        rec[2 * n, 1] = _fro(E1)
        rec[2 * n, 2] = f2
        rec[2 * n, 3] = lam[0]
        rec[2 * n, 4] = lam[1]

        stale[1] = f2
        for i in range(d2):
            for j in range(d2):
                V[i, j] = V[i, j] + eta2 * E2[i, j]
        dual = _evaluate(C, rho, sigma, eps, d1, d2, U, V, E1, E2, ws, lam)
        rec[2 * n + 1, 0] = dual
        rec[2 * n + 1, 1] = _fro(E1)
        rec[2 * n + 1, 2] = _fro(E2)
        rec[2 * n + 1, 3] = lam[0]
        rec[2 * n + 1, 4] = lam[1]
        n += 1
    return n


# ------------------------------------------------------- envelope inverses
# scalar twins of dual.nu2 / dual.nu1 with the same brackets and steps

cdef inline double _expm1mx(double x) nogil:
    cdef double term, series
    cdef int k
    if fabs(x) < 0.1:
        term = 0.5 * x * x
        series = term
        for k in range(3, 18):
            term = term * x / k
            series = series + term
        return series
    return expm1(x) - x


cdef double _nu2(double y, double guess) nogil:
    """Inverse of expm1(x) - x on x >= 0; ``guess`` < 0 means no warm start."""
    cdef double lo = 0.0, hi = y + 2.0, mid, x, slope
    cdef int k
    if y == 0.0:
        return 0.0
    if guess > 0.0 and _warm_bracket_nu2(y, guess, &lo, &hi):
        pass
    else:
        lo = 0.0
        hi = y + 2.0
        if hi < 10.0:
            hi = 10.0
        for k in range(BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            if not (hi - lo > BISECT_WIDTH and mid > lo and mid < hi):
                break
            if _expm1mx(mid) < y:
                lo = mid
            else:
                hi = mid
    x = 0.5 * (lo + hi)
    for k in range(NEWTON_STEPS):
        slope = expm1(x)
        if slope > 0.0:
            x = x - (_expm1mx(x) - y) / slope
            x = lo if x < lo else (hi if x > hi else x)
    return x


cdef bint _warm_bracket_nu2(double y, double x, double* lo, double* hi) nogil:
    # Newton from a nearby root, then confirm a bracket as narrow as bisection's
    cdef double slope, a, b
    cdef int k
    for k in range(WARM_STEPS):
        slope = expm1(x)
        if not slope > 0.0:
            return False
        x = x - (_expm1mx(x) - y) / slope
        if not x > 0.0:
            return False
    a = x - 0.5 * BISECT_WIDTH
    b = x + 0.5 * BISECT_WIDTH
    if a < 0.0:
        a = 0.0
    if not (_expm1mx(a) < y and _expm1mx(b) >= y):
        return False
    lo[0] = a
    hi[0] = b
    return True


cdef inline double _nu1_f(double x, double y, double eps, double lam, double d) nogil:
    return eps * lam * x - d * eps * exp(x) - y


cdef bint _warm_bracket_nu1(double y, double eps, double lam, double d, double x_top,
                            double x, double* lo, double* hi) nogil:
    cdef double slope, a, b
    cdef int k
    for k in range(WARM_STEPS):
        slope = eps * lam - d * eps * exp(x)
        if not slope > 0.0:
            return False
        x = x - _nu1_f(x, y, eps, lam, d) / slope
        if not x < x_top:
            return False
    a = x - 0.5 * BISECT_WIDTH
    b = x + 0.5 * BISECT_WIDTH
    if b > x_top:
        b = x_top
    if not (_nu1_f(a, y, eps, lam, d) < 0.0 and _nu1_f(b, y, eps, lam, d) >= 0.0):
        return False
    lo[0] = a
    hi[0] = b
    return True


cdef double _nu1(double y, double eps, double lam, double d, double x_top, double guess) nogil:
    """Inverse of eps*lam*x - d*eps*exp(x) on x <= x_top; NaN ``guess`` means cold start."""
    cdef double lo, hi, mid, x, slope
    cdef int k
    if guess == guess and _warm_bracket_nu1(y, eps, lam, d, x_top, guess, &lo, &hi):
        pass
    else:
        lo = x_top - (fabs(y) + 1.0) / (eps * lam)
        hi = x_top
        for k in range(BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            if not (hi - lo > BISECT_WIDTH and mid > lo and mid < hi):
                break
            if eps * lam * mid - d * eps * exp(mid) < y:
                lo = mid
            else:
                hi = mid
    x = 0.5 * (lo + hi)
    for k in range(NEWTON_STEPS):
        slope = eps * lam - d * eps * exp(x)
        if slope > 0.0:
            x = x - (eps * lam * x - d * eps * exp(x) - y) / slope
            x = lo if x < lo else (hi if x > hi else x)
    return x


def envelopes(const double[::1] duals, double eps, double lam, int d, double tr_cost,
              double[::1] lower, double[::1] upper):
    """Fill the eigenvalue envelope ``lower``/``upper`` for each dual value.

    Returns ``(0, -1)`` on success, ``(1, i)`` if row ``i`` exceeds
    ``tr_cost`` by more than the rejection threshold, ``(2, i)`` if the
    lower-bound argument of row ``i`` leaves the domain of its inverse.
    """
    cdef Py_ssize_t i
    cdef double arg, y, up
    cdef double root2 = -1.0, root1 = NAN
    cdef double x_top = log(lam / d)
    cdef double top = eps * lam * (log(lam) - log(<double>d) - 1.0)
    cdef double top_tol = 1e-12 * (fabs(top) if fabs(top) > 1.0 else 1.0)
    for i in range(duals.shape[0]):
        arg = (tr_cost - duals[i]) / eps
        if arg < -NU2_REJECT:
            return 1, i
        if arg < 0.0:
            arg = 0.0
        root2 = _nu2(arg, root2)
        up = eps * root2
        y = duals[i] - eps - tr_cost - up * (1.0 - lam)
        if y - top > top_tol:
            return 2, i
        if y > top:
            y = top
        upper[i] = up
        root1 = _nu1(y, eps, lam, <double>d, x_top, root1)
        lower[i] = eps * root1
    return 0, -1
