# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend.

Same contract as ``_numpy_backend.propagate_segment``: the ordered product
of per-step propagators exp(-i*dt*(A + eps_i*diag(w) + b_i*diag(v))) for
one pulse segment, per noise trajectory.  The per-step exponential is
trace-shifted scaling-and-squaring with diagonal Pade approximants; all
matrices are small (active-subspace dimension, typically 3 or 9), so the
numerical core lives in plain C with restrict pointers.

The batch loop runs with the GIL released; callers may split a batch
across Python threads for multi-core machines.
"""

import numpy as np

cimport numpy as cnp
from libc.stdlib cimport free, malloc

cdef extern from *:
    """
#include <math.h>
#include <string.h>

/* Complex matrices are row-major interleaved (re, im) double pairs. */

#define DFSIM_ZMM_BODY(N)                                                \
    for (int i = 0; i < (N); ++i) {                                      \
        double cre[(N)], cim[(N)];                                       \
        for (int j = 0; j < (N); ++j) { cre[j] = 0.0; cim[j] = 0.0; }    \
        for (int k = 0; k < (N); ++k) {                                  \
            const double ar = ad[2 * (i * (N) + k)];                     \
            const double ai = ad[2 * (i * (N) + k) + 1];                 \
            const double* restrict brow = bd + 2 * k * (N);              \
            for (int j = 0; j < (N); ++j) {                              \
                cre[j] += ar * brow[2 * j] - ai * brow[2 * j + 1];       \
                cim[j] += ar * brow[2 * j + 1] + ai * brow[2 * j];       \
            }                                                            \
        }                                                                \
        for (int j = 0; j < (N); ++j) {                                  \
            cd[2 * (i * (N) + j)] = cre[j];                              \
            cd[2 * (i * (N) + j) + 1] = cim[j];                          \
        }                                                                \
    }

static void dfsim_zmm2(const double* restrict ad, const double* restrict bd,
                       double* restrict cd) { DFSIM_ZMM_BODY(2) }
static void dfsim_zmm3(const double* restrict ad, const double* restrict bd,
                       double* restrict cd) { DFSIM_ZMM_BODY(3) }
static void dfsim_zmm4(const double* restrict ad, const double* restrict bd,
                       double* restrict cd) { DFSIM_ZMM_BODY(4) }
static void dfsim_zmm6(const double* restrict ad, const double* restrict bd,
                       double* restrict cd) { DFSIM_ZMM_BODY(6) }
static void dfsim_zmm9(const double* restrict ad, const double* restrict bd,
                       double* restrict cd) { DFSIM_ZMM_BODY(9) }

static void dfsim_zmm(int n, const double* restrict ad,
                      const double* restrict bd, double* restrict cd)
{
    switch (n) {
        case 2: dfsim_zmm2(ad, bd, cd); return;
        case 3: dfsim_zmm3(ad, bd, cd); return;
        case 4: dfsim_zmm4(ad, bd, cd); return;
        case 6: dfsim_zmm6(ad, bd, cd); return;
        case 9: dfsim_zmm9(ad, bd, cd); return;
    }
    for (int i = 0; i < n; ++i) {
        double* restrict crow = cd + 2 * i * n;
        for (int j = 0; j < 2 * n; ++j) crow[j] = 0.0;
        for (int k = 0; k < n; ++k) {
            const double ar = ad[2 * (i * n + k)];
            const double ai = ad[2 * (i * n + k) + 1];
            const double* restrict brow = bd + 2 * k * n;
            for (int j = 0; j < n; ++j) {
                crow[2 * j] += ar * brow[2 * j] - ai * brow[2 * j + 1];
                crow[2 * j + 1] += ar * brow[2 * j + 1] + ai * brow[2 * j];
            }
        }
    }
}

/* out = b6*a6 + b4*a4 + b2*a2 (+ b0 on the diagonal), n x n complex */
static void dfsim_poly(int n, double* restrict out, double b6,
                       const double* restrict a6, double b4,
                       const double* restrict a4, double b2,
                       const double* restrict a2, double b0)
{
    const int n2 = 2 * n * n;
    for (int i = 0; i < n2; ++i) out[i] = b6 * a6[i] + b4 * a4[i] + b2 * a2[i];
    for (int i = 0; i < n; ++i) out[2 * (i * n + i)] += b0;
}

/* q -> LU in place with partial pivoting; x (n x n rhs) -> q^{-1} x */
static int dfsim_lu_solve(int n, double* restrict q, double* restrict x)
{
    for (int k = 0; k < n; ++k) {
        int p = k;
        double best = fabs(q[2 * (k * n + k)]) + fabs(q[2 * (k * n + k) + 1]);
        for (int i = k + 1; i < n; ++i) {
            const double mag = fabs(q[2 * (i * n + k)]) + fabs(q[2 * (i * n + k) + 1]);
            if (mag > best) { best = mag; p = i; }
        }
        if (best == 0.0) return -1;
        if (p != k) {
            for (int j = 0; j < 2 * n; ++j) {
                double sw = q[2 * k * n + j]; q[2 * k * n + j] = q[2 * p * n + j];
                q[2 * p * n + j] = sw;
                sw = x[2 * k * n + j]; x[2 * k * n + j] = x[2 * p * n + j];
                x[2 * p * n + j] = sw;
            }
        }
        const double dre = q[2 * (k * n + k)], dim = q[2 * (k * n + k) + 1];
        const double den = dre * dre + dim * dim;
        for (int i = k + 1; i < n; ++i) {
            const double nre = q[2 * (i * n + k)], nim = q[2 * (i * n + k) + 1];
            const double fre = (nre * dre + nim * dim) / den;
            const double fim = (nim * dre - nre * dim) / den;
            q[2 * (i * n + k)] = fre; q[2 * (i * n + k) + 1] = fim;
            const double* restrict qk = q + 2 * k * n;
            double* restrict qi = q + 2 * i * n;
            for (int j = k + 1; j < n; ++j) {
                qi[2 * j] -= fre * qk[2 * j] - fim * qk[2 * j + 1];
                qi[2 * j + 1] -= fre * qk[2 * j + 1] + fim * qk[2 * j];
            }
            const double* restrict xk = x + 2 * k * n;
            double* restrict xi = x + 2 * i * n;
            for (int j = 0; j < n; ++j) {
                xi[2 * j] -= fre * xk[2 * j] - fim * xk[2 * j + 1];
                xi[2 * j + 1] -= fre * xk[2 * j + 1] + fim * xk[2 * j];
            }
        }
    }
    for (int k = n - 1; k >= 0; --k) {
        double* restrict xk = x + 2 * k * n;
        for (int i = k + 1; i < n; ++i) {
            const double fre = q[2 * (k * n + i)], fim = q[2 * (k * n + i) + 1];
            const double* restrict xi = x + 2 * i * n;
            for (int j = 0; j < n; ++j) {
                xk[2 * j] -= fre * xi[2 * j] - fim * xi[2 * j + 1];
                xk[2 * j + 1] -= fre * xi[2 * j + 1] + fim * xi[2 * j];
            }
        }
        const double dre = q[2 * (k * n + k)], dim = q[2 * (k * n + k) + 1];
        const double den = dre * dre + dim * dim;
        for (int j = 0; j < n; ++j) {
            const double vre = xk[2 * j], vim = xk[2 * j + 1];
            xk[2 * j] = (vre * dre + vim * dim) / den;
            xk[2 * j + 1] = (vim * dre - vre * dim) / den;
        }
    }
    return 0;
}

static const double DFSIM_B3[] = {120.0, 60.0, 12.0, 1.0};
static const double DFSIM_B5[] = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
static const double DFSIM_B7[] = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                  25200.0, 1512.0, 56.0, 1.0};
static const double DFSIM_B9[] = {17643225600.0, 8821612800.0, 2075673600.0,
                                  302702400.0, 30270240.0, 2162160.0,
                                  110880.0, 3960.0, 90.0, 1.0};
static const double DFSIM_B13[] = {64764752532480000.0, 32382376266240000.0,
                                   7771770303897600.0, 1187353796428800.0,
                                   129060195264000.0, 10559470521600.0,
                                   670442572800.0, 33522128640.0,
                                   1323241920.0, 40840800.0, 960960.0,
                                   16380.0, 182.0, 1.0};

/* Per-step state: M_k = M0 + diag(d_k) with M0 = -i*dt*A shifted by its
   diagonal midrange mu0 and d_k = -i*dt*(eps_k*w + b_k*md) tiny.  M0, its
   square and its column sums are cached per distinct dt, so each step
   rebuilds M and A2 in O(n^2) and runs the Pade chain from A2 upward. */

/* out = exp(M0 + diag(dim_k)); all diag variation is imaginary (dim_k) */
static int dfsim_expm_cached(int n, const double* restrict m0,
                             const double* restrict m0sq,
                             const double* restrict colsum0,
                             double mu_re, double mu_im,
                             const double* restrict dim_k,
                             double* restrict out, double* restrict scratch)
{
    const int n2 = 2 * n * n;
    double* restrict m = scratch;
    double* restrict a2 = scratch + n2;
    double* restrict a4 = scratch + 2 * n2;
    double* restrict a6 = scratch + 3 * n2;
    double* restrict w = scratch + 4 * n2;
    double* restrict u = scratch + 5 * n2;
    double* restrict v = scratch + 6 * n2;
    double* restrict t = scratch + 7 * n2;

    /* m = m0 + i*diag(dim_k);  a2 = m0sq + m0*D + D*m0 + D^2, D = i*diag */
    memcpy(m, m0, n2 * sizeof(double));
    for (int i = 0; i < n; ++i) m[2 * (i * n + i) + 1] += dim_k[i];
    for (int i = 0; i < n; ++i) {
        const double di = dim_k[i];
        const double* restrict m0row = m0 + 2 * i * n;
        double* restrict a2row = a2 + 2 * i * n;
        const double* restrict m0sqrow = m0sq + 2 * i * n;
        for (int j = 0; j < n; ++j) {
            const double dj = dim_k[j];
            /* i*(di+dj) * m0[i,j]: (re,im) -> (-(di+dj)*im, (di+dj)*re) */
            a2row[2 * j] = m0sqrow[2 * j] - (di + dj) * m0row[2 * j + 1];
            a2row[2 * j + 1] = m0sqrow[2 * j + 1] + (di + dj) * m0row[2 * j];
        }
        a2row[2 * i] -= di * di;   /* (i*di)^2 is real */
    }

    double norm = 0.0;
    for (int j = 0; j < n; ++j) {
        const double mjj_im = m0[2 * (j * n + j) + 1];
        const double colsum = colsum0[j] - (fabs(m0[2 * (j * n + j)]) + fabs(mjj_im))
            + fabs(m0[2 * (j * n + j)]) + fabs(mjj_im + dim_k[j]);
        if (colsum > norm) norm = colsum;
    }

    int order = 13, s = 0;
    if (norm <= 1.495585217958292e-2) order = 3;
    else if (norm <= 2.539398330063230e-1) order = 5;
    else if (norm <= 9.504178996162932e-1) order = 7;
    else if (norm <= 2.097847961257068) order = 9;
    else if (norm > 5.371920351148152) {
        s = (int)ceil(log2(norm / 5.371920351148152));
        double f = 1.0;
        for (int i = 0; i < s; ++i) f *= 0.5;
        for (int i = 0; i < n2; ++i) m[i] *= f;
        const double f2 = f * f;
        for (int i = 0; i < n2; ++i) a2[i] *= f2;
    }

    const double* b = order == 3 ? DFSIM_B3 : order == 5 ? DFSIM_B5 :
                      order == 7 ? DFSIM_B7 : order == 9 ? DFSIM_B9 : DFSIM_B13;

    if (order >= 5) dfsim_zmm(n, a2, a2, a4);
    if (order >= 7) dfsim_zmm(n, a2, a4, a6);

    if (order == 13) {
        dfsim_poly(n, w, b[13], a6, b[11], a4, b[9], a2, 0.0);
        dfsim_zmm(n, a6, w, u);
        for (int i = 0; i < n2; ++i)
            u[i] += b[7] * a6[i] + b[5] * a4[i] + b[3] * a2[i];
        for (int i = 0; i < n; ++i) u[2 * (i * n + i)] += b[1];
        dfsim_zmm(n, m, u, w);                      /* w = U */
        dfsim_poly(n, u, b[12], a6, b[10], a4, b[8], a2, 0.0);
        dfsim_zmm(n, a6, u, v);
        for (int i = 0; i < n2; ++i)
            v[i] += b[6] * a6[i] + b[4] * a4[i] + b[2] * a2[i];
        for (int i = 0; i < n; ++i) v[2 * (i * n + i)] += b[0];
    } else {
        for (int i = 0; i < n2; ++i) { u[i] = b[3] * a2[i]; v[i] = b[2] * a2[i]; }
        if (order >= 5)
            for (int i = 0; i < n2; ++i) { u[i] += b[5] * a4[i]; v[i] += b[4] * a4[i]; }
        if (order >= 7)
            for (int i = 0; i < n2; ++i) { u[i] += b[7] * a6[i]; v[i] += b[6] * a6[i]; }
        if (order == 9) {
            dfsim_zmm(n, a4, a4, w);                /* w = a8 */
            for (int i = 0; i < n2; ++i) { u[i] += b[9] * w[i]; v[i] += b[8] * w[i]; }
        }
        for (int i = 0; i < n; ++i) u[2 * (i * n + i)] += b[1];
        dfsim_zmm(n, m, u, w);                      /* w = U */
        for (int i = 0; i < n; ++i) v[2 * (i * n + i)] += b[0];
    }

    for (int i = 0; i < n2; ++i) { u[i] = v[i] - w[i]; out[i] = v[i] + w[i]; }
    if (dfsim_lu_solve(n, u, out) != 0) return -1;

    for (int i = 0; i < s; ++i) {
        dfsim_zmm(n, out, out, t);
        memcpy(out, t, n2 * sizeof(double));
    }

    const double ere = exp(mu_re);
    const double pre = ere * cos(mu_im), pim = ere * sin(mu_im);
    for (int i = 0; i < n2; i += 2) {
        const double re = out[i], im = out[i + 1];
        out[i] = re * pre - im * pim;
        out[i + 1] = re * pim + im * pre;
    }
    return 0;
}

/* one trajectory: U <- prod_k exp(-i*dts[k]*(A + eps[k]*W + mv[k]*MD)) @ U */
static int dfsim_trajectory(int n, const double* restrict abase,
                            const double* restrict wdiag,
                            const double* restrict eps,
                            const double* restrict dts, int nsteps,
                            const double* restrict mdiag,
                            const double* restrict mvals,
                            double* restrict uacc, double* restrict work)
{
    const int n2 = 2 * n * n;
    double* restrict m0 = work;
    double* restrict m0sq = work + n2;
    double* restrict step = work + 2 * n2;
    double* restrict tmp = work + 3 * n2;
    double* restrict scratch = work + 4 * n2;           /* 8 buffers */
    double* restrict colsum0 = work + 12 * n2;          /* n doubles */
    double* restrict dbuf = colsum0 + n;                /* n doubles */
    double cached_dt = -1.0, mu_re = 0.0, mu_im = 0.0;

    for (int k = 0; k < nsteps; ++k) {
        const double dt = dts[k];
        if (dt != cached_dt) {
            /* m0 = -i*dt*A - mu0: (re,im) -> dt*(im, -re), midrange-shifted */
            for (int i = 0; i < n2; i += 2) {
                m0[i] = dt * abase[i + 1];
                m0[i + 1] = -dt * abase[i];
            }
            double re_lo = m0[0], re_hi = m0[0], im_lo = m0[1], im_hi = m0[1];
            for (int i = 1; i < n; ++i) {
                const double re = m0[2 * (i * n + i)], im = m0[2 * (i * n + i) + 1];
                if (re < re_lo) re_lo = re;
                if (re > re_hi) re_hi = re;
                if (im < im_lo) im_lo = im;
                if (im > im_hi) im_hi = im;
            }
            mu_re = 0.5 * (re_lo + re_hi);
            mu_im = 0.5 * (im_lo + im_hi);
            for (int i = 0; i < n; ++i) {
                m0[2 * (i * n + i)] -= mu_re;
                m0[2 * (i * n + i) + 1] -= mu_im;
            }
            dfsim_zmm(n, m0, m0, m0sq);
            for (int j = 0; j < n; ++j) {
                double c = 0.0;
                for (int i = 0; i < n; ++i)
                    c += fabs(m0[2 * (i * n + j)]) + fabs(m0[2 * (i * n + j) + 1]);
                colsum0[j] = c;
            }
            cached_dt = dt;
        }
        const double e = eps[k];
        if (mvals) {
            const double bv = mvals[k];
            for (int i = 0; i < n; ++i)
                dbuf[i] = -dt * (e * wdiag[i] + bv * mdiag[i]);
        } else {
            for (int i = 0; i < n; ++i)
                dbuf[i] = -dt * e * wdiag[i];
        }
        if (dfsim_expm_cached(n, m0, m0sq, colsum0, mu_re, mu_im, dbuf,
                              step, scratch) != 0)
            return -1;
        dfsim_zmm(n, step, uacc, tmp);
        memcpy(uacc, tmp, n2 * sizeof(double));
    }
    return 0;
}
    """
    int dfsim_trajectory(int n, const double* abase, const double* wdiag,
                         const double* eps, const double* dts, int nsteps,
                         const double* mdiag, const double* mvals,
                         double* uacc, double* work) nogil

cnp.import_array()

NAME = "cython"


def propagate_segment(a, noise_w, eps, dts, mod_diag=None, mod_vals=None, u0=None):
    """See ``dfsim.kernels._numpy_backend.propagate_segment``."""
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] a_arr = \
        np.ascontiguousarray(a, dtype=np.complex128)
    cdef int n = a_arr.shape[0]
    if a_arr.shape[1] != n:
        raise ValueError("segment matrix must be square")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_arr = \
        np.ascontiguousarray(noise_w, dtype=np.float64)
    if w_arr.shape[0] != n:
        raise ValueError("noise weights must match the matrix dimension")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] eps_arr = \
        np.ascontiguousarray(np.atleast_2d(eps), dtype=np.float64)
    cdef int batch = eps_arr.shape[0]
    cdef int nsteps = eps_arr.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dts_arr = \
        np.ascontiguousarray(dts, dtype=np.float64)
    if dts_arr.shape[0] != nsteps:
        raise ValueError("dts must have one entry per step")

    cdef bint has_mod = mod_vals is not None
    cdef cnp.ndarray[cnp.float64_t, ndim=1] md_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mv_arr
    if has_mod:
        md_arr = np.ascontiguousarray(mod_diag, dtype=np.float64)
        mv_arr = np.ascontiguousarray(mod_vals, dtype=np.float64)
        if md_arr.shape[0] != n or mv_arr.shape[0] != nsteps:
            raise ValueError("modulation arrays have wrong shape")
    else:
        md_arr = np.zeros(n)
        mv_arr = np.zeros(0)

    cdef cnp.ndarray[cnp.complex128_t, ndim=3] u_arr
    if u0 is None:
        u_arr = np.broadcast_to(np.eye(n, dtype=np.complex128),
                                (batch, n, n)).copy()
    else:
        u_arr = np.ascontiguousarray(u0, dtype=np.complex128)
        if u_arr.shape[0] != batch or u_arr.shape[1] != n or u_arr.shape[2] != n:
            raise ValueError("u0 has wrong shape")
    if nsteps == 0:
        return u_arr

    cdef double* abase = <double*>cnp.PyArray_DATA(a_arr)
    cdef double* wptr = <double*>cnp.PyArray_DATA(w_arr)
    cdef double* eptr = <double*>cnp.PyArray_DATA(eps_arr)
    cdef double* dptr = <double*>cnp.PyArray_DATA(dts_arr)
    cdef double* mdptr = <double*>cnp.PyArray_DATA(md_arr)
    cdef double* mvptr = <double*>cnp.PyArray_DATA(mv_arr)
    cdef double* uptr = <double*>cnp.PyArray_DATA(u_arr)

    cdef int n2 = 2 * n * n
    cdef double* work = <double*>malloc((12 * n2 + 2 * n) * sizeof(double))
    if work == NULL:
        raise MemoryError()

    cdef int b, rc = 0
    with nogil:
        for b in range(batch):
            rc = dfsim_trajectory(n, abase, wptr, eptr + b * nsteps, dptr,
                                  nsteps, mdptr, mvptr if has_mod else NULL,
                                  uptr + b * n2, work)
            if rc != 0:
                break
    free(work)
    if rc != 0:
        raise ArithmeticError("singular Pade denominator in expm")
    return u_arr
