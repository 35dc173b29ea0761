# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Pfaffian, Magnus propagation, Fock matrix assembly.

The Python signatures match ``_kernels_py`` exactly.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

DEF MAX_ORDER = 16


from majoranet._kernels_py import IntegrationError


cdef inline void _mm(double* A, double* B, double* C, int n,
                     double alpha, double beta) noexcept nogil:
    # row-major C = alpha A B + beta C
    cdef char tr = b'N'
    dgemm(&tr, &tr, &n, &n, &n, &alpha, B, &n, A, &n, &beta, C, &n)


cdef inline void _mm_tn(double* A, double* B, double* C, int n,
                        double alpha, double beta) noexcept nogil:
    # row-major C = alpha A^T B + beta C
    cdef char tn = b'N'
    cdef char tt = b'T'
    dgemm(&tn, &tt, &n, &n, &n, &alpha, B, &n, A, &n, &beta, C, &n)


def pfaffian(A):
    """Pfaffian of a real antisymmetric matrix (Parlett-Reid, pivoted)."""
    cdef cnp.ndarray[double, ndim=2, mode="c"] M = np.array(A, dtype=np.float64, order="C", copy=True)
    cdef int n = M.shape[0]
    cdef int k, kp, i, j
    cdef double pf = 1.0, best, v, piv, tmp
    cdef double[:, ::1] a = M
    if n % 2:
        return 0.0
    cdef cnp.ndarray[double, ndim=1] tau_arr = np.empty(n)
    cdef double[::1] tau = tau_arr
    with nogil:
        for k in range(0, n - 1, 2):
            kp = k + 1
            best = fabs(a[k + 1, k])
            for i in range(k + 2, n):
                v = fabs(a[i, k])
                if v > best:
                    best = v
                    kp = i
            if kp != k + 1:
                for j in range(n):
                    tmp = a[k + 1, j]; a[k + 1, j] = a[kp, j]; a[kp, j] = tmp
                for i in range(n):
                    tmp = a[i, k + 1]; a[i, k + 1] = a[i, kp]; a[i, kp] = tmp
                pf = -pf
            if a[k + 1, k] == 0.0:
                pf = 0.0
                break
            piv = a[k, k + 1]
            pf *= piv
            if k + 2 < n:
                for j in range(k + 2, n):
                    tau[j] = a[k, j] / piv
                for i in range(k + 2, n):
                    for j in range(k + 2, n):
                        a[i, j] += tau[i] * a[j, k + 1] - a[i, k + 1] * tau[j]
    return pf


def propagate(h0, hc, hs, cw, sw, double dt, R, double tol=1e-8):
    """Advance the Heisenberg propagator over ``len(cw)`` Magnus steps.

    See ``_kernels_py.propagate`` for the contract.
    """
    cdef double[:, ::1] H0 = np.ascontiguousarray(h0, dtype=np.float64)
    cdef double[:, ::1] HC = np.ascontiguousarray(hc, dtype=np.float64)
    cdef double[:, ::1] HS = np.ascontiguousarray(hs, dtype=np.float64)
    cdef double[:, ::1] CW = np.ascontiguousarray(cw, dtype=np.float64)
    cdef double[:, ::1] SW = np.ascontiguousarray(sw, dtype=np.float64)
    if not (isinstance(R, np.ndarray) and R.flags.c_contiguous and R.dtype == np.float64):
        raise TypeError("R must be a C-contiguous float64 array")
    cdef double[:, ::1] Rv = R
    cdef int n = Rv.shape[0]
    cdef int m = CW.shape[0]
    # commutators of the channel matrices, fixed over the segment
    kc0_a = np.asarray(hc) @ np.asarray(h0) - np.asarray(h0) @ np.asarray(hc)
    ks0_a = np.asarray(hs) @ np.asarray(h0) - np.asarray(h0) @ np.asarray(hs)
    kcs_a = np.asarray(hc) @ np.asarray(hs) - np.asarray(hs) @ np.asarray(hc)
    cdef double[:, ::1] KC0 = np.ascontiguousarray(kc0_a)
    cdef double[:, ::1] KS0 = np.ascontiguousarray(ks0_a)
    cdef double[:, ::1] KCS = np.ascontiguousarray(kcs_a)
    cdef double[:, ::1] om = np.empty((n, n))
    cdef double[:, ::1] P = np.empty((n, n))
    cdef double[:, ::1] T = np.empty((n, n))
    cdef double[:, ::1] G = np.empty((n, n))
    cdef int k, i, j, order, q
    cdef double c1, c2, s1, s2, csum, ssum, dcs, dss, dx, w, norm, rowsum, term
    cdef double worst = 0.0, defect, d
    cdef double r3 = sqrt(3.0) / 12.0 * dt * dt
    cdef double hd = 0.5 * dt
    cdef bint failed = False
    with nogil:
        for k in range(m):
            c1 = CW[k, 0]; c2 = CW[k, 1]; s1 = SW[k, 0]; s2 = SW[k, 1]
            csum = hd * (c1 + c2); ssum = hd * (s1 + s2)
            dcs = r3 * (c2 - c1); dss = r3 * (s2 - s1); dx = r3 * (c2 * s1 - s2 * c1)
            norm = 0.0
            for i in range(n):
                rowsum = 0.0
                for j in range(n):
                    w = (dt * H0[i, j] + csum * HC[i, j] + ssum * HS[i, j]
                         + dcs * KC0[i, j] + dss * KS0[i, j] + dx * KCS[i, j])
                    om[i, j] = w
                    rowsum += fabs(w)
                if rowsum > norm:
                    norm = rowsum
            # order chosen so the Taylor remainder is below double precision
            order = 1
            term = norm
            while order < MAX_ORDER and term > 1e-17:
                order += 1
                term *= norm / order
            # Horner: P = I + om/k P
            for i in range(n):
                for j in range(n):
                    P[i, j] = 0.0
                P[i, i] = 1.0
            for q in range(order, 0, -1):
                _mm(&om[0, 0], &P[0, 0], &T[0, 0], n, 1.0 / q, 0.0)
                for i in range(n):
                    T[i, i] += 1.0
                memcpy(&P[0, 0], &T[0, 0], n * n * sizeof(double))
            _mm_tn(&P[0, 0], &P[0, 0], &G[0, 0], n, 1.0, 0.0)
            defect = 0.0
            for i in range(n):
                for j in range(n):
                    d = G[i, j] - (1.0 if i == j else 0.0)
                    if fabs(d) > defect:
                        defect = fabs(d)
            if defect > tol:
                failed = True
                break
            if defect > worst:
                worst = defect
            # polar correction E (3I - E^T E) / 2
            for i in range(n):
                for j in range(n):
                    G[i, j] = -0.5 * G[i, j]
                G[i, i] += 1.5
            _mm(&P[0, 0], &G[0, 0], &T[0, 0], n, 1.0, 0.0)
            _mm(&T[0, 0], &Rv[0, 0], &G[0, 0], n, 1.0, 0.0)
            memcpy(&Rv[0, 0], &G[0, 0], n * n * sizeof(double))
    if failed:
        raise IntegrationError(
            f"step orthogonality defect {defect:.2e} exceeds {tol:.1e}; "
            f"reduce dt below {dt / 2:g}")
    return worst


cdef inline int _popcount_below(long b, int mode) noexcept nogil:
    cdef long x = b & ((1L << mode) - 1)
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


def fock_matrix(int n_modes, kinds, idx_i, idx_j, amps):
    """Dense Fock-space Hamiltonian of a quadratic term list.

    See ``_kernels_py.fock_matrix`` for the contract.
    """
    cdef long dim = 1L << n_modes
    cdef cnp.ndarray[double, ndim=2, mode="c"] Hm = np.zeros((dim, dim))
    cdef double[:, ::1] H = Hm
    cdef long[::1] K = np.ascontiguousarray(kinds, dtype=np.int64)
    cdef long[::1] I = np.ascontiguousarray(idx_i, dtype=np.int64)
    cdef long[::1] Jx = np.ascontiguousarray(idx_j, dtype=np.int64)
    cdef double[::1] A = np.ascontiguousarray(amps, dtype=np.float64)
    cdef long b, nb, nb2
    cdef int t, i, j, p, q, s1, s2, rep
    cdef double a
    with nogil:
        for b in range(dim):
            for t in range(K.shape[0]):
                i = <int>I[t]; j = <int>Jx[t]; a = A[t]
                if K[t] == 2:
                    if (b >> i) & 1:
                        H[b, b] += a
                    continue
                if K[t] == 0:
                    for rep in range(2):
                        if rep == 0:
                            p = i; q = j
                        else:
                            p = j; q = i
                        # a_p^dag a_q
                        if not ((b >> q) & 1):
                            continue
                        s1 = -1 if _popcount_below(b, q) % 2 else 1
                        nb = b ^ (1L << q)
                        if (nb >> p) & 1:
                            continue
                        s2 = -1 if _popcount_below(nb, p) % 2 else 1
                        nb = nb ^ (1L << p)
                        H[nb, b] += -a * s1 * s2
                else:
                    # a_i a_j
                    if (b >> j) & 1:
                        s1 = -1 if _popcount_below(b, j) % 2 else 1
                        nb = b ^ (1L << j)
                        if (nb >> i) & 1:
                            s2 = -1 if _popcount_below(nb, i) % 2 else 1
                            nb2 = nb ^ (1L << i)
                            H[nb2, b] += a * s1 * s2
                    # a_j^dag a_i^dag
                    if not ((b >> i) & 1):
                        s1 = -1 if _popcount_below(b, i) % 2 else 1
                        nb = b ^ (1L << i)
                        if not ((nb >> j) & 1):
                            s2 = -1 if _popcount_below(nb, j) % 2 else 1
                            nb2 = nb ^ (1L << j)
                            H[nb2, b] += a * s1 * s2
    return Hm
