"""Pure numpy implementations of the hot kernels.

These mirror the compiled versions in ``_kernels.pyx`` one-to-one and are
used when the extension is unavailable or ``MAJORANET_PURE_PYTHON=1``.
"""
import numpy as np

SQRT3_12 = np.sqrt(3.0) / 12.0
MAX_ORDER = 16


class IntegrationError(RuntimeError):
    """The propagator drifted away from orthogonality."""


def pfaffian(A):
    """Pfaffian of a real antisymmetric matrix (Parlett-Reid, pivoted).

    Parameters
    ----------
    A : ndarray, shape (n, n)

    Returns
    -------
    float
    """
    A = np.array(A, dtype=float, copy=True)
    n = A.shape[0]
    if n % 2:
        return 0.0
    pf = 1.0
    for k in range(0, n - 1, 2):
        kp = k + 1 + int(np.argmax(np.abs(A[k + 1:, k])))
        if kp != k + 1:
            A[[k + 1, kp], :] = A[[kp, k + 1], :]
            A[:, [k + 1, kp]] = A[:, [kp, k + 1]]
            pf = -pf
        if A[k + 1, k] == 0.0:
            return 0.0
        pf *= A[k, k + 1]
        if k + 2 < n:
            tau = A[k, k + 2:] / A[k, k + 1]
            col = A[k + 2:, k + 1]
            A[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return pf


def _expm_taylor(om, max_order=MAX_ORDER):
    # order chosen so the remainder falls below double precision
    norm = float(np.max(np.sum(np.abs(om), axis=1))) if om.size else 0.0
    order, term = 1, norm
    while order < max_order and term > 1e-17:
        order += 1
        term *= norm / order
    n = om.shape[0]
    P = np.eye(n)
    for q in range(order, 0, -1):
        P = om @ P / q
        P[np.diag_indices(n)] += 1.0
    return P


def propagate(h0, hc, hs, cw, sw, dt, R, tol=1e-8):
    """Advance the Heisenberg propagator over ``len(cw)`` Magnus steps.

    Each step uses the fourth-order two-point Gauss Magnus generator with
    ``A_q = h0 + cw[k, q] hc + sw[k, q] hs``, a Taylor exponential and one
    Newton-Schulz polar correction.

    Parameters
    ----------
    h0, hc, hs : ndarray, shape (n, n)
    cw, sw : ndarray, shape (m, 2)
        Channel weights at the two Gauss nodes of each step.
    dt : float
    R : ndarray, shape (n, n)
        Propagator, updated in place.
    tol : float
        Largest accepted orthogonality defect of a single step.

    Returns
    -------
    float
        Largest per-step defect seen.
    """
    n = R.shape[0]
    eye = np.eye(n)
    kc0 = hc @ h0 - h0 @ hc
    ks0 = hs @ h0 - h0 @ hs
    kcs = hc @ hs - hs @ hc
    r3 = SQRT3_12 * dt * dt
    worst = 0.0
    for k in range(cw.shape[0]):
        c1, c2 = cw[k]
        s1, s2 = sw[k]
        om = (dt * h0 + 0.5 * dt * (c1 + c2) * hc + 0.5 * dt * (s1 + s2) * hs
              + r3 * ((c2 - c1) * kc0 + (s2 - s1) * ks0 + (c2 * s1 - s2 * c1) * kcs))
        E = _expm_taylor(om)
        gram = E.T @ E
        defect = float(np.max(np.abs(gram - eye)))
        if defect > tol:
            raise IntegrationError(
                f"step orthogonality defect {defect:.2e} exceeds {tol:.1e}; "
                f"reduce dt below {dt / 2:g}")
        worst = max(worst, defect)
        E = E @ (1.5 * eye - 0.5 * gram)
        R[...] = E @ R
    return worst


def fock_matrix(n_modes, kinds, idx_i, idx_j, amps):
    """Dense Fock-space Hamiltonian of a quadratic term list.

    Basis state ``b`` has mode ``j`` occupied when bit ``j`` of ``b`` is set;
    the Jordan-Wigner string runs over modes with smaller index.

    Parameters
    ----------
    n_modes : int
    kinds : int array, 0 hop, 1 pair, 2 potential
    idx_i, idx_j : int arrays (``idx_j`` ignored for potentials)
    amps : float array

    Returns
    -------
    ndarray, shape (2**n_modes, 2**n_modes)
    """
    dim = 1 << n_modes
    H = np.zeros((dim, dim))
    for b in range(dim):
        for kind, i, j, a in zip(kinds, idx_i, idx_j, amps):
            if kind == 2:
                if (b >> i) & 1:
                    H[b, b] += a
                continue
            if kind == 0:
                # -a (a_i^dag a_j + a_j^dag a_i)
                for p, q in ((i, j), (j, i)):
                    sgn, nb = _apply(b, q, False)
                    if sgn == 0:
                        continue
                    s2, nb = _apply(nb, p, True)
                    if s2 == 0:
                        continue
                    H[nb, b] += -a * sgn * s2
            else:
                # a (a_i a_j + a_j^dag a_i^dag)
                sgn, nb = _apply(b, j, False)
                if sgn:
                    s2, nb2 = _apply(nb, i, False)
                    if s2:
                        H[nb2, b] += a * sgn * s2
                sgn, nb = _apply(b, i, True)
                if sgn:
                    s2, nb2 = _apply(nb, j, True)
                    if s2:
                        H[nb2, b] += a * sgn * s2
    return H


def _apply(b, mode, create):
    occ = (b >> mode) & 1
    if occ == create:
        return 0, b
    sign = -1 if bin(b & ((1 << mode) - 1)).count("1") % 2 else 1
    return sign, b ^ (1 << mode)
