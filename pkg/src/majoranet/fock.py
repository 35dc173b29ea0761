"""Exact Fock-space oracle for small systems (verification only).

Everything here works with explicit ``2^N``-dimensional matrices built from
Jordan-Wigner operators and is independent of the Majorana compiler.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import _backend
from .lattice import QuadraticHamiltonian

MAX_FOCK_MODES = 8


class SizeLimitError(ValueError):
    pass


def annihilators(n):
    """Jordan-Wigner annihilation operators ``a_j`` (bit ``j`` = mode ``j``)."""
    dim = 1 << n
    ops = []
    for j in range(n):
        a = np.zeros((dim, dim))
        for b in range(dim):
            if (b >> j) & 1:
                sign = -1.0 if bin(b & ((1 << j) - 1)).count("1") % 2 else 1.0
                a[b ^ (1 << j), b] = sign
        ops.append(a)
    return ops


def majoranas(n):
    """Majorana matrices ``c[2j] = a^dag + a``, ``c[2j+1] = -i(a^dag - a)``."""
    out = []
    for a in annihilators(n):
        ad = a.T
        out.append((ad + a).astype(complex))
        out.append(-1j * (ad - a))
    return out


def parity_operator(n):
    dim = 1 << n
    return np.diag([(-1.0) ** bin(b).count("1") for b in range(dim)])


def fock_hamiltonian(model: QuadraticHamiltonian) -> np.ndarray:
    """Dense many-body Hamiltonian of a model, term by term."""
    n = model.n_modes
    if n > MAX_FOCK_MODES:
        raise SizeLimitError(f"Fock oracle limited to {MAX_FOCK_MODES} modes")
    kinds, ii, jj, amps = [], [], [], []
    code = {"hop": 0, "pair": 1, "pot": 2}
    for t in model.terms:
        kinds.append(code[t.kind])
        ii.append(model.index(t.sites[0]))
        jj.append(model.index(t.sites[1]) if t.kind != "pot" else 0)
        amps.append(t.amplitude)
    return _backend.fock_matrix(n, np.array(kinds, dtype=np.int64),
                                np.array(ii, dtype=np.int64),
                                np.array(jj, dtype=np.int64), np.array(amps))


def hamiltonian_from_majorana(h, offset=0.0):
    """``(i/4) sum h_kl c_k c_l + offset`` assembled from Majorana matrices."""
    n = h.shape[0] // 2
    if n > MAX_FOCK_MODES:
        raise SizeLimitError(f"Fock oracle limited to {MAX_FOCK_MODES} modes")
    c = majoranas(n)
    H = offset * np.eye(1 << n, dtype=complex)
    for k in range(2 * n):
        for l in range(2 * n):
            if h[k, l] != 0.0:
                H += 0.25j * h[k, l] * (c[k] @ c[l])
    return H


def majorana_matrix_from_fock(H):
    """Recover ``h`` from a quadratic many-body Hamiltonian via traces.

    ``h_kl = -2i Tr(H c_l c_k) / 2^N`` for ``k != l``.
    """
    dim = H.shape[0]
    n = dim.bit_length() - 1
    c = majoranas(n)
    h = np.zeros((2 * n, 2 * n))
    for k in range(2 * n):
        for l in range(2 * n):
            if k != l:
                h[k, l] = (-2j * np.trace(H @ c[l] @ c[k]) / dim).real
    return h


@dataclass
class FockSpectrum:
    energies: np.ndarray
    states: np.ndarray
    parities: np.ndarray


def brute_force_fock(model: QuadraticHamiltonian) -> FockSpectrum:
    """Full eigendecomposition with parity labels (each eigenvector chosen
    inside one parity sector)."""
    H = fock_hamiltonian(model)
    return diagonalize_by_parity(H, model.n_modes)


def diagonalize_by_parity(H, n):
    par = np.diag(parity_operator(n))
    dim = 1 << n
    energies, states, parities = [], [], []
    for p in (1, -1):
        idx = np.where(par == p)[0]
        w, v = np.linalg.eigh(H[np.ix_(idx, idx)])
        for k in range(len(w)):
            vec = np.zeros(dim, dtype=complex)
            vec[idx] = v[:, k]
            energies.append(w[k])
            states.append(vec)
            parities.append(p)
    order = np.argsort(energies, kind="stable")
    return FockSpectrum(np.array(energies)[order], np.array(states)[order].T,
                        np.array(parities)[order])


def covariance_of_state(psi, n=None):
    """``Gamma_kl = <psi| i c_k c_l |psi>`` for ``k != l``."""
    if n is None:
        n = len(psi).bit_length() - 1
    c = majoranas(n)
    G = np.zeros((2 * n, 2 * n))
    for k in range(2 * n):
        ck = c[k] @ psi
        for l in range(k + 1, 2 * n):
            val = (1j * np.vdot(psi, c[k] @ (c[l] @ psi))).real
            G[k, l] = val
            G[l, k] = -val
    return G


def state_from_covariance(gamma):
    """Fock vector of a pure Gaussian state: ground state of ``h = -Gamma``."""
    n = gamma.shape[0] // 2
    H = hamiltonian_from_majorana(-gamma)
    w, v = np.linalg.eigh(H)
    if w[1] - w[0] < 1e-6:
        raise ValueError("covariance does not define a unique Fock state")
    return v[:, 0]


def schrodinger_evolve(h_of_t, psi0, t0, t1, rtol=1e-11, atol=1e-12):
    """Integrate ``i d psi/dt = H(t) psi`` with an adaptive Runge-Kutta method.

    ``h_of_t(t)`` must return the many-body Hamiltonian matrix.
    """
    def rhs(t, y):
        return -1j * (h_of_t(t) @ y)

    sol = solve_ivp(rhs, (t0, t1), psi0.astype(complex), method="DOP853",
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[:, -1]
