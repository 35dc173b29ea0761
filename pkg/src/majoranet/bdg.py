"""Spectral analysis of Majorana matrices and Gaussian ground states.

For ``H = (i/4) c^T h c + offset`` the canonical form is
``h = O^T (+)_nu eps_nu [[0, 1], [-1, 0]] O`` with ``eps_nu >= 0``; rows
``2 nu`` and ``2 nu + 1`` of ``O`` are the two Majorana components of the
Bogoliubov mode ``nu``.  Covariance matrices follow
``Gamma_kl = (i/2) <[c_k, c_l]>``, so the vacuum has ``Gamma[2j, 2j+1] = 1``
and parity is the sign of ``Pf(Gamma)``.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from . import _backend

ZERO_TOL = 1e-8


class ContractError(ValueError):
    """Input violates an operation precondition."""


class NoZeroModeError(RuntimeError):
    """No sub-tolerance quasiparticle energy was found."""


class ImpureStateError(ValueError):
    """Covariance matrix is not a pure Gaussian state."""


@dataclass
class QuasiparticleSpectrum:
    """Energies ``eps`` (ascending, >= 0) and the orthogonal mode matrix ``O``."""

    energies: np.ndarray
    modes: np.ndarray

    @property
    def n_modes(self):
        return len(self.energies)

    def mode_vectors(self, nu):
        """The two Majorana vectors (a, b) of mode ``nu`` with ``a^T h b = eps``."""
        return self.modes[2 * nu], self.modes[2 * nu + 1]


@dataclass
class ZeroModeProfile:
    """Left/right Majorana zero-mode vectors with fitted decay length."""

    left: np.ndarray
    right: np.ndarray
    energy: float
    xi: float

    def site_weights(self, which="left"):
        v = self.left if which == "left" else self.right
        return np.sqrt(v[0::2] ** 2 + v[1::2] ** 2)


@dataclass
class ManyBodyLevel:
    energy: float
    parity: int
    occupation: tuple


def check_antisymmetric(h, tol=1e-12):
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] % 2:
        raise ContractError("Majorana matrix must be square with even size")
    scale = max(1.0, float(np.max(np.abs(h)))) if h.size else 1.0
    if h.size and np.max(np.abs(h + h.T)) > tol * scale:
        raise ContractError("Majorana matrix is not antisymmetric")
    return h


def _is_bipartite(h):
    return not (np.any(h[0::2, 0::2]) or np.any(h[1::2, 1::2]))


def quasiparticle_spectrum(h) -> QuasiparticleSpectrum:
    """Canonical form of an antisymmetric Majorana matrix.

    Real single-particle problems couple only x-type to y-type Majoranas;
    those are handled with an SVD of the x-y block, which keeps tiny
    splittings accurate and separates the two zero-mode components.  Other
    matrices go through a Hermitian eigensolve of ``i h``.

    Parameters
    ----------
    h : ndarray, shape (2N, 2N)

    Returns
    -------
    QuasiparticleSpectrum
    """
    h = check_antisymmetric(h)
    n = h.shape[0] // 2
    if n == 0:
        return QuasiparticleSpectrum(np.zeros(0), np.zeros((0, 0)))
    O = np.zeros((2 * n, 2 * n))
    if _is_bipartite(h):
        M = h[0::2, 1::2]
        U, s, Vt = np.linalg.svd(M)
        order = np.argsort(s, kind="stable")
        eps = s[order]
        for nu, k in enumerate(order):
            O[2 * nu, 0::2] = U[:, k]
            O[2 * nu + 1, 1::2] = Vt[k]
        return QuasiparticleSpectrum(eps, O)
    w, v = np.linalg.eigh(1j * h)
    # eigenvalues come in +-eps pairs; the upper half carries the modes
    pos = w[n:]
    vecs = v[:, n:]
    scale = max(1.0, float(np.max(np.abs(h))))
    zero = pos < 1e-9 * scale
    eps = np.where(zero, 0.0, pos)
    nu = 0
    for k in np.where(~zero)[0]:
        p = np.sqrt(2.0) * vecs[:, k].real
        q = np.sqrt(2.0) * vecs[:, k].imag
        # i h w = eps w  gives  h p = eps q  and  q^T h p = eps
        O[2 * nu], O[2 * nu + 1] = q, p
        nu += 1
    nz = int(np.sum(zero))
    if nz:
        # real orthonormal kernel basis, paired in order
        _, sv, wt = np.linalg.svd(h)
        kern = wt[-2 * nz:]
        kern = _separate(kern)
        for k in range(nz):
            O[2 * nu], O[2 * nu + 1] = kern[2 * k], kern[2 * k + 1]
            nu += 1
    energies = np.concatenate([eps[~zero], np.zeros(nz)])
    order = np.argsort(energies, kind="stable")
    rows = np.empty(2 * n, dtype=int)
    rows[0::2] = 2 * order
    rows[1::2] = 2 * order + 1
    return QuasiparticleSpectrum(energies[order], O[rows])


def _position(n_maj):
    return np.repeat(np.arange(n_maj // 2, dtype=float), 2)


def _separate(vectors):
    """Rotate a set of real orthonormal vectors to extremal spatial positions."""
    if len(vectors) <= 1:
        return vectors
    x = _position(vectors.shape[1])
    Xp = (vectors * x) @ vectors.T
    _, rot = np.linalg.eigh(Xp)
    out = rot.T @ vectors
    # interleave: leftmost with rightmost, second-left with second-right, ...
    k = len(out)
    order = []
    for a in range(k // 2):
        order += [a, k - 1 - a]
    return out[order]


def _fix_sign(v):
    k = int(np.argmax(np.abs(v)))
    return v if v[k] >= 0 else -v


def majorana_zero_modes(h, tol=ZERO_TOL) -> ZeroModeProfile:
    """Left and right Majorana zero modes of a single open wire.

    Parameters
    ----------
    h : ndarray
    tol : float
        Energies below ``tol`` count as zero modes.

    Raises
    ------
    NoZeroModeError
        If the spectrum has no sub-tolerance mode, or more than one.
    """
    spec = quasiparticle_spectrum(h)
    zero = np.where(spec.energies < tol)[0]
    if len(zero) == 0:
        raise NoZeroModeError("no quasiparticle energy below tolerance")
    if len(zero) > 1:
        raise NoZeroModeError(f"{len(zero)} zero modes found, expected one pair")
    a, b = spec.mode_vectors(zero[0])
    pair = _separate(np.vstack([a, b]))
    left, right = _fix_sign(pair[0]), _fix_sign(pair[1])
    xi = decay_length(left)
    return ZeroModeProfile(left, right, float(spec.energies[zero[0]]), xi)


def decay_length(v, floor=1e-12):
    """Exponential decay length (in sites) fitted to the nonzero envelope.

    Returns 0 when the profile lives on a single site.
    """
    w = np.sqrt(v[0::2] ** 2 + v[1::2] ** 2)
    keep = w > floor * w.max()
    j = np.arange(len(w))[keep]
    if len(j) < 2:
        return 0.0
    slope = np.polyfit(j, np.log(w[keep]), 1)[0]
    return float(-1.0 / slope) if slope < 0 else float("inf")


def covariance_from_modes(spec: QuasiparticleSpectrum, occupations) -> np.ndarray:
    """Covariance with mode ``nu`` filled (1) or empty (0) as an excitation.

    Occupation 0 is the low-energy configuration of each mode.
    """
    n = spec.n_modes
    block = np.zeros((2 * n, 2 * n))
    for nu in range(n):
        s = -1.0 if occupations[nu] == 0 else 1.0
        block[2 * nu, 2 * nu + 1] = s
        block[2 * nu + 1, 2 * nu] = -s
    G = spec.modes.T @ block @ spec.modes
    return 0.5 * (G - G.T)


def ground_covariance(h, parity_sector=None) -> np.ndarray:
    """Ground-state covariance, optionally restricted to a parity sector.

    If the requested parity differs from the ground parity the lowest mode
    is flipped, giving the lowest state of that sector.
    """
    spec = quasiparticle_spectrum(h)
    occ = np.zeros(spec.n_modes, dtype=int)
    if parity_sector is not None:
        if parity_sector not in (1, -1):
            raise ContractError("parity sector must be +1 or -1")
        if ground_parity(spec) != parity_sector:
            occ[0] = 1
    return covariance_from_modes(spec, occ)


def ground_parity(spec: QuasiparticleSpectrum) -> int:
    n = spec.n_modes
    d = np.linalg.det(spec.modes) if n else 1.0
    return int(np.sign(d)) * (-1) ** n


def ground_energy(h, offset=0.0):
    """``offset - sum(eps) / 2``."""
    return offset - 0.5 * float(np.sum(quasiparticle_spectrum(h).energies))


def energy(h, gamma, offset=0.0):
    """Expectation value ``-tr(h Gamma)/4 + offset``."""
    return -0.25 * float(np.sum(h * gamma.T)) + offset


def pfaffian(A):
    return _backend.pfaffian(A)


def parity(gamma, tol=1e-6) -> int:
    """Fermion parity of a pure Gaussian state, the sign of ``Pf(Gamma)``.

    Raises
    ------
    ImpureStateError
        If ``|Pf(Gamma)|`` is far from 1.
    """
    pf = pfaffian(gamma)
    if abs(abs(pf) - 1.0) > tol:
        raise ImpureStateError(f"|Pf(Gamma)| = {abs(pf):.3g}, state not pure")
    return 1 if pf > 0 else -1


def purity_defect(gamma):
    n = gamma.shape[0]
    return float(np.max(np.abs(gamma @ gamma + np.eye(n)))) if n else 0.0


def occupations(gamma):
    """Site occupations ``<a_j^dag a_j> = (1 - Gamma[2j, 2j+1]) / 2``."""
    return 0.5 * (1.0 - np.diag(gamma, 1)[0::2])


def apply_majorana(gamma, a):
    """State after applying the Majorana operator ``sum_k a_k c_k``.

    ``a`` must be a real unit vector; the parity flips.
    """
    P = np.eye(len(a)) - 2.0 * np.outer(a, a)
    return P @ gamma @ P.T


def many_body_spectrum(h, k, offset=0.0, spec=None) -> list:
    """The ``k`` lowest many-body levels, built by best-first subset search.

    Parameters
    ----------
    h : ndarray
    k : int
    offset : float
        Constant energy of the Hamiltonian.

    Returns
    -------
    list of ManyBodyLevel, sorted ascending
    """
    if spec is None:
        spec = quasiparticle_spectrum(h)
    eps = spec.energies
    n = len(eps)
    if k > 2 ** n:
        raise ContractError(f"k={k} exceeds Fock dimension {2 ** n}")
    e0 = offset - 0.5 * float(np.sum(eps))
    p0 = ground_parity(spec) if n else 1
    # subsets as sorted index tuples; children extend or shift the last index
    heap = [(e0, ())]
    out = []
    while heap and len(out) < k:
        e, sub = heapq.heappop(heap)
        out.append(ManyBodyLevel(e, p0 * (-1) ** len(sub), sub))
        last = sub[-1] if sub else -1
        if last + 1 < n:
            heapq.heappush(heap, (e + eps[last + 1], sub + (last + 1,)))
            if sub:
                heapq.heappush(heap, (e - eps[last] + eps[last + 1], sub[:-1] + (last + 1,)))
    return out


def fidelity(gamma_a, gamma_b, tol=1e-6):
    """Overlap ``|<a|b>|^2`` of two pure Gaussian states.

    Uses ``2^{-n} sqrt|det(Gamma_a + Gamma_b)|``; states of opposite
    parity have zero overlap.
    """
    for g in (gamma_a, gamma_b):
        if purity_defect(g) > tol:
            raise ContractError("fidelity needs pure states")
    if gamma_a.shape != gamma_b.shape:
        raise ContractError("covariance shapes differ")
    if parity(gamma_a) != parity(gamma_b):
        return 0.0
    n = gamma_a.shape[0] // 2
    sign, logdet = np.linalg.slogdet(gamma_a + gamma_b)
    if sign == 0:
        return 0.0
    return float(min(1.0, np.exp(0.5 * logdet - n * np.log(2.0))))


def correlation(gamma, mode_a, mode_b):
    """``<i gamma_a gamma_b>`` for normalized real Majorana vectors."""
    return float(mode_a @ gamma @ mode_b)


def spectrum_table(h):
    spec = quasiparticle_spectrum(h)
    return np.column_stack([np.arange(spec.n_modes), spec.energies])
