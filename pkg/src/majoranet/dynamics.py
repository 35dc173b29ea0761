"""Time evolution of Gaussian states under ramped quadratic Hamiltonians.

A protocol step is ``h(s) = h0 + C(s) hC + S(s) hS`` for scaled time
``s = t / t_f`` in ``[0, 1]``.  The Heisenberg propagator obeys
``dR/dt = h(t) R`` and the covariance evolves as ``R Gamma0 R^T``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import _backend, bdg
from .lattice import QuadraticHamiltonian, to_majorana

IntegrationError = _backend.IntegrationError
GAUSS = np.array([0.5 - math.sqrt(3.0) / 6.0, 0.5 + math.sqrt(3.0) / 6.0])
HALF_PI = 0.5 * math.pi


class ProtocolError(ValueError):
    """Protocol construction failed (empty, zero length, discontinuous)."""


def _smoothstep(s):
    return s * s * (3.0 - 2.0 * s)


def _smootherstep(s):
    return s ** 3 * (s * (6.0 * s - 15.0) + 10.0)


SHAPES = {
    "linear": lambda s: s,
    "smoothstep": _smoothstep,
    "smootherstep": _smootherstep,
}


@dataclass
class RampPair:
    """The two ramp functions ``C(s) = cos phi(s)`` and ``S(s) = sin phi(s)``.

    Parameters
    ----------
    schedule : str or callable
        ``"linear"``, ``"smoothstep"``, ``"smootherstep"`` give
        ``phi = pi/2 * shape(s)``; a callable maps ``s`` to ``phi``.
    lag : float
        Timing offset between channels: ``C`` runs on ``min(1, s (1 + lag))``
        and ``S`` on ``max(0, (s - lag) / (1 - lag))``.  Endpoints are kept.
    table : (s_grid, phi_grid), optional
        Tabulated monotone schedule (overrides ``schedule``), interpolated
        with a shape-preserving cubic.
    reverse : bool
        Run the schedule backwards (``s -> 1 - s``), giving the exact time
        reverse of the forward ramp.
    """

    schedule: object = "linear"
    lag: float = 0.0
    table: tuple | None = None
    reverse: bool = False
    _interp: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0.0 <= self.lag < 1.0:
            raise ValueError("lag must lie in [0, 1)")
        if self.table is None and not callable(self.schedule) and self.schedule not in SHAPES:
            raise ValueError(f"unknown ramp schedule {self.schedule!r}")

    def phi(self, s):
        s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
        if self.table is not None:
            if self._interp is None:
                self._interp = PchipInterpolator(self.table[0], self.table[1])
            return self._interp(s)
        if callable(self.schedule):
            return np.vectorize(self.schedule, otypes=[float])(s)
        return HALF_PI * SHAPES[self.schedule](s)

    def C(self, s):
        s = np.asarray(s, dtype=float)
        if self.reverse:
            s = 1.0 - s
        sc = np.minimum(1.0, s * (1.0 + self.lag))
        phi = self.phi(sc)
        return np.where(phi >= HALF_PI, 0.0, np.cos(phi))

    def S(self, s):
        s = np.asarray(s, dtype=float)
        if self.reverse:
            s = 1.0 - s
        ss = np.maximum(0.0, (s - self.lag) / (1.0 - self.lag))
        phi = self.phi(ss)
        return np.where(phi >= HALF_PI, 1.0, np.sin(phi))

    def describe(self):
        name = "table" if self.table is not None else (
            "callable" if callable(self.schedule) else self.schedule)
        return {"schedule": name, "lag": self.lag, "reverse": self.reverse}

    def reversed(self):
        return RampPair(self.schedule, self.lag, self.table, not self.reverse)


@dataclass
class ProtocolStep:
    """One ramp segment ``h0 + C hC + S hS`` of fixed duration."""

    duration: float
    h0: np.ndarray
    hC: np.ndarray
    hS: np.ndarray
    ramp: RampPair = field(default_factory=RampPair)
    offsets: tuple = (0.0, 0.0, 0.0)
    label: str = ""
    model: QuadraticHamiltonian | None = None

    @classmethod
    def from_model(cls, model: QuadraticHamiltonian, duration, ramp=None, label=""):
        """Compile a channel-labelled model (``const``, ``C``, ``S``)."""
        unknown = set(model.channels()) - {"const", "C", "S"}
        if unknown:
            raise ProtocolError(f"unknown channels {sorted(unknown)}")
        h0, e0 = to_majorana(model, "const")
        hC, eC = to_majorana(model, "C")
        hS, eS = to_majorana(model, "S")
        return cls(float(duration), h0, hC, hS, ramp or RampPair(), (e0, eC, eS),
                   label, model)

    def weights(self, s):
        return self.ramp.C(s), self.ramp.S(s)

    def h(self, s):
        c, sn = self.weights(s)
        return self.h0 + float(c) * self.hC + float(sn) * self.hS

    def offset(self, s):
        c, sn = self.weights(s)
        return self.offsets[0] + float(c) * self.offsets[1] + float(sn) * self.offsets[2]

    @property
    def n_majorana(self):
        return self.h0.shape[0]


def validate_protocol(steps: Sequence[ProtocolStep], tol=1e-12):
    """Check nonempty, positive durations and continuous endpoints."""
    if len(steps) == 0:
        raise ProtocolError("protocol has no steps")
    for k, st in enumerate(steps):
        if not st.duration > 0.0:
            raise ProtocolError(f"step {k} has nonpositive duration")
    for k in range(len(steps) - 1):
        a = steps[k].h(1.0)
        b = steps[k + 1].h(0.0)
        if a.shape != b.shape or np.max(np.abs(a - b)) > tol:
            raise ProtocolError(f"Hamiltonian jumps between steps {k} and {k + 1}")


@dataclass
class Trajectory:
    """Time-ordered snapshots plus the final state and propagator."""

    times: np.ndarray
    step_index: np.ndarray
    records: dict
    gamma_final: np.ndarray
    propagator: np.ndarray
    max_defect: float
    step_boundaries: list

    def series(self, name):
        return self.records[name]

    def long_rows(self):
        """(t, observable, value) rows in snapshot order."""
        rows = []
        names = sorted(self.records)
        for k, t in enumerate(self.times):
            for name in names:
                v = self.records[name][k]
                if np.ndim(v) == 0:
                    rows.append((float(t), name, float(v)))
                else:
                    for j, x in enumerate(v):
                        rows.append((float(t), f"{name}[{j}]", float(x)))
        return rows


def instantaneous_gap(h, n_tracked=None, tol=1e-6):
    """Smallest quasiparticle energy above the tracked (near-)zero modes.

    Parameters
    ----------
    h : ndarray
    n_tracked : int, optional
        Number of low modes to skip; by default every mode below ``tol``.
    """
    eps = bdg.quasiparticle_spectrum(h).energies
    if n_tracked is None:
        n_tracked = int(np.sum(eps < tol))
    if n_tracked >= len(eps):
        return 0.0
    return float(eps[n_tracked])


def step_gap_profile(step: ProtocolStep, n_tracked=None, points=101):
    s = np.linspace(0.0, 1.0, points)
    g = np.array([instantaneous_gap(step.h(x), n_tracked) for x in s])
    return s, g


def evolve(steps: Sequence[ProtocolStep], gamma0, dt=0.01, stride=None,
           observables: dict | None = None, occupations=False, track_gap=False,
           n_tracked=None, tol=1e-8, validate=True, snapshots=True):
    """Propagate a covariance matrix through a protocol.

    Parameters
    ----------
    steps : list of ProtocolStep
    gamma0 : ndarray
        Initial pure covariance matrix.
    dt : float
        Target time step; each step uses ``ceil(t_f / dt)`` equal substeps.
    stride : int, optional
        Substeps between snapshots (default: about 50 snapshots per step).
    observables : dict name -> (a, b)
        Majorana vector pairs whose correlator ``<i gamma_a gamma_b>`` is
        recorded.
    occupations, track_gap : bool
        Also record site occupations and the instantaneous gap.
    tol : float
        Per-substep orthogonality defect tolerance.

    Returns
    -------
    Trajectory

    Raises
    ------
    IntegrationError
        If a substep exceeds the orthogonality tolerance.
    """
    if validate:
        validate_protocol(steps)
    gamma0 = np.asarray(gamma0, dtype=float)
    if bdg.purity_defect(gamma0) > 1e-8:
        raise bdg.ContractError("initial covariance is not pure")
    n = gamma0.shape[0]
    observables = observables or {}
    R = np.eye(n)
    times, idx = [], []
    recs = {name: [] for name in observables}
    if occupations:
        recs["occupation"] = []
    if track_gap:
        recs["gap"] = []
    recs["parity"] = []
    parity0 = bdg.parity(gamma0)
    t_offset = 0.0
    worst = 0.0
    boundaries = [0.0]

    def snap(t, k, step, s):
        G = R @ gamma0 @ R.T
        times.append(t)
        idx.append(k)
        for name, (a, b) in observables.items():
            recs[name].append(float(a @ G @ b))
        if occupations:
            recs["occupation"].append(bdg.occupations(G))
        if track_gap:
            recs["gap"].append(instantaneous_gap(step.h(s), n_tracked))
        recs["parity"].append(bdg.parity(G, tol=1e-5))

    if snapshots:
        snap(0.0, 0, steps[0], 0.0)
    for k, step in enumerate(steps):
        nsub = max(1, int(math.ceil(step.duration / dt - 1e-9)))
        h_dt = step.duration / nsub
        s_nodes = (np.arange(nsub)[:, None] + GAUSS[None, :]) / nsub
        cw = np.ascontiguousarray(step.ramp.C(s_nodes))
        sw = np.ascontiguousarray(step.ramp.S(s_nodes))
        every = stride or max(1, nsub // 50)
        start = 0
        while start < nsub:
            stop = min(nsub, start + every)
            d = _backend.propagate(step.h0, step.hC, step.hS, cw[start:stop],
                                   sw[start:stop], h_dt, R, tol)
            worst = max(worst, d)
            start = stop
            if snapshots:
                snap(t_offset + stop * h_dt, k, step, stop / nsub)
        t_offset += step.duration
        boundaries.append(t_offset)
    G = R @ gamma0 @ R.T
    G = 0.5 * (G - G.T)
    out = {}
    for name, vals in recs.items():
        out[name] = np.array(vals)
    traj = Trajectory(np.array(times), np.array(idx), out, G, R, worst, boundaries)
    if snapshots and np.any(out["parity"] != parity0):
        raise IntegrationError("parity changed during a parity-preserving evolution")
    return traj


def fidelity(gamma_a, gamma_b):
    return bdg.fidelity(gamma_a, gamma_b)


def correlation(gamma, mode_a, mode_b):
    return bdg.correlation(gamma, mode_a, mode_b)


def _zero_projector(h, n_zero):
    # eigenvectors of h^T h with the smallest eigenvalues span the zero modes
    w, v = np.linalg.eigh(h.T @ h)
    return v[:, : 2 * n_zero], math.sqrt(max(w[2 * n_zero], 0.0))


def adiabatic_rate(h0, hC, hS, phi, n_zero, dphi=1e-4):
    """Local non-adiabaticity ``|dP/dphi| / gap`` at angle ``phi``.

    ``P`` projects on the ``2 n_zero`` Majorana zero-mode directions.
    """
    def hm(p):
        return h0 + math.cos(p) * hC + math.sin(p) * hS

    Vm, _ = _zero_projector(hm(phi - dphi), n_zero)
    Vp, _ = _zero_projector(hm(phi + dphi), n_zero)
    _, gap = _zero_projector(hm(phi), n_zero)
    dP = (Vp @ Vp.T - Vm @ Vm.T) / (2.0 * dphi)
    return float(np.linalg.norm(dP)) / max(gap, 1e-12)


def adaptive_ramp(step: ProtocolStep, n_zero, shape="smootherstep", points=121,
                  floor=1e-3, lag=0.0):
    """Schedule slowing the ramp where the zero-mode subspace turns fastest.

    The angle is reparametrized so that ``dphi/ds`` is proportional to
    ``gap / |dP/dphi|`` (locally constant adiabaticity), then composed with
    ``shape`` so the ramp starts and ends with zero speed.
    """
    phi = np.linspace(0.0, HALF_PI, points)
    rate = np.array([adiabatic_rate(step.h0, step.hC, step.hS, p, n_zero) for p in phi])
    w = rate + floor * max(rate.max(), 1.0)
    F = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(phi))])
    F /= F[-1]
    s = np.linspace(0.0, 1.0, 4 * points)
    phi_s = np.interp(SHAPES[shape](s), F, phi)
    phi_s[-1] = HALF_PI
    return RampPair(table=(s, phi_s), lag=lag)
