"""Adiabatic map from the parity of an open Kitaev chain to the occupation
of one external site.

Geometry: chain sites ``("c", 1..N)``, two closing sites ``("c", N+1)`` and
``("c", N+2)``, and the external site ``("e", 1)``.  With ``phi`` running
from 0 to pi/2,

* constant: the open chain and the potential ``V_e`` on ``e``;
* ``cos phi``: hopping ``(N+2)-e`` and potentials ``V`` on ``N+1``, ``N+2``;
* ``sin phi``: Kitaev links ``(N, N+1)``, ``(N+1, N+2)``, ``(N+2, 1)``.

The symmetric variant drops site ``N+1`` and closes through ``N+2`` alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from . import bdg
from .dynamics import ProtocolError, ProtocolStep, RampPair, evolve
from .lattice import (ErrorModel, QuadraticHamiltonian, SiteId, hop, kitaev_link, pot)

BOUNDARY_TOL = 1e-12


@dataclass(frozen=True)
class ConditionReport:
    V_tilde: float
    condition1: bool
    condition2: bool
    branch: str
    boundary: bool = False

    def as_dict(self):
        return {"V_tilde": self.V_tilde, "condition1": self.condition1,
                "condition2": self.condition2, "branch": self.branch,
                "boundary": self.boundary}


def symmetric_state_energy(V, V_e, J_tilde):
    """Lowest single-particle energy of the (N+2, e) pair."""
    return 0.5 * (V + V_e - math.sqrt((V - V_e) ** 2 + 4.0 * J_tilde ** 2))


def check_conditions(V, V_e, J_tilde, J=1.0) -> ConditionReport:
    """Evaluate both validity conditions and predict the outcome branch.

    Ties on either boundary count as failures and set ``boundary``.
    """
    if not J > 0:
        raise ValueError("J must be positive")
    vt = symmetric_state_energy(V, V_e, J_tilde)
    boundary = False
    if V_e <= 0:
        c1 = False
        boundary = V_e == 0
    else:
        thr = J_tilde ** 2 / V_e
        c1 = V > thr > 0
        boundary |= abs(V - thr) <= BOUNDARY_TOL or thr == 0
    c2 = 0 < V_e < 2 * J
    boundary |= abs(V_e - 2 * J) <= BOUNDARY_TOL or V_e == 0
    branch = "violation1" if not c1 else ("violation2" if not c2 else "ok")
    return ConditionReport(vt, c1, c2, branch, bool(boundary))


@dataclass(frozen=True)
class MappingSpec:
    N: int = 8
    J: float = 1.0
    delta: float = 1.0
    mu: float = 0.0
    J_tilde: float = 1.0
    V: float = 2.0
    V_e: float = 1.0
    closing: tuple | None = None
    t_f: float = 500.0
    schedule: str = "linear"
    direction: str = "forward"
    symmetric: bool = False
    error_model: ErrorModel = field(default_factory=ErrorModel)
    label: str = "c"
    ext_label: str = "e"

    def __post_init__(self):
        if self.N < 2:
            raise ProtocolError("the chain needs at least two sites")
        if self.direction not in ("forward", "inverse"):
            raise ProtocolError(f"unknown direction {self.direction!r}")
        if not self.t_f > 0:
            raise ProtocolError("t_f must be positive")

    @property
    def closing_links(self):
        """(J, delta) of the links (N,N+1), (N+1,N+2), (N+2,1)."""
        if self.closing is not None:
            if len(self.closing) != 3:
                raise ProtocolError("closing needs three (J, delta) pairs")
            return tuple(tuple(c) for c in self.closing)
        return ((self.J, self.delta),) * 3

    def conditions(self):
        return check_conditions(self.V, self.V_e, self.J_tilde, self.J)


def _sites(spec: MappingSpec):
    c, e = spec.label, spec.ext_label
    N = spec.N
    chain = [SiteId(c, j) for j in range(1, N + 1)]
    closing = [SiteId(c, N + 2)] if spec.symmetric else [SiteId(c, N + 1), SiteId(c, N + 2)]
    return chain, closing, SiteId(e, 1)


def mapping_model(spec: MappingSpec, draws=None) -> QuadraticHamiltonian:
    """Channel-labelled model (``const``, ``C``, ``S``) of the mapping Hamiltonian."""
    chain, closing, ext = _sites(spec)
    N = spec.N
    em = spec.error_model
    terms = []
    for a, b in zip(chain[:-1], chain[1:]):
        terms += kitaev_link(a, b, spec.J, spec.delta)
    if spec.mu != 0.0:
        terms += [pot(s, -spec.mu) for s in chain]
    terms.append(pot(ext, spec.V_e))
    near = closing[-1]
    terms.append(hop(near, ext, -spec.J_tilde, "C"))
    links = spec.closing_links
    if spec.symmetric:
        ring = [(chain[-1], near, links[0]), (near, chain[0], links[2])]
    else:
        ring = [(chain[-1], closing[0], links[0]), (closing[0], near, links[1]),
                (near, chain[0], links[2])]
    for a, b, (Jl, dl) in ring:
        terms += kitaev_link(a, b, Jl, dl, "S")
    # addressed potentials and their spill onto neighbours
    neighbours = {}
    for a, b, _ in ring:
        neighbours.setdefault(a, []).append(b)
        neighbours.setdefault(b, []).append(a)
    neighbours[near].append(ext)
    for s in closing:
        terms.append(pot(s, spec.V, "C"))
        if em.intensity_leak > 0 or em.delta_v > 0:
            leak = em.intensity_leak + em.delta_v
            for nb in neighbours[s]:
                terms.append(pot(nb, leak * spec.V, "C"))
    if draws is None:
        draws = em.disorder(chain + closing)
    terms += [pot(s, -d) for s, d in draws.items()]
    sites = tuple(chain + closing + [ext])
    wires = {spec.label: N + 2, spec.ext_label: 1}
    return QuadraticHamiltonian(sites, tuple(terms), wires)


def _ramp(spec: MappingSpec):
    return RampPair(spec.schedule, spec.error_model.laser_lag,
                    reverse=spec.direction == "inverse")


def build_mapping_protocol(spec: MappingSpec):
    """Single-step protocol; the inverse direction runs the ramp backwards."""
    m = mapping_model(spec)
    return [ProtocolStep.from_model(m, spec.t_f, _ramp(spec), f"map-{spec.direction}")]


def hamiltonian_at(spec: MappingSpec, phi, model=None):
    """``(h, offset)`` at ramp angle ``phi`` (ideal cos/sin weights)."""
    m = model or mapping_model(spec)
    step = ProtocolStep.from_model(m, 1.0)
    c, s = math.cos(phi), math.sin(phi)
    if abs(phi - 0.5 * math.pi) < 1e-15:
        c = 0.0
    h = step.h0 + c * step.hC + s * step.hS
    off = step.offsets[0] + c * step.offsets[1] + s * step.offsets[2]
    return h, off


def _indices(model, sites):
    idx = []
    for s in sites:
        k = model.index(s)
        idx += [2 * k, 2 * k + 1]
    return np.array(idx)


def initial_state(spec: MappingSpec, parity, model=None):
    """Open-chain ground state of given parity, closing sites and ``e`` empty.

    For the inverse direction the start is the closed-ring ground state
    with ``e`` empty (odd) or occupied (even).
    """
    m = model or mapping_model(spec)
    chain, closing, ext = _sites(spec)
    n = 2 * m.n_modes
    G = np.zeros((n, n))
    if spec.direction == "forward":
        h, _ = hamiltonian_at(spec, 0.0, m)
        ci = _indices(m, chain)
        G[np.ix_(ci, ci)] = bdg.ground_covariance(h[np.ix_(ci, ci)], parity_sector=parity)
        for s in closing + [ext]:
            k = m.index(s)
            G[2 * k, 2 * k + 1], G[2 * k + 1, 2 * k] = 1.0, -1.0
        return G
    h, _ = hamiltonian_at(spec, 0.5 * math.pi, m)
    ri = _indices(m, chain + closing)
    G[np.ix_(ri, ri)] = bdg.ground_covariance(h[np.ix_(ri, ri)])
    k = m.index(ext)
    occ = -1.0 if parity == 1 else 1.0
    G[2 * k, 2 * k + 1], G[2 * k + 1, 2 * k] = occ, -occ
    return G


@dataclass
class ChainState:
    """Closed-ring state relative to its ground state.

    ``excess`` is the energy above the ring ground state, ``n_qp`` the mean
    number of ring quasiparticles, ``ground_weight`` a lower bound on the
    ground-state probability and ``label`` one of ``ground``, ``excited``,
    ``mixed``.
    """

    excess: float
    n_qp: float
    parity: float
    ground_weight: float
    label: str


def classify_ring(gamma_ring, h_ring, tol=0.01):
    spec = bdg.quasiparticle_spectrum(h_ring)
    # covariance in the quasiparticle basis: occupation of mode nu
    Gm = spec.modes @ gamma_ring @ spec.modes.T
    occ = 0.5 * (1.0 + Gm[0::2, 1::2].diagonal())
    n_qp = float(np.sum(occ))
    e_ground = bdg.ground_energy(h_ring)
    e = bdg.energy(h_ring, gamma_ring)
    excess = float(e - e_ground)
    par = float(bdg.pfaffian(gamma_ring))
    gw = max(0.0, 1.0 - n_qp)
    if gw > 1.0 - tol:
        label = "ground"
    elif n_qp > 1.0 - tol and abs(par) > 1.0 - tol:
        label = "excited"
    else:
        label = "mixed"
    return ChainState(excess, n_qp, par, gw, label)


@dataclass
class MappingResult:
    n_e: float
    chain: ChainState
    energy_offset: float
    trajectory: object
    gamma_final: np.ndarray
    conditions: ConditionReport


def run_mapping(spec: MappingSpec, parity, dt=0.01, stride=None):
    """Run the mapping from the open-chain state of ``parity`` (+1 even, -1 odd).

    Returns
    -------
    MappingResult
        ``n_e`` external occupation, ``chain`` classification of the ring,
        ``energy_offset`` total energy above the final ground energy.
    """
    if parity not in (1, -1):
        raise ValueError("parity must be +1 or -1")
    m = mapping_model(spec)
    steps = [ProtocolStep.from_model(m, spec.t_f, _ramp(spec), f"map-{spec.direction}")]
    G0 = initial_state(spec, parity, m)
    traj = evolve(steps, G0, dt=dt, stride=stride, occupations=True)
    G = traj.gamma_final
    chain, closing, ext = _sites(spec)
    k = m.index(ext)
    n_e = 0.5 * (1.0 - G[2 * k, 2 * k + 1])
    end = 0.5 * math.pi if spec.direction == "forward" else 0.0
    h, off = hamiltonian_at(spec, end, m)
    offset = float(bdg.energy(h, G, off) - bdg.ground_energy(h, off))
    if spec.direction == "forward":
        ri = _indices(m, chain + closing)
        state = classify_ring(G[np.ix_(ri, ri)], h[np.ix_(ri, ri)])
    else:
        ci = _indices(m, chain)
        hc = h[np.ix_(ci, ci)]
        Gc = G[np.ix_(ci, ci)]
        e_ex = float(bdg.energy(hc, Gc) - bdg.ground_energy(hc))
        par = float(bdg.pfaffian(Gc))
        state = ChainState(e_ex, float("nan"), par, float("nan"),
                           "ground" if e_ex < 1e-2 else "excited")
    return MappingResult(float(n_e), state, offset, traj, G, spec.conditions())


EXPECTED = {
    # branch -> parity -> (external occupied, ring label)
    "ok": {-1: (False, "ground"), 1: (True, "ground")},
    "violation1": {-1: (True, "excited"), 1: (False, "excited")},
    "violation2": {-1: (False, "ground"), 1: (False, "excited")},
}


def outcome(res: MappingResult, tol=0.05):
    """``(external occupied, ring label)`` or None if ``n_e`` is not near 0 or 1."""
    if abs(res.n_e - round(res.n_e)) > tol:
        return None
    return (res.n_e > 0.5, res.chain.label)


def observed_branch(odd: MappingResult, even: MappingResult, tol=0.05):
    """Branch whose predicted pair of outcomes matches the two runs, or None."""
    pair = (outcome(odd, tol), outcome(even, tol))
    for name, table in EXPECTED.items():
        if pair == (table[-1], table[1]):
            return name
    return None


def run_both(spec: MappingSpec, dt=0.01):
    """Odd and even runs plus the observed branch."""
    odd = run_mapping(spec, -1, dt)
    even = run_mapping(spec, 1, dt)
    return odd, even, observed_branch(odd, even)


def round_trip_fidelity(spec: MappingSpec, parity, dt=0.01):
    """Fidelity after the forward map followed by the inverse map."""
    m = mapping_model(spec)
    ramp = RampPair(spec.schedule, spec.error_model.laser_lag)
    fwd = ProtocolStep.from_model(m, spec.t_f, ramp, "fwd")
    inv = ProtocolStep.from_model(m, spec.t_f, fwd.ramp.reversed(), "inv")
    G0 = initial_state(replace(spec, direction="forward"), parity, m)
    traj = evolve([fwd, inv], G0, dt=dt, snapshots=False)
    return bdg.fidelity(traj.gamma_final, G0)


# spectra ---------------------------------------------------------------------

@dataclass
class SpectralFlow:
    phi: np.ndarray
    energies: np.ndarray
    parities: np.ndarray
    gap23: float

    def rows(self):
        out = []
        for a, p in enumerate(self.phi):
            for k in range(self.energies.shape[1]):
                out.append((float(p), k, float(self.energies[a, k]), int(self.parities[a, k])))
        return out


def spectral_flow(spec: MappingSpec, phi=None, k=6):
    """Lowest ``k`` many-body levels along the ramp and the minimum gap
    between the second and third levels."""
    if k < 4:
        raise ValueError("need at least four levels")
    phi = np.linspace(0.0, 0.5 * math.pi, 91) if phi is None else np.asarray(phi, float)
    m = mapping_model(spec)
    E = np.zeros((len(phi), k))
    P = np.zeros((len(phi), k), dtype=int)
    for a, p in enumerate(phi):
        h, off = hamiltonian_at(spec, p, m)
        levels = bdg.many_body_spectrum(h, k, off)
        E[a] = [lv.energy for lv in levels]
        P[a] = [lv.parity for lv in levels]
    d = E[:, 2] - E[:, 1]
    gap = float(np.min(d))
    if len(phi) > 2:
        # avoided crossings can be far narrower than the grid spacing
        a = int(np.argmin(d))
        lo, hi = phi[max(a - 1, 0)], phi[min(a + 1, len(phi) - 1)]

        def split(x):
            h, off = hamiltonian_at(spec, x, m)
            lv = bdg.many_body_spectrum(h, 4, off)
            return lv[2].energy - lv[1].energy

        r = minimize_scalar(split, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        gap = min(gap, float(r.fun))
    return SpectralFlow(phi, E, P, gap)


def even_sector_gap(h, offset=0.0, k=8):
    """Gap between the two lowest even-parity many-body levels."""
    levels = bdg.many_body_spectrum(h, k, offset)
    even = [lv.energy for lv in levels if lv.parity == 1]
    while len(even) < 2:
        k *= 2
        levels = bdg.many_body_spectrum(h, k, offset)
        even = [lv.energy for lv in levels if lv.parity == 1]
    return even[1] - even[0]


def min_even_gap(spec: MappingSpec, points=61):
    """Minimum even-sector gap along the (possibly lagged) ramp path."""
    m = mapping_model(spec)
    step = ProtocolStep.from_model(m, 1.0, RampPair(spec.schedule, spec.error_model.laser_lag))
    s = np.linspace(0.0, 1.0, points)
    return float(min(even_sector_gap(step.h(x), step.offset(x)) for x in s))


def gap_vs_coupling(J_tilde_grid, base: MappingSpec, error_spec: MappingSpec | None = None,
                    points=61, V_rule=lambda jt, ve: 2.0 * jt ** 2 / ve):
    """Minimum even-sector gap versus ``J_tilde`` for an ideal and an error spec.

    ``V`` follows ``V_rule(J_tilde, V_e)`` at each grid point.

    Returns
    -------
    rows : list of (J_tilde, gap, variant)
    max_rel : float
        Largest relative difference between the two curves (nan without an
        error spec).
    """
    rows, ideal, err = [], [], []
    for jt in J_tilde_grid:
        if jt < 0:
            raise ValueError("J_tilde must be nonnegative")
        sp = replace(base, J_tilde=jt, V=V_rule(jt, base.V_e))
        g = min_even_gap(sp, points)
        ideal.append(g)
        rows.append((float(jt), g, "ideal"))
        if error_spec is not None:
            se = replace(error_spec, J_tilde=jt, V=V_rule(jt, error_spec.V_e))
            ge = min_even_gap(se, points)
            err.append(ge)
            rows.append((float(jt), ge, "error"))
    max_rel = float("nan")
    if error_spec is not None:
        rel = [abs(b - a) / a for a, b in zip(ideal, err) if a > 1e-12]
        max_rel = float(max(rel)) if rel else float("nan")
    return rows, max_rel


# two-wire qubit ------------------------------------------------------------

def map_two_wire_qubit(logical, spec: MappingSpec, dt=0.01, round_trip=False):
    """Map a logical basis state of a two-wire qubit onto ``(e_L, e_R)``.

    ``|0> = |+>_L |->_R`` and ``|1> = |->_L |+>_R``; the two wires are
    mapped simultaneously and independently.

    Returns
    -------
    (n_eL, n_eR) and, with ``round_trip``, the forward-plus-inverse fidelity.
    """
    if logical not in (0, 1):
        raise ValueError("logical state must be 0 or 1")
    pars = (1, -1) if logical == 0 else (-1, 1)
    specs = [replace(spec, label=f"c{w}", ext_label=f"e{w}") for w in "LR"]
    models = [mapping_model(s) for s in specs]
    sites = models[0].sites + models[1].sites
    wires = dict(models[0].wires)
    wires.update(models[1].wires)
    joint = QuadraticHamiltonian(sites, models[0].terms + models[1].terms, wires)
    n0 = 2 * models[0].n_modes
    n = 2 * joint.n_modes
    G0 = np.zeros((n, n))
    G0[:n0, :n0] = initial_state(specs[0], pars[0], models[0])
    G0[n0:, n0:] = initial_state(specs[1], pars[1], models[1])
    ramp = RampPair(spec.schedule, spec.error_model.laser_lag)
    fwd = ProtocolStep.from_model(joint, spec.t_f, ramp, "map")
    traj = evolve([fwd], G0, dt=dt, snapshots=False)
    G = traj.gamma_final
    occ = []
    for s in specs:
        k = joint.index(SiteId(s.ext_label, 1))
        occ.append(0.5 * (1.0 - G[2 * k, 2 * k + 1]))
    if not round_trip:
        return tuple(occ)
    inv = ProtocolStep.from_model(joint, spec.t_f, ramp.reversed(), "unmap")
    back = evolve([fwd, inv], G0, dt=dt, snapshots=False)
    return tuple(occ), bdg.fidelity(back.gamma_final, G0)
