import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from majoranet import bdg, braiding, fock
from majoranet.dynamics import (IntegrationError, ProtocolError, ProtocolStep, RampPair,
                                adaptive_ramp, evolve, instantaneous_gap, step_gap_profile,
                                validate_protocol)
from majoranet.lattice import QuadraticHamiltonian, SiteId, build_kitaev_chain, hop, kitaev_link


def four_site_step(t_f=4.0, schedule="linear", Jl=1.0, delta=1.3, Jp=0.8):
    """Two two-site wires: edge bonds ramp down while a rung hop ramps up."""
    u1, u2, l1, l2 = SiteId("u", 1), SiteId("u", 2), SiteId("l", 1), SiteId("l", 2)
    terms = (kitaev_link(u1, u2, Jl, delta, "C") + kitaev_link(l1, l2, 0.7, 0.9, "C")
             + [hop(u1, l1, Jp, "S"), hop(u2, l2, 0.3)])
    m = QuadraticHamiltonian((u1, u2, l1, l2), tuple(terms), {"u": 2, "l": 2})
    return ProtocolStep.from_model(m, t_f, RampPair(schedule))


def schrodinger_reference(step, gamma0):
    psi0 = fock.state_from_covariance(gamma0)

    def H(t):
        s = t / step.duration
        return fock.hamiltonian_from_majorana(step.h(s), step.offset(s))

    psi = fock.schrodinger_evolve(H, psi0, 0.0, step.duration)
    return fock.covariance_of_state(psi)


# ramps ----------------------------------------------------------------------------

@pytest.mark.parametrize("schedule", ["linear", "smoothstep", "smootherstep"])
@pytest.mark.parametrize("lag", [0.0, 0.05, 0.3])
def test_ramp_endpoints_and_monotonicity(schedule, lag):
    r = RampPair(schedule, lag)
    assert r.C(0.0) == 1.0 and r.C(1.0) == 0.0
    assert r.S(0.0) == 0.0 and r.S(1.0) == 1.0
    s = np.linspace(0, 1, 2001)
    assert np.all(np.diff(r.C(s)) <= 0) and np.all(np.diff(r.S(s)) >= 0)
    rev = r.reversed()
    assert np.allclose(rev.C(s), r.C(1 - s)) and np.allclose(rev.S(s), r.S(1 - s))


def test_ramp_rejects_bad_input():
    with pytest.raises(ValueError):
        RampPair("cubic")
    with pytest.raises(ValueError):
        RampPair("linear", lag=1.0)


def test_adaptive_ramp_endpoints():
    spec = braiding.ideal_spec(N=6, delta=1.0, ramp="linear")
    for st_ in braiding.build_braid_protocol(spec):
        r = adaptive_ramp(st_, 2)
        s = np.linspace(0, 1, 1001)
        assert r.C(0.0) == 1.0 and r.C(1.0) == 0.0 and r.S(0.0) == 0.0 and r.S(1.0) == 1.0
        assert np.all(np.diff(r.phi(s)) >= -1e-15)


# protocol validation -----------------------------------------------------------------

def test_protocol_validation():
    st_ = four_site_step()
    with pytest.raises(ProtocolError):
        validate_protocol([])
    bad = ProtocolStep(0.0, st_.h0, st_.hC, st_.hS)
    with pytest.raises(ProtocolError):
        validate_protocol([bad])
    with pytest.raises(ProtocolError):
        validate_protocol([st_, st_])  # the end of one is not the start of the next


def test_unknown_channel_rejected():
    a, b = SiteId("w", 1), SiteId("w", 2)
    m = QuadraticHamiltonian((a, b), (hop(a, b, 1.0, "X"),))
    with pytest.raises(ProtocolError):
        ProtocolStep.from_model(m, 1.0)


# evolution ------------------------------------------------------------------------------

def test_constant_hamiltonian_keeps_ground_state():
    m = build_kitaev_chain(6, 1.0, 1.4, 0.3)
    h, _ = m.to_majorana()
    z = np.zeros_like(h)
    G0 = bdg.ground_covariance(h)
    a, b = np.eye(12)[0], np.eye(12)[11]
    traj = evolve([ProtocolStep(5.0, h, z, z)], G0, dt=0.01, stride=10,
                  observables={"edge": (a, b)}, occupations=True)
    assert np.max(np.abs(traj.records["edge"] - traj.records["edge"][0])) < 1e-8
    assert np.max(np.abs(traj.records["occupation"] - traj.records["occupation"][0])) < 1e-8
    assert np.max(np.abs(traj.gamma_final - G0)) < 1e-8


@pytest.mark.parametrize("schedule", ["linear", "smootherstep"])
def test_four_site_step_matches_schrodinger(schedule):
    st_ = four_site_step(schedule=schedule)
    rng = np.random.default_rng(0)
    h0 = st_.h(0.0)
    for sector in (1, -1):
        G0 = bdg.ground_covariance(h0 + 0.1 * (lambda A: A - A.T)(rng.normal(size=h0.shape)),
                                   parity_sector=sector)
        G = evolve([st_], G0, dt=0.01, snapshots=False).gamma_final
        assert np.max(np.abs(G - schrodinger_reference(st_, G0))) < 1e-6


def test_braid_step_matches_schrodinger():
    spec = braiding.ideal_spec(N=3, delta=1.3, J_perp=1.0, V=1.0, t_f=3.0, ramp="linear")
    steps = braiding.build_braid_protocol(spec)
    G = braiding.wires_ground_state(spec.labels, {"u": spec.upper, "l": spec.lower}, 3, (1, -1))
    for st_ in steps:
        out = evolve([st_], G, dt=0.01, snapshots=False).gamma_final
        assert np.max(np.abs(out - schrodinger_reference(st_, G))) < 1e-6
        G = out


def test_halving_dt_reduces_error_fourfold():
    spec = braiding.ideal_spec(N=4, delta=1.3, J_perp=1.0, V=1.0, t_f=3.0, ramp="smootherstep")
    steps = braiding.build_braid_protocol(spec)
    G0 = braiding.wires_ground_state(spec.labels, {"u": spec.upper, "l": spec.lower}, 4, (1, 1))
    ref = evolve(steps, G0, dt=0.001, snapshots=False).gamma_final
    errs = [np.max(np.abs(evolve(steps, G0, dt=dt, snapshots=False).gamma_final - ref))
            for dt in (0.2, 0.1, 0.05)]
    assert errs[0] / errs[1] >= 4 and errs[1] / errs[2] >= 4


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 2 ** 31), sector=st.sampled_from([1, -1]))
def test_parity_purity_and_orthogonality_conserved(seed, sector):
    rng = np.random.default_rng(seed)
    st_ = four_site_step(t_f=float(rng.uniform(1, 5)), Jl=float(rng.uniform(0.5, 2)),
                         delta=float(rng.uniform(-2, 2)), Jp=float(rng.uniform(0.3, 2)))
    G0 = bdg.ground_covariance(st_.h(0.0), parity_sector=sector)
    traj = evolve([st_], G0, dt=0.01, stride=20)
    assert np.all(traj.records["parity"] == sector)
    assert bdg.purity_defect(traj.gamma_final) <= 1e-6
    R = traj.propagator
    assert np.max(np.abs(R @ R.T - np.eye(len(R)))) < 1e-8
    assert np.max(np.abs(R @ G0 @ R.T - traj.gamma_final)) < 1e-12


def test_too_large_step_raises_integration_error():
    spec = braiding.ideal_spec(N=4, delta=1.3, J_perp=1.0, V=1.0, t_f=3.0)
    steps = braiding.build_braid_protocol(spec)
    G0 = braiding.wires_ground_state(spec.labels, {"u": spec.upper, "l": spec.lower}, 4, (1, 1))
    with pytest.raises(IntegrationError, match="reduce dt"):
        evolve(steps, G0, dt=3.0, snapshots=False)


def test_impure_initial_state_rejected():
    st_ = four_site_step()
    with pytest.raises(bdg.ContractError):
        evolve([st_], 0.5 * bdg.ground_covariance(st_.h(0.0)))


def test_trajectory_long_rows():
    st_ = four_site_step(t_f=1.0)
    G0 = bdg.ground_covariance(st_.h(0.0))
    traj = evolve([st_], G0, dt=0.1, stride=5, occupations=True)
    rows = traj.long_rows()
    assert rows[0][0] == 0.0
    names = {r[1] for r in rows}
    assert "parity" in names and "occupation[3]" in names
    assert len(traj.times) == 3 and traj.step_boundaries == [0.0, 1.0]


# gaps ------------------------------------------------------------------------------------

def _braid_steps(Jp, V, Jl=1.0):
    w = braiding.WireParams(Jl, Jl, 0.0)
    spec = braiding.BraidSpec(N=6, upper=w, lower=w, J_perp=Jp, V=V, ramp="linear")
    return braiding.build_braid_protocol(spec)


@pytest.mark.parametrize("Jp,V", [(1.0, 1.0), (0.7, 1.3), (2.0, 2.0), (0.5, 0.4)])
@pytest.mark.parametrize("s", [0.1, 0.5, 0.83])
def test_step_gaps_follow_four_site_formulas(Jp, V, s):
    # ideal wires with J = delta = 1 have bulk gap 2
    phi = 0.5 * math.pi * s
    C, S = math.cos(phi), math.sin(phi)
    steps = _braid_steps(Jp, V)
    g = [instantaneous_gap(st_.h(s)) for st_ in steps]
    assert g[0] == pytest.approx(min(2.0, math.sqrt(4 * C * C + Jp * Jp * S * S)), abs=1e-10)
    assert g[1] == pytest.approx(min(2.0, Jp * (1 + S), math.sqrt(Jp ** 2 * (1 - S) ** 2 + 4 * S * S)),
                                 abs=1e-10)
    assert g[2] == pytest.approx(min(2.0, math.sqrt(4 * Jp * Jp * C * C + V * V * S * S)),
                                 abs=1e-10)
    assert g[3] == pytest.approx(min(2.0, math.sqrt(4 * S * S + V * V * C * C)),
                                 abs=1e-10)


def test_step_one_gap_at_quarter_turn():
    g = instantaneous_gap(_braid_steps(1.0, 1.0)[0].h(0.5))
    assert g == pytest.approx(math.sqrt(2.5), abs=1e-12)


def test_step_three_gap_at_start():
    g = instantaneous_gap(_braid_steps(0.6, 1.0)[2].h(0.0))
    assert g == pytest.approx(min(2.0, 2 * 0.6), abs=1e-12)


def test_decoupled_gap_equals_smallest_onsite_energy():
    m = build_kitaev_chain(5, 0.0, 0.0, -1.7)
    h, _ = m.to_majorana()
    assert instantaneous_gap(h) == pytest.approx(1.7)
    assert instantaneous_gap(h) == bdg.quasiparticle_spectrum(h).energies[0]


def test_gap_profile_stays_open_during_braid():
    for st_ in _braid_steps(2.0, 2.0):
        s, g = step_gap_profile(st_, n_tracked=2, points=41)
        assert g.min() > 1.0

