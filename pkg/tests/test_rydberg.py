import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from majoranet import rydberg as ry
from majoranet.rydberg import Atom, AtomRegister, PulseError, PulseOp, RegisterError, apply_pulse

GE = frozenset({"g", "e"})
GR = frozenset({"g", "ryd"})


def single(level="g", levels=GE):
    return AtomRegister.from_configs([Atom("a", levels)], {(("a", level),): 1.0})


def amps(reg, name="a"):
    return reg.state[[reg.index({name: lv}) for lv in ("g", "e")]]


# pulses -------------------------------------------------------------------------------------

def test_half_pulse_convention():
    out = apply_pulse(single(), PulseOp(("a",), math.pi / 2))
    assert np.allclose(amps(out), [1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-15)
    back = apply_pulse(out, PulseOp(("a",), math.pi / 2, phase=math.pi))
    assert np.allclose(amps(back), [1, 0], atol=1e-15)


def test_rotation_matrix_matches_register_pulse():
    for angle, phase in [(0.3, 0.0), (math.pi, 1.1), (1.5 * math.pi, -0.4)]:
        R = ry.rotation(angle, phase)
        out = apply_pulse(single(), PulseOp(("a",), angle, phase))
        assert np.allclose(amps(out), R[:, 0], atol=1e-14)


def test_pulse_on_empty_site_is_noop():
    atoms = [Atom("a", GE), Atom("b", GE)]
    reg = AtomRegister.from_configs(atoms, {(("a", "g"),): 1.0})
    out = apply_pulse(reg, PulseOp(("b",), 0.7 * math.pi))
    assert np.array_equal(out.state, reg.state)
    assert out.populations("b")["empty"] == pytest.approx(1.0)


def test_blockaded_pulse_leaves_state_unchanged():
    atoms = [Atom("a", GR, (0.0, 0.0)), Atom("b", GR, (0.5, 0.0))]
    reg = AtomRegister.from_configs(atoms, {(("a", "ryd"), ("b", "g")): 1.0}, blockade_radius=1.0)
    out = apply_pulse(reg, PulseOp(("b",), math.pi, levels=("g", "ryd"), regime="blockade"))
    assert np.allclose(out.state, reg.state, atol=1e-15)
    # outside the blockade radius the same pulse transfers fully
    far = [Atom("a", GR, (0.0, 0.0)), Atom("b", GR, (3.0, 0.0))]
    reg = AtomRegister.from_configs(far, {(("a", "ryd"), ("b", "g")): 1.0}, blockade_radius=1.0)
    out = apply_pulse(reg, PulseOp(("b",), math.pi, levels=("g", "ryd"), regime="blockade"))
    assert out.populations("b")["ryd"] == pytest.approx(1.0)


def test_invalid_pulses():
    with pytest.raises(PulseError):
        PulseOp(("a",), 1.0, levels=("g", "x"))
    with pytest.raises(PulseError):
        PulseOp(("a",), 1.0, levels=("g", "g"))
    with pytest.raises(PulseError):
        PulseOp(("a",), 1.0, levels=("empty", "g"))
    with pytest.raises(PulseError):
        PulseOp(("a",), 1.0, regime="strong")
    with pytest.raises(PulseError):
        apply_pulse(single(), PulseOp(("a",), 1.0, levels=("g", "ryd")))
    with pytest.raises(RegisterError):
        apply_pulse(single(), PulseOp(("zz",), 1.0))


def test_register_validation():
    with pytest.raises(RegisterError):
        AtomRegister([Atom("a"), Atom("a")])
    with pytest.raises(RegisterError):
        AtomRegister([Atom("a")], state=np.ones(4))
    with pytest.raises(RegisterError):
        AtomRegister.from_configs([Atom("a", GE)], {(("a", "ryd"),): 1.0})


@settings(max_examples=30, deadline=None)
@given(angle=st.floats(0, 4 * math.pi), phase=st.floats(-math.pi, math.pi),
       regime=st.sampled_from(["free", "blockade", "perturbative"]),
       rabi=st.floats(0.1, 10))
def test_pulses_are_unitary_and_keep_empty_sites_empty(angle, phase, regime, rabi):
    atoms = [Atom("a", GR, (0.0, 0.0)), Atom("b", GR, (0.8, 0.0)), Atom("c", GR, (5.0, 0.0))]
    reg = AtomRegister(atoms, blockade_radius=1.0)
    op = PulseOp(("a", "b"), angle, phase, ("g", "ryd"), regime, rabi)
    U, group = ry.pulse_unitary(reg, op)
    assert np.max(np.abs(U.conj().T @ U - np.eye(len(U)))) < 1e-12
    reg = AtomRegister.from_configs(atoms, {(("a", "g"),): 0.6, (("a", "g"), ("b", "g")): 0.8},
                                    blockade_radius=1.0)
    out = apply_pulse(reg, op)
    assert np.linalg.norm(out.state) == pytest.approx(1.0, abs=1e-12)
    assert out.populations("c")["empty"] == pytest.approx(1.0, abs=1e-12)
    assert out.forbidden_weight() < 1e-24


def test_blockade_suppression_is_monotone():
    ratios = [1.0, 0.3, 0.1, 0.03, 0.01]
    p = [ry.blocked_transfer(r) for r in ratios]
    assert all(b < a for a, b in zip(p, p[1:]))
    assert p[-1] < 1e-3


# error check ----------------------------------------------------------------------------------

@pytest.mark.parametrize("n,side,verdict", [(0, "L", "c_e"), (1, "L", "c_g"), (1, "R", "c_g"),
                                            (2, "L", "c_e")])
def test_error_check_truth_table(n, side, verdict):
    out = ry.error_check_sequence(n, side)
    assert out.verdict == verdict
    p = out.p_ground if verdict == "c_g" else out.p_excited
    assert p == pytest.approx(1.0, abs=1e-12)
    assert out.data_overlap == pytest.approx(1.0, abs=1e-12)


def test_single_particle_side_is_invisible():
    left = ry.error_check_sequence(1, "L").control
    right = ry.error_check_sequence(1, "R").control
    assert np.allclose(left, right, atol=1e-15)


@pytest.mark.parametrize("occ,amps_", [([("L",), ("R",)], [1.0, 1.0]),
                                        ([("L",), ("R",)], [0.6, 0.8j]),
                                        ([(), ("L", "R")], [1.0, -1.0])])
def test_check_preserves_data_superpositions(occ, amps_):
    reg = ry.check_register(occ, amps_)
    before = reg.reduced(["eL", "eR"])
    out = ry.error_check_sequence(register=reg)
    after = out.register.reduced(["eL", "eR"])
    assert np.max(np.abs(after - before)) < 1e-10
    assert max(out.p_ground, out.p_excited) == pytest.approx(1.0, abs=1e-12)


def test_error_check_argument_validation():
    with pytest.raises(ValueError):
        ry.error_check_sequence(3)
    with pytest.raises(ValueError):
        ry.error_check_sequence(1, "M")
    with pytest.raises(RegisterError):
        ry.check_register(("X",))
    with pytest.raises(RegisterError):
        ry.error_check_pulses(AtomRegister([Atom("c")]))


# controlled-Z ----------------------------------------------------------------------------------

def test_cz_truth_table():
    out = ry.cz_sequence()
    assert np.max(np.abs(out.matrix - np.diag([1, 1, 1, -1]))) < 1e-12
    assert out.leakage < 1e-12


@pytest.mark.parametrize("bits", ry.LOGICAL_CZ)
def test_cz_returns_atoms_to_ground(bits):
    out = ry.cz_pulses(ry.cz_register(bits))
    for name in ("eLA", "eRA", "eLB", "eRB", "sz"):
        assert out.populations(name)["ryd"] < 1e-24


def test_cz_on_bell_superposition():
    a, leak = ry.cz_sequence({"00": 1.0, "11": 1.0})
    assert np.allclose(a, np.array([1, 0, 0, -1]) / math.sqrt(2), atol=1e-12)
    assert leak < 1e-12


def test_cz_blockaded_first_step_breaks_gate():
    # exciting both e_L atoms under blockade leaves the 11 input incomplete
    out = ry.cz_sequence(first_regime="blockade")
    assert np.max(np.abs(out.matrix - np.diag([1, 1, 1, -1]))) > 0.1


def test_cz_needs_mediating_atom():
    reg = AtomRegister.from_configs(ry.cz_atoms()[:4], {(("eLA", "g"), ("eLB", "g")): 1.0})
    with pytest.raises(RegisterError):
        ry.cz_pulses(reg)
    with pytest.raises(RegisterError):
        ry.cz_register("12")


# phase gate ----------------------------------------------------------------------------------------

@pytest.mark.parametrize("angle", [0.0, 2 * math.pi])
def test_trivial_phase_angles_are_identity(angle):
    assert np.allclose(ry.phase_gate_logical(angle), np.eye(2), atol=1e-14)


def test_pi_over_eight_gate():
    M = ry.phase_gate_logical(math.pi / 4, duration=3.0)
    assert np.allclose(M, np.diag([1, np.exp(1j * math.pi / 4)]), atol=1e-14)


@given(theta=st.floats(-10, 10), duration=st.floats(0.1, 10))
def test_phase_gate_is_diagonal_with_requested_phase(theta, duration):
    M = ry.phase_gate_logical(theta, duration)
    assert np.allclose(M, np.diag([1, np.exp(1j * theta)]), atol=1e-12)


def test_phase_gate_needs_atom():
    with pytest.raises(RegisterError):
        ry.phase_gate(single(), "b", 1.0)
    with pytest.raises(ValueError):
        ry.phase_gate(single(), "a", 1.0, duration=0.0)
