"""Few-atom pulse sequences with a Rydberg-blockade interaction.

Every site carries four local states ``(empty, g, e, ryd)``; an empty site is
invariant under all pulses.  A resonant pulse of area ``theta`` and drive
phase ``phi`` between levels ``a -> b`` acts on an occupied site as

    R(theta, phi) = exp(theta / 2 * (e^{i phi} |b><a| - e^{-i phi} |a><b|))

so ``R(pi/2, 0)|g> = (|g> + |e>)/sqrt(2)`` and ``R(theta, pi)`` turns the
other way.  This is the single place where the rotation convention lives.

Blockade is handled in one of three regimes per pulse:

``free``
    drive much stronger than the interaction; atoms are independent.
``blockade``
    ideal constraint; couplings into states with two Rydberg atoms closer
    than ``blockade_radius`` are removed.
``perturbative``
    finite ``C6 / r^6`` energy shift plus the drive, evolved for the pulse
    duration ``theta / rabi``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

LEVELS = ("empty", "g", "e", "ryd")
_LEVEL_INDEX = {name: k for k, name in enumerate(LEVELS)}
LOCAL_DIM = len(LEVELS)


class PulseError(ValueError):
    """Pulse references a level or atom that the register does not have."""


class RegisterError(ValueError):
    """Register lacks an atom required by a sequence."""


@dataclass(frozen=True)
class Atom:
    name: str
    levels: frozenset = frozenset({"g", "e"})
    position: tuple = (0.0, 0.0)


@dataclass(frozen=True)
class PulseOp:
    """Resonant pulse of area ``angle`` on ``targets`` between two levels."""

    targets: tuple
    angle: float
    phase: float = 0.0
    levels: tuple = ("g", "e")
    regime: str = "free"
    rabi: float = 1.0

    def __post_init__(self):
        if self.regime not in ("free", "blockade", "perturbative"):
            raise PulseError(f"unknown regime {self.regime!r}")
        a, b = self.levels
        if a == b or a not in _LEVEL_INDEX or b not in _LEVEL_INDEX or "empty" in self.levels:
            raise PulseError(f"invalid level pair {self.levels!r}")
        if self.rabi <= 0:
            raise PulseError("rabi frequency must be positive")


def rotation(angle, phase=0.0):
    """2x2 rotation in the ``(a, b)`` level basis."""
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    w = np.exp(1j * phase)
    return np.array([[c, -s * np.conj(w)], [s * w, c]], dtype=complex)


def _generator(levels, phase):
    a, b = (_LEVEL_INDEX[x] for x in levels)
    A = np.zeros((LOCAL_DIM, LOCAL_DIM), dtype=complex)
    A[b, a] = np.exp(1j * phase)
    A[a, b] = -np.exp(-1j * phase)
    return A


def _lift(op, k, n):
    """Embed a single-site operator at slot ``k`` of ``n`` sites."""
    out = np.ones((1, 1), dtype=complex)
    eye = np.eye(LOCAL_DIM)
    for j in range(n):
        out = np.kron(out, op if j == k else eye)
    return out


@dataclass
class AtomRegister:
    """Joint state over ``(empty, g, e, ryd)`` for each listed site."""

    atoms: list
    state: np.ndarray = None
    C6: float = 1.0
    blockade_radius: float = 1.0
    _names: dict = field(init=False, repr=False)

    def __post_init__(self):
        self._names = {a.name: k for k, a in enumerate(self.atoms)}
        if len(self._names) != len(self.atoms):
            raise RegisterError("atom names must be unique")
        for a in self.atoms:
            if not set(a.levels) <= {"g", "e", "ryd"}:
                raise RegisterError(f"atom {a.name} has unknown levels {set(a.levels)}")
        dim = LOCAL_DIM ** len(self.atoms)
        if self.state is None:
            self.state = np.zeros(dim, dtype=complex)
            self.state[0] = 1.0
        self.state = np.asarray(self.state, dtype=complex)
        if self.state.shape != (dim,):
            raise RegisterError(f"state must have length {dim}")
        if abs(np.linalg.norm(self.state) - 1.0) > 1e-10:
            raise RegisterError("state must be normalized")
        if self.forbidden_weight() > 1e-12:
            raise RegisterError("state populates a level an atom does not have")

    @property
    def n_atoms(self):
        return len(self.atoms)

    def slot(self, name):
        try:
            return self._names[name]
        except KeyError:
            raise RegisterError(f"no atom named {name!r}") from None

    def has(self, name):
        return name in self._names

    def index(self, config):
        """Basis index of a ``{name: level}`` configuration (missing means empty)."""
        unknown = set(config) - set(self._names)
        if unknown:
            raise RegisterError(f"unknown atoms {sorted(unknown)}")
        idx = 0
        for a in self.atoms:
            idx = idx * LOCAL_DIM + _LEVEL_INDEX[config.get(a.name, "empty")]
        return idx

    def basis(self, config):
        v = np.zeros(LOCAL_DIM ** self.n_atoms, dtype=complex)
        v[self.index(config)] = 1.0
        return v

    @classmethod
    def from_configs(cls, atoms, amplitudes, **kw):
        """Superposition ``sum_k amp_k |config_k>`` from a ``{config: amp}`` map
        with configs given as tuples of ``(name, level)`` pairs."""
        reg = cls(atoms, **kw)
        v = np.zeros_like(reg.state)
        for cfg, amp in amplitudes.items():
            v[reg.index(dict(cfg))] += amp
        v /= np.linalg.norm(v)
        reg.state = v
        reg.__post_init__()
        return reg

    def copy(self):
        return AtomRegister(list(self.atoms), self.state.copy(), self.C6, self.blockade_radius)

    def tensor(self):
        return self.state.reshape((LOCAL_DIM,) * self.n_atoms)

    def forbidden_weight(self):
        t = np.abs(self.tensor()) ** 2
        w = 0.0
        for k, a in enumerate(self.atoms):
            for lvl in ("g", "e", "ryd"):
                if lvl not in a.levels:
                    w += float(np.take(t, _LEVEL_INDEX[lvl], axis=k).sum())
        return w

    def distance(self, i, j):
        return float(np.hypot(*np.subtract(self.atoms[i].position, self.atoms[j].position)))

    def interaction(self, i, j):
        r = self.distance(i, j)
        return math.inf if r == 0 else self.C6 / r ** 6

    def populations(self, name):
        """Probability of each local level on one site."""
        k = self.slot(name)
        t = np.abs(self.tensor()) ** 2
        axes = tuple(j for j in range(self.n_atoms) if j != k)
        p = t.sum(axis=axes)
        return dict(zip(LEVELS, p))

    def reduced(self, names):
        """Reduced density matrix on the listed sites, local basis ``LEVELS``."""
        keep = [self.slot(n) for n in names]
        rest = [j for j in range(self.n_atoms) if j not in keep]
        t = np.transpose(self.tensor(), keep + rest).reshape(LOCAL_DIM ** len(keep), -1)
        return t @ t.conj().T

    def apply(self, U, slots):
        """Apply a unitary on the listed slots (ordered as given)."""
        n = self.n_atoms
        rest = [j for j in range(n) if j not in slots]
        perm = list(slots) + rest
        t = np.transpose(self.tensor(), perm).reshape(LOCAL_DIM ** len(slots), -1)
        t = (U @ t).reshape((LOCAL_DIM,) * n)
        self.state = np.transpose(t, np.argsort(perm)).reshape(-1)
        return self


def _involved(reg: AtomRegister, op: PulseOp, slots):
    """Target slots plus any atom that can interact with them through ``ryd``."""
    if op.regime == "free" or "ryd" not in op.levels:
        return list(slots)
    extra = []
    for j, a in enumerate(reg.atoms):
        if j in slots or "ryd" not in a.levels:
            continue
        if op.regime == "perturbative" or any(reg.distance(j, s) <= reg.blockade_radius for s in slots):
            extra.append(j)
    return list(slots) + extra


def _ryd_pairs(reg, group, within):
    pairs = []
    for x in range(len(group)):
        for y in range(x + 1, len(group)):
            i, j = group[x], group[y]
            if "ryd" in reg.atoms[i].levels and "ryd" in reg.atoms[j].levels:
                if within is None or reg.distance(i, j) <= within:
                    pairs.append((x, y, reg.interaction(i, j)))
    return pairs


def _double_ryd(m, x, y):
    r = np.zeros(LOCAL_DIM)
    r[_LEVEL_INDEX["ryd"]] = 1.0
    return np.diag(_lift(np.diag(r), x, m) @ _lift(np.diag(r), y, m)).real


def pulse_unitary(reg: AtomRegister, op: PulseOp):
    """Unitary of ``op`` on the involved slots; returns ``(U, slots)``."""
    slots = [reg.slot(t) for t in op.targets]
    if len(set(slots)) != len(slots):
        raise PulseError("repeated target")
    for s in slots:
        missing = set(op.levels) - set(reg.atoms[s].levels)
        if missing:
            raise PulseError(f"atom {reg.atoms[s].name} has no level {sorted(missing)}")
    group = _involved(reg, op, slots)
    m = len(group)
    A = _generator(op.levels, op.phase)
    G = sum(_lift(A, x, m) for x in range(len(slots)))
    if op.regime == "free":
        if len(slots) == 1:
            return expm(0.5 * op.angle * A), group
        return expm(0.5 * op.angle * G), group
    if op.regime == "blockade":
        allowed = np.ones(LOCAL_DIM ** m)
        for x, y, _ in _ryd_pairs(reg, group, reg.blockade_radius):
            allowed *= 1.0 - _double_ryd(m, x, y)
        P = np.diag(allowed)
        return expm(0.5 * op.angle * (P @ G @ P)), group
    H, duration = _perturbative_hamiltonian(reg, op, group, G)
    return expm(-1j * H * duration), group


def _perturbative_hamiltonian(reg, op, group, G):
    """``H = i (rabi / 2) G + sum_pairs V n_ryd n_ryd`` and the pulse duration."""
    m = len(group)
    H = 0.5j * op.rabi * G
    for x, y, v in _ryd_pairs(reg, group, None):
        H = H + v * np.diag(_double_ryd(m, x, y))
    return H, op.angle / op.rabi


def apply_pulse(reg: AtomRegister, op: PulseOp) -> AtomRegister:
    """Return a new register with ``op`` applied."""
    U, group = pulse_unitary(reg, op)
    return reg.copy().apply(U, group)


def conditional_phase(reg: AtomRegister, control, level, sources, phi=math.pi):
    """Ideal phase ``exp(i phi n)`` on ``control`` in ``level``, with ``n`` the
    number of occupied ``sources``."""
    out = reg.copy()
    t = out.tensor().copy()
    c = out.slot(control)
    src = [out.slot(s) for s in sources]
    idx = np.indices(t.shape)
    n = sum((idx[s] != 0).astype(int) for s in src)
    mask = idx[c] == _LEVEL_INDEX[level]
    t = np.where(mask, t * np.exp(1j * phi * n), t)
    out.state = t.reshape(-1)
    return out


def level_phase(reg: AtomRegister, name, level, angle):
    out = reg.copy()
    d = np.ones(LOCAL_DIM, dtype=complex)
    d[_LEVEL_INDEX[level]] = np.exp(1j * angle)
    return out.apply(np.diag(d), [out.slot(name)])


# error check ----------------------------------------------------------------

CHECK_ATOMS = (
    Atom("c", frozenset({"g", "e"}), (0.0, 0.0)),
    Atom("eL", frozenset({"g", "e", "ryd"}), (-1.0, 0.0)),
    Atom("eR", frozenset({"g", "e", "ryd"}), (1.0, 0.0)),
)


def check_register(occupancy, amplitudes=None):
    """Control in ``g`` plus external sites.

    ``occupancy`` is a subset of ``{"L", "R"}`` or, with ``amplitudes``, a list of
    such subsets forming a superposition.
    """
    if amplitudes is None:
        occupancy, amplitudes = [occupancy], [1.0]
    terms = {}
    for occ, amp in zip(occupancy, amplitudes):
        if not set(occ) <= {"L", "R"}:
            raise RegisterError(f"bad occupancy {occ!r}")
        cfg = (("c", "g"),) + tuple((f"e{s}", "g") for s in sorted(occ))
        terms[cfg] = terms.get(cfg, 0.0) + amp
    return AtomRegister.from_configs(list(CHECK_ATOMS), terms)


def error_check_pulses(reg: AtomRegister) -> AtomRegister:
    """Parity check of the external sites written onto the control atom."""
    for name in ("c", "eL", "eR"):
        if not reg.has(name):
            raise RegisterError(f"error check needs atom {name!r}")
    r = apply_pulse(reg, PulseOp(("c",), 1.5 * math.pi))
    r = apply_pulse(r, PulseOp(("eL", "eR"), 0.5 * math.pi))
    r = conditional_phase(r, "c", "e", ("eL", "eR"), math.pi)
    return apply_pulse(r, PulseOp(("c", "eL", "eR"), 0.5 * math.pi, phase=math.pi))


@dataclass
class ErrorCheckOutcome:
    n: int
    occupancy: tuple
    p_ground: float
    p_excited: float
    control: np.ndarray
    data_overlap: float
    register: AtomRegister = field(repr=False)

    @property
    def verdict(self):
        return "c_g" if self.p_ground > 0.5 else "c_e"

    def as_dict(self):
        return {"n": self.n, "occupancy": list(self.occupancy), "verdict": self.verdict,
                "p_ground": self.p_ground, "p_excited": self.p_excited,
                "data_overlap": self.data_overlap}


def error_check_sequence(n=None, side="L", register=None) -> ErrorCheckOutcome:
    """Run the check for ``n`` particles (``side`` picks the site when ``n == 1``)
    or on an explicit register."""
    if register is None:
        if n not in (0, 1, 2):
            raise ValueError("n must be 0, 1 or 2")
        if side not in ("L", "R"):
            raise ValueError("side must be 'L' or 'R'")
        occ = {0: (), 1: (side,), 2: ("L", "R")}[n]
        register = check_register(occ)
    before = register.reduced(["eL", "eR"])
    after_reg = error_check_pulses(register)
    rho_c = after_reg.reduced(["c"])
    g, e = _LEVEL_INDEX["g"], _LEVEL_INDEX["e"]
    ctrl = rho_c[np.ix_([g, e], [g, e])]
    after = after_reg.reduced(["eL", "eR"])
    overlap = float(np.real(np.trace(before @ after)) / np.real(np.trace(before @ before)))
    occ_out = tuple(s for s in ("L", "R") if register.populations(f"e{s}")["empty"] < 0.5)
    n_out = len(occ_out) if n is None else n
    return ErrorCheckOutcome(n_out, occ_out, float(ctrl[0, 0].real), float(ctrl[1, 1].real),
                             ctrl, overlap, after_reg)


# controlled-Z ----------------------------------------------------------------

LOGICAL_CZ = ("00", "01", "10", "11")


def cz_atoms(r_a=1.0, arm=10.0):
    """Four external sites and the mediating atom ``sz`` midway between the
    two ``e_L`` sites.  ``e_R`` sites sit ``arm`` away from everything."""
    h = 0.5 * r_a
    lvl = frozenset({"g", "ryd"})
    return [Atom("eLA", lvl, (-h, 0.0)), Atom("eRA", lvl, (-h, -arm)),
            Atom("eLB", lvl, (h, 0.0)), Atom("eRB", lvl, (h, -arm)),
            Atom("sz", lvl, (0.0, 0.0))]


def _logical_config(bits):
    a, b = bits
    cfg = [("sz", "g")]
    cfg.append(("eLA", "g") if a == "0" else ("eRA", "g"))
    cfg.append(("eLB", "g") if b == "0" else ("eRB", "g"))
    return tuple(cfg)


def cz_register(amplitudes, r_a=1.0, blockade_radius=None):
    """Register in a superposition of logical two-qubit states ``{bits: amp}``."""
    if isinstance(amplitudes, str):
        amplitudes = {amplitudes: 1.0}
    bad = set(amplitudes) - set(LOGICAL_CZ)
    if bad:
        raise RegisterError(f"unknown logical inputs {sorted(bad)}")
    terms = {_logical_config(k): v for k, v in amplitudes.items()}
    radius = 1.5 * r_a if blockade_radius is None else blockade_radius
    return AtomRegister.from_configs(cz_atoms(r_a), terms, blockade_radius=radius)


def cz_pulses(reg: AtomRegister, first_regime="free") -> AtomRegister:
    """Excite ``e_L`` atoms, attempt to excite ``sz`` under blockade, bring
    ``sz`` down with a pi phase, de-excite ``e_L``."""
    for name in ("eLA", "eLB", "eRA", "eRB"):
        if not reg.has(name):
            raise RegisterError(f"controlled-Z needs atom {name!r}")
    if not reg.has("sz"):
        raise RegisterError("controlled-Z needs the mediating atom 'sz'")
    ryd = ("g", "ryd")
    r = apply_pulse(reg, PulseOp(("eLA", "eLB"), math.pi, levels=ryd, regime=first_regime))
    r = apply_pulse(r, PulseOp(("sz",), math.pi, levels=ryd, regime="blockade"))
    r = apply_pulse(r, PulseOp(("sz",), math.pi, levels=ryd, regime="blockade"))
    return apply_pulse(r, PulseOp(("eLA", "eLB"), math.pi, phase=math.pi, levels=ryd,
                                  regime=first_regime))


@dataclass
class CZOutcome:
    matrix: np.ndarray
    leakage: float

    @property
    def phases(self):
        return np.diag(self.matrix)

    def as_dict(self):
        d = self.phases
        return {"phases": {k: [float(v.real), float(v.imag)] for k, v in zip(LOGICAL_CZ, d)},
                "leakage": self.leakage}


def cz_sequence(inputs=None, r_a=1.0, first_regime="free"):
    """Logical action of the pulse sequence.

    With ``inputs`` a bit string or ``{bits: amp}`` map, returns the output
    amplitudes over ``LOGICAL_CZ`` and the weight outside the logical space.
    Without ``inputs`` returns a :class:`CZOutcome` for the full 4x4 action.
    """
    ref = cz_register("00", r_a)
    logical = np.array([ref.index(dict(_logical_config(k))) for k in LOGICAL_CZ])
    if inputs is not None:
        out = cz_pulses(cz_register(inputs, r_a), first_regime).state
        amps = out[logical]
        return amps, float(max(0.0, 1.0 - np.sum(np.abs(amps) ** 2)))
    M = np.zeros((4, 4), dtype=complex)
    leak = 0.0
    for col, k in enumerate(LOGICAL_CZ):
        out = cz_pulses(cz_register(k, r_a), first_regime).state
        M[:, col] = out[logical]
        leak = max(leak, 1.0 - float(np.sum(np.abs(M[:, col]) ** 2)))
    return CZOutcome(M, max(leak, 0.0))


# single-site phase -----------------------------------------------------------

def phase_gate(reg: AtomRegister, atom, angle, duration=1.0, level="e"):
    """Park the atom in an offset level long enough to pick up ``angle``.

    pi pulse ``g -> level``, free evolution under energy ``-angle / duration``,
    pi pulse back with the opposite drive phase.
    """
    if not reg.has(atom):
        raise RegisterError(f"no atom named {atom!r}")
    if duration <= 0:
        raise ValueError("duration must be positive")
    offset = -angle / duration
    r = apply_pulse(reg, PulseOp((atom,), math.pi, levels=("g", level)))
    r = level_phase(r, atom, level, -offset * duration)
    return apply_pulse(r, PulseOp((atom,), math.pi, phase=math.pi, levels=("g", level)))


def phase_gate_logical(angle, duration=1.0):
    """2x2 action on an occupancy qubit (empty, occupied)."""
    atoms = [Atom("q", frozenset({"g", "e"}))]
    M = np.zeros((2, 2), dtype=complex)
    for col, cfg in enumerate([(), (("q", "g"),)]):
        reg = AtomRegister.from_configs(atoms, {cfg: 1.0})
        out = phase_gate(reg, "q", angle, duration).state
        M[:, col] = out[[0, _LEVEL_INDEX["g"]]]
    return M


def blocked_transfer(ratio, points=4001):
    """Largest Rydberg population reached by a pi pulse on an atom whose
    neighbour is already in ``ryd``, with drive/interaction ``ratio``."""
    atoms = [Atom("a", frozenset({"g", "ryd"}), (0.0, 0.0)),
             Atom("b", frozenset({"g", "ryd"}), (1.0, 0.0))]
    reg = AtomRegister.from_configs(atoms, {(("a", "ryd"), ("b", "g")): 1.0}, C6=1.0)
    rabi = ratio * reg.interaction(0, 1)
    op = PulseOp(("b",), math.pi, levels=("g", "ryd"), regime="perturbative", rabi=rabi)
    slots = [reg.slot("b")]
    group = _involved(reg, op, slots)
    G = _lift(_generator(op.levels, op.phase), 0, len(group))
    H, duration = _perturbative_hamiltonian(reg, op, group, G)
    psi = np.transpose(reg.tensor(), group).reshape(-1)
    target = reg.index({"a": "ryd", "b": "ryd"})
    w, V = np.linalg.eigh(H)
    c = V.conj().T @ psi
    s = np.linspace(0.0, duration, points)
    amps = (V[target] * c) @ np.exp(-1j * np.outer(w, s))
    return float(np.max(np.abs(amps) ** 2))
