"""Dense-matrix algebra of braid unitaries on Majorana-encoded qubits.

Majorana labels are strings such as ``"1A"`` (Majorana 1 of qubit A) or
``"R2"`` (right-end Majorana of wire 2).  A :class:`MajoranaRep` fixes their
order and builds Jordan-Wigner matrices; consecutive labels pair into one
fermion mode.

Wire parity is the eigenvalue of ``i g_a g_b`` for the two Majoranas of a
wire.  The nonlocal fermion of a wire is ``f = (g_a + i g_b) / 2`` so that
``f^dag f`` has eigenvalues 0 and 1; its vacuum (``i g_a g_b = -1``) is the
``+`` state of the wire.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .fock import majoranas

SQRT_HALF = 1.0 / np.sqrt(2.0)


class GateError(ValueError):
    """Invalid pair, unknown generator or malformed word."""


class MajoranaRep:
    """Matrices of ``m`` Majorana operators (``m`` even) on ``2^(m/2)`` states."""

    def __init__(self, labels):
        labels = list(labels)
        if len(labels) % 2 or len(set(labels)) != len(labels):
            raise GateError("need an even number of distinct Majorana labels")
        self.labels = labels
        self.index = {name: k for k, name in enumerate(labels)}
        self.ops = majoranas(len(labels) // 2)
        self.dim = self.ops[0].shape[0]

    def __getitem__(self, name):
        try:
            return self.ops[self.index[name]]
        except KeyError:
            raise GateError(f"unknown Majorana {name!r}") from None

    def anticommutator_defect(self):
        eye = np.eye(self.dim)
        worst = 0.0
        for i, a in enumerate(self.ops):
            for j, b in enumerate(self.ops):
                d = a @ b + b @ a - (2.0 * eye if i == j else 0.0)
                worst = max(worst, float(np.max(np.abs(d))))
        return worst

    def pair_parity(self, a, b):
        """``i g_a g_b``, the parity of the wire holding ``a`` and ``b``."""
        return 1j * self[a] @ self[b]


def braid_unitary(i, j, rep: MajoranaRep):
    """``(1 - g_i g_j) / sqrt 2``: sends ``g_i -> -g_j`` and ``g_j -> g_i`` under ``U^dag g U``."""
    if i == j:
        raise GateError("braid needs two distinct Majoranas")
    return SQRT_HALF * (np.eye(rep.dim) - rep[i] @ rep[j])


def exchange_unitary(i, j, rep: MajoranaRep):
    """``exp(pi g_i g_j / 4) = (1 + g_i g_j) / sqrt 2``."""
    if i == j:
        raise GateError("braid needs two distinct Majoranas")
    return SQRT_HALF * (np.eye(rep.dim) + rep[i] @ rep[j])


def joint_eigenvector(ops, values, dim):
    """Unit vector with ``op v = value v`` for commuting hermitian ``ops``."""
    P = np.eye(dim, dtype=complex)
    for op, val in zip(ops, values):
        P = P @ (0.5 * (np.eye(dim) + val * op))
    k = int(np.argmax(np.linalg.norm(P, axis=0)))
    v = P[:, k]
    v = v / np.linalg.norm(v)
    # fix the phase: largest component real positive
    m = int(np.argmax(np.abs(v)))
    return v * (abs(v[m]) / v[m])


# qubit encoding ----------------------------------------------------------

def qubit_labels(names=("A",)):
    """Majorana labels of the given qubits, four per qubit in wire order."""
    return [f"{k}{q}" for q in names for k in (1, 2, 3, 4)]


@dataclass
class LogicalEncoding:
    """Logical basis of one or more two-wire qubits.

    Columns of ``basis`` are ordered as binary strings over the qubits
    (first qubit most significant).
    """

    rep: MajoranaRep
    qubits: tuple
    basis: np.ndarray

    @property
    def projector(self):
        return self.basis @ self.basis.conj().T

    def logical(self, U):
        """Action of ``U`` restricted to the logical subspace and the leakage norm."""
        M = self.basis.conj().T @ U @ self.basis
        leak = float(np.linalg.norm(U @ self.basis - self.basis @ M, 2))
        return M, leak


def encoding(qubits=("A",)) -> LogicalEncoding:
    """Logical basis: ``|0> = |+>_L |->_R`` and ``|1> = -g_1 g_3 |0>`` per qubit.

    ``+`` and ``-`` refer to the wire parities ``i g_1 g_2`` (left wire) and
    ``i g_3 g_4`` (right wire) with the nonlocal-fermion convention of the
    module docstring, so ``|0>`` has ``i g_1 g_2 = -1`` and
    ``i g_3 g_4 = +1``.
    """
    qubits = tuple(qubits)
    rep = MajoranaRep(qubit_labels(qubits))
    ops, vals = [], []
    for q in qubits:
        ops += [rep.pair_parity(f"1{q}", f"2{q}"), rep.pair_parity(f"3{q}", f"4{q}")]
        vals += [-1.0, 1.0]
    ref = joint_eigenvector(ops, vals, rep.dim)
    flips = {q: -rep[f"1{q}"] @ rep[f"3{q}"] for q in qubits}
    cols = []
    for k in range(1 << len(qubits)):
        v = ref
        for pos, q in enumerate(qubits):
            if (k >> (len(qubits) - 1 - pos)) & 1:
                v = flips[q] @ v
        cols.append(v)
    return LogicalEncoding(rep, qubits, np.array(cols).T)


# words -------------------------------------------------------------------

_GEN = re.compile(r"^U(\d)(\d)(?:\^?([A-Z])([A-Z]))?$")


def parse_generator(label, default_qubit="A"):
    """``"U12"``, ``"U13^AA"``, ``"U21^AB"`` -> pair of Majorana labels."""
    m = _GEN.match(label.strip())
    if not m:
        raise GateError(f"unknown generator {label!r}")
    i, j, qa, qb = m.groups()
    qa = qa or default_qubit
    qb = qb or qa
    if not (1 <= int(i) <= 4 and 1 <= int(j) <= 4):
        raise GateError(f"Majorana index out of range in {label!r}")
    return f"{i}{qa}", f"{j}{qb}"


def parse_word(word):
    if isinstance(word, str):
        word = word.replace(",", " ").replace("[", " ").replace("]", " ").split()
    return list(word)


def word_unitary(word, rep: MajoranaRep, default_qubit="A"):
    """Product of generators in written order (the rightmost acts first)."""
    mats = []
    for g in parse_word(word):
        a, b = parse_generator(g, default_qubit)
        mats.append(braid_unitary(a, b, rep))
    return reduce(np.matmul, mats, np.eye(rep.dim, dtype=complex))


def remove_global_phase(M):
    """Divide by the phase of the largest-magnitude element."""
    flat = M.ravel()
    k = int(np.argmax(np.abs(flat)))
    if abs(flat[k]) == 0.0:
        return M
    return M * (abs(flat[k]) / flat[k])


def phase_equivalence(U_a, U_b, tol=1e-12):
    """True if ``U_a^dag U_b`` is a scalar multiple of the identity."""
    U_a, U_b = np.asarray(U_a), np.asarray(U_b)
    if U_a.shape != U_b.shape:
        return False
    P = U_a.conj().T @ U_b
    c = np.trace(P) / P.shape[0]
    return bool(abs(abs(c) - 1.0) <= tol and np.max(np.abs(P - c * np.eye(P.shape[0]))) <= tol)


_H = SQRT_HALF * np.array([[1, 1], [1, -1]], dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]])
_Z = np.diag([1.0, -1.0]).astype(complex)
_SWAP = np.eye(4)[[0, 2, 1, 3]].astype(complex)

TARGETS = {"I": np.eye(2, dtype=complex), "X": _X, "Y": _Y, "Z": _Z, "H": _H,
           "SWAP": _SWAP, "S": np.diag([1.0, 1j])}


@dataclass
class IdentityReport:
    passed: bool
    phase: complex
    leakage: float
    logical: np.ndarray
    target: str

    def as_dict(self):
        return {"target": self.target, "pass": self.passed,
                "phase": [float(self.phase.real), float(self.phase.imag)],
                "leakage": self.leakage,
                "logical_real": self.logical.real.tolist(),
                "logical_imag": self.logical.imag.tolist()}


def verify_identity(word, target, enc: LogicalEncoding | None = None, tol=1e-12):
    """Check that a braid word acts on the logical subspace as ``target``.

    Parameters
    ----------
    word : str or list of str
        Generators such as ``"U13 U12 U12"``; two-qubit words use
        ``"U21^AB"`` style labels.
    target : str or ndarray
        A name in ``TARGETS`` or an explicit matrix.
    """
    name = target if isinstance(target, str) else "matrix"
    if isinstance(target, str):
        if target not in TARGETS:
            raise GateError(f"unknown target gate {target!r}")
        target = TARGETS[target]
    target = np.asarray(target, dtype=complex)
    if enc is None:
        n_q = int(round(np.log2(target.shape[0])))
        enc = encoding(tuple("AB"[:n_q]) if n_q <= 2 else tuple(chr(65 + k) for k in range(n_q)))
    U = word_unitary(word, enc.rep, enc.qubits[0])
    M, leak = enc.logical(U)
    P = target.conj().T @ M
    phase = np.trace(P) / P.shape[0]
    ok = phase_equivalence(target, M, tol=1e-10) and leak <= tol
    return IdentityReport(bool(ok), complex(phase), leak, M, name)


def is_unitary(U, tol=1e-13):
    return bool(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) <= tol)


GATE_WORDS = {
    "Z": "U12 U12",
    "X": "U13 U13 U12 U12",
    "H": "U13 U12 U12",
    "SWAP": "U21^AB U43^AB U12^AA U34^AA U12^BB U34^BB U21^AB U43^AB",
}


# three-wire certificate ----------------------------------------------------

THREE_WIRE_LABELS = ["L1", "R1", "L2", "R2", "L3", "R3"]


def three_wire_rep():
    return MajoranaRep(THREE_WIRE_LABELS)


def three_wire_basis(rep: MajoranaRep):
    """Parity-labelled basis with phases fixed by right-end Majoranas.

    ``|+++>`` is the joint vacuum of the three wire fermions and the
    two-flip states are ``|+-->= -g_R2 g_R3 |+++>``,
    ``|--+> = -g_R1 g_R2 |+++>``, ``|-+-> = g_R1 g_R3 |+++>``.
    """
    ops = [rep.pair_parity(f"L{w}", f"R{w}") for w in (1, 2, 3)]
    ref = joint_eigenvector(ops, [-1.0, -1.0, -1.0], rep.dim)
    return {
        "+++": ref,
        "+--": -rep["R2"] @ rep["R3"] @ ref,
        "--+": -rep["R1"] @ rep["R2"] @ ref,
        "-+-": rep["R1"] @ rep["R3"] @ ref,
    }


def decompose(psi, basis: dict, tol=1e-12):
    """Amplitudes of ``psi`` on a labelled orthonormal set (small ones dropped)."""
    out = {}
    for k, v in basis.items():
        a = complex(np.vdot(v, psi))
        if abs(a) > tol:
            out[k] = a
    return out


def wire_parities(psi, rep: MajoranaRep, wires=(1, 2, 3)):
    """``<P_w>`` in the ``+`` = even convention of the wire fermion ``f``."""
    out = []
    for w in wires:
        P = -rep.pair_parity(f"L{w}", f"R{w}")
        out.append(float(np.vdot(psi, P @ psi).real))
    return tuple(out)


def apply_braid_word(word, psi, rep):
    """Apply exchanges ``U_{a,b} = exp(pi g_Ra g_Rb / 4)``; rightmost acts first.

    ``word`` is a sequence of ``"12"`` / ``"23"``.
    """
    for g in reversed(list(word)):
        a, b = {"12": ("R1", "R2"), "23": ("R2", "R3")}.get(g, (None, None))
        if a is None:
            raise GateError(f"unknown generator {g!r}")
        psi = exchange_unitary(a, b, rep) @ psi
    return psi


@dataclass
class NonabelianCertificate:
    states: dict
    parities: dict
    commutator_norm: float


def nonabelian_certificate():
    """Exact states of the four braid words on ``|+++>`` and ``||[U12, U23]||``."""
    rep = three_wire_rep()
    basis = three_wire_basis(rep)
    words = {"12.23": ["12", "23"], "23.12": ["23", "12"],
             "12.23.23.12": ["12", "23", "23", "12"],
             "23.12.12.23": ["23", "12", "12", "23"]}
    states, pars = {}, {}
    for name, w in words.items():
        psi = apply_braid_word(w, basis["+++"], rep)
        states[name] = decompose(psi, basis)
        pars[name] = wire_parities(psi, rep)
    U12 = exchange_unitary("R1", "R2", rep)
    U23 = exchange_unitary("R2", "R3", rep)
    comm = float(np.linalg.norm(U12 @ U23 - U23 @ U12, 2))
    return NonabelianCertificate(states, pars, comm)


def majorana_action(U, rep: MajoranaRep, tol=1e-9):
    """Signed map ``U g_a U^dag = sum_b M_ab g_b`` as ``{a: [(coef, b), ...]}``."""
    out = {}
    Ud = U.conj().T
    for a in rep.labels:
        img = U @ rep[a] @ Ud
        terms = []
        for b in rep.labels:
            c = complex(np.trace(rep[b] @ img) / rep.dim)
            if abs(c) > tol:
                terms.append((c, b))
        out[a] = terms
    return out


def is_fermionic_swap(U, rep: MajoranaRep, qa="A", qb="B", tol=1e-12):
    """True if ``U`` exchanges every Majorana of qubit ``qa`` with the same one of ``qb``."""
    act = majorana_action(U, rep)
    for k in (1, 2, 3, 4):
        for src, dst in ((f"{k}{qa}", f"{k}{qb}"), (f"{k}{qb}", f"{k}{qa}")):
            terms = act[src]
            if len(terms) != 1 or terms[0][1] != dst or abs(terms[0][0] - 1.0) > tol:
                return False
    return True
