"""Quadratic fermion Hamiltonians on wire networks.

A model is an ordered list of sites plus a list of hopping, pairing and
potential terms.  Compiling a model gives the real antisymmetric Majorana
matrix ``h`` and a constant offset such that

    H = (i/4) sum_kl h_kl c_k c_l + offset

with Majorana operators ``c[2j] = a_j^dag + a_j`` and
``c[2j+1] = -i (a_j^dag - a_j)`` (0-based site index ``j``).

Conventions for the three term kinds (amplitude ``A``):

* ``hop``:  -A (a_i^dag a_j + h.c.)
* ``pair``:  A (a_i a_j + h.c.)
* ``pot``:   A a_i^dag a_i

A Kitaev link is a hop and a pair of equal orientation, and a chemical
potential ``mu`` enters as ``pot`` with amplitude ``-mu``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class GeometryError(ValueError):
    """Invalid lattice geometry (too short, mismatched lengths, unknown site)."""


class SiteId(NamedTuple):
    """A lattice site: wire label and 1-based position along the wire."""

    wire: str
    index: int

    def __str__(self):
        return f"{self.wire}{self.index}"


TERM_KINDS = ("hop", "pair", "pot")


@dataclass(frozen=True)
class QuadraticTerm:
    """One hopping, pairing or potential term.

    ``channel`` names the time-dependent weight multiplying the term in a
    protocol step: ``"const"`` for static terms, ``"C"`` or ``"S"`` for the
    two ramp functions.
    """

    kind: str
    sites: tuple
    amplitude: float
    channel: str = "const"

    def __post_init__(self):
        if self.kind not in TERM_KINDS:
            raise ValueError(f"unknown term kind {self.kind!r}")
        nsites = 1 if self.kind == "pot" else 2
        if len(self.sites) != nsites:
            raise ValueError(f"{self.kind} term needs {nsites} site(s)")
        if nsites == 2 and self.sites[0] == self.sites[1]:
            raise ValueError("hopping/pairing must connect distinct sites")
        if not np.isfinite(self.amplitude):
            raise ValueError("term amplitude must be finite")

    def scaled(self, factor: float, channel: str | None = None) -> "QuadraticTerm":
        return replace(self, amplitude=self.amplitude * factor,
                       channel=self.channel if channel is None else channel)

    def moved(self, sites) -> "QuadraticTerm":
        return replace(self, sites=tuple(sites))


def hop(i, j, amp, channel="const"):
    return QuadraticTerm("hop", (i, j), float(amp), channel)


def pair(i, j, amp, channel="const"):
    return QuadraticTerm("pair", (i, j), float(amp), channel)


def pot(i, amp, channel="const"):
    return QuadraticTerm("pot", (i,), float(amp), channel)


def kitaev_link(i, j, J, delta, channel="const"):
    """Hopping plus pairing between ``i`` and ``j`` (one Kitaev bond)."""
    return [hop(i, j, J, channel), pair(i, j, delta, channel)]


@dataclass(frozen=True)
class QuadraticHamiltonian:
    """Ordered sites plus quadratic terms.

    ``wires`` maps wire labels to declared lengths; sites whose wire is
    declared must have an index within that length.
    """

    sites: tuple
    terms: tuple = ()
    wires: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.sites)) != len(self.sites):
            raise GeometryError("duplicate site ids")
        for s in self.sites:
            n = self.wires.get(s.wire)
            if s.index < 1 or (n is not None and s.index > n):
                raise GeometryError(f"site {s} outside wire length {n}")
        lookup = {s: k for k, s in enumerate(self.sites)}
        object.__setattr__(self, "_lookup", lookup)
        for t in self.terms:
            for s in t.sites:
                if s not in lookup:
                    raise GeometryError(f"term references unknown site {s}")

    @property
    def n_modes(self) -> int:
        return len(self.sites)

    def index(self, site) -> int:
        try:
            return self._lookup[site]
        except KeyError:
            raise GeometryError(f"unknown site {site}") from None

    def with_terms(self, terms: Iterable[QuadraticTerm]) -> "QuadraticHamiltonian":
        return replace(self, terms=tuple(self.terms) + tuple(terms))

    def replace_terms(self, terms: Iterable[QuadraticTerm]) -> "QuadraticHamiltonian":
        return replace(self, terms=tuple(terms))

    def channel(self, name: str) -> "QuadraticHamiltonian":
        """Sub-model holding only the terms of one channel."""
        return replace(self, terms=tuple(t for t in self.terms if t.channel == name))

    def channels(self) -> list:
        seen = []
        for t in self.terms:
            if t.channel not in seen:
                seen.append(t.channel)
        return seen

    def wire_sites(self, wire: str) -> list:
        return [k for k, s in enumerate(self.sites) if s.wire == wire]

    def neighbours(self, site) -> list:
        """Sites connected to ``site`` by any hop/pair term."""
        out = []
        for t in self.terms:
            if t.kind == "pot" or site not in t.sites:
                continue
            other = t.sites[1] if t.sites[0] == site else t.sites[0]
            if other not in out:
                out.append(other)
        return out

    def to_majorana(self, channel: str | None = None):
        """Compile to ``(h, offset)``; restrict to one channel if given."""
        return to_majorana(self, channel)


def to_majorana(model: QuadraticHamiltonian, channel: str | None = None):
    """Majorana matrix ``h`` (exactly antisymmetric) and constant offset.

    Parameters
    ----------
    model : QuadraticHamiltonian
    channel : str, optional
        Only compile terms carrying this channel label.

    Returns
    -------
    h : ndarray, shape (2N, 2N)
    offset : float
        The constant produced by normal ordering the potentials.
    """
    n = model.n_modes
    h = np.zeros((2 * n, 2 * n))
    offset = 0.0
    for t in model.terms:
        if channel is not None and t.channel != channel:
            continue
        a = t.amplitude
        if t.kind == "pot":
            i = model.index(t.sites[0])
            h[2 * i, 2 * i + 1] -= a
            offset += 0.5 * a
            continue
        i, j = model.index(t.sites[0]), model.index(t.sites[1])
        xi, yi, xj, yj = 2 * i, 2 * i + 1, 2 * j, 2 * j + 1
        if t.kind == "hop":
            h[xi, yj] += a
            h[xj, yi] += a
        else:
            h[xj, yi] += a
            h[xi, yj] -= a
    h = h - h.T
    return h, offset


def open_wire_sites(label: str, n: int) -> list:
    return [SiteId(label, j) for j in range(1, n + 1)]


def wire_terms(label: str, n: int, J: float, delta: float, mu: float,
               boundary: str = "open", skip_links: Sequence = ()) -> list:
    """Terms of one Kitaev wire.  ``skip_links`` lists 1-based left ends
    of bonds to leave out (e.g. ``[1]`` drops the (1, 2) bond)."""
    terms = []
    for j in range(1, n):
        if j in skip_links:
            continue
        terms += kitaev_link(SiteId(label, j), SiteId(label, j + 1), J, delta)
    if boundary == "closed":
        terms += kitaev_link(SiteId(label, n), SiteId(label, 1), J, delta)
    if mu != 0.0:
        terms += [pot(SiteId(label, j), -mu) for j in range(1, n + 1)]
    return terms


def build_kitaev_chain(N: int, J: float = 1.0, delta: float = 1.0, mu: float = 0.0,
                       boundary: str = "open", label: str = "w") -> QuadraticHamiltonian:
    """Single Kitaev wire with open or closed (ring) boundary.

    Raises
    ------
    GeometryError
        If ``N < 2`` or the boundary is unknown.
    """
    if N < 2:
        raise GeometryError("a chain needs at least two sites")
    if boundary not in ("open", "closed"):
        raise GeometryError(f"unknown boundary {boundary!r}")
    return QuadraticHamiltonian(tuple(open_wire_sites(label, N)),
                                tuple(wire_terms(label, N, J, delta, mu, boundary)),
                                {label: N})


@dataclass(frozen=True)
class TrapPotential:
    """Harmonic trap with per-site potential ``V_t ((L+1)/2 - j)^2 / L^2``."""

    strength: float
    length: int

    def profile(self) -> np.ndarray:
        j = np.arange(1, self.length + 1)
        return self.strength * ((self.length + 1) / 2 - j) ** 2 / self.length ** 2


def add_trap(model: QuadraticHamiltonian, trap: TrapPotential,
             wires: Sequence[str] | None = None) -> QuadraticHamiltonian:
    """Add the trap profile to each listed wire (all declared wires by default)."""
    wires = list(model.wires) if wires is None else list(wires)
    extra = []
    for w in wires:
        if model.wires.get(w) != trap.length:
            raise GeometryError(f"trap length {trap.length} does not match wire {w}")
        if trap.strength == 0.0:
            continue
        for j, v in enumerate(trap.profile(), start=1):
            extra.append(pot(SiteId(w, j), v))
    return model.with_terms(extra)


@dataclass(frozen=True)
class ErrorModel:
    """Imperfect-control parameters.

    Attributes
    ----------
    delta_K : leak factor when an intra-wire edge bond is switched
    delta_perp : fraction of each inter-wire term copied onto the inner rung
    delta_v : fraction of a switched potential leaking onto neighbour sites
    mu_r : half-width of uniform per-site chemical potential disorder
    laser_lag : fractional timing offset between the C and S channels
    intensity_leak : fraction of addressed potentials landing on neighbours
    seed : RNG seed for the disorder draw
    """

    delta_K: float = 0.0
    delta_perp: float = 0.0
    delta_v: float = 0.0
    mu_r: float = 0.0
    laser_lag: float = 0.0
    intensity_leak: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("delta_K", "delta_perp", "delta_v", "laser_lag", "intensity_leak"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.mu_r < 0:
            raise ValueError("mu_r must be nonnegative")
        if self.laser_lag >= 1.0:
            raise ValueError("laser_lag must be below 1")

    @property
    def is_ideal(self) -> bool:
        return (self.delta_K == self.delta_perp == self.delta_v == self.mu_r
                == self.laser_lag == self.intensity_leak == 0.0)

    def disorder(self, sites: Sequence) -> dict:
        """Per-site chemical potential shifts, reproducible from ``seed``."""
        if self.mu_r == 0.0:
            return {}
        rng = np.random.default_rng(self.seed)
        draws = rng.uniform(-self.mu_r, self.mu_r, size=len(sites))
        return dict(zip(sites, draws))


def inward(site: SiteId, wire_lengths: dict) -> SiteId | None:
    """Neighbour of an end site one step into its wire (None for bulk sites)."""
    n = wire_lengths.get(site.wire)
    if n is None:
        return None
    if site.index == 1:
        return SiteId(site.wire, 2)
    if site.index == n:
        return SiteId(site.wire, n - 1)
    return None


def _orient(t: QuadraticTerm, a: SiteId, b: SiteId) -> QuadraticTerm:
    # keep the pairing orientation of the term it was derived from
    return t.moved((a, b))


def apply_error_model(terms: Sequence[QuadraticTerm], em: ErrorModel,
                      wire_lengths: dict, edge_links: Sequence = (),
                      leak_targets: dict | None = None,
                      disorder_sites: Sequence = ()) -> list:
    """Distort a protocol step's term list with cross-talk and disorder.

    Parameters
    ----------
    terms : list of QuadraticTerm
        Ideal step terms (channels ``const``, ``C``, ``S``).
    em : ErrorModel
    wire_lengths : dict
        Declared wire lengths, used to find inward neighbours.
    edge_links : sequence of (edge_bond, next_bond, weight)
        Intra-wire edge bonds whose switching leaks onto the adjacent bond.
        ``edge_bond`` and ``next_bond`` are site pairs; ``weight`` is the
        channel of the edge bond in this step (``"C"``, ``"S"``, ``"off"``
        or ``"on"``).  The adjacent bond's terms are rescaled by
        ``1 - delta_K (1 - w)``.
    leak_targets : dict, optional
        Site -> neighbour list for potential leakage.  Defaults to the
        inward neighbour plus the end site of every wire reached by an
        inter-wire term at that site.
    disorder_sites : sequence of SiteId
        Sites receiving a uniform chemical potential draw.

    Returns
    -------
    list of QuadraticTerm
    """
    out = []
    edge_map = {}
    for edge, nxt, weight in edge_links:
        edge_map[frozenset(nxt)] = weight
    # (ii) leak through switched edge bonds onto the following bond
    for t in terms:
        key = frozenset(t.sites) if t.kind != "pot" else None
        w = edge_map.get(key)
        if w is None or w == "on" or em.delta_K == 0.0 or t.channel != "const":
            out.append(t)
            continue
        if w == "off":
            out.append(t.scaled(1.0 - em.delta_K))
        else:
            out.append(t.scaled(1.0 - em.delta_K))
            out.append(t.scaled(em.delta_K, channel=w))
    # (i) inter-wire terms copy onto the inner rung
    if em.delta_perp > 0.0:
        for t in terms:
            if t.kind == "pot" or t.sites[0].wire == t.sites[1].wire:
                continue
            a, b = (inward(s, wire_lengths) for s in t.sites)
            if a is None or b is None:
                continue
            out.append(_orient(t, a, b).scaled(em.delta_perp))
    # (iii) potentials leak onto neighbours
    leak = em.delta_v + em.intensity_leak
    if leak > 0.0:
        if leak_targets is None:
            leak_targets = _default_leak_targets(terms, wire_lengths)
        for t in terms:
            if t.kind != "pot":
                continue
            for nb in leak_targets.get(t.sites[0], ()):
                out.append(t.moved((nb,)).scaled(leak))
    for s, d in em.disorder(list(disorder_sites)).items():
        out.append(pot(s, -d))
    return out


def _default_leak_targets(terms, wire_lengths):
    targets = {}
    for t in terms:
        if t.kind != "pot":
            continue
        s = t.sites[0]
        nbs = []
        inner = inward(s, wire_lengths)
        if inner is not None:
            nbs.append(inner)
        for u in terms:
            if u.kind == "pot" or s not in u.sites:
                continue
            other = u.sites[1] if u.sites[0] == s else u.sites[0]
            if other.wire != s.wire and other not in nbs:
                nbs.append(other)
        targets[s] = nbs
    return targets


# ---------------------------------------------------------------- model files

MODEL_PARAMS = ("J_perp", "V", "V_e", "J_tilde", "V_t")
ERROR_FIELDS = ("delta_K", "delta_perp", "delta_v", "mu_r", "laser_lag",
                "intensity_leak", "seed")


@dataclass(frozen=True)
class WireSpec:
    """Parameters of one Kitaev wire in a model file."""

    N: int
    J: float = 1.0
    delta: float = 1.0
    mu: float = 0.0
    boundary: str = "open"


@dataclass(frozen=True)
class ModelSpec:
    """Serializable description of a wire network.

    The JSON schema (``schema`` = 1) is::

        {"schema": 1,
         "wires": {label: {"N": int, "J": float, "delta": float,
                           "mu": float, "boundary": "open"|"closed"}},
         "params": {"J_perp": float, "V": float, "V_e": float,
                    "J_tilde": float, "V_t": float},
         "error_model": {"delta_K": ..., "delta_perp": ..., "delta_v": ...,
                         "mu_r": ..., "laser_lag": ..., "intensity_leak": ...,
                         "seed": int},
         "extra_terms": [{"kind": "hop"|"pair"|"pot",
                          "sites": [[wire, index], ...],
                          "amplitude": float, "channel": str}, ...]}

    Only wire labels and lengths are required; missing entries take the
    dataclass defaults.  Floats are written with ``repr`` precision so a
    save/load cycle reproduces every value exactly.
    """

    wires: dict
    params: dict = field(default_factory=dict)
    error_model: ErrorModel = field(default_factory=ErrorModel)
    extra_terms: tuple = ()

    def __post_init__(self):
        wires = {}
        for label, w in self.wires.items():
            w = w if isinstance(w, WireSpec) else WireSpec(**w)
            if w.N < 2:
                raise GeometryError(f"wire {label} needs at least two sites")
            if w.boundary not in ("open", "closed"):
                raise GeometryError(f"unknown boundary {w.boundary!r}")
            wires[str(label)] = w
        object.__setattr__(self, "wires", wires)
        unknown = set(self.params) - set(MODEL_PARAMS)
        if unknown:
            raise ValueError(f"unknown model parameters {sorted(unknown)}")
        object.__setattr__(self, "params", {k: float(v) for k, v in self.params.items()})
        object.__setattr__(self, "extra_terms", tuple(self.extra_terms))

    def build(self) -> QuadraticHamiltonian:
        """Wires (with trap ``V_t`` if set) plus the extra terms."""
        sites, terms = [], []
        for label, w in self.wires.items():
            sites += open_wire_sites(label, w.N)
            terms += wire_terms(label, w.N, w.J, w.delta, w.mu, w.boundary)
        lengths = {label: w.N for label, w in self.wires.items()}
        for t in self.extra_terms:
            for s in t.sites:
                if s.wire not in lengths and s not in sites:
                    sites.append(s)
        model = QuadraticHamiltonian(tuple(sites), tuple(terms) + self.extra_terms, lengths)
        vt = self.params.get("V_t", 0.0)
        if vt != 0.0:
            for label, w in self.wires.items():
                model = add_trap(model, TrapPotential(vt, w.N), [label])
        return model

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "wires": {k: vars(w).copy() for k, w in self.wires.items()},
            "params": dict(self.params),
            "error_model": {f: getattr(self.error_model, f) for f in ERROR_FIELDS},
            "extra_terms": [term_to_dict(t) for t in self.extra_terms],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        schema = d.pop("schema", 1)
        if schema != 1:
            raise ValueError(f"unsupported model file schema {schema}")
        unknown = set(d) - {"wires", "params", "error_model", "extra_terms"}
        if unknown:
            raise ValueError(f"unknown model file keys {sorted(unknown)}")
        if not d.get("wires"):
            raise GeometryError("model file declares no wires")
        em = d.get("error_model") or {}
        bad = set(em) - set(ERROR_FIELDS)
        if bad:
            raise ValueError(f"unknown error model fields {sorted(bad)}")
        return cls(wires=d["wires"], params=d.get("params") or {},
                   error_model=ErrorModel(**em),
                   extra_terms=tuple(term_from_dict(t) for t in d.get("extra_terms") or ()))


def term_to_dict(t: QuadraticTerm) -> dict:
    return {"kind": t.kind, "sites": [[s.wire, s.index] for s in t.sites],
            "amplitude": t.amplitude, "channel": t.channel}


def term_from_dict(d: dict) -> QuadraticTerm:
    sites = tuple(SiteId(str(w), int(i)) for w, i in d["sites"])
    return QuadraticTerm(d["kind"], sites, float(d["amplitude"]), d.get("channel", "const"))


def hamiltonian_to_dict(model: QuadraticHamiltonian) -> dict:
    """Term-level serialization of an arbitrary model."""
    return {"sites": [[s.wire, s.index] for s in model.sites],
            "wires": dict(model.wires),
            "terms": [term_to_dict(t) for t in model.terms]}


def hamiltonian_from_dict(d: dict) -> QuadraticHamiltonian:
    return QuadraticHamiltonian(tuple(SiteId(str(w), int(i)) for w, i in d["sites"]),
                                tuple(term_from_dict(t) for t in d["terms"]),
                                {str(k): int(v) for k, v in d.get("wires", {}).items()})


def save_model(spec: ModelSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec.to_dict(), fh, indent=2)
        fh.write("\n")


def load_model(path) -> ModelSpec:
    with open(path) as fh:
        return ModelSpec.from_dict(json.load(fh))
