import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from majoranet import bdg
from majoranet.lattice import (ErrorModel, GeometryError, ModelSpec, QuadraticHamiltonian,
                               SiteId, TrapPotential, WireSpec, add_trap, apply_error_model,
                               build_kitaev_chain, hamiltonian_from_dict, hamiltonian_to_dict,
                               hop, kitaev_link, load_model, pair, pot, save_model, to_majorana)


def expand_term(kind, i, j, amp, n):
    """Independent Majorana expansion of one term into (h, offset).

    a_j = (c_x - i c_y)/2, a_j^dag = (c_x + i c_y)/2 with c_x = c[2j],
    c_y = c[2j+1]; collect the coefficient of c_k c_l (k != l) in a
    dict and read off h_kl from H = (i/4) sum h_kl c_k c_l.
    """
    def a(s):
        return {2 * s: 0.5, 2 * s + 1: -0.5j}

    def ad(s):
        return {2 * s: 0.5, 2 * s + 1: 0.5j}

    def product(x, y, scale):
        out = {}
        for k, u in x.items():
            for l, v in y.items():
                out[(k, l)] = out.get((k, l), 0) + scale * u * v
        return out

    terms = []
    if kind == "hop":
        terms += [product(ad(i), a(j), -amp), product(ad(j), a(i), -amp)]
    elif kind == "pair":
        terms += [product(a(i), a(j), amp), product(ad(j), ad(i), amp)]
    else:
        terms += [product(ad(i), a(i), amp)]
    coef = {}
    for t in terms:
        for key, v in t.items():
            coef[key] = coef.get(key, 0) + v
    h = np.zeros((2 * n, 2 * n))
    offset = 0.0
    for (k, l), v in coef.items():
        if k == l:
            offset += v.real  # c_k^2 = 1
            continue
        # v c_k c_l = (i/4) h_kl c_k c_l + (i/4) h_lk c_l c_k, antisymmetric part only
        h[k, l] += (-4j * v).real / 2
        h[l, k] -= (-4j * v).real / 2
    return h, offset


def oracle_matrix(model):
    n = model.n_modes
    h = np.zeros((2 * n, 2 * n))
    off = 0.0
    for t in model.terms:
        i = model.index(t.sites[0])
        j = model.index(t.sites[1]) if t.kind != "pot" else i
        dh, do = expand_term(t.kind, i, j, t.amplitude, n)
        h += dh
        off += do
    return h, off


def test_ideal_chain_only_couples_neighbouring_majoranas():
    h, off = build_kitaev_chain(6, 1.0, 1.0, 0.0).to_majorana()
    nz = np.argwhere(h != 0)
    for k, l in nz:
        assert {k, l} in [{2 * j + 1, 2 * j + 2} for j in range(5)]
    assert off == 0.0


def test_empty_hamiltonian_gives_zero_matrix():
    sites = tuple(SiteId("w", j) for j in (1, 2, 3))
    h, off = QuadraticHamiltonian(sites, (), {"w": 3}).to_majorana()
    assert h.shape == (6, 6)
    assert not h.any() and off == 0.0


def test_matches_term_by_term_expansion():
    m = build_kitaev_chain(3, 1.0, 1.5, 0.1)
    h, off = m.to_majorana()
    h2, off2 = oracle_matrix(m)
    assert np.max(np.abs(h - h2)) < 1e-14
    assert off == pytest.approx(off2, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(N=st.integers(2, 7), J=st.floats(0.1, 3), delta=st.floats(-3, 3), mu=st.floats(-3, 3),
       closed=st.booleans())
def test_compiled_matrix_is_exactly_antisymmetric(N, J, delta, mu, closed):
    m = build_kitaev_chain(N, J, delta, mu, "closed" if closed and N > 2 else "open")
    h, _ = m.to_majorana()
    assert np.max(np.abs(h + h.T)) == 0.0
    h2, _ = oracle_matrix(m)
    assert np.allclose(h, h2, atol=1e-13)


def test_two_site_ideal_chain_spectrum():
    h, _ = build_kitaev_chain(2, 1.0, 1.0, 0.0).to_majorana()
    eps = bdg.quasiparticle_spectrum(h).energies
    assert np.allclose(eps, [0.0, 2.0], atol=1e-14)


def test_decoupled_sites_have_onsite_energy():
    h, _ = build_kitaev_chain(4, 0.0, 0.0, -2.0).to_majorana()
    eps = bdg.quasiparticle_spectrum(h).energies
    assert np.allclose(eps, 2.0)


def test_closed_three_site_ring_has_odd_ground_state():
    h, _ = build_kitaev_chain(3, 1.0, 1.0, 0.0, "closed").to_majorana()
    spec = bdg.quasiparticle_spectrum(h)
    assert spec.energies[0] > 1e-6
    assert bdg.parity(bdg.ground_covariance(h)) == -1


@pytest.mark.parametrize("N", [1, 0, -3])
def test_too_short_chain_is_rejected(N):
    with pytest.raises(GeometryError):
        build_kitaev_chain(N)


def test_unknown_boundary_is_rejected():
    with pytest.raises(GeometryError):
        build_kitaev_chain(4, boundary="twisted")


def test_term_validation():
    a, b = SiteId("w", 1), SiteId("w", 2)
    with pytest.raises(ValueError):
        hop(a, a, 1.0)
    with pytest.raises(ValueError):
        pot(a, float("inf"))
    with pytest.raises(GeometryError):
        QuadraticHamiltonian((a,), (hop(a, b, 1.0),), {"w": 2})
    with pytest.raises(GeometryError):
        QuadraticHamiltonian((a, SiteId("w", 3)), (), {"w": 2})
    with pytest.raises(GeometryError):
        QuadraticHamiltonian((a, a))


@pytest.mark.parametrize("N,closed", [(5, False), (6, True), (9, False), (4, True)])
def test_graph_degree_matches_geometry(N, closed):
    m = build_kitaev_chain(N, boundary="closed" if closed else "open")
    deg = [len(m.neighbours(s)) for s in m.sites]
    if closed:
        assert deg == [2] * N
    else:
        assert max(deg) <= 2 and deg[0] == deg[-1] == 1
    links = {frozenset(t.sites) for t in m.terms if t.kind != "pot"}
    assert len(links) == (N if closed else N - 1)


def test_trap_edge_shift_value():
    prof = TrapPotential(1.0, 40).profile()
    assert prof[0] == pytest.approx(19.5 ** 2 / 40 ** 2, rel=1e-15)
    assert prof[0] == pytest.approx(0.2377, abs=1e-4)
    assert prof.min() == prof[19] == prof[20]


@given(L=st.integers(1, 60), V=st.floats(0, 5))
def test_trap_profile_symmetric(L, V):
    p = TrapPotential(V, L).profile()
    assert np.array_equal(p, p[::-1])
    assert np.all(p >= 0)


def test_zero_trap_leaves_model_unchanged():
    m = build_kitaev_chain(10)
    assert add_trap(m, TrapPotential(0.0, 10)) == m


def test_trap_length_mismatch():
    with pytest.raises(GeometryError):
        add_trap(build_kitaev_chain(10), TrapPotential(1.0, 12))


def _two_wire_terms():
    u1, u2, u3 = (SiteId("u", j) for j in (1, 2, 3))
    l1, l2 = SiteId("l", 1), SiteId("l", 2)
    return u1, u2, u3, l1, l2


def test_ideal_error_model_is_identity():
    u1, u2, u3, l1, l2 = _two_wire_terms()
    terms = kitaev_link(u1, u2, 1.0, 1.0, "C") + [hop(u1, l1, 2.0, "S"), pot(u1, 2.0, "S")]
    out = apply_error_model(terms, ErrorModel(), {"u": 3, "l": 3},
                            edge_links=[((u1, u2), (u2, u3), "off")])
    assert out == terms


def test_switched_off_bond_rescales_next_bond():
    u1, u2, u3, l1, l2 = _two_wire_terms()
    nxt = kitaev_link(u2, u3, 1.0, 1.0)
    out = apply_error_model(nxt, ErrorModel(delta_K=0.5), {"u": 3},
                            edge_links=[((u1, u2), (u2, u3), "off")])
    assert [t.amplitude for t in out] == [0.5, 0.5]


def test_rung_copies_onto_inner_rung():
    u1, u2, u3, l1, l2 = _two_wire_terms()
    out = apply_error_model([hop(u1, l1, 2.0, "S")], ErrorModel(delta_perp=0.3),
                            {"u": 3, "l": 3})
    extra = [t for t in out if t.sites == (u2, l2)]
    assert len(extra) == 1 and extra[0].amplitude == pytest.approx(0.6)
    assert extra[0].channel == "S"


def test_potential_leaks_onto_neighbours():
    u1, u2, u3, l1, l2 = _two_wire_terms()
    terms = [pot(u1, 2.0, "S"), hop(u1, l1, 1.0)]
    out = apply_error_model(terms, ErrorModel(delta_v=0.1), {"u": 3, "l": 3})
    leaked = {t.sites[0]: t.amplitude for t in out if t.kind == "pot" and t.sites[0] != u1}
    assert leaked == {u2: pytest.approx(0.2), l1: pytest.approx(0.2)}


def test_disorder_reproducible_from_seed():
    sites = [SiteId("w", j) for j in range(1, 9)]
    a = apply_error_model([], ErrorModel(mu_r=0.1, seed=4), {"w": 8}, disorder_sites=sites)
    b = apply_error_model([], ErrorModel(mu_r=0.1, seed=4), {"w": 8}, disorder_sites=sites)
    c = apply_error_model([], ErrorModel(mu_r=0.1, seed=5), {"w": 8}, disorder_sites=sites)
    assert a == b and a != c
    assert all(abs(t.amplitude) <= 0.1 for t in a)


@pytest.mark.parametrize("field", ["delta_K", "delta_perp", "delta_v", "intensity_leak"])
def test_error_fractions_bounded(field):
    with pytest.raises(ValueError):
        ErrorModel(**{field: 1.5})
    with pytest.raises(ValueError):
        ErrorModel(**{field: -0.1})


def _example_spec():
    extra = (hop(SiteId("u", 1), SiteId("l", 1), 0.1 + 0.2, "S"),
             pair(SiteId("u", 2), SiteId("x", 1), 1 / 3))
    return ModelSpec({"u": WireSpec(6, 1.0, 1.5, 0.1), "l": {"N": 6, "boundary": "closed"}},
                     {"J_perp": 2.0, "V": 2.0, "V_e": 1.0, "J_tilde": 0.7, "V_t": 1.0},
                     ErrorModel(delta_K=0.3, delta_v=0.1, mu_r=0.05, seed=11), extra)


def test_model_file_round_trip(tmp_path):
    spec = _example_spec()
    path = tmp_path / "model.json"
    save_model(spec, path)
    back = load_model(path)
    assert back == spec
    h1, o1 = spec.build().to_majorana()
    h2, o2 = back.build().to_majorana()
    assert np.array_equal(h1, h2) and o1 == o2
    save_model(back, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_model_file_rejects_unknown_fields():
    d = _example_spec().to_dict()
    d["extra"] = 1
    with pytest.raises(ValueError):
        ModelSpec.from_dict(d)
    d = _example_spec().to_dict()
    d["error_model"]["bogus"] = 0.0
    with pytest.raises(ValueError):
        ModelSpec.from_dict(d)
    with pytest.raises(GeometryError):
        ModelSpec.from_dict({"wires": {"w": {"N": 1}}})


def test_model_file_trap_applied_per_wire():
    spec = ModelSpec({"w": {"N": 40}}, {"V_t": 1.0})
    m = spec.build()
    shift = [t.amplitude for t in m.terms if t.kind == "pot"]
    assert shift[0] == pytest.approx(0.2377, abs=1e-4)


def test_term_level_serialization_round_trip():
    m = _example_spec().build()
    d = json.loads(json.dumps(hamiltonian_to_dict(m)))
    back = hamiltonian_from_dict(d)
    assert back == m
    assert np.array_equal(to_majorana(back)[0], to_majorana(m)[0])
