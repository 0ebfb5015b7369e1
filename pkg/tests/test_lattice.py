from fractions import Fraction

import pytest

from bvw.bv import antibracket, bv_laplacian
from bvw.lattice import Lattice, LatticeError, ScalarField, green_retarded, propagators

from helpers import quartic, random_poly, regular_lattice_poly, rng, theta

UNIT = Lattice(6, 5)
MASSIVE = Lattice(4, 3, Fraction(1, 2), 1, Fraction(1, 2))


@pytest.fixture(scope="module")
def unit():
    return ScalarField(UNIT)


@pytest.fixture(scope="module")
def massive():
    return ScalarField(MASSIVE)


@pytest.fixture(scope="module")
def rigid():
    return ScalarField(Lattice(4, 3), rigid_ghost=True)


F1 = {(1, 1): 1, (2, 0): Fraction(-1, 2)}
G1 = {(2, 1): 3, (1, 2): 1}


# -- lattice and propagators ---------------------------------------------------

def test_lattice_validation():
    with pytest.raises(LatticeError):
        Lattice(1, 3)
    with pytest.raises(LatticeError):
        Lattice(3, 0)
    with pytest.raises(LatticeError, match="stability"):
        Lattice(3, 3, 2, 1)
    with pytest.raises(LatticeError):
        Lattice(3, 3, 0, 1)


def test_retarded_stencil_values():
    R = green_retarded(UNIT)
    assert R[(1, 0), (0, 0)] == 1
    assert R[(2, 0), (0, 0)] == 0
    assert R[(2, 1), (0, 0)] == 1 and R[(2, -1), (0, 0)] == 1
    assert R[(0, 0), (0, 0)] == 0 and R[(0, 0), (1, 0)] == 0


def test_retarded_support_in_lightcone():
    for L in (UNIT, MASSIVE, Lattice(5, 4, Fraction(1, 3), Fraction(1, 2), 2)):
        R = green_retarded(L)
        for p in L.sites():
            for q in L.sites():
                if not L.in_lightcone(p, q):
                    assert R[p, q] == 0


def test_propagator_relations():
    P = propagators(MASSIVE)
    L = MASSIVE
    for p in L.sites():
        assert P["causal"][p, p] == 0
        for q in L.sites():
            assert P["advanced"][p, q] == P["retarded"][q, p]
            assert P["causal"][p, q] == -P["causal"][q, p]
            assert P["dirac"][p, q] == P["dirac"][q, p]
    assert propagators(UNIT)["causal"][(1, 0), (0, 0)] == 1


def test_propagator_text_export():
    text = green_retarded(Lattice(2, 1)).to_text()
    assert text == "0 0\n1 0"


# -- Peierls bracket -----------------------------------------------------------

def test_peierls_of_smeared_fields(massive):
    th = massive
    Pf, Pg = th.smeared(F1), th.smeared(G1)
    assert th.peierls_bracket(Pf, Pg) == th.alg.const(th.pairing(F1, "causal", G1))
    assert th.peierls_bracket(Pf * Pf, Pg) == Pf.scale(2 * th.pairing(F1, "causal", G1))


def test_peierls_antisymmetry_and_jacobi(massive):
    th = massive
    R = rng(3)
    gens = [th.phi(t, x) for t, x in th.lattice.sites()]
    for _ in range(10):
        F, G, H = (random_poly(th.alg, R, gens) for _ in range(3))
        b = th.peierls_bracket
        assert b(F, G) == -b(G, F)
        assert (b(F, b(G, H)) + b(G, b(H, F)) + b(H, b(F, G))).is_zero()


# -- star product and time ordering --------------------------------------------

def test_star_of_smeared_fields(massive):
    th = massive
    A = th.alg
    Pf, Pg = th.smeared(F1), th.smeared(G1)
    d = th.pairing(F1, "causal", G1)
    assert th.star(Pf, Pg) == Pf * Pg + A.const(d / 2, h=1, imag=True)
    assert th.star(Pf, Pg) - th.star(Pg, Pf) == A.const(d, h=1, imag=True)


def test_star_unit_and_classical_limit(massive):
    th = massive
    R = rng(4)
    for _ in range(5):
        F = regular_lattice_poly(th, R, with_antifields=False)
        G = regular_lattice_poly(th, R, with_antifields=False)
        assert th.star(F, th.alg.one) == F == th.star(th.alg.one, F)
        assert th.star(F, G).series_coefficient(0, 0) == (F * G).series_coefficient(0, 0)


def test_star_commutator_reproduces_peierls_at_first_order(massive):
    th = massive
    R = rng(5)
    gens = [th.phi(t, x) for t, x in th.lattice.sites()]
    for _ in range(5):
        F, G = random_poly(th.alg, R, gens), random_poly(th.alg, R, gens)
        comm = th.star(F, G) - th.star(G, F)
        # coefficient of h is i times the Peierls bracket
        assert comm.series_coefficient(1, 0) == th.peierls_bracket(F, G).times_i()


def test_time_ordering_examples(massive):
    th = massive
    A = th.alg
    Pf, Pg = th.smeared(F1), th.smeared(G1)
    assert th.time_order(Pf) == Pf
    assert th.time_order(Pf * Pg) == Pf * Pg + A.const(th.pairing(F1, "dirac", G1), h=1, imag=True)
    half = (th.pairing(F1, "retarded", G1) + th.pairing(F1, "advanced", G1)) / 2
    assert th.tprod(Pf, Pg) == Pf * Pg + A.const(half, h=1, imag=True)


def test_time_ordering_inverse(massive):
    th = massive
    R = rng(6)
    for _ in range(5):
        F = regular_lattice_poly(th, R, terms=4, max_len=4)
        assert th.time_order_inverse(th.time_order(F)) == F
        assert th.time_order(th.time_order_inverse(F)) == F


def test_tprod_equals_star_for_later_left_factor(unit):
    th = unit
    late = th.smeared({(4, 1): 2, (5, 3): 1})
    early = th.smeared({(1, 0): 1, (2, 2): -3})
    assert th.tprod(late, early) == th.star(late, early)
    assert th.tprod(early, late) == th.star(late, early)
    assert th.tprod(early, late) != th.star(early, late)


# -- S-matrix, Bogoliubov, Moller ----------------------------------------------

def test_smatrix_examples(massive):
    th = massive
    A = th.alg
    assert th.smatrix(A.zero) == A.one
    Pf = th.smeared(F1)
    V = A.lam * Pf
    S = th.smatrix(V)
    assert S.series_coefficient(0, 1) == Pf
    second = (Pf * Pf + A.const(th.pairing(F1, "dirac", F1), h=1, imag=True)).scale(Fraction(1, 2))
    assert sum((S.series_coefficient(h, 2).shift(dh=h) for h in range(3)), A.zero) == second
    W = A.lam * th.smeared(G1) * th.smeared(G1)
    assert th.smatrix(W) == A.one + W + th.tprod(W, W).scale(Fraction(1, 2))


def test_smatrix_needs_lambda_or_order(massive):
    with pytest.raises(LatticeError, match="lambda"):
        massive.smatrix(massive.smeared(F1))
    assert massive.smatrix(massive.smeared(F1), order=1) == massive.alg.one + massive.smeared(F1)


def test_bogoliubov_at_zero_is_smatrix(massive):
    th = massive
    A = th.alg
    F = A.lam * th.smeared(G1) ** 2
    assert th.bogoliubov(A.zero, F) == th.smatrix(F)


def test_star_inverse(massive):
    th = massive
    A = th.alg
    E = th.smatrix(A.lam * th.smeared(F1) ** 2)
    assert th.star(th.star_inverse(E), E) == A.one
    with pytest.raises(LatticeError):
        th.star_inverse(th.smeared(F1))


def test_retarded_map_examples(massive):
    th = massive
    A = th.alg
    R = rng(8)
    F = regular_lattice_poly(th, R, with_antifields=False)
    assert th.retarded_map(A.zero, F) == F
    V = A.lam * th.smeared(F1) ** 2
    G = th.smeared(G1) * th.phi(2, 2)
    first = (th.tprod(V, G) - th.star(V, G)).shift(dh=-1).times_i()
    got = th.retarded_map(V, G)
    assert got.filter(lambda m, h, l: l <= 1) == G + first
    assert th.retarded_map_inverse(V, th.retarded_map(V, G)) == G


def test_interacting_star(massive):
    th = massive
    A = th.alg
    Pf, Pg = th.smeared(F1), th.smeared(G1)
    assert th.interacting_star(A.zero, Pf, Pg) == th.star(Pf, Pg)
    V = A.lam * th.smeared({(1, 0): 1}) ** 2
    comm = th.interacting_star(V, Pf, Pg) - th.interacting_star(V, Pg, Pf)
    lam0 = sum((comm.series_coefficient(h, 0).shift(dh=h) for h in range(3)), A.zero)
    assert lam0 == A.const(th.pairing(F1, "causal", G1), h=1, imag=True)


def test_first_retarded_product(unit):
    th = unit
    f = {(1, 1): 1, (1, 2): 2}
    g = {(4, 1): 1, (3, 0): 2}
    Pf, Pg = th.smeared(f), th.smeared(g)
    assert th.retarded_product(0, Pf * Pf, Pg) == Pg
    expected = Pf.scale(-2 * th.pairing(g, "retarded", f))
    assert th.retarded_product(1, Pf * Pf, Pg) == expected
    assert not expected.is_zero()


def test_moller_causality_and_substitution(unit):
    th = unit
    A = th.alg
    V = A.lam * th.smeared({(3, 1): 1, (4, 1): 1}) ** 2
    early = th.smeared({(0, 0): 1, (1, 3): 2}) * th.phi(2, 1)
    late = th.smeared({(5, 1): 1}) ** 2
    for k in range(3):
        assert th.classical_moller(V, early, k) == early
        assert th.classical_moller(V, late, k) == th.moller_by_substitution(V, late, k)
    assert th.classical_moller(V, late, 1) != late
    with pytest.raises(LatticeError, match="truncation"):
        th.classical_moller(V, late, 3)


# -- quantum BV ----------------------------------------------------------------

def test_tkoszul_examples(massive):
    th = massive
    A = th.alg
    X = th.phi(1, 1) * th.phi(2, 2)
    r = th.tkoszul(X)
    assert r["value"].is_zero() and r["consistent"]
    p = (1, 1)
    Y = th.phi(*p) * th.antifield(*p)
    r = th.tkoszul(Y)
    assert r["consistent"]
    # {phi‡(p), S} = (P phi)(p); Delta(phi(p) phi‡(p)) = 1/w
    assert r["value"] == th.phi(*p) * th.p_phi(*p) + A.const(1 / Fraction(MASSIVE.weight),
                                                             h=1, imag=True)


def test_tkoszul_rejects_non_quadratic(massive):
    with pytest.raises(LatticeError, match="quadratic"):
        massive.tkoszul(massive.antifield(1, 1), massive.phi(1, 1) ** 3)


def test_star_antibracket_examples(massive):
    th = massive
    R = rng(9)
    p = (2, 0)
    assert th.star_antibracket(th.antifield(*p), th.S) == th.p_phi(*p)
    assert antibracket(th.antifield(*p), th.S) == th.p_phi(*p)
    F, G = th.smeared(F1) ** 2, th.smeared(G1)
    assert th.star_antibracket(F, G).is_zero()
    for _ in range(10):
        X = regular_lattice_poly(th, R)
        Y = regular_lattice_poly(th, R)
        assert th.star_antibracket(X, Y).series_coefficient(0, 0) == \
            antibracket(X, Y).series_coefficient(0, 0)


def test_check_qme_examples(massive, rigid):
    th = massive
    A = th.alg
    r = th.check_qme(quartic(th))
    assert r["holds"] and r["qme2_holds"] and r["forms_agree"]
    p = (1, 1)
    bad = A.lam * th.phi(*p) * th.antifield(*p)
    r = th.check_qme(bad)
    assert not r["holds"] and not r["qme2_holds"] and r["forms_agree"]
    assert r["residual"] == A.lam * th.phi(*p) * th.p_phi(*p)
    tv = rigid.alg.lam * theta(rigid, [((1, 0), (2, 1)), ((1, 2), (2, 2))])
    assert bv_laplacian(tv).is_zero()
    r = rigid.check_qme(tv)
    assert r["holds"] and r["qme2_holds"] and r["forms_agree"]


def test_quantum_bv_examples(massive):
    th = massive
    A = th.alg
    X = th.phi(1, 1) * th.phi(2, 1)
    assert th.quantum_bv(A.zero, X)["value"].is_zero()
    V = quartic(th)
    assert th.quantum_bv(V, A.one)["value"].is_zero()
    Y = th.phi(0, 0) * th.antifield(1, 1) + th.phi(2, 2) ** 2 * th.antifield(2, 0)
    r = th.quantum_bv(V, Y)
    assert r["agree"] and r["qme_holds"] and not r["value"].is_zero()
    s2 = th.qbv_explicit(V, r["value"])
    assert s2.is_zero()
    lhs, rhs = th.intertwining(V, Y)
    assert lhs == rhs


def test_quantum_bv_flags_violated_qme(rigid):
    th = rigid
    bad = th.alg.lam * th.ghost() * th.phi(1, 1) * th.antifield(1, 1)
    r = th.quantum_bv(bad, th.phi(2, 2))
    assert not r["qme_holds"] and "violated" in r["formula"]


def test_interaction_must_carry_lambda(massive):
    with pytest.raises(LatticeError, match="lambda"):
        massive.retarded_map(massive.phi(1, 1), massive.phi(2, 2))


def test_antifields_only_on_interior_slices(massive):
    with pytest.raises(LatticeError, match="interior"):
        massive.antifield(0, 0)
