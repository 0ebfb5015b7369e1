from fractions import Fraction

import pytest

from bvw.bv import (ModelError, antibracket, build_algebra, build_extended_action, bv_differential,
                    bv_laplacian, ce_differential, check_cme, delta_differential, expand_by_ta,
                    gauge_fix, is_symmetry, koszul, make_model, s_squared_on_generators)
from bvw.models import lie_gauge, lie_structure, toy_circles, ym_matrix

from helpers import random_homogeneous, rng, sign


@pytest.fixture(scope="module")
def toy():
    return toy_circles(1)


def gens(m, names):
    return [m.algebra.gen(n) for n in names.split()]


def test_antibracket_examples(toy):
    A = toy.algebra
    x, y, z = gens(toy, "x y z")
    assert antibracket(A.antifield("x"), x) == A.one
    assert antibracket(x, x).is_zero()
    assert antibracket(A.antifield("x"), toy.action) == (x * z).scale(2)


def test_laplacian_examples(toy):
    A = toy.algebra
    x, y, z = gens(toy, "x y z")
    xa = A.antifield("x")
    assert bv_laplacian(x * xa) == A.one
    assert bv_laplacian(x * x * xa) == x.scale(2)
    assert bv_laplacian(toy.action).is_zero()


def test_koszul_examples(toy):
    A = toy.algebra
    x, y, z = gens(toy, "x y z")
    assert koszul(toy, A.antifield("x")) == (x * z).scale(2)
    assert koszul(toy, y * A.antifield("x") - x * A.antifield("y")).is_zero()
    assert koszul(toy, x * y * z).is_zero()


def test_ce_differential_examples(toy):
    x, y, c = gens(toy, "x y c")
    assert ce_differential(toy, x) == c * y
    assert ce_differential(toy, y) == -(c * x)
    assert ce_differential(toy, toy.algebra.one).is_zero()
    lg = lie_gauge("su2")
    C1, C2, C3 = gens(lg, "C1 C2 C3")
    assert ce_differential(lg, C1) == -(C2 * C3)


def test_bv_differential_examples(toy):
    A = toy.algebra
    x, y, z, c = gens(toy, "x y z c")
    assert bv_differential(toy, x) == c * y
    sxa = bv_differential(toy, A.antifield("x"))
    assert delta_differential(toy, A.antifield("x")) == (x * z).scale(2)
    assert sxa == (x * z).scale(2) - c * A.antifield("y")
    assert bv_differential(toy, A.const(7)).is_zero()


def test_extended_action_examples(toy):
    A = toy.algebra
    x, y, z, c = gens(toy, "x y z c")
    expected = z * (x * x + y * y - 1) + c * (y * A.antifield("x") - x * A.antifield("y"))
    assert build_extended_action(toy) == expected
    lg = lie_gauge("su2")
    B = lg.algebra
    C1, C2, C3 = gens(lg, "C1 C2 C3")
    ce = C2 * C3 * B.antifield("C1") - C1 * C3 * B.antifield("C2") + C1 * C2 * B.antifield("C3")
    assert build_extended_action(lg) == ce


def test_nonminimal_pair_term():
    alg = build_algebra(["A"], ["C"], [("Cb", "B")])
    m = make_model(alg, alg.zero, [("C", {})], nonminimal=[("Cb", "B")])
    ext = build_extended_action(m)
    assert ext == -(alg.i * alg.gen("B") * alg.antifield("Cb"))
    # the convention gives s Cb = i B
    assert antibracket(alg.gen("Cb"), ext) == alg.i * alg.gen("B")


def test_master_equation_examples(toy):
    assert check_cme(toy)["holds"]
    assert check_cme(lie_gauge("su2"))["holds"]
    _, f = lie_structure("su2")
    f = dict(f)
    # [e1, e2] = e3 + e1 breaks Jacobi: the cyclic sum gives e2
    f[(1, 1, 2)], f[(1, 2, 1)] = 1, -1
    r = check_cme(lie_gauge("su2", structure=f))
    assert not r["holds"] and not r["residual"].is_zero()


def test_s_squared_zero_on_generators():
    for m in (toy_circles(2), lie_gauge("su2", "adjoint", True), ym_matrix(1)):
        assert s_squared_on_generators(m) == {}


def test_ym_matrix_with_the_other_orientation_fails():
    # gamma A = [A, C] together with gamma C = -1/2 [C, C] violates the CME
    m = ym_matrix(1)
    flipped = [(s.ghost_id, {f: -r for f, r in s.rho}) for s in m.symmetries]
    s2 = {(c, a, b): v for c, a, b, v in m.structure.f}
    bad = make_model(m.algebra, m.action, flipped, s2, m.nonminimal, m.gauge_fermion)
    assert not check_cme(bad)["holds"]


def test_gauge_fix_examples():
    alg = build_algebra(["A"], ["C"], [("Cb", "B")])
    m = make_model(alg, alg.zero, [("C", {})], nonminimal=[("Cb", "B")],
                   gauge_fermion=alg.gen("Cb") * alg.gen("A"))
    A, B = alg.gen("A"), alg.gen("B")
    assert gauge_fix(m, A * A) == A * A
    # the nonminimal term of the extended action is -i B Cb‡
    X = -(alg.i * B * alg.antifield("Cb"))
    assert gauge_fix(m, X) == X + alg.i * B * A
    assert gauge_fix(m, build_extended_action(m)) == X + alg.i * B * A
    trivial = make_model(alg, alg.zero, [("C", {})], nonminimal=[("Cb", "B")])
    assert gauge_fix(trivial, X) == X


def test_gauge_fermion_grading_checked():
    alg = build_algebra(["A"], ["C"], [("Cb", "B")])
    with pytest.raises(ModelError, match="gauge fermion"):
        make_model(alg, alg.zero, [("C", {})], nonminimal=[("Cb", "B")],
                   gauge_fermion=alg.gen("A"))


def test_brst_table_rows():
    m = lie_gauge("su2", "adjoint", gauge_fix=True)
    A = m.algebra
    ex = expand_by_ta(m, gauge_fix(m, build_extended_action(m)))
    t = ex["brst_table"]
    for a in (1, 2, 3):
        assert t["Cb%d" % a] == A.i * A.gen("B%d" % a)
        assert t["B%d" % a].is_zero()
    C1, C2, C3 = (A.gen("C%d" % a) for a in (1, 2, 3))
    assert t["C1"] == -(C2 * C3)
    assert t["C2"] == C1 * C3
    assert t["C3"] == -(C1 * C2)


def test_toy_without_fermion_gauge_fixed_action_is_S(toy):
    ex = expand_by_ta(toy, gauge_fix(toy, build_extended_action(toy)))
    assert ex["gauge_fixed_action"] == toy.action


def test_is_symmetry_examples(toy):
    A = toy.algebra
    x, y, z = gens(toy, "x y z")
    xa, ya, za = (A.antifield(n) for n in "xyz")
    rot = is_symmetry(toy, y * xa - x * ya)
    assert rot["symmetry"] and rot["trivial"] is False
    s1 = (x * z).scale(2)
    s3 = x * x + y * y - 1
    triv = is_symmetry(toy, s3 * xa - s1 * za)
    assert triv["symmetry"] and triv["trivial"] is True
    assert not is_symmetry(toy, za)["symmetry"]


# BV algebra identities in the form that holds with the implemented signs.
# (-1)^{|P|+1} {P, Q} is the bracket generated by Delta.

@pytest.mark.parametrize("model", [toy_circles(1), lie_gauge("su2", "adjoint", True), ym_matrix(1)],
                         ids=["toy", "lie_gauge", "ym_matrix"])
def test_delta_generates_the_bracket(model):
    R = rng(11)
    D = bv_laplacian
    for _ in range(40):
        P, Q = random_homogeneous(model.algebra, R), random_homogeneous(model.algebra, R)
        s = sign(P)
        assert D(D(P)).is_zero()
        assert antibracket(P, Q).scale(-s) == D(P * Q) - D(P) * Q - (P * D(Q)).scale(s)
        assert D(antibracket(P, Q)) == antibracket(D(P), Q) - antibracket(P, D(Q)).scale(s)


def test_delta_bracket_literal_form_fails_on_x_and_its_antifield(toy):
    # {x, x‡} and {x‡, x} differ by sign, while x x‡ = x‡ x and Delta kills
    # both factors, so no bracket satisfying antisymmetry can equal
    # Delta(PQ) - Delta(P) Q - P Delta(Q) for both orders.
    A = toy.algebra
    x, xa = A.gen("x"), A.antifield("x")
    rhs_1 = bv_laplacian(x * xa)
    rhs_2 = bv_laplacian(xa * x)
    assert rhs_1 == rhs_2 == A.one
    assert antibracket(xa, x) == A.one
    assert antibracket(x, xa) == -A.one


def test_vector_fields_satisfy_the_literal_form(toy):
    # for odd P the two brackets coincide
    R = rng(12)
    A = toy.algebra
    D = bv_laplacian
    for _ in range(30):
        P = random_homogeneous(A, R)
        if not P.parity():
            continue
        Q = random_homogeneous(A, R)
        assert antibracket(P, Q) == D(P * Q) - D(P) * Q + P * D(Q)


def test_symmetry_with_undeclared_ghost_rejected():
    alg = build_algebra(["x"], [])
    with pytest.raises(ModelError, match="undeclared ghost"):
        make_model(alg, alg.gen("x") ** 2, [("C", {"x": alg.gen("x")})])


def test_action_must_be_antifield_free():
    alg = build_algebra(["x"], [])
    with pytest.raises(ModelError, match="antifield-free"):
        make_model(alg, alg.gen("x") * alg.antifield("x") * alg.antifield("x") + alg.antifield("x"))


def test_weights_enter_bracket():
    alg = build_algebra(["x"], weights={"x": Fraction(1, 3)})
    assert antibracket(alg.antifield("x"), alg.gen("x")) == alg.const(Fraction(1, 3))
