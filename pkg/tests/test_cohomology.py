from math import comb

import pytest
from gmpy2 import mpq

from bvw.algebra import Poly, define_algebra, field
from bvw.bv import Differential
from bvw.cohomology import CohomologyError, cohomology_dim, monomial_basis, operator_matrix
from bvw.models import lie_gauge, lie_structure, toy_circles

from oracles import koszul_h1_dimension


@pytest.fixture(scope="module")
def toy():
    return toy_circles(1)


def column_poly(alg, basis, M, j):
    out = alg.zero
    for i, (re, im) in M.column(j).items():
        out = out + Poly(alg, {(basis.monomials[i], 0, 0, 0): mpq(re)})
        if im:
            out = out + Poly(alg, {(basis.monomials[i], 0, 0, 1): mpq(im)})
    return out


def test_basis_low_degree(toy):
    A = toy.algebra
    B = monomial_basis(A, 0, 1)
    got = {str(Poly(A, {(m, 0, 0, 0): mpq(1)})) for m in B.monomials}
    assert got == {"1", "x", "y", "z"}
    assert len(B) == 4


@pytest.mark.parametrize("n,D", [(1, 5), (2, 3), (3, 4), (4, 2)])
def test_basis_size_pure_even(n, D):
    alg = define_algebra([field("f%d" % k) for k in range(n)])
    assert len(monomial_basis(alg, 0, D)) == comb(n + D, D)


def test_basis_grading_obstruction():
    m = lie_gauge("su2")
    # three odd ghosts allow ghost number at most 3; toy has one ghost
    assert len(monomial_basis(toy_circles(1).algebra, 5, 6)) == 0
    assert len(monomial_basis(m.algebra, 4, 8)) == 0


def test_basis_is_duplicate_free_and_deterministic(toy):
    a = monomial_basis(toy.algebra, -1, 4)
    b = monomial_basis(toy.algebra, -1, 4)
    assert a == b
    assert len(set(a.monomials)) == len(a)


def test_negative_degree_rejected(toy):
    with pytest.raises(CohomologyError):
        monomial_basis(toy.algebra, 0, -1)


def test_koszul_matrix_columns(toy):
    A = toy.algebra
    dom = monomial_basis(A, -1, 1)
    cod = monomial_basis(A, 0, 3)
    M = operator_matrix(Differential(toy, "delta"), dom, cod)
    x, y, z = (A.gen(n) for n in "xyz")
    expected = {"x‡": (x * z).scale(2), "y‡": (y * z).scale(2), "z‡": x * x + y * y - 1}
    for j, m in enumerate(dom.monomials):
        name = str(Poly(A, {(m, 0, 0, 0): mpq(1)}))
        assert column_poly(A, cod, M, j) == expected[name]
    assert M.rank() == 3


def test_zero_map_gives_zero_matrix(toy):
    B = monomial_basis(toy.algebra, 0, 2)
    M = operator_matrix(lambda p: p.alg.zero, B, B)
    assert M.entries == {} and M.rank() == 0


def test_codomain_too_small(toy):
    A = toy.algebra
    dom = monomial_basis(A, 0, 1)
    with pytest.raises(CohomologyError, match="codomain too small"):
        operator_matrix(Differential(toy, "gamma"), dom, monomial_basis(A, 0, 3))


def test_toy_n1():
    r = cohomology_dim(toy_circles(1), "s", 0, 4)
    assert r.dim_cohomology == 1
    assert [str(p) for p in r.representative_cocycles] == ["1"]


def test_toy_n2():
    r = cohomology_dim(toy_circles(2), "s", 0, 6)
    assert r.dim_cohomology == 2


def test_lie_gauge_gamma_invariants():
    m = lie_gauge("su2", "adjoint")
    r = cohomology_dim(m, "gamma", 0, 2)
    assert r.dim_cohomology == 2
    A = m.algebra
    phis = [A.gen("phi%d" % a) for a in (1, 2, 3)]
    casimir = sum((p * p for p in phis), A.zero)
    d = Differential(m, "gamma")
    assert d(casimir).is_zero()


@pytest.mark.parametrize("model,kind,gh,D", [
    (toy_circles(1), "s", 0, 4),
    (toy_circles(1), "delta", -1, 3),
    (toy_circles(2), "s", 1, 3),
    (lie_gauge("su2", "adjoint"), "gamma", 1, 3),
    (lie_gauge("su2", "adjoint", True), "s", 0, 2),
])
def test_rank_nullity_and_cocycles(model, kind, gh, D):
    r = cohomology_dim(model, kind, gh, D)
    d = Differential(model, kind)
    B0 = monomial_basis(model.algebra, gh, D)
    B1 = monomial_basis(model.algebra, gh + 1, D + d.degree_shift())
    M = operator_matrix(d, B0, B1)
    assert M.rank() + r.dim_kernel == len(B0) == r.basis_size
    assert len(r.representative_cocycles) == r.dim_cohomology
    for z in r.representative_cocycles:
        assert d(z).is_zero()


@pytest.mark.parametrize("D", [2, 3, 4])
def test_koszul_h1_matches_oracle(D):
    r = cohomology_dim(toy_circles(1), "delta", -1, D, pure_ghost=0)
    assert r.dim_cohomology == koszul_h1_dimension(1, D)


def test_report_text_and_dict():
    r = cohomology_dim(toy_circles(1), "s", 0, 4)
    d = r.as_dict()
    assert d["dim_cohomology"] == 1 and d["differential"] == "s"
    assert "dim_cohomology: 1" in r.to_text()


def test_nilpotency_checked():
    # a Jacobi-corrupted structure makes s fail to square to zero on ghosts
    _, f = lie_structure("su2")
    f = dict(f)
    f[(1, 1, 2)], f[(1, 2, 1)] = 1, -1
    bad = lie_gauge("su2", structure=f)
    with pytest.raises(CohomologyError, match="square to zero"):
        cohomology_dim(bad, "s", 0, 2)
