"""phi^4 on a 4 x 3 lattice: commutators, S-matrix, Moller map and the QME."""

from fractions import Fraction

from bvw import Lattice, ScalarField

L = Lattice(4, 3, Fraction(1, 2), 1, Fraction(1, 2))
th = ScalarField(L)
A = th.alg

f = {(1, 1): 1}
g = {(2, 1): 1, (3, 0): Fraction(-1, 2)}
Pf, Pg = th.smeared(f), th.smeared(g)
print("Phi(f) * Phi(g) =", th.star(Pf, Pg))
print("commutator      =", th.star(Pf, Pg) - th.star(Pg, Pf))
print("i h <f, Delta g> with <f, Delta g> =", th.pairing(f, "causal", g))
print("T-product       =", th.tprod(Pf, Pg))

V = A.zero
for t, x in L.sites():
    V = V + th.phi(t, x) ** 4
V = V.scale(L.weight / 24) * A.lam

late = th.phi(3, 1)
print("classical Moller map of phi(3,1) to first order:")
print("  ", th.classical_moller(V, late, 1))
print("  substitution agrees:", th.classical_moller(V, late, 2) == th.moller_by_substitution(V, late, 2))
print("  early observable phi(0,1) unchanged:", th.classical_moller(V, th.phi(0, 1), 2) == th.phi(0, 1))

r = th.check_qme(V)
print("QME holds:", r["holds"], " both forms agree:", r["forms_agree"])
bad = A.lam * th.phi(1, 1) * th.antifield(1, 1)
r = th.check_qme(bad)
print("lambda phi phi‡ violates it, residual:", r["residual"])

X = th.phi(0, 0) * th.antifield(1, 1)
q = th.quantum_bv(V, X)
print("s_hat X =", q["value"])
print("  exponential form agrees:", q["agree"])
lhs, rhs = th.intertwining(V, X)
print("  intertwining {R_V X, S}_* = R_V(s_hat X):", lhs == rhs)
