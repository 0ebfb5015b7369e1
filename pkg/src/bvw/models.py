"""
Built-in gauge systems, generated programmatically so that ghosts and
antifields follow automatically from the declared symmetries.
"""

import os
from fractions import Fraction

from .bv import ModelError, build_algebra, make_model

DEFAULT_TRUNCATION = (2, 2)


def default_truncation():
    env = os.environ.get("BVW_TRUNCATION")
    if not env:
        return DEFAULT_TRUNCATION
    try:
        kh, kl = (int(x) for x in env.split(","))
    except ValueError:
        raise ModelError("BVW_TRUNCATION must look like 'Kh,Kl', got %r" % env) from None
    if kh < 0 or kl < 0:
        raise ModelError("BVW_TRUNCATION orders must be nonnegative")
    return (kh, kl)


def levi_civita(a, b, c):
    """epsilon_{abc} for indices in {1, 2, 3}."""
    if len({a, b, c}) < 3:
        return 0
    perm = [a, b, c]
    sign = 1
    for i in range(3):
        for j in range(i + 1, 3):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def lie_structure(name):
    """Structure constants f[(c, a, b)] of a compact Lie algebra, 1-based."""
    if name != "su2":
        raise ModelError("unsupported Lie algebra %r (only su2)" % name)
    f = {}
    for c in range(1, 4):
        for a in range(1, 4):
            for b in range(1, 4):
                v = levi_civita(c, a, b)
                if v:
                    f[(c, a, b)] = v
    return 3, f


def toy_circles(N=1, truncation=None):
    """S = z * prod_{k=1..N} (x^2 + y^2 - k^2) with the rotation symmetry."""
    N = int(N)
    if N < 1:
        raise ModelError("toy_circles needs N >= 1")
    alg = build_algebra(["x", "y", "z"], ["c"], truncation=truncation or default_truncation())
    x, y, z = (alg.gen(n) for n in "xyz")
    r2 = x * x + y * y
    S = z
    for k in range(1, N + 1):
        S = S * (r2 - k * k)
    sym = [("c", {"x": y, "y": -x})]
    return make_model(alg, S, sym, name="toy_circles", params=(("N", N),))


def _ghost_structure(ghosts, f):
    return {(ghosts[c - 1], ghosts[a - 1], ghosts[b - 1]): v for (c, a, b), v in f.items()}


def lie_gauge(g="su2", rep=None, gauge_fix=False, structure=None, truncation=None):
    """Pure Chevalley-Eilenberg system of a Lie algebra, optionally with
    scalars in the adjoint representation and a nonminimal sector.

    The action is zero; ``structure`` overrides the structure constants
    (used to build Jacobi-violating test models).
    """
    dim, f = lie_structure(g)
    if structure is not None:
        f = structure
    ghosts = ["C%d" % a for a in range(1, dim + 1)]
    fields = []
    if rep is not None:
        if rep != "adjoint":
            raise ModelError("unsupported representation %r (only adjoint)" % rep)
        fields = ["phi%d" % a for a in range(1, dim + 1)]
    nonmin = []
    if gauge_fix:
        if not fields:
            raise ModelError("gauge fixing needs matter fields")
        nonmin = [("Cb%d" % a, "B%d" % a) for a in range(1, dim + 1)]
    alg = build_algebra(fields, ghosts, nonmin, truncation=truncation or default_truncation())
    syms = []
    for a in range(1, dim + 1):
        rho = {}
        if fields:
            # gamma phi^c = f^c_ab C^a phi^b
            for c in range(1, dim + 1):
                comp = alg.zero
                for b in range(1, dim + 1):
                    v = f.get((c, a, b), 0)
                    if v:
                        comp = comp + alg.gen(fields[b - 1]).scale(Fraction(v))
                if not comp.is_zero():
                    rho[fields[c - 1]] = comp
        syms.append((ghosts[a - 1], rho))
    psi = None
    if gauge_fix:
        psi = alg.zero
        for a in range(1, dim + 1):
            psi = psi + alg.gen("Cb%d" % a) * alg.gen(fields[a - 1])
    params = (("g", g), ("rep", rep or ""), ("gauge_fix", bool(gauge_fix)))
    return make_model(alg, alg.zero, syms, _ghost_structure(ghosts, f), nonmin, psi,
                      name="lie_gauge", params=params)


def ym_matrix(d=0, g="su2", gauge_fix=True, truncation=None):
    """Yang-Mills matrix model: d+1 adjoint matrices A_mu with
    S = -1/4 sum_{mu,nu} sum_c ([A_mu, A_nu]^c)^2, gauge symmetry
    gamma A = [C, A] (the orientation for which the master equation holds
    with gamma C = -1/2 [C, C])."""
    d = int(d)
    if d < 0:
        raise ModelError("ym_matrix needs d >= 0")
    dim, f = lie_structure(g)
    ghosts = ["C%d" % a for a in range(1, dim + 1)]
    fields = ["A%d_%d" % (mu, a) for mu in range(d + 1) for a in range(1, dim + 1)]
    nonmin = [("Cb%d" % a, "B%d" % a) for a in range(1, dim + 1)] if gauge_fix else []
    alg = build_algebra(fields, ghosts, nonmin, truncation=truncation or default_truncation())

    def A(mu, a):
        return alg.gen("A%d_%d" % (mu, a))

    def comm(mu, nu, c):
        out = alg.zero
        for (cc, a, b), v in f.items():
            if cc == c:
                out = out + (A(mu, a) * A(nu, b)).scale(Fraction(v))
        return out

    S = alg.zero
    for mu in range(d + 1):
        for nu in range(d + 1):
            for c in range(1, dim + 1):
                k = comm(mu, nu, c)
                S = S + (k * k).scale(Fraction(-1, 4))
    syms = []
    for b in range(1, dim + 1):
        rho = {}
        # [C, A]^c = f^c_ba C^b A^a, so rho_b^{(mu,c)} = f^c_ba A^a
        for mu in range(d + 1):
            for c in range(1, dim + 1):
                comp = alg.zero
                for a in range(1, dim + 1):
                    v = f.get((c, b, a), 0)
                    if v:
                        comp = comp + A(mu, a).scale(Fraction(v))
                if not comp.is_zero():
                    rho["A%d_%d" % (mu, c)] = comp
        syms.append((ghosts[b - 1], rho))
    psi = None
    if gauge_fix:
        psi = alg.zero
        for a in range(1, dim + 1):
            psi = psi + alg.gen("Cb%d" % a) * A(0, a)
    params = (("d", d), ("g", g), ("gauge_fix", bool(gauge_fix)))
    return make_model(alg, S, syms, _ghost_structure(ghosts, f), nonmin, psi,
                      name="ym_matrix", params=params)
