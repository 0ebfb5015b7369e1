"""Shared builders for random inputs and standard lattice examples."""

import random
from fractions import Fraction

from bvw.algebra import Poly


def random_poly(alg, rng, gens=None, terms=3, max_len=3, coeff=3, parity=None):
    """Random polynomial; with ``parity`` set, its parity component (never zero)."""
    gens = gens if gens is not None else [alg.gen(g.id) for g in alg.generators]
    while True:
        p = alg.zero
        for _ in range(terms):
            t = alg.one.scale(rng.randint(-coeff, coeff))
            for _ in range(rng.randint(0, max_len)):
                t = t * rng.choice(gens)
            p = p + t
        if parity is None:
            if not p.is_zero():
                return p
            continue
        q = p.parity_part(parity)
        if not q.is_zero():
            return q


def random_homogeneous(alg, rng, **kw):
    return random_poly(alg, rng, parity=rng.randint(0, 1), **kw)


def sign(p):
    return -1 if p.parity() else 1


def rng(seed):
    return random.Random(seed)


def theta(th, pairs):
    """Rigid-symmetry vector field c * sum_{(p,q)} (Pphi(q) phi‡(p) - Pphi(p) phi‡(q)).

    An antisymmetric coupling of interior sites: {theta, S} = 0, Delta theta = 0.
    """
    c = th.ghost()
    out = th.alg.zero
    for p, q in pairs:
        out = out + th.p_phi(*q) * th.antifield(*p) - th.p_phi(*p) * th.antifield(*q)
    return c * out


def quartic(th, coupling=Fraction(1)):
    """lambda * w/24 * sum_p phi(p)^4."""
    L = th.lattice
    V = th.alg.zero
    for t, x in L.sites():
        V = V + th.phi(t, x) ** 4
    return V.scale(Fraction(coupling) * L.weight / 24) * th.alg.lam


def smeared(th, values):
    """Phi(f) for f given as {(t, x): rational}."""
    return th.smeared(values)


def regular_lattice_poly(th, rng, with_antifields=True, terms=3, max_len=3):
    """Random polynomial in site fields and (interior) antifields."""
    L = th.lattice
    gens = [th.phi(t, x) for t, x in L.sites()]
    if with_antifields:
        gens += [th.antifield(t, x) for t in L.interior_times() for x in range(L.Nx)]
    return random_poly(th.alg, rng, gens, terms=terms, max_len=max_len)


def as_poly(alg, terms):
    return Poly(alg, terms)
