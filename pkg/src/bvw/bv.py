"""
Classical BV calculus: antibracket, BV Laplacian, Koszul and
Chevalley-Eilenberg differentials, extended action, master equation,
gauge fixing and the total-antifield-number expansion.
"""

import itertools
from dataclasses import dataclass, field as dc_field
from fractions import Fraction

from gmpy2 import mpq

from .algebra import (Algebra, Poly, antifield_of, antighost, field as mkfield, ghost,
                      left_derivative_index, multiplier, to_mpq)


class ModelError(ValueError):
    pass


def _parity_parts(X):
    return [(p, X.parity_part(p)) for p in (0, 1)]


def antibracket(X, Y):
    """{X,Y} = -sum_a w_a (-1)^{(1+|X|)|phi_a|} (dX/dphi_a dY/dphi_a‡
    + (-1)^{|X|} dX/dphi_a‡ dY/dphi_a), left derivatives throughout."""
    alg = X.alg
    out = alg.zero
    xv, yv = X.variables(), Y.variables()
    for px, Xp in _parity_parts(X):
        if Xp.is_zero():
            continue
        acc = alg.zero
        for f, a, w in alg.pairs:
            fodd = alg.odd[f]
            term = alg.zero
            if f in xv and a in yv:
                term = term + left_derivative_index(Xp, f) * left_derivative_index(Y, a)
            if a in xv and f in yv:
                t2 = left_derivative_index(Xp, a) * left_derivative_index(Y, f)
                term = term - t2 if px else term + t2
            if term.is_zero():
                continue
            sign = -1 if ((1 + px) * fodd) % 2 else 1
            acc = acc + term.scale(-sign * w)
        out = out + acc
    return out


def bv_laplacian(X):
    """Delta X = sum_a w_a (-1)^{|phi_a|} d/dphi_a d/dphi_a‡ X, left derivatives,
    the antifield derivative applied first.

    For even fields this is the plain divergence.  The ghost-sector sign is
    the one for which Delta^2 = 0 and
    Delta(PQ) = Delta(P) Q + (-1)^{|P|} P Delta(Q) - (-1)^{|P|} {P, Q}
    hold together with the antibracket above.
    """
    alg = X.alg
    out = alg.zero
    xv = X.variables()
    for f, a, w in alg.pairs:
        if f not in xv or a not in xv:
            continue
        t = left_derivative_index(left_derivative_index(X, a), f)
        if t.is_zero():
            continue
        out = out + t.scale(-w if alg.odd[f] else w)
    return out


@dataclass(frozen=True)
class SymmetryGenerator:
    ghost_id: str
    rho: tuple  # ((field_id, Poly), ...)

    def rho_map(self):
        return dict(self.rho)


@dataclass(frozen=True)
class LieStructure:
    """Structure constants f^c_ab keyed by ghost ids (c, a, b)."""

    f: tuple = ()  # ((c, a, b, Fraction), ...) with a < b in declaration order

    @staticmethod
    def from_dict(d, ghost_ids):
        """Build from {(c, a, b): value}; fills f^c_ba = -f^c_ab."""
        pos = {g: k for k, g in enumerate(ghost_ids)}
        full = {}
        for (c, a, b), v in d.items():
            for gid in (c, a, b):
                if gid not in pos:
                    raise ModelError("structure constant refers to unknown ghost %r" % gid)
            v = Fraction(v)
            if a == b:
                if v:
                    raise ModelError("structure constants must be antisymmetric in the lower indices")
                continue
            key, sgn = ((c, a, b), 1) if pos[a] < pos[b] else ((c, b, a), -1)
            if key in full and full[key] != sgn * v:
                raise ModelError("inconsistent structure constant f^%s_%s%s" % (c, a, b))
            full[key] = sgn * v
        items = sorted(((c, a, b, v) for (c, a, b), v in full.items() if v),
                       key=lambda t: (pos[t[0]], pos[t[1]], pos[t[2]]))
        return LieStructure(tuple(items))

    def value(self, c, a, b):
        for cc, aa, bb, v in self.f:
            if cc == c and aa == a and bb == b:
                return v
            if cc == c and aa == b and bb == a:
                return -v
        return Fraction(0)


@dataclass(frozen=True)
class Model:
    algebra: Algebra
    action: Poly
    symmetries: tuple = ()
    structure: LieStructure = LieStructure()
    nonminimal: tuple = ()  # ((antighost_id, multiplier_id), ...)
    gauge_fermion: Poly | None = None
    name: str = "model"
    fields: tuple = ()
    params: tuple = dc_field(default=())

    def __post_init__(self):
        alg = self.algebra
        if self.action.alg != alg:
            raise ModelError("action lives in a different algebra")
        for m, h, l, j in self.action._t:
            gr = alg.mono_grading(m)
            if gr["gh"] or gr["af"] or gr["ta"]:
                raise ModelError("action must have #gh 0 and be antifield-free")
            if j:
                raise ModelError("action must have real coefficients")
        for s in self.symmetries:
            if s.ghost_id not in alg.index:
                raise ModelError("symmetry uses undeclared ghost %r" % s.ghost_id)
            if alg.generators[alg.index[s.ghost_id]].kind != "ghost":
                raise ModelError("%s is not a ghost generator" % s.ghost_id)
            for fid, r in s.rho:
                if fid not in alg.index:
                    raise ModelError("symmetry acts on undeclared field %r" % fid)
                for m, h, l, j in r._t:
                    gr = alg.mono_grading(m)
                    if gr["gh"] or gr["af"] or gr["ta"] or gr["pg"]:
                        raise ModelError("symmetry components must be ghost- and antifield-free")
        if self.gauge_fermion is not None and not self.gauge_fermion.is_zero():
            for m, h, l, j in self.gauge_fermion._t:
                gr = alg.mono_grading(m)
                if gr["gh"] != -1 or gr["af"] != 0 or gr["ta"] != 0:
                    raise ModelError("gauge fermion must have #gh -1 and #af 0")

    @property
    def ghost_ids(self):
        return tuple(s.ghost_id for s in self.symmetries)

    def gen(self, name):
        return self.algebra.gen(name)

    def af(self, name):
        return self.algebra.antifield(name)


def build_algebra(fields, ghosts=(), nonminimal=(), truncation=(2, 2), weights=None):
    """Fields, ghosts and nonminimal pairs plus one antifield each."""
    gens = [mkfield(f) if isinstance(f, str) else f for f in fields]
    gens += [ghost(c) for c in ghosts]
    gens += [antighost(cb) for cb, _ in nonminimal]
    gens += [multiplier(b) for _, b in nonminimal]
    afs = [antifield_of(g, weight=(weights or {}).get(g.id, 1)) for g in gens]
    return Algebra(gens + afs, truncation=truncation)


def make_model(alg, action, symmetries=(), structure=None, nonminimal=(), gauge_fermion=None,
               name="model", params=()):
    syms = tuple(SymmetryGenerator(gid, tuple(sorted(rho.items(), key=lambda kv: alg.index[kv[0]])))
                 if isinstance(rho, dict) else SymmetryGenerator(gid, tuple(rho))
                 for gid, rho in symmetries)
    if structure is None:
        structure = LieStructure()
    elif isinstance(structure, dict):
        structure = LieStructure.from_dict(structure, [s.ghost_id for s in syms])
    fields = tuple(g.id for g in alg.generators if g.kind == "field")
    return Model(alg, action, syms, structure, tuple(nonminimal), gauge_fermion, name, fields,
                 tuple(params))


# -- differentials -----------------------------------------------------------

def koszul(model, X):
    """delta_S X = {X, S}."""
    return antibracket(X, model.action)


def build_extended_action(model):
    """S + C^a rho_a^i phi‡_i + 1/2 f^c_ab C^a C^b C‡_c - i B Cb‡."""
    alg = model.algebra
    S = model.action
    for s in model.symmetries:
        if alg.index[s.ghost_id] not in alg.partner:
            raise ModelError("ghost %s has no antifield" % s.ghost_id)
        C = alg.gen(s.ghost_id)
        for fid, r in s.rho:
            if alg.index[fid] not in alg.partner:
                raise ModelError("field %s has no antifield" % fid)
            S = S + C * r * alg.antifield(fid)
    for c, a, b, v in model.structure.f:
        # 1/2 f^c_ab over ordered pairs equals f^c_ab over a < b
        S = S + (alg.gen(a) * alg.gen(b) * alg.antifield(c)).scale(to_mpq(v))
    for cb, b in model.nonminimal:
        S = S - alg.i * alg.gen(b) * alg.antifield(cb)
    return S


class Differential:
    """X -> {X, S^ext}, optionally restricted to an #af-change component."""

    def __init__(self, model, kind="s", ext=None):
        if kind not in ("s", "delta", "gamma"):
            raise ValueError("differential must be one of s, delta, gamma")
        self.model = model
        self.kind = kind
        self.ext = build_extended_action(model) if ext is None else ext

    def __call__(self, X):
        if self.kind == "s":
            return antibracket(X, self.ext)
        return _split(self.model, X, self.ext, -1 if self.kind == "delta" else 0)

    def on_generators(self):
        alg = self.model.algebra
        return {g.id: self(alg.gen(g.id)) for g in alg.generators}

    def degree_shift(self):
        shift = 0
        for g, img in self.on_generators().items():
            if not img.is_zero():
                shift = max(shift, img.degree() - 1)
        return shift


def bv_differential(model, X, ext=None):
    return Differential(model, "s", ext)(X)


def delta_differential(model, X, ext=None):
    return _split(model, X, ext, -1)


def ce_differential(model, X, ext=None):
    """gamma: the #af-preserving part of s (derivation extension of the ghost table)."""
    return _split(model, X, ext, 0)


def _split(model, X, ext, change):
    alg = model.algebra
    ext = build_extended_action(model) if ext is None else ext
    byaf = {}
    for k, c in X._t.items():
        byaf.setdefault(alg.mono_grading(k[0])["af"], {})[k] = c
    out = alg.zero
    for af, terms in byaf.items():
        Y = antibracket(Poly(alg, terms), ext)
        out = out + Y.filter(lambda m, h, l, af=af: alg.mono_grading(m)["af"] == af + change)
    return out


def check_cme(model, ext=None):
    ext = build_extended_action(model) if ext is None else ext
    res = antibracket(ext, ext)
    return {"holds": res.is_zero(), "residual": res}


def s_squared_on_generators(model, ext=None):
    """Return {generator id: s(s(g))} for generators where it is nonzero."""
    ext = build_extended_action(model) if ext is None else ext
    alg = model.algebra
    bad = {}
    for g in alg.generators:
        x = alg.gen(g.id)
        r = antibracket(antibracket(x, ext), ext)
        if not r.is_zero():
            bad[g.id] = r
    return bad


# -- gauge fixing ------------------------------------------------------------

def _check_fermion(psi):
    alg = psi.alg
    for m, h, l, j in psi._t:
        gr = alg.mono_grading(m)
        if gr["gh"] != -1 or gr["af"] != 0 or gr["ta"] != 0:
            raise ModelError("gauge fermion must have #gh -1 and #af 0")


def gauge_fix(model, X, psi=None):
    """alpha_psi(X) = sum_n 1/n! {psi, ... {psi, X}}."""
    psi = model.gauge_fermion if psi is None else psi
    if psi is None or psi.is_zero():
        return X
    _check_fermion(psi)
    out = X
    term = X
    n = 0
    # each bracket with an antifield-free psi removes one antifield
    while True:
        n += 1
        term = antibracket(psi, term).scale(Fraction(1, n))
        if term.is_zero():
            return out
        out = out + term
        if n > 10000:
            raise ModelError("gauge transformation did not terminate")


def expand_by_ta(model, transformed_action):
    """Split the gauge-fixed differential by total antifield number."""
    alg = model.algebra
    ta = alg.ta
    St = transformed_action
    gauge_fixed = St.filter(lambda m, h, l: sum(ta[g] * e for g, e in m) == 0)
    table = {}
    for g in alg.generators:
        if g.kind == "antifield":
            continue
        img = antibracket(alg.gen(g.id), St)
        table[g.id] = img.filter(lambda m, h, l: sum(ta[k] * e for k, e in m) == 0)
    return {"gauge_fixed_action": gauge_fixed, "brst_table": table}


# -- symmetries ----------------------------------------------------------------

def vector_field_components(X):
    """{field index: coefficient} of a polynomial linear in field antifields."""
    alg = X.alg
    comps = {}
    for f, a, w in alg.pairs:
        if alg.generators[f].kind not in ("field", "site"):
            continue
        c = left_derivative_index(X, a)
        if not c.is_zero():
            comps[f] = c
    return comps


def eom_generators(model):
    alg = model.algebra
    out = []
    for f, a, w in alg.pairs:
        if alg.generators[f].kind in ("field", "site"):
            out.append(left_derivative_index(model.action, f))
    return [s for s in out if not s.is_zero()]


def ideal_membership(alg, gens, target, max_degree):
    """Is target in span{g*m : deg(g*m) <= max_degree, m a field monomial}?"""
    from .linalg import in_span
    from .cohomology import even_field_monomials
    field_idx = [k for k, g in enumerate(alg.generators) if g.kind in ("field", "site")]
    cols = []
    for gpoly in gens:
        d = gpoly.degree()
        for m in even_field_monomials(field_idx, max_degree - d):
            cols.append(gpoly * Poly(alg, {(m, 0, 0, 0): mpq(1)}))
    return in_span(cols, target)


def is_symmetry(model, X, max_degree=None, witness_points=None):
    """Classify a vector field X (#af 1) as symmetry / trivial symmetry.

    ``trivial`` is True when every coefficient lies in the EOM ideal up to
    ``max_degree``, False when a point of the solution set is found where
    X does not vanish, and None ("unknown at degree D") otherwise.
    """
    alg = model.algebra
    for m, h, l, j in X._t:
        gr = alg.mono_grading(m)
        if gr["af"] != 1 or gr["ta"] != 1 or gr["gh"] != -1:
            raise ModelError("vector field must have #af 1 and #gh -1")
    sym = koszul(model, X).is_zero()
    comps = vector_field_components(X)
    eoms = eom_generators(model)
    if max_degree is None:
        max_degree = max([c.degree() for c in comps.values()] + [0]) + \
            max([e.degree() for e in eoms] + [0])
    trivial = None
    if all(ideal_membership(alg, eoms, c, max_degree) for c in comps.values()):
        trivial = True
    else:
        pts = witness_points if witness_points is not None else _small_onshell_points(model, eoms)
        for p in pts:
            if any(evaluate(c, p) != 0 for c in comps.values()):
                trivial = False
                break
    return {"symmetry": sym, "trivial": trivial, "degree": max_degree}


def evaluate(p, point):
    """Evaluate an antifield-free, ghost-free polynomial at {field id: rational}."""
    alg = p.alg
    total = mpq(0)
    for (m, h, l, j), c in p._t.items():
        if h or l or j:
            raise ModelError("evaluation needs a plain rational polynomial")
        v = c
        for g, e in m:
            v *= to_mpq(point[alg.generators[g].id]) ** e
        total += v
    return total


def _small_onshell_points(model, eoms, bound=3):
    alg = model.algebra
    fids = [g.id for g in alg.generators if g.kind == "field"]
    if len(fids) > 4 or any(any(h or l or j for (m, h, l, j) in e._t) for e in eoms):
        return []
    pts = []
    for vals in itertools.product(range(-bound, bound + 1), repeat=len(fids)):
        p = dict(zip(fids, vals))
        if all(evaluate(e, p) == 0 for e in eoms):
            pts.append(p)
    return pts
