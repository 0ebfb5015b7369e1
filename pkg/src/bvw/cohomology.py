"""
Degree-truncated cohomology of the BV, Koszul and Chevalley-Eilenberg
differentials by exact sparse linear algebra.
"""

from dataclasses import dataclass, field

from gmpy2 import mpq

from .algebra import Poly, rational_str
from .bv import Differential
from .linalg import Eliminator, _has_imag, _times_i, nullspace


class CohomologyError(ValueError):
    pass


@dataclass(frozen=True)
class TruncatedBasis:
    ghost_number: int
    max_degree: int
    monomials: tuple
    algebra: object = field(default=None, compare=False, repr=False)

    def __len__(self):
        return len(self.monomials)

    def index(self):
        return {m: k for k, m in enumerate(self.monomials)}


def even_field_monomials(indices, max_degree):
    """All monomials in the given (even) generator indices with degree <= max_degree."""
    out = []

    def rec(pos, left, acc):
        if pos == len(indices):
            out.append(tuple(acc))
            return
        g = indices[pos]
        for e in range(left + 1):
            rec(pos + 1, left - e, acc + [(g, e)] if e else acc)

    if max_degree >= 0:
        rec(0, max_degree, [])
    return out


def monomial_basis(alg, ghost_number, max_degree, pure_ghost=None):
    """All monomials with #gh = ghost_number and degree <= max_degree.

    With ``pure_ghost`` set, only monomials of that #pg are kept.
    """
    if max_degree < 0:
        raise CohomologyError("max_degree must be nonnegative")
    n = len(alg.generators)
    gh = alg.gh
    odd = alg.odd
    # bounds on the ghost number reachable from position k with r more factors
    sup_pos = [0] * (n + 1)
    sup_neg = [0] * (n + 1)
    for k in range(n - 1, -1, -1):
        sup_pos[k] = max(sup_pos[k + 1], gh[k])
        sup_neg[k] = min(sup_neg[k + 1], gh[k])
    out = []

    def rec(k, left, g, acc):
        if k == n:
            if g == ghost_number:
                out.append(tuple(acc))
            return
        need = ghost_number - g
        if need > sup_pos[k] * left or need < sup_neg[k] * left:
            return
        top = 1 if odd[k] else left
        for e in range(min(top, left) + 1):
            rec(k + 1, left - e, g + gh[k] * e, acc + [(k, e)] if e else acc)

    rec(0, max_degree, 0, [])
    if pure_ghost is not None:
        out = [m for m in out if alg.mono_grading(m)["pg"] == pure_ghost]
    out.sort(key=lambda m: (alg.mono_degree(m), m))
    return TruncatedBasis(ghost_number, max_degree, tuple(out), alg)


@dataclass(frozen=True)
class SparseMatrix:
    """Exact matrix; entries map (row, col) -> (re, im) pair of rationals."""

    nrows: int
    ncols: int
    entries: dict

    def column(self, j):
        return {i: v for (i, jj), v in self.entries.items() if jj == j}

    def rank(self):
        cols = {}
        for (i, j), (re, im) in self.entries.items():
            c = cols.setdefault(j, {})
            if re:
                c[(i, 0)] = re
            if im:
                c[(i, 1)] = im
        from .linalg import complex_rank
        return complex_rank(list(cols.values()))

    def to_text(self):
        lines = []
        for (i, j) in sorted(self.entries):
            re, im = self.entries[(i, j)]
            lines.append("%d %d %s" % (i, j, _gauss_str(re, im)))
        return "\n".join(lines)


def _gauss_str(re, im):
    if not im:
        return rational_str(re)
    if not re:
        return rational_str(im) + "*i"
    return "%s + %s*i" % (rational_str(re), rational_str(im))


def operator_matrix(op, domain, codomain):
    """Matrix of a linear map between two truncated bases.

    The image must consist of classical (hbar- and lambda-free) terms lying
    in the codomain basis; otherwise an error asks for a larger codomain.
    """
    idx = codomain.index()
    entries = {}
    for j, m in enumerate(domain.monomials):
        img = op(Poly(domain.algebra, {(m, 0, 0, 0): mpq(1)}))
        for (mm, h, l, jj), c in img._t.items():
            if h or l:
                raise CohomologyError("operator produced hbar/lambda dependent terms")
            if mm not in idx:
                raise CohomologyError("codomain too small: image term outside codomain basis")
            i = idx[mm]
            re, im = entries.get((i, j), (mpq(0), mpq(0)))
            entries[(i, j)] = (re + c, im) if jj == 0 else (re, im + c)
    entries = {k: v for k, v in entries.items() if v[0] or v[1]}
    return SparseMatrix(len(codomain), len(domain), entries)


@dataclass(frozen=True)
class CohomologyReport:
    differential: str
    ghost_number: int
    max_degree: int
    shift: int
    basis_size: int
    dim_kernel: int
    dim_image: int
    dim_cohomology: int
    representative_cocycles: tuple

    def as_dict(self):
        return {
            "differential": self.differential,
            "ghost_number": self.ghost_number,
            "max_degree": self.max_degree,
            "shift": self.shift,
            "basis_size": self.basis_size,
            "dim_kernel": self.dim_kernel,
            "dim_image": self.dim_image,
            "dim_cohomology": self.dim_cohomology,
            "representative_cocycles": [str(p) for p in self.representative_cocycles],
        }

    def to_text(self):
        d = self.as_dict()
        lines = ["%s: %s" % (k, d[k]) for k in ("differential", "ghost_number", "max_degree",
                                               "shift", "basis_size", "dim_kernel", "dim_image",
                                               "dim_cohomology")]
        lines.append("representative_cocycles:")
        lines += ["  " + r for r in d["representative_cocycles"]]
        return "\n".join(lines)


def _apply(d, alg, basis):
    return [d(Poly(alg, {(m, 0, 0, 0): mpq(1)})) for m in basis.monomials]


def _check_square(d):
    alg = d.model.algebra
    for g in alg.generators:
        x = alg.gen(g.id)
        r = d(d(x))
        if not r.is_zero():
            raise CohomologyError("differential does not square to zero on %s: %s"
                                  % (g.id, r))


def cohomology_dim(model, differential="s", ghost_number=0, max_degree=0, pure_ghost=None,
                   representatives=True):
    """Truncated cohomology dimension at (ghost_number, <= max_degree).

    dim H = dim ker(d on (gh, <=D)) - dim(im(d from (gh-1, <=D+shift)) cap span(<=D)).
    """
    alg = model.algebra
    d = Differential(model, differential)
    _check_square(d)
    shift = d.degree_shift()
    D = max_degree
    B0 = monomial_basis(alg, ghost_number, D, pure_ghost)
    B1 = monomial_basis(alg, ghost_number - 1, D + shift, pure_ghost)
    img0 = _apply(d, alg, B0)
    img1 = _apply(d, alg, B1)
    cols0 = [dict(p._t) for p in img0]
    cols1 = [dict(p._t) for p in img1]
    cplx = _has_imag(cols0) or _has_imag(cols1)

    # kernel of d on the degree <= D space
    if cplx:
        dom = [x for c in cols0 for x in (c, _times_i(c))]
        kern_q = nullspace(dom)
        kernel = [_complex_combo(alg, B0.monomials, k) for k in kern_q]
        kernel = _independent_complex(kernel)
    else:
        kern_q = nullspace(cols0)
        kernel = [_combo(alg, B0.monomials, k) for k in kern_q]
    dim_kernel = len(kernel)

    # image intersected with span(<= D)
    def realify(cols):
        return [x for c in cols for x in (c, _times_i(c))] if cplx else cols

    full = Eliminator()
    high = Eliminator()
    for c in realify(cols1):
        if not c:
            continue
        full.add(c)
        ch = {k: v for k, v in c.items() if alg.mono_degree(k[0]) > D}
        if ch:
            high.add(ch)
    div = 2 if cplx else 1
    dim_image = (full.rank - high.rank) // div

    reps = []
    if representatives:
        for z in kernel:
            vecs = [dict(z._t)]
            if cplx:
                vecs.append(_times_i(vecs[0]))
            added = [full.add(v) for v in vecs]
            if all(added):
                reps.append(z)
        if len(reps) != dim_kernel - dim_image:
            raise CohomologyError("inconsistent truncated cohomology count (%d vs %d)"
                                  % (len(reps), dim_kernel - dim_image))
    return CohomologyReport(differential, ghost_number, D, shift, len(B0), dim_kernel, dim_image,
                            dim_kernel - dim_image, tuple(reps))


def _combo(alg, monos, k):
    return Poly(alg, {(monos[i], 0, 0, 0): c for i, c in k.items() if c})


def _complex_combo(alg, monos, k):
    terms = {}
    for idx, c in k.items():
        i, part = divmod(idx, 2)
        terms[(monos[i], 0, 0, part)] = terms.get((monos[i], 0, 0, part), 0) + c
    return Poly(alg, {kk: v for kk, v in terms.items() if v})


def _independent_complex(vecs):
    el = Eliminator()
    out = []
    for z in vecs:
        v = dict(z._t)
        if not v:
            continue
        a = el.add(v)
        b = el.add(_times_i(v))
        if a and b:
            out.append(z)
    return out
