"""
Exact sparse linear algebra over Q (and Q(i) by realification).

Vectors are dicts from hashable, mutually comparable row keys to rationals.
Elimination is fraction-free: every stored vector is a primitive integer
vector, and pivots are chosen by (column order, smallest row key).
"""

from functools import reduce

from gmpy2 import gcd, mpq, mpz


def _integerize(v):
    """Scale a rational dict to a primitive integer dict; return (dict, scale)."""
    den = mpz(1)
    for c in v.values():
        d = mpq(c).denominator
        if d != 1:
            den = den * d // gcd(den, d)
    out = {k: mpz(mpq(c) * den) for k, c in v.items() if c}
    g = reduce(gcd, out.values(), mpz(0))
    if g > 1:
        out = {k: c // g for k, c in out.items()}
    return out, mpq(den, g) if g else mpq(den)


class Eliminator:
    """Incremental column echelon form.

    ``add(v)`` reduces v against the stored pivots and stores it if it is
    independent.  With ``track=True`` every stored or vanishing column keeps
    the integer combination of original columns that produced it, so
    dependent columns yield kernel vectors.
    """

    def __init__(self, track=False, key=None):
        self.pivots = {}
        self.track = track
        self.key = key
        self.rank = 0
        self.kernel = []
        self.ncols = 0

    def _lead(self, v):
        if self.key is None:
            return min(v)
        return min(v, key=self.key)

    def add(self, v, tag=None):
        col = self.ncols
        self.ncols += 1
        v, _ = _integerize(v)
        comb = None
        if self.track:
            # combinations refer to the integerized input columns
            comb = {col if tag is None else tag: mpz(1)}
        while v:
            r = self._lead(v)
            p = self.pivots.get(r)
            if p is None:
                self.pivots[r] = (v, comb)
                self.rank += 1
                return True
            pv, pc = p
            a = pv[r]
            b = v[r]
            g = gcd(a, b)
            a //= g
            b //= g
            nv = {}
            for k, c in v.items():
                nv[k] = c * a
            for k, c in pv.items():
                x = nv.get(k, 0) - b * c
                if x:
                    nv[k] = x
                else:
                    nv.pop(k, None)
            if comb is not None:
                nc = {k: c * a for k, c in comb.items()}
                for k, c in pc.items():
                    x = nc.get(k, 0) - b * c
                    if x:
                        nc[k] = x
                    else:
                        nc.pop(k, None)
            g = reduce(gcd, nv.values(), mpz(0))
            if comb is not None:
                g = reduce(gcd, nc.values(), g)
            if g > 1:
                nv = {k: c // g for k, c in nv.items()}
                if comb is not None:
                    nc = {k: c // g for k, c in nc.items()}
            v = nv
            if comb is not None:
                comb = nc
        if comb is not None:
            self.kernel.append(comb)
        return False


def rank(columns):
    el = Eliminator()
    for c in columns:
        if c:
            el.add(c)
    return el.rank


def nullspace(columns):
    """Basis of {a : sum_k a_k columns[k] = 0} as dicts k -> mpq."""
    scaled = []
    scales = []
    for c in columns:
        v, s = _integerize(c)
        scaled.append(v)
        scales.append(s)
    el = Eliminator(track=True)
    for v in scaled:
        el.add(v)
    out = []
    for comb in el.kernel:
        # sum comb_k * scaled_k = 0 and scaled_k = columns_k * scale_k
        out.append({k: mpq(c) * scales[k] for k, c in comb.items() if c})
    return out


def in_span(columns, target):
    """Is target in the rational span of columns?  Accepts Poly or dict."""
    cols = [_as_dict(c) for c in columns]
    t = _as_dict(target)
    if not t:
        return True
    cplx = _has_imag(cols) or _has_imag([t])
    if cplx:
        cols = [x for c in cols for x in (c, _times_i(c))]
    el = Eliminator()
    for c in cols:
        if c:
            el.add(c)
    return not el.add(t)


def _as_dict(v):
    if hasattr(v, "_t"):
        return dict(v._t)
    return dict(v)


def _has_imag(cols):
    return any(k[-1] == 1 for c in cols for k in c)


def _times_i(v):
    out = {}
    for k, c in v.items():
        if k[-1]:
            out[k[:-1] + (0,)] = -c
        else:
            out[k[:-1] + (1,)] = c
    return out


def complex_rank(columns):
    """Rank over Q(i) of vectors keyed by (..., j) with j the power of i."""
    cols = [c for c in columns if c]
    if not _has_imag(cols):
        return rank(cols)
    return rank([x for c in cols for x in (c, _times_i(c))]) // 2
