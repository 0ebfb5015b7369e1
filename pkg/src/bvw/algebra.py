"""
Graded-commutative polynomial algebra over even and odd generators.

Coefficients live in a truncated formal series ring in hbar and lambda over
the Gaussian rationals.  Internally a polynomial is a flat dict

    (monomial, h, l, j) -> mpq

where ``monomial`` is a tuple of ``(generator_index, exponent)`` pairs sorted
by generator index, ``h`` and ``l`` are the hbar and lambda powers and
``j`` in {0, 1} is the power of the imaginary unit.
"""

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from gmpy2 import mpq

KINDS = ("field", "ghost", "antighost", "multiplier", "antifield", "site")


class AlgebraError(ValueError):
    pass


def to_mpq(c):
    if isinstance(c, str):
        return mpq(Fraction(c))
    if isinstance(c, (int, Rational)) or type(c).__name__ == "mpq":
        return mpq(c)
    raise TypeError("not an exact rational: %r" % (c,))


@dataclass(frozen=True)
class Generator:
    """One symbolic degree of freedom with its gradings.

    ``partner`` names the field of an antifield (and vice versa is derived
    by the algebra).  ``weight`` is the factor carried by the pair in the
    antibracket and BV Laplacian; it is read from the antifield side.
    """

    id: str
    ghost_number: int = 0
    antifield_number: int = 0
    pure_ghost_number: int = 0
    kind: str = "field"
    partner: str | None = None
    weight: Fraction = Fraction(1)

    @property
    def parity(self):
        return abs(self.ghost_number) % 2

    @property
    def is_odd(self):
        return self.parity == 1

    @property
    def total_antifield_number(self):
        return 1 if self.kind == "antifield" else 0


def field(name):
    return Generator(name, 0, 0, 0, "field")


def ghost(name):
    return Generator(name, 1, 0, 1, "ghost")


def antighost(name):
    # gh -1 with #af 0, so that a gauge fermion built from it has #af 0
    return Generator(name, -1, 0, -1, "antighost")


def multiplier(name):
    return Generator(name, 0, 0, 0, "multiplier")


def antifield_of(g, name=None, weight=1):
    af = g.pure_ghost_number + 1
    return Generator(name or g.id + "‡", -g.ghost_number - 1, af, 0,
                     "antifield", g.id, Fraction(weight))


class Algebra:
    """Immutable algebra context: generators, canonical order, truncation."""

    def __init__(self, generators, canonical_order=None, truncation=(2, 2)):
        gens = list(generators)
        ids = [g.id for g in gens]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise AlgebraError("duplicate generator id: %s" % ", ".join(dup))
        if canonical_order is not None:
            order = list(canonical_order)
            if sorted(order) != sorted(ids):
                raise AlgebraError("canonical order must list every generator once")
            byid = {g.id: g for g in gens}
            gens = [byid[i] for i in order]
        for g in gens:
            if g.kind not in KINDS:
                raise AlgebraError("unknown generator kind %r" % g.kind)
            if g.ghost_number != g.pure_ghost_number - g.antifield_number:
                raise AlgebraError("grading rule violated for %s: #gh != #pg - #af" % g.id)
            if g.antifield_number < 0:
                raise AlgebraError("grading rule violated for %s: #af < 0" % g.id)
        self.generators = tuple(gens)
        self.index = {g.id: k for k, g in enumerate(gens)}
        self.odd = tuple(g.is_odd for g in gens)
        self.gh = tuple(g.ghost_number for g in gens)
        self.af = tuple(g.antifield_number for g in gens)
        self.pg = tuple(g.pure_ghost_number for g in gens)
        self.ta = tuple(g.total_antifield_number for g in gens)
        pairs = []
        partner = {}
        for k, g in enumerate(gens):
            if g.kind != "antifield":
                continue
            if g.partner not in self.index:
                raise AlgebraError("antifield %s pairs with unknown generator %r" % (g.id, g.partner))
            f = self.index[g.partner]
            fg = gens[f]
            if fg.kind == "antifield":
                raise AlgebraError("antifield %s pairs with another antifield" % g.id)
            if g.ghost_number != -fg.ghost_number - 1:
                raise AlgebraError("grading rule violated for antifield pair (%s, %s)" % (fg.id, g.id))
            if f in partner:
                raise AlgebraError("generator %s has two antifields" % fg.id)
            if g.weight == 0:
                raise AlgebraError("zero pair weight for %s" % g.id)
            partner[f] = k
            partner[k] = f
            pairs.append((f, k, to_mpq(g.weight)))
        self.pairs = tuple(pairs)
        self.partner = partner
        kh, kl = truncation
        if kh < 0 or kl < 0:
            raise AlgebraError("truncation orders must be nonnegative")
        self.truncation = (int(kh), int(kl))
        self._mulcache = {}

    def __repr__(self):
        return "Algebra(%d generators, truncation=%r)" % (len(self.generators), self.truncation)

    def signature(self):
        return (tuple((g.id, g.ghost_number, g.antifield_number, g.pure_ghost_number, g.kind,
                       g.partner, g.weight) for g in self.generators), self.truncation)

    def __eq__(self, other):
        return isinstance(other, Algebra) and self.signature() == other.signature()

    def __hash__(self):
        return hash(self.signature())

    def with_truncation(self, truncation):
        return Algebra(self.generators, truncation=truncation)

    # -- constructors ---------------------------------------------------

    def gen(self, name):
        if isinstance(name, Generator):
            name = name.id
        try:
            k = self.index[name]
        except KeyError:
            raise AlgebraError("unknown generator %r" % (name,)) from None
        return Poly(self, {(((k, 1),), 0, 0, 0): mpq(1)})

    def antifield(self, name):
        k = self.index[name]
        if k not in self.partner:
            raise AlgebraError("%s has no antifield partner" % name)
        return Poly(self, {(((self.partner[k], 1),), 0, 0, 0): mpq(1)})

    def const(self, c=1, h=0, l=0, imag=False):
        c = to_mpq(c)
        kh, kl = self.truncation
        if c == 0 or h > kh or l > kl:
            return Poly(self, {})
        return Poly(self, {((), h, l, 1 if imag else 0): c})

    @property
    def zero(self):
        return Poly(self, {})

    @property
    def one(self):
        return self.const(1)

    @property
    def hbar(self):
        return self.const(1, h=1)

    @property
    def lam(self):
        return self.const(1, l=1)

    @property
    def i(self):
        return self.const(1, imag=True)

    # -- monomial arithmetic ---------------------------------------------

    def mono_mul(self, m1, m2):
        """Return (sign, monomial) for m1*m2, or None if an odd square appears."""
        key = (m1, m2)
        r = self._mulcache.get(key)
        if r is not None or key in self._mulcache:
            return r
        odd = self.odd
        out = []
        sign = 1
        # odd generators of m2 that have not yet been passed
        i = j = 0
        n1, n2 = len(m1), len(m2)
        odd1_remaining = sum(1 for (g, _) in m1 if odd[g])
        r = None
        while i < n1 or j < n2:
            if j >= n2 or (i < n1 and m1[i][0] < m2[j][0]):
                g, e = m1[i]
                out.append((g, e))
                if odd[g]:
                    odd1_remaining -= 1
                i += 1
            elif i >= n1 or m2[j][0] < m1[i][0]:
                g, e = m2[j]
                out.append((g, e))
                if odd[g] and odd1_remaining % 2:
                    sign = -sign
                j += 1
            else:
                g, e = m1[i]
                if odd[g]:
                    break
                out.append((g, e + m2[j][1]))
                i += 1
                j += 1
        else:
            r = (sign, tuple(out))
        if len(self._mulcache) > 500000:
            self._mulcache.clear()
        self._mulcache[key] = r
        return r

    def mono_degree(self, m):
        return sum(e for (_, e) in m)

    def mono_grading(self, m):
        gh = af = pg = ta = 0
        par = 0
        for g, e in m:
            gh += self.gh[g] * e
            af += self.af[g] * e
            pg += self.pg[g] * e
            ta += self.ta[g] * e
            if self.odd[g]:
                par += e
        return {"gh": gh, "af": af, "pg": pg, "ta": ta, "parity": par % 2,
                "degree": self.mono_degree(m)}

    def mono_parity(self, m):
        odd = self.odd
        return sum(e for (g, e) in m if odd[g]) % 2

    def mono_gh(self, m):
        gh = self.gh
        return sum(gh[g] * e for (g, e) in m)

    def mono_str(self, m):
        parts = []
        for g, e in m:
            name = self.generators[g].id
            parts.append(name if e == 1 else "%s^%d" % (name, e))
        return "*".join(parts)


class Series:
    """Immutable truncated series in hbar, lambda over Q(i).

    ``terms`` maps (hbar_power, lambda_power) to a pair (re, im) of mpq.
    """

    __slots__ = ("terms", "truncation")

    def __init__(self, terms, truncation):
        self.terms = {k: v for k, v in terms.items() if v[0] or v[1]}
        self.truncation = truncation

    def __eq__(self, other):
        return isinstance(other, Series) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self):
        return not self.terms

    def __str__(self):
        return series_str({(h, l, j): c for (h, l), (re, im) in self.terms.items()
                           for j, c in ((0, re), (1, im)) if c})

    __repr__ = __str__


def rational_str(c):
    c = mpq(c)
    if c.denominator == 1:
        return str(c.numerator)
    return "%d/%d" % (c.numerator, c.denominator)


def _series_term_str(h, l, j, c, first):
    factors = []
    if j:
        factors.append("i")
    if h:
        factors.append("h" if h == 1 else "h^%d" % h)
    if l:
        factors.append("l" if l == 1 else "l^%d" % l)
    neg = c < 0
    a = -c if neg else c
    if factors and a == 1:
        body = "*".join(factors)
    else:
        body = "*".join([rational_str(a)] + factors)
    if first:
        return ("-" if neg else "") + body
    return (" - " if neg else " + ") + body


def series_str(terms):
    """Render {(h, l, j): c} canonically, lowest orders first."""
    keys = sorted(terms, key=lambda k: (k[0] + k[1], k[0], k[1], k[2]))
    if not keys:
        return "0"
    out = []
    for n, k in enumerate(keys):
        out.append(_series_term_str(k[0], k[1], k[2], terms[k], n == 0))
    return "".join(out)


def _coerce(alg, x):
    if isinstance(x, Poly):
        if x.alg is not alg and x.alg != alg:
            raise AlgebraError("polynomials from different algebras")
        return x
    return alg.const(x)


class Poly:
    """Graded polynomial; immutable value type with canonical term map."""

    __slots__ = ("alg", "_t", "_hash")

    def __init__(self, alg, terms):
        self.alg = alg
        self._t = terms
        self._hash = None

    # -- basic protocol ----------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, Poly):
            return self._t == other._t
        if isinstance(other, (int, Rational)):
            return self._t == _coerce(self.alg, other)._t
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._t.items()))
        return self._hash

    def __bool__(self):
        return bool(self._t)

    def is_zero(self):
        return not self._t

    def items(self):
        return self._t.items()

    def __len__(self):
        return len(self._t)

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        other = _coerce(self.alg, other)
        if not other._t:
            return self
        out = dict(self._t)
        for k, c in other._t.items():
            v = out.get(k)
            if v is None:
                out[k] = c
            else:
                v = v + c
                if v:
                    out[k] = v
                else:
                    del out[k]
        return Poly(self.alg, out)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.alg, {k: -c for k, c in self._t.items()})

    def __sub__(self, other):
        return self + (-_coerce(self.alg, other))

    def __rsub__(self, other):
        return _coerce(self.alg, other) - self

    def scale(self, c):
        c = to_mpq(c)
        if c == 0:
            return Poly(self.alg, {})
        return Poly(self.alg, {k: v * c for k, v in self._t.items()})

    def __mul__(self, other):
        if isinstance(other, Poly):
            return mul(self, other)
        if isinstance(other, (int, Rational)) or type(other).__name__ == "mpq":
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Rational)) or type(other).__name__ == "mpq":
            return self.scale(other)
        return NotImplemented

    def __truediv__(self, other):
        c = to_mpq(other)
        if c == 0:
            raise ZeroDivisionError("division of a polynomial by zero")
        return self.scale(1 / c)

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a nonnegative integer")
        out = self.alg.one
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    # -- structure ---------------------------------------------------------

    def monomials(self):
        return sorted({k[0] for k in self._t}, key=lambda m: (self.alg.mono_degree(m), m))

    def variables(self):
        return {g for k in self._t for (g, _) in k[0]}

    def coefficient(self, m):
        """Series coefficient of the monomial m (a tuple of (index, exp))."""
        terms = {}
        for (mm, h, l, j), c in self._t.items():
            if mm == m:
                re, im = terms.get((h, l), (mpq(0), mpq(0)))
                terms[(h, l)] = (re + c, im) if j == 0 else (re, im + c)
        return Series(terms, self.alg.truncation)

    @property
    def terms(self):
        """Map monomial -> Series (the public view of the term map)."""
        return {m: self.coefficient(m) for m in self.monomials()}

    def parity_part(self, parity):
        odd = self.alg.odd
        return Poly(self.alg, {k: c for k, c in self._t.items()
                               if sum(e for (g, e) in k[0] if odd[g]) % 2 == parity})

    def parity(self):
        """Parity of a parity-homogeneous polynomial (0 for zero)."""
        ps = {self.alg.mono_parity(k[0]) for k in self._t}
        if len(ps) > 1:
            raise AlgebraError("polynomial is not parity-homogeneous")
        return ps.pop() if ps else 0

    def filter(self, pred):
        """Keep terms whose (monomial, h, l) satisfies pred."""
        return Poly(self.alg, {k: c for k, c in self._t.items() if pred(k[0], k[1], k[2])})

    def grading_part(self, name, value):
        alg = self.alg
        return self.filter(lambda m, h, l: alg.mono_grading(m)[name] == value)

    def degree(self):
        if not self._t:
            return -1
        return max(self.alg.mono_degree(k[0]) for k in self._t)

    def series_coefficient(self, hbar_power, lambda_power):
        kh, kl = self.alg.truncation
        if hbar_power > kh or lambda_power > kl:
            raise AlgebraError("requested order h^%d l^%d exceeds truncation (%d, %d)"
                               % (hbar_power, lambda_power, kh, kl))
        return Poly(self.alg, {(m, 0, 0, j): c for (m, h, l, j), c in self._t.items()
                               if h == hbar_power and l == lambda_power})

    def hbar_powers(self):
        return {k[1] for k in self._t}

    def lambda_powers(self):
        return {k[2] for k in self._t}

    def shift(self, dh=0, dl=0):
        """Multiply by h^dh l^dl (dh may be negative), with truncation."""
        kh, kl = self.alg.truncation
        return Poly(self.alg, {(m, h + dh, l + dl, j): c for (m, h, l, j), c in self._t.items()
                               if h + dh <= kh and l + dl <= kl})

    def times_i(self):
        out = {}
        for (m, h, l, j), c in self._t.items():
            if j:
                out[(m, h, l, 0)] = -c
            else:
                out[(m, h, l, 1)] = c
        return Poly(self.alg, out)

    def truncate(self, truncation):
        kh, kl = truncation
        return self.filter(lambda m, h, l: h <= kh and l <= kl)

    def to_algebra(self, alg):
        """Move into an algebra with the same generators (re-truncating)."""
        if alg.generators != self.alg.generators:
            raise AlgebraError("algebras have different generators")
        kh, kl = alg.truncation
        return Poly(alg, {k: c for k, c in self._t.items() if k[1] <= kh and k[2] <= kl})

    def is_scalar(self):
        return all(k[0] == () for k in self._t)

    def real_rational(self):
        """The value of a plain rational constant."""
        if not self._t:
            return mpq(0)
        if len(self._t) == 1:
            (m, h, l, j), c = next(iter(self._t.items()))
            if m == () and h == 0 and l == 0 and j == 0:
                return c
        raise AlgebraError("not a rational constant: %s" % self)

    # -- derivatives -------------------------------------------------------

    def deriv(self, g):
        """Left derivative with respect to a generator (index, id or Generator)."""
        alg = self.alg
        k = g if isinstance(g, int) else alg.index[g.id if isinstance(g, Generator) else g]
        return left_derivative_index(self, k)

    # -- printing ------------------------------------------------------------

    def __str__(self):
        return poly_str(self)

    def __repr__(self):
        return "Poly(%s)" % poly_str(self)


def mul(a, b):
    """Graded-commutative product with Koszul signs and series truncation."""
    alg = a.alg
    if b.alg is not alg and b.alg != alg:
        raise AlgebraError("polynomials from different algebras")
    if not a._t or not b._t:
        return Poly(alg, {})
    kh, kl = alg.truncation
    mm = alg.mono_mul
    out = {}
    get = out.get
    for (m1, h1, l1, j1), c1 in a._t.items():
        for (m2, h2, l2, j2), c2 in b._t.items():
            h = h1 + h2
            if h > kh:
                continue
            l = l1 + l2
            if l > kl:
                continue
            r = mm(m1, m2)
            if r is None:
                continue
            s, m = r
            c = c1 * c2
            j = j1 + j2
            if j == 2:
                j = 0
                s = -s
            if s < 0:
                c = -c
            key = (m, h, l, j)
            v = get(key)
            out[key] = c if v is None else v + c
    return Poly(alg, {k: c for k, c in out.items() if c})


def left_derivative_index(p, k):
    alg = p.alg
    odd = alg.odd
    kodd = odd[k]
    out = {}
    for (m, h, l, j), c in p._t.items():
        sign = 1
        for pos, (g, e) in enumerate(m):
            if g == k:
                break
            if kodd and odd[g]:
                sign = -sign
        else:
            continue
        if e == 1:
            nm = m[:pos] + m[pos + 1:]
        else:
            nm = m[:pos] + ((g, e - 1),) + m[pos + 1:]
        coef = c * e if sign > 0 else -c * e
        key = (nm, h, l, j)
        v = out.get(key)
        out[key] = coef if v is None else v + coef
    return Poly(alg, {kk: c for kk, c in out.items() if c})


def left_derivative(p, g):
    return p.deriv(g)


def grading(p):
    """Per-component gradings of p: a sorted list of dicts."""
    alg = p.alg
    seen = {}
    for (m, h, l, j) in p._t:
        gr = alg.mono_grading(m)
        key = tuple(sorted(gr.items()))
        seen[key] = gr
    if not p._t:
        return [{"gh": 0, "af": 0, "pg": 0, "ta": 0, "parity": 0, "degree": 0}]
    return [seen[k] for k in sorted(seen)]


def series_coefficient(p, hbar_power, lambda_power):
    return p.series_coefficient(hbar_power, lambda_power)


def poly_str(p):
    alg = p.alg
    if not p._t:
        return "0"
    groups = {}
    for (m, h, l, j), c in p._t.items():
        groups.setdefault(m, {})[(h, l, j)] = c
    out = []
    for n, m in enumerate(sorted(groups, key=lambda m: (alg.mono_degree(m), m))):
        coeff = groups[m]
        mono = alg.mono_str(m)
        if len(coeff) == 1:
            (h, l, j), c = next(iter(coeff.items()))
            s = _series_term_str(h, l, j, c, True)
            neg = s.startswith("-")
            body = s[1:] if neg else s
            if mono:
                body = mono if body == "1" else body + "*" + mono
            sep = ("-" if neg else "") if n == 0 else (" - " if neg else " + ")
            out.append(sep + body)
        else:
            body = "(" + series_str(coeff) + ")"
            if mono:
                body += "*" + mono
            out.append(body if n == 0 else " + " + body)
    return "".join(out)


def define_algebra(generators, canonical_order=None, truncation=(2, 2)):
    return Algebra(generators, canonical_order, truncation)
