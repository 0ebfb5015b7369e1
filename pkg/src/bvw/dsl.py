"""
Model-definition language.

A model file is a sequence of statements separated by newlines or ';'.
Section headers ([generators], [action], ...) make the leading keyword of
their statements optional; keyword-led statements work anywhere.

    [params]            N = 2
    [generators]        even x, y, z ; ghost c
    [action]            S = z * prod(k=1..N, x^2 + y^2 - k^2)
    [symmetries]        s1 : c -> y*d/dx - x*d/dy
    [structure]         [C1, C2] = C3
    [nonminimal]        pair Cb B
    [gauge_fermion]     psi = Cb*x
    [lattice]           Nt = 4 ; Nx = 3 ; a_t = 1 ; a_x = 1 ; m2 = 1/2 ; f = [[1,0,0],...]
    [interaction]       V = l*phi(1,1)^4/24

Expressions use + - * / ^, parentheses, rationals, declared generators,
antifields written x‡ (or af(x), or d/dx inside vector fields), the
constants i, h (hbar), l (lambda), and prod/sum(k=a..b, expr).  On a
lattice, phi(t,x), phi‡(t,x), Pphi(t,x) (the Klein-Gordon operator applied
to phi), Phi(f) (smeared field of a declared array) and w (cell volume)
are available.  `use NAME(args)` splices in a built-in model.
"""

import re
from dataclasses import dataclass, field
from fractions import Fraction

from gmpy2 import mpq

from .algebra import AlgebraError, Poly, rational_str
from .bv import ModelError, build_algebra, make_model, vector_field_components
from .lattice import Lattice, LatticeError, ScalarField
from . import models


class ParseError(ValueError):
    def __init__(self, msg, line=None, col=None):
        self.msg = msg
        self.line = line
        self.col = col
        where = "line %d, column %d: " % (line, col) if line is not None else ""
        super().__init__(where + msg)


SECTIONS = ("params", "generators", "action", "symmetries", "structure", "nonminimal",
            "gauge_fermion", "lattice", "interaction")
RESERVED = {"i", "h", "hbar", "l", "lam", "prod", "sum", "af", "use", "pair", "phi", "Pphi",
            "Phi", "w", "even", "field", "ghost", "action", "symmetry", "structure", "param",
            "gauge_fermion", "interaction", "model", "lattice"}
LATTICE_KEYS = ("Nt", "Nx", "a_t", "a_x", "m2")


# -- lexer ---------------------------------------------------------------------

@dataclass(frozen=True)
class Tok:
    kind: str   # NUM ID DERIV SECTION OP NL EOF
    value: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>[\n;])
  | (?P<deriv>d/d(?P<dvar>[A-Za-z_][A-Za-z0-9_]*))
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*‡?)
  | (?P<op>->|\.\.|[-+*/^()\[\],=:])
""", re.VERBOSE)


def tokenize(text):
    toks = []
    line, line_start = 1, 0
    pos = 0
    at_line_start = True
    while pos < len(text):
        col = pos - line_start + 1
        if at_line_start:
            m = re.match(r"[ \t]*\[(\w+)\][ \t]*(?=#|\n|;|$)", text[pos:])
            if m and m.group(1) in SECTIONS:
                toks.append(Tok("SECTION", m.group(1), line, col))
                pos += m.end()
                continue
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError("unexpected character %r" % text[pos], line, col)
        kind = m.lastgroup
        if kind == "dvar":
            kind = "deriv"
        s = m.group(0)
        if kind == "nl":
            toks.append(Tok("NL", s, line, col))
            if s == "\n":
                line += 1
                line_start = m.end()
            at_line_start = True
        elif kind in ("ws", "comment"):
            pass
        else:
            at_line_start = False
            if kind == "deriv":
                toks.append(Tok("DERIV", m.group("dvar"), line, col))
            else:
                toks.append(Tok(kind.upper(), s, line, col))
        pos = m.end()
    toks.append(Tok("EOF", "", line, pos - line_start + 1))
    return toks


# -- statements ----------------------------------------------------------------

@dataclass
class Statement:
    kind: str
    tok: Tok
    data: dict = field(default_factory=dict)


class _Stream:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    @property
    def cur(self):
        return self.toks[self.pos]

    def peek(self, k=1):
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind, value=None):
        t = self.cur
        if t.kind != kind or (value is not None and t.value != value):
            want = value if value is not None else kind
            got = t.value or t.kind
            raise ParseError("expected %s, got %r" % (want, got), t.line, t.col)
        return self.next()

    def at(self, kind, value=None):
        t = self.cur
        return t.kind == kind and (value is None or t.value == value)

    def end_statement(self):
        if not (self.at("NL") or self.at("EOF") or self.at("SECTION")):
            t = self.cur
            raise ParseError("unexpected %r at end of statement" % (t.value or t.kind), t.line, t.col)


def _take_expr(st):
    """Collect the tokens of an expression up to the end of the statement."""
    out = []
    depth = 0
    while True:
        t = st.cur
        if t.kind in ("NL", "EOF", "SECTION") and depth == 0:
            break
        if t.kind == "EOF":
            break
        if t.kind == "OP" and t.value in "([":
            depth += 1
        elif t.kind == "OP" and t.value in ")]":
            depth -= 1
        out.append(st.next())
    if not out:
        t = st.cur
        raise ParseError("expected an expression", t.line, t.col)
    return out


def _value(st):
    """Signed rational, identifier, or array literal."""
    t = st.cur
    if st.at("OP", "["):
        return _array(st)
    if t.kind == "ID" and t.value in ("true", "false"):
        st.next()
        return t.value == "true"
    if t.kind == "ID" and t.value == "none":
        st.next()
        return None
    if t.kind == "ID":
        st.next()
        return t.value
    sign = 1
    if st.at("OP", "-"):
        st.next()
        sign = -1
    num = st.expect("NUM")
    v = Fraction(int(num.value))
    if st.at("OP", "/"):
        st.next()
        den = st.expect("NUM")
        if int(den.value) == 0:
            raise ParseError("zero denominator", den.line, den.col)
        v /= int(den.value)
    return sign * v


def _array(st):
    st.expect("OP", "[")
    items = []
    while not st.at("OP", "]"):
        items.append(_array(st) if st.at("OP", "[") else _value(st))
        if not st.at("OP", "]"):
            st.expect("OP", ",")
    st.expect("OP", "]")
    return items


def _idlist(st):
    names = [st.expect("ID")]
    while st.at("OP", ","):
        st.next()
        names.append(st.expect("ID"))
    return names


def _use_args(st):
    st.expect("OP", "(")
    pos, kw = [], {}
    while not st.at("OP", ")"):
        if st.cur.kind == "ID" and st.peek().kind == "OP" and st.peek().value == "=":
            k = st.next().value
            st.next()
            kw[k] = _value(st)
        else:
            pos.append(_value(st))
        if not st.at("OP", ")"):
            st.expect("OP", ",")
    st.expect("OP", ")")
    return pos, kw


_KEYWORD_OF_SECTION = {"params": "param", "action": "action", "symmetries": "symmetry",
                       "structure": "structure", "gauge_fermion": "gauge_fermion",
                       "lattice": "lattice", "interaction": "interaction"}


def parse_statements(text):
    st = _Stream(tokenize(text))
    section = None
    out = []
    while not st.at("EOF"):
        if st.at("NL"):
            st.next()
            continue
        if st.at("SECTION"):
            section = st.next().value
            continue
        t = st.cur
        kw = t.value if t.kind == "ID" else None
        if kw in ("use", "model", "even", "field", "ghost", "pair", "param", "action", "symmetry",
                  "structure", "gauge_fermion", "interaction", "lattice") and \
                not (st.peek().kind == "OP" and st.peek().value in ("=", ":")):
            st.next()
        else:
            kw = _KEYWORD_OF_SECTION.get(section)
            if kw is None:
                raise ParseError("statement %r needs a keyword or a section" % (t.value or t.kind),
                                 t.line, t.col)
        out.append(_statement(st, kw, t))
        st.end_statement()
    return out


def _statement(st, kw, t):
    if kw == "use":
        name = st.expect("ID").value
        pos, kwargs = _use_args(st) if st.at("OP", "(") else ([], {})
        return Statement("use", t, {"name": name, "args": pos, "kwargs": kwargs})
    if kw == "model":
        return Statement("model", t, {"name": st.expect("ID").value})
    if kw in ("even", "field"):
        return Statement("fields", t, {"names": _idlist(st)})
    if kw == "ghost":
        return Statement("ghosts", t, {"names": _idlist(st)})
    if kw == "pair":
        a = st.expect("ID")
        if st.at("OP", ","):
            st.next()
        b = st.expect("ID")
        return Statement("pair", t, {"names": [a, b]})
    if kw in ("param", "lattice"):
        name = st.expect("ID")
        st.expect("OP", "=")
        return Statement(kw, t, {"name": name, "value": _value(st)})
    if kw in ("action", "gauge_fermion", "interaction"):
        name = st.expect("ID")
        st.expect("OP", "=")
        return Statement(kw, t, {"name": name, "expr": _take_expr(st)})
    if kw == "symmetry":
        name = st.expect("ID")
        st.expect("OP", ":")
        ghost = st.expect("ID")
        st.expect("OP", "->")
        return Statement("symmetry", t, {"name": name, "ghost": ghost, "expr": _take_expr(st)})
    if kw == "structure":
        st.expect("OP", "[")
        a = st.expect("ID")
        st.expect("OP", ",")
        b = st.expect("ID")
        st.expect("OP", "]")
        st.expect("OP", "=")
        return Statement("structure", t, {"a": a, "b": b, "expr": _take_expr(st)})
    raise ParseError("unknown statement %r" % kw, t.line, t.col)


# -- expression evaluation -----------------------------------------------------

class _Expr:
    """Recursive-descent evaluator over a token list, producing Poly values."""

    def __init__(self, toks, env):
        self.st = _Stream(toks + [Tok("EOF", "", toks[-1].line, toks[-1].col + 1)])
        self.env = env

    def run(self):
        v = self.expr()
        if not self.st.at("EOF"):
            t = self.st.cur
            raise ParseError("unexpected %r in expression" % t.value, t.line, t.col)
        return v

    def expr(self):
        v = self.term()
        while self.st.at("OP", "+") or self.st.at("OP", "-"):
            op = self.st.next().value
            r = self.term()
            v = v + r if op == "+" else v - r
        return v

    def term(self):
        v = self.unary()
        while self.st.at("OP", "*") or self.st.at("OP", "/"):
            op = self.st.next()
            r = self.unary()
            if op.value == "*":
                v = _mul(v, r)
            else:
                c = _scalar(r)
                if c is None or c == 0:
                    raise ParseError("division only by nonzero rational numbers", op.line, op.col)
                v = _scale(v, 1 / c)
        return v

    def unary(self):
        if self.st.at("OP", "-"):
            self.st.next()
            return _scale(self.unary(), -1)
        if self.st.at("OP", "+"):
            self.st.next()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.st.at("OP", "^"):
            op = self.st.next()
            neg = False
            if self.st.at("OP", "-"):
                self.st.next()
                neg = True
            n = int(self.st.expect("NUM").value)
            if neg:
                if not (isinstance(base, Poly) and base == base.alg.hbar):
                    raise ParseError("negative powers are only allowed for h", op.line, op.col)
                return base.alg.const(1).shift(dh=-n)
            if isinstance(base, Poly):
                return base ** n
            return Fraction(base) ** n
        return base

    def atom(self):
        st = self.st
        t = st.cur
        if t.kind == "NUM":
            st.next()
            return Fraction(int(t.value))
        if t.kind == "DERIV":
            st.next()
            return self.env.antifield_of(t.value, t)
        if st.at("OP", "("):
            st.next()
            v = self.expr()
            st.expect("OP", ")")
            return v
        if t.kind != "ID":
            raise ParseError("unexpected %r" % (t.value or t.kind), t.line, t.col)
        st.next()
        name = t.value
        if name in ("prod", "sum") and st.at("OP", "("):
            return self.loop(name, t)
        if st.at("OP", "("):
            st.next()
            args = []
            while not st.at("OP", ")"):
                args.append(self.expr())
                if not st.at("OP", ")"):
                    st.expect("OP", ",")
            st.expect("OP", ")")
            return self.env.call(name, args, t)
        return self.env.lookup(name, t)

    def loop(self, name, t):
        st = self.st
        st.expect("OP", "(")
        var = st.expect("ID")
        st.expect("OP", "=")
        lo = _as_int(self.expr(), var)
        st.expect("OP", "..")
        hi = _as_int(self.expr(), var)
        st.expect("OP", ",")
        start = st.pos
        depth = 0
        while True:
            c = st.cur
            if c.kind == "EOF":
                raise ParseError("unterminated %s(...)" % name, t.line, t.col)
            if c.kind == "OP" and c.value == "(":
                depth += 1
            elif c.kind == "OP" and c.value == ")":
                if depth == 0:
                    break
                depth -= 1
            st.next()
        body = st.toks[start:st.pos]
        st.expect("OP", ")")
        if not body:
            raise ParseError("empty loop body", t.line, t.col)
        acc = Fraction(1) if name == "prod" else Fraction(0)
        for k in range(lo, hi + 1):
            v = _Expr(body, self.env.bind(var.value, Fraction(k))).run()
            acc = _mul(acc, v) if name == "prod" else _add(acc, v)
        return acc


def _as_int(v, tok):
    c = _scalar(v)
    if c is None or c.denominator != 1:
        raise ParseError("loop bounds must be integers", tok.line, tok.col)
    return int(c)


def _scalar(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, Poly):
        r = v.real_rational() if v.is_scalar() else None
        return Fraction(int(r.numerator), int(r.denominator)) if r is not None else None
    return None


def _mul(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a * b
    if isinstance(a, Fraction):
        return b.scale(a)
    if isinstance(b, Fraction):
        return a.scale(b)
    return a * b


def _add(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a + b
    if isinstance(a, Fraction):
        return b + a
    return a + b


def _scale(a, c):
    return a * c if isinstance(a, Fraction) else a.scale(c)


class _Env:
    def __init__(self, alg, params, named=None, theory=None, arrays=None, locals_=None):
        self.alg = alg
        self.params = params
        self.named = named if named is not None else {}
        self.theory = theory
        self.arrays = arrays or {}
        self.locals = locals_ or {}

    def bind(self, k, v):
        loc = dict(self.locals)
        loc[k] = v
        return _Env(self.alg, self.params, self.named, self.theory, self.arrays, loc)

    def lookup(self, name, t):
        if name in self.locals:
            return self.locals[name]
        if name == "i":
            return self.alg.i
        if name in ("h", "hbar"):
            return self.alg.hbar
        if name in ("l", "lam"):
            return self.alg.lam
        if name == "w" and self.theory is not None:
            return Fraction(self.theory.lattice.weight)
        if name in self.params:
            v = self.params[name]
            if isinstance(v, Fraction):
                return v
            raise ParseError("parameter %r is not a number" % name, t.line, t.col)
        if name in self.alg.index:
            return self.alg.gen(name)
        if name in self.named:
            return self.named[name]
        raise ParseError("undeclared identifier %r" % name, t.line, t.col)

    def antifield_of(self, name, t):
        if name not in self.alg.index:
            raise ParseError("undeclared identifier %r" % name, t.line, t.col)
        try:
            return self.alg.antifield(name)
        except AlgebraError as e:
            raise ParseError(str(e), t.line, t.col) from None

    def call(self, name, args, t):
        th = self.theory
        if name == "af":
            if len(args) != 1 or not isinstance(args[0], Poly) or len(args[0].variables()) != 1:
                raise ParseError("af() takes one generator", t.line, t.col)
            g = self.alg.generators[next(iter(args[0].variables()))].id
            return self.antifield_of(g, t)
        if th is None:
            raise ParseError("unknown function %r" % name, t.line, t.col)
        if name in ("phi", "phi‡", "Pphi"):
            if len(args) != 2:
                raise ParseError("%s(t, x) takes two integer arguments" % name, t.line, t.col)
            tt, xx = (_as_int(a, t) for a in args)
            L = th.lattice
            if not 0 <= tt < L.Nt:
                raise ParseError("time index %d outside 0..%d" % (tt, L.Nt - 1), t.line, t.col)
            try:
                if name == "phi":
                    return th.phi(tt, xx, self.alg)
                if name == "Pphi":
                    return th.p_phi(tt, xx, self.alg)
                return th.antifield(tt, xx, self.alg)
            except (LatticeError, AlgebraError) as e:
                raise ParseError(str(e), t.line, t.col) from None
        if name == "Phi":
            raise ParseError("Phi() takes the name of an array declared in [lattice]", t.line, t.col)
        raise ParseError("unknown function %r" % name, t.line, t.col)


def _eval(toks, env):
    # Phi(f) refers to an array by name; rewrite it before evaluation
    out = []
    k = 0
    while k < len(toks):
        t = toks[k]
        if t.kind == "ID" and t.value == "Phi" and k + 3 < len(toks) + 1 and \
                k + 1 < len(toks) and toks[k + 1].value == "(":
            if k + 3 >= len(toks) or toks[k + 2].kind != "ID" or toks[k + 3].value != ")":
                raise ParseError("Phi() takes the name of an array declared in [lattice]",
                                 t.line, t.col)
            name = toks[k + 2].value
            if name not in env.arrays:
                raise ParseError("undeclared array %r" % name, toks[k + 2].line, toks[k + 2].col)
            key = "\x00Phi_" + name
            values = env.arrays[name]
            if not isinstance(values, dict):
                values = {(tt, x): v for tt, row in enumerate(values) for x, v in enumerate(row)}
            env.named[key] = env.theory.smeared(values, env.alg)
            out.append(Tok("ID", key, t.line, t.col))
            k += 4
            continue
        out.append(t)
        k += 1
    v = _Expr(out, env).run()
    if isinstance(v, Fraction):
        v = env.alg.const(v)
    return v


# -- model specs ---------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    """A parsed model: either a classical Model or a lattice setup."""

    name: str
    params: tuple
    model: object = None          # bv.Model
    theory: object = None         # lattice.ScalarField
    interaction: object = None    # Poly over theory.alg
    interaction_name: str = "V"
    action_name: str = "S"
    fermion_name: str = "psi"
    symmetry_names: tuple = ()
    arrays: tuple = ()            # ((name, values), ...)

    @property
    def is_lattice(self):
        return self.theory is not None

    def __eq__(self, other):
        if not isinstance(other, ModelSpec):
            return NotImplemented
        if self.is_lattice != other.is_lattice:
            return False
        if self.is_lattice:
            return (self.theory.lattice == other.theory.lattice
                    and self.theory.alg == other.theory.alg
                    and self.interaction == other.interaction
                    and self.arrays == other.arrays
                    and self.name == other.name and self.params == other.params)
        return self.model == other.model and self.name == other.name and \
            self.params == other.params

    def __hash__(self):
        return hash(print_model(self))

    def named(self):
        """Polynomials that command-line expressions may refer to by name."""
        if self.is_lattice:
            out = {"S": self.theory.S}
            if self.interaction is not None:
                out[self.interaction_name] = self.interaction
            return out
        out = {self.action_name: self.model.action}
        if self.model.gauge_fermion is not None:
            out[self.fermion_name] = self.model.gauge_fermion
        return out

    def algebra(self):
        return self.theory.alg if self.is_lattice else self.model.algebra

    def parse_expr(self, text):
        """Evaluate an expression against this model's generators."""
        toks = [t for t in tokenize(text) if t.kind not in ("NL",)]
        toks = toks[:-1]
        if not toks:
            raise ParseError("empty expression", 1, 1)
        for t in toks:
            if t.kind == "SECTION":
                raise ParseError("unexpected section header in expression", t.line, t.col)
        env = _Env(self.algebra(), dict(self.params), dict(self.named()), self.theory,
                   dict(self.arrays))
        return _eval(toks, env)


def _builtin_text(name, args, kwargs, t, truncation):
    """Canonical text of a built-in model."""
    try:
        if name == "toy_circles":
            N = kwargs.get("N", args[0] if args else 1)
            return print_model(_spec_from_model(models.toy_circles(int(N), truncation)))
        if name == "lie_gauge":
            g = kwargs.get("g", args[0] if args else "su2")
            rep = kwargs.get("rep", args[1] if len(args) > 1 else None)
            gf = kwargs.get("gauge_fix", args[2] if len(args) > 2 else False)
            return print_model(_spec_from_model(models.lie_gauge(g, rep, bool(gf),
                                                                 truncation=truncation)))
        if name == "ym_matrix":
            d = kwargs.get("d", 0)
            g = kwargs.get("g", "su2")
            rest = list(args)
            if rest and isinstance(rest[0], Fraction):
                d = rest.pop(0)
            if rest:
                g = rest.pop(0)
            gf = kwargs.get("gauge_fix", True)
            return print_model(_spec_from_model(models.ym_matrix(int(d), g, bool(gf),
                                                                 truncation=truncation)))
        if name == "free_scalar":
            keys = ("Nt", "Nx", "a_t", "a_x", "m2")
            vals = dict(zip(keys, args))
            vals.update(kwargs)
            missing = [k for k in ("Nt", "Nx") if k not in vals]
            if missing:
                raise ParseError("free_scalar needs Nt and Nx", t.line, t.col)
            lines = ["model free_scalar", "[lattice]"]
            for k in keys:
                v = vals.get(k, Fraction(1) if k in ("a_t", "a_x") else Fraction(0))
                lines.append("%s = %s" % (k, _num_str(v)))
            return "\n".join(lines) + "\n"
        if name == "phi4":
            coupling = kwargs.get("coupling", args[0] if args else Fraction(1))
            return ("[interaction]\nV = %s*l*w/24*sum(t=0..Nt-1, sum(x=0..Nx-1, phi(t,x)^4))\n"
                    % _num_str(coupling))
    except (ModelError, LatticeError, ValueError, TypeError) as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError("cannot expand %s: %s" % (name, e), t.line, t.col) from None
    raise ParseError("unknown built-in model %r" % name, t.line, t.col)


def _num_str(v):
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else "%d/%d" % (v.numerator, v.denominator)
    return str(v)


def _spec_from_model(model):
    names = tuple("s%d" % (k + 1) for k in range(len(model.symmetries)))
    return ModelSpec(model.name, tuple(model.params), model=model, symmetry_names=names)


def parse_model(text, truncation=None):
    """Parse model text into a ModelSpec."""
    truncation = truncation or models.default_truncation()
    stmts = _expand(parse_statements(text), truncation, 0)
    return _build(stmts, truncation)


def _expand(stmts, truncation, depth):
    if depth > 4:
        raise ParseError("use directives nest too deeply")
    out = []
    for s in stmts:
        if s.kind == "use":
            txt = _builtin_text(s.data["name"], s.data["args"], s.data["kwargs"], s.tok, truncation)
            inner = _expand(parse_statements(txt), truncation, depth + 1)
            if s.data["name"] not in ("phi4", "free_scalar"):
                params = [Statement("model", s.tok, {"name": s.data["name"]})]
                for k, v in _use_params(s.data):
                    params.append(Statement("param", s.tok, {"name": Tok("ID", k, s.tok.line,
                                                                         s.tok.col), "value": v}))
                inner = [x for x in inner if x.kind not in ("model", "param")] + params
            out.extend(inner)
        else:
            out.append(s)
    return out


def _use_params(data):
    name, args, kw = data["name"], data["args"], data["kwargs"]
    sig = {"toy_circles": ("N",), "lie_gauge": ("g", "rep", "gauge_fix"),
           "ym_matrix": ("d", "g", "gauge_fix"),
           "free_scalar": ("Nt", "Nx", "a_t", "a_x", "m2")}[name]
    vals = {}
    if name == "ym_matrix":
        rest = list(args)
        if rest and isinstance(rest[0], Fraction):
            vals["d"] = rest.pop(0)
        if rest:
            vals["g"] = rest.pop(0)
    else:
        vals.update(zip(sig, args))
    vals.update(kw)
    return [(k, vals[k]) for k in sig if k in vals]


def _declare(names, seen, kind):
    for t in names:
        if t.value in RESERVED or t.value.endswith("‡"):
            raise ParseError("%r is reserved and cannot name a generator" % t.value, t.line, t.col)
        if t.value in seen:
            raise ParseError("%r declared twice" % t.value, t.line, t.col)
        seen[t.value] = kind


def _build(stmts, truncation):
    name = "custom"
    params = {}
    param_order = []
    fields, ghosts, pairs = [], [], []
    seen = {}
    lattice_vals = {}
    arrays = {}
    action = fermion = interaction = None
    syms, structure = [], []
    for s in stmts:
        k = s.kind
        if k == "model":
            name = s.data["name"]
        elif k == "param":
            n = s.data["name"]
            if n.value in params:
                raise ParseError("parameter %r set twice" % n.value, n.line, n.col)
            params[n.value] = s.data["value"]
            param_order.append(n.value)
        elif k == "fields":
            _declare(s.data["names"], seen, "field")
            fields += [t.value for t in s.data["names"]]
        elif k == "ghosts":
            _declare(s.data["names"], seen, "ghost")
            ghosts += [t.value for t in s.data["names"]]
        elif k == "pair":
            _declare(s.data["names"], seen, "pair")
            pairs.append(tuple(t.value for t in s.data["names"]))
        elif k == "lattice":
            n = s.data["name"]
            if isinstance(s.data["value"], list):
                arrays[n.value] = s.data["value"]
            elif n.value in LATTICE_KEYS:
                lattice_vals[n.value] = s.data["value"]
            else:
                raise ParseError("unknown lattice key %r" % n.value, n.line, n.col)
        elif k == "action":
            if action is not None:
                raise ParseError("action defined twice", s.tok.line, s.tok.col)
            action = s
        elif k == "gauge_fermion":
            fermion = s
        elif k == "interaction":
            interaction = s
        elif k == "symmetry":
            syms.append(s)
        elif k == "structure":
            structure.append(s)
    ptuple = tuple((p, params[p]) for p in param_order)
    if lattice_vals or arrays:
        return _build_lattice(name, ptuple, params, lattice_vals, arrays, fields, ghosts, pairs,
                              action, fermion, syms, structure, interaction, truncation)
    if interaction is not None:
        t = interaction.tok
        raise ParseError("[interaction] needs a [lattice] section", t.line, t.col)
    alg = build_algebra(fields, ghosts, pairs, truncation=truncation)
    env = _Env(alg, params)
    S = alg.zero
    aname = "S"
    if action is not None:
        S = _eval(action.data["expr"], env)
        aname = action.data["name"].value
        env.named[aname] = S
    rho_list, snames = [], []
    used_ghosts = set()
    for s in syms:
        g = s.data["ghost"]
        if g.value not in seen or seen[g.value] != "ghost":
            raise ParseError("undeclared ghost %r" % g.value, g.line, g.col)
        if g.value in used_ghosts:
            raise ParseError("ghost %r already used by another symmetry" % g.value, g.line, g.col)
        used_ghosts.add(g.value)
        X = _eval(s.data["expr"], env)
        comps = _vector_field(X, s.tok)
        rho_list.append((g.value, {alg.generators[f].id: c for f, c in comps.items()}))
        snames.append(s.data["name"].value)
    sd = {}
    for s in structure:
        a, b = s.data["a"], s.data["b"]
        for t in (a, b):
            if t.value not in used_ghosts:
                raise ParseError("structure refers to %r, which is not a symmetry ghost" % t.value,
                                 t.line, t.col)
        rhs = _eval(s.data["expr"], env)
        for (m, h, l, j), c in rhs._t.items():
            if h or l or j or len(m) != 1 or m[0][1] != 1 or \
                    alg.generators[m[0][0]].id not in used_ghosts:
                raise ParseError("structure right-hand side must be a rational combination of ghosts",
                                 s.tok.line, s.tok.col)
            gc = alg.generators[m[0][0]].id
            key = (gc, a.value, b.value)
            sd[key] = sd.get(key, 0) + Fraction(int(mpq(c).numerator), int(mpq(c).denominator))
    psi = None
    fname = "psi"
    if fermion is not None:
        psi = _eval(fermion.data["expr"], env)
        fname = fermion.data["name"].value
    try:
        model = make_model(alg, S, rho_list, sd if sd else None, pairs, psi, name=name,
                           params=ptuple)
    except ModelError as e:
        t = (action or fermion or (syms[0] if syms else None))
        line, col = (t.tok.line, t.tok.col) if t is not None else (None, None)
        raise ParseError("grading violation: %s" % e, line, col) from None
    return ModelSpec(name, ptuple, model=model, action_name=aname, fermion_name=fname,
                     symmetry_names=tuple(snames))


def _vector_field(X, tok):
    alg = X.alg
    for (m, h, l, j) in X._t:
        gr = alg.mono_grading(m)
        if gr["af"] != 1 or gr["gh"] != -1 or h or l:
            raise ParseError("symmetry must be a vector field: linear in field antifields",
                             tok.line, tok.col)
    comps = vector_field_components(X)
    rebuilt = alg.zero
    for f, c in comps.items():
        rebuilt = rebuilt + c * alg.antifield(alg.generators[f].id)
    if rebuilt != X:
        raise ParseError("symmetry must only involve antifields of fields", tok.line, tok.col)
    return comps


def _build_lattice(name, ptuple, params, vals, arrays, fields, ghosts, pairs, action, fermion,
                   syms, structure, interaction, truncation):
    for bad, what in ((fields, "fields"), (pairs, "nonminimal pairs"), (syms, "symmetries"),
                      (structure, "structure constants")):
        if bad:
            raise ParseError("a lattice model does not take %s" % what)
    if action is not None:
        raise ParseError("the lattice action is the free Klein-Gordon action; remove [action]",
                         action.tok.line, action.tok.col)
    if fermion is not None:
        raise ParseError("a lattice model does not take a gauge fermion",
                         fermion.tok.line, fermion.tok.col)
    if ghosts not in ([], ["c"]):
        raise ParseError("a lattice model allows only the rigid ghost 'c'")
    for k in ("Nt", "Nx"):
        if k not in vals:
            raise ParseError("[lattice] needs %s" % k)
    try:
        L = Lattice(int(vals["Nt"]), int(vals["Nx"]), vals.get("a_t", Fraction(1)),
                    vals.get("a_x", Fraction(1)), vals.get("m2", Fraction(0)))
    except (LatticeError, TypeError) as e:
        raise ParseError("invalid lattice: %s" % e) from None
    for an, arr in arrays.items():
        if len(arr) != L.Nt or any(not isinstance(r, list) or len(r) != L.Nx for r in arr) or \
                any(not isinstance(v, Fraction) for r in arr for v in r):
            raise ParseError("array %r must be Nt rows of Nx rationals" % an)
    th = ScalarField(L, truncation, rigid_ghost=bool(ghosts))
    ar = {an: {(t, x): arr[t][x] for t in range(L.Nt) for x in range(L.Nx) if arr[t][x]}
          for an, arr in arrays.items()}
    p = dict(params)
    p.update({"Nt": Fraction(L.Nt), "Nx": Fraction(L.Nx)})
    env = _Env(th.alg, p, {"S": th.S}, th, ar)
    V = None
    vname = "V"
    if interaction is not None:
        V = _eval(interaction.data["expr"], env)
        vname = interaction.data["name"].value
    arrays_t = tuple(sorted((an, tuple(tuple(r) for r in arr)) for an, arr in arrays.items()))
    return ModelSpec(name, ptuple, theory=th, interaction=V, interaction_name=vname,
                     arrays=arrays_t)


# -- printing ------------------------------------------------------------------

def _value_str(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return _num_str(v)
    if v is None or v == "":
        return "none"
    return str(v)


def print_model(spec):
    """Canonical model text; parse(print_model(s)) == s."""
    lines = ["model %s" % spec.name]
    if spec.params:
        lines.append("[params]")
        for k, v in spec.params:
            lines.append("%s = %s" % (k, _value_str(v)))
    if spec.is_lattice:
        L = spec.theory.lattice
        lines.append("[lattice]")
        for k, v in (("Nt", L.Nt), ("Nx", L.Nx), ("a_t", L.a_t), ("a_x", L.a_x),
                     ("m2", L.mass_sq)):
            lines.append("%s = %s" % (k, _num_str(Fraction(v))))
        for an, arr in spec.arrays:
            rows = ", ".join("[" + ", ".join(_num_str(x) for x in r) + "]" for r in arr)
            lines.append("%s = [%s]" % (an, rows))
        if "c" in spec.theory.alg.index:
            lines += ["[generators]", "ghost c"]
        if spec.interaction is not None:
            lines += ["[interaction]", "%s = %s" % (spec.interaction_name, spec.interaction)]
        return "\n".join(lines) + "\n"
    m = spec.model
    alg = m.algebra
    fields = [g.id for g in alg.generators if g.kind == "field"]
    ghosts = [g.id for g in alg.generators if g.kind == "ghost"]
    lines.append("[generators]")
    if fields:
        lines.append("even " + ", ".join(fields))
    if ghosts:
        lines.append("ghost " + ", ".join(ghosts))
    if m.nonminimal:
        lines.append("[nonminimal]")
        lines += ["pair %s %s" % p for p in m.nonminimal]
    lines += ["[action]", "%s = %s" % (spec.action_name, m.action)]
    if m.symmetries:
        lines.append("[symmetries]")
        names = spec.symmetry_names or tuple("s%d" % (k + 1) for k in range(len(m.symmetries)))
        for nm, s in zip(names, m.symmetries):
            X = alg.zero
            for fid, r in s.rho:
                X = X + r * alg.antifield(fid)
            lines.append("%s : %s -> %s" % (nm, s.ghost_id, X))
    if m.structure.f:
        lines.append("[structure]")
        by = {}
        for c, a, b, v in m.structure.f:
            by.setdefault((a, b), []).append((c, v))
        order = {g: k for k, g in enumerate(g.id for g in alg.generators)}
        for (a, b) in sorted(by, key=lambda ab: (order[ab[0]], order[ab[1]])):
            rhs = alg.zero
            for c, v in by[(a, b)]:
                rhs = rhs + alg.gen(c).scale(v)
            lines.append("[%s, %s] = %s" % (a, b, rhs))
    if m.gauge_fermion is not None:
        lines += ["[gauge_fermion]", "%s = %s" % (spec.fermion_name, m.gauge_fermion)]
    return "\n".join(lines) + "\n"


__all__ = ["ParseError", "ModelSpec", "parse_model", "print_model", "tokenize",
           "parse_statements", "rational_str"]
