"""
bvw: command driver over model files.

    bvw <command> --model FILE [flags]

Reports go to stdout (text or json-lines), errors to stderr.  Exit code 0
on success, 1 when a checker (check-cme, qme) finds the identity violated,
2 on any error.
"""

import argparse
import hashlib
import json
import sys
from fractions import Fraction

from .algebra import AlgebraError, Poly, Series, rational_str
from .bv import (ModelError, build_extended_action, check_cme, expand_by_ta, gauge_fix,
                 is_symmetry, s_squared_on_generators, antibracket)
from .cohomology import CohomologyError, cohomology_dim
from .dsl import ParseError, parse_model, print_model
from .lattice import LatticeError, PropagatorMatrix

CHECKERS = ("check-cme", "qme")
PROPAGATORS = ("retarded", "advanced", "causal", "dirac")


class CommandError(ValueError):
    pass


# -- reports -------------------------------------------------------------------

class Report:
    """Command echo, model hash and an ordered result payload."""

    def __init__(self, command, model_hash, result, ok=True):
        self.command = command
        self.model_hash = model_hash
        self.result = result
        self.ok = ok

    def as_dict(self):
        return {"command": self.command, "model_hash": self.model_hash,
                "result": _plain(self.result)}


def _plain(v):
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, (Poly, Series)):
        return str(v)
    if isinstance(v, Fraction):
        return rational_str(v)
    if isinstance(v, PropagatorMatrix):
        return [[rational_str(c) for c in row] for row in v.entries]
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if hasattr(v, "as_dict"):
        return _plain(v.as_dict())
    try:
        return rational_str(v)
    except (TypeError, ValueError):
        return str(v)


def _text_lines(key, v, indent):
    pad = "  " * indent
    if isinstance(v, dict):
        out = ["%s%s:" % (pad, key)]
        for k, x in v.items():
            out += _text_lines(k, x, indent + 1)
        return out
    if isinstance(v, list):
        if v and all(isinstance(r, list) for r in v):
            out = ["%s%s:" % (pad, key)]
            out += [pad + "  " + " ".join(r) for r in v]
            return out
        out = ["%s%s:" % (pad, key)]
        out += ["%s  %s" % (pad, _scalar_text(x)) for x in v]
        return out
    return ["%s%s: %s" % (pad, key, _scalar_text(v))]


def _scalar_text(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "unknown"
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True, ensure_ascii=False)
    return str(v)


def emit(report, fmt="text"):
    """Canonical bytes of a report."""
    d = report.as_dict()
    if fmt == "json-lines":
        return (json.dumps(d, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
                + "\n").encode("utf-8")
    if fmt != "text":
        raise CommandError("unknown format %r" % fmt)
    lines = ["command: %s" % d["command"], "model_hash: %s" % d["model_hash"]]
    for k, v in d["result"].items():
        lines += _text_lines(k, v, 0)
    return ("\n".join(lines) + "\n").encode("utf-8")


def model_hash(spec):
    return hashlib.sha256(print_model(spec).encode("utf-8")).hexdigest()


# -- commands ------------------------------------------------------------------

def _classical(spec, cmd):
    if spec.is_lattice:
        raise CommandError("%s needs a model with generators and an action, not a lattice" % cmd)
    return spec.model


def _lattice(spec, cmd):
    if not spec.is_lattice:
        raise CommandError("%s needs a [lattice] model" % cmd)
    return spec.theory


def _expr(spec, text, flag):
    if text is None:
        raise CommandError("missing %s" % flag)
    try:
        return spec.parse_expr(text)
    except ParseError as e:
        raise CommandError("%s: %s" % (flag, e)) from None


def _interaction(spec, args):
    if args.f is not None:
        return _expr(spec, args.f, "--f")
    if spec.interaction is None:
        raise CommandError("no interaction: add an [interaction] section or pass --f")
    return spec.interaction


def _nonneg(v, flag, top=None):
    if v is None:
        raise CommandError("missing %s" % flag)
    if v < 0 or (top is not None and v > top):
        rng = ">= 0" if top is None else "in 0..%d" % top
        raise CommandError("%s must be %s, got %d" % (flag, rng, v))
    return v


def cmd_check_cme(spec, args):
    m = _classical(spec, "check-cme")
    ext = build_extended_action(m)
    r = check_cme(m, ext)
    bad = s_squared_on_generators(m, ext) if r["holds"] else {}
    return {"holds": r["holds"], "residual": r["residual"],
            "s_squared_zero": not bad, "s_squared_failures": bad}, r["holds"]


def cmd_symmetries(spec, args):
    m = _classical(spec, "symmetries")
    alg = m.algebra
    out = {}
    names = spec.symmetry_names or tuple("s%d" % (k + 1) for k in range(len(m.symmetries)))
    for nm, s in zip(names, m.symmetries):
        X = alg.zero
        for fid, r in s.rho:
            X = X + r * alg.antifield(fid)
        row = {"ghost": s.ghost_id, "vector_field": X}
        if not X.is_zero():
            c = is_symmetry(m, X)
            row.update({"symmetry": c["symmetry"], "trivial": c["trivial"],
                        "degree": c["degree"]})
        else:
            row.update({"symmetry": True, "trivial": True, "degree": 0})
        out[nm] = row
    return {"count": len(m.symmetries), "symmetries": out}, True


def cmd_extend(spec, args):
    m = _classical(spec, "extend")
    return {"extended_action": build_extended_action(m)}, True


def _gauge_fixed(m):
    if m.gauge_fermion is None:
        raise CommandError("model has no [gauge_fermion]")
    return gauge_fix(m, build_extended_action(m))


def cmd_gauge_fix(spec, args):
    m = _classical(spec, "gauge-fix")
    St = _gauge_fixed(m)
    ex = expand_by_ta(m, St)
    return {"gauge_fermion": m.gauge_fermion, "transformed_action": St,
            "gauge_fixed_action": ex["gauge_fixed_action"]}, True


def cmd_brst_table(spec, args):
    m = _classical(spec, "brst-table")
    ex = expand_by_ta(m, _gauge_fixed(m))
    return {"gauge_fixed_action": ex["gauge_fixed_action"], "brst_table": ex["brst_table"]}, True


def cmd_cohomology(spec, args):
    m = _classical(spec, "cohomology")
    D = _nonneg(args.max_deg, "--max-deg", 40)
    rep = cohomology_dim(m, args.diff, args.gh, D, args.pure_ghost)
    return rep.as_dict(), True


def cmd_propagator(spec, args):
    th = _lattice(spec, "propagator")
    K = th.props[args.kind]
    T = K.transpose()
    antisym = all(a == -b for r, rt in zip(K.entries, T) for a, b in zip(r, rt))
    sym = K.entries == T
    return {"kind": args.kind, "sites": [str(s) for s in th.lattice.sites()],
            "symmetric": sym, "antisymmetric": antisym, "matrix": K}, True


def cmd_bracket(spec, args):
    F, G = _expr(spec, args.f, "--f"), _expr(spec, args.g, "--g")
    kind = args.bracket or ("peierls" if spec.is_lattice else "anti")
    if kind == "anti":
        v = antibracket(F, G)
    else:
        th = _lattice(spec, "bracket --bracket %s" % kind)
        v = {"peierls": th.peierls_bracket, "t": th.t_antibracket,
             "star": th.star_antibracket}[kind](F, G)
    return {"bracket": kind, "value": v}, True


def cmd_star(spec, args):
    th = _lattice(spec, "star")
    F, G = _expr(spec, args.f, "--f"), _expr(spec, args.g, "--g")
    a, b = th.star(F, G), th.star(G, F)
    return {"value": a, "commutator": a - b}, True


def cmd_tprod(spec, args):
    th = _lattice(spec, "tprod")
    F, G = _expr(spec, args.f, "--f"), _expr(spec, args.g, "--g")
    v = th.tprod(F, G)
    return {"value": v, "minus_pointwise": v - F * G}, True


def cmd_smatrix(spec, args):
    th = _lattice(spec, "smatrix")
    V = _interaction(spec, args)
    order = _nonneg(args.order, "--order")
    return {"order": order, "value": th.smatrix(V, order)}, True


def cmd_moller(spec, args):
    th = _lattice(spec, "moller")
    V = _interaction(spec, args)
    G = _expr(spec, args.g, "--g")
    order = _nonneg(args.order, "--order", th.alg.truncation[1])
    v = th.classical_moller(V, G, order)
    oracle = th.moller_by_substitution(V, G, order)
    return {"order": order, "value": v, "substitution_agrees": v == oracle,
            "unchanged": v == G}, True


def cmd_qme(spec, args):
    th = _lattice(spec, "qme")
    V = _interaction(spec, args)
    r = th.check_qme(V)
    return {"holds": r["holds"], "residual": r["residual"], "qme2_holds": r["qme2_holds"],
            "identity": r["identity"], "forms_agree": r["forms_agree"]}, r["holds"]


def cmd_qbv(spec, args):
    th = _lattice(spec, "qbv")
    if args.g is not None:
        V = _expr(spec, args.g, "--g")
    elif spec.interaction is not None:
        V = spec.interaction
    else:
        raise CommandError("no interaction: add an [interaction] section or pass --g")
    X = _expr(spec, args.f, "--f")
    r = th.quantum_bv(V, X)
    return {"value": r["value"], "via_exponential": r["via_exponential"], "agree": r["agree"],
            "qme_holds": r["qme_holds"]}, True


COMMANDS = {
    "check-cme": cmd_check_cme,
    "symmetries": cmd_symmetries,
    "extend": cmd_extend,
    "gauge-fix": cmd_gauge_fix,
    "brst-table": cmd_brst_table,
    "cohomology": cmd_cohomology,
    "propagator": cmd_propagator,
    "bracket": cmd_bracket,
    "star": cmd_star,
    "tprod": cmd_tprod,
    "smatrix": cmd_smatrix,
    "moller": cmd_moller,
    "qme": cmd_qme,
    "qbv": cmd_qbv,
}


FLAGS = {
    "cohomology": ("gh", "max_deg", "diff", "pure_ghost"),
    "propagator": ("kind",),
    "bracket": ("bracket", "f", "g"),
    "star": ("f", "g"),
    "tprod": ("f", "g"),
    "smatrix": ("order", "f"),
    "moller": ("order", "f", "g"),
    "qme": ("f",),
    "qbv": ("f", "g"),
}


def _echo(args):
    parts = [args.command]
    for flag in FLAGS.get(args.command, ()):
        v = getattr(args, flag, None)
        if v is not None:
            parts.append("--%s %s" % (flag.replace("_", "-"), v))
    return " ".join(parts)


def run(command, spec, args=None, **flags):
    """Run a command on a parsed model; flags mirror the command-line options."""
    if command not in COMMANDS:
        raise CommandError("unknown command %r" % command)
    if args is None:
        ns = build_parser().parse_args([command, "--model", "-"])
        for k, v in flags.items():
            setattr(ns, k, v)
        args = ns
    result, ok = COMMANDS[command](spec, args)
    return Report(_echo(args), model_hash(spec), result, ok)


def build_parser():
    p = argparse.ArgumentParser(prog="bvw", description="BV formalism workbench")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--model", required=True, help="model file ('-' for stdin)")
    p.add_argument("--format", choices=("text", "json-lines"), default="text")
    p.add_argument("--gh", type=int, default=0)
    p.add_argument("--max-deg", type=int, default=None)
    p.add_argument("--diff", choices=("s", "delta", "gamma"), default="s")
    p.add_argument("--pure-ghost", type=int, default=None)
    p.add_argument("--kind", choices=PROPAGATORS, default="causal")
    p.add_argument("--bracket", choices=("anti", "peierls", "t", "star"), default=None)
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--f", default=None,
                   help="first expression; the interaction for smatrix/moller/qme")
    p.add_argument("--g", default=None,
                   help="second expression; the observable for moller, the interaction for qbv")
    return p


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        if args.model == "-":
            text = sys.stdin.read()
        else:
            with open(args.model, encoding="utf-8") as fh:
                text = fh.read()
        spec = parse_model(text)
        report = run(args.command, spec, args)
    except (OSError, UnicodeDecodeError) as e:
        print("bvw: cannot read model: %s" % e, file=sys.stderr)
        return 2
    except (ParseError, CommandError, ModelError, LatticeError, CohomologyError,
            AlgebraError) as e:
        print("bvw: error: %s" % e, file=sys.stderr)
        return 2
    sys.stdout.buffer.write(emit(report, args.format))
    sys.stdout.flush()
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
