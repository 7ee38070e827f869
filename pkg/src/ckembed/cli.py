"""Command line interface: ``ck-embed <command> [file]``.

The input is a problem file (path or ``-`` for stdin).  Every command prints
a report; ``--json`` switches to one JSON object per line.  Exit status is
0 when every clause passes, 1 when one fails and 2 on usage or parse
errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import gallery, selftest
from .constructions import ConstructionError, check_onto_at_m, filtration, phi_r, pi_base
from .fileformat import FormatError, ProblemFile, parse, parse_subset, problem_for, serialize, serialize_setmap
from .kernels import KernelError, checked, is_positive, is_unital, operator_norm, validate_kernel
from .norms import OracleTooLarge, embedding_constant, lattice_oracle
from .reductions import adjoin_and_lift, envelope, normalize_positive, pipeline, positive_reduction
from .report import ClauseFailure, Report
from .setmaps import check_usc, image_union
from .spaces import Block, SpaceDesc


class UsageError(Exception):
    pass


@dataclass
class Outcome:
    report: Report
    artifact: str | None = None  # file-format text
    pipeable: bool = False  # artifact is a complete problem file


def load(args) -> ProblemFile:
    if args.file in (None, "-"):
        text = sys.stdin.read()
    else:
        try:
            with open(args.file, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise UsageError(f"cannot read {args.file}: {e.strerror}") from None
    args.problem = parse(text)
    return args.problem


def setting(args, pf: ProblemFile, key: str) -> int:
    v = getattr(args, key, None)
    return pf.setting(key) if v is None else v


def kernel_of(pf: ProblemFile):
    problems = validate_kernel(pf.kernel).violations
    if problems:
        raise KernelError("; ".join(problems))
    return checked(pf.kernel)


def working_constant(T, window: int) -> Fraction:
    """Constant of the positive unital kernel reached from ``T``."""
    return embedding_constant(T, window).value


# -- commands ---------------------------------------------------------------------


def cmd_validate(args) -> Outcome:
    pf = load(args)
    rep = Report("validate")
    for name, (kn, ln, T) in pf.kernels.items():
        problems = validate_kernel(T).violations
        rep.add("input", f"kernel {name} is valid", not problems, "; ".join(problems))
    if not pf.kernels:
        rep.add("input", "file declares a kernel", False)
    for name, (ln, kn, phi) in pf.setmaps.items():
        from .setmaps import validate_setmap

        problems = validate_setmap(phi)
        rep.add("input", f"set map {name} is valid", not problems, "; ".join(problems))
    return Outcome(rep)


def cmd_info(args) -> Outcome:
    pf = load(args)
    T = kernel_of(pf)
    rep = Report("info")
    rep.add("info", "spaces", None, K=str(T.domain), L=str(T.codomain))
    rep.add("info", "operator norm", None, norm=operator_norm(T))
    rep.add("info", "positive", None, value=is_positive(T))
    rep.add("info", "unital", None, value=is_unital(T))
    env = envelope(T)
    rep.add("info", "envelope", None, envelope=env.describe(), continuous=env.continuous, min=env.minimum)
    return Outcome(rep)


def cmd_norms(args) -> Outcome:
    pf = load(args)
    T = kernel_of(pf)
    W = setting(args, pf, "window")
    rep = Report("norms")
    rep.add("norms", "operator norm", None, norm=operator_norm(T))
    est = embedding_constant(T, W)
    rep.add("norms", "embedding constant at window", None, window=W, m=est.value, witness=est.witness.describe())
    if args.oracle is not None or "oracle" in pf.settings:
        q = setting(args, pf, "oracle")
        try:
            lat = lattice_oracle(T, W, q)
            rep.add("norms", "lattice oracle is not below the LP value", lat >= est.value,
                    denominator=q, oracle=lat)
        except OracleTooLarge as e:
            rep.add("norms", "lattice oracle", None, str(e))
    return Outcome(rep)


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def cmd_phi(args) -> Outcome:
    pf = load(args)
    T = kernel_of(pf)
    r = args.r if args.r is not None else working_constant(T, setting(args, pf, "window"))
    phi = phi_r(T, r)
    iu = image_union(phi)
    rep = Report("phi")
    rep.add("atom threshold map", "upper semicontinuous", check_usc(phi).ok, r=r, bound=phi.bound)
    rep.add("atom threshold map", "union of values is closed", iu.closed, union=str(iu.subset))
    rep.add("atom threshold map", "onto K", None, "informational", value=iu.onto)
    names = list(pf.spaces)
    kn = next(n for n in names if pf.spaces[n] == T.domain)
    ln = next(n for n in names if pf.spaces[n] == T.codomain)
    return Outcome(rep, serialize_setmap("phi", ln, kn, phi))


def cmd_filtration(args) -> Outcome:
    pf = load(args)
    T = kernel_of(pf)
    W = setting(args, pf, "window")
    m = working_constant(T, W)
    rep = Report("filtration")
    onto = check_onto_at_m(T, m)
    rep.extend(onto.to_report())
    if onto.onto:
        rep.extend(filtration(T, m).to_report())
    return Outcome(rep)


def cmd_pibase(args) -> Outcome:
    pf = load(args)
    T = kernel_of(pf)
    W = setting(args, pf, "window")
    target = parse_subset(args.target, T.domain) if args.target else T.domain.whole()
    res = pi_base(T, target, None, W, setting(args, pf, "search_bound"))
    rep = Report("pibase")
    rep.add("pi-base", "closure of U is a continuous image", True, W=str(target), level=res.level,
            U=str(res.U), source=str(res.witness.source), map=res.witness.describe())
    return Outcome(rep)


def cmd_envelope(args) -> Outcome:
    pf = load(args)
    T = kernel_of(pf)
    env = envelope(T)
    rep = Report("envelope")
    rep.add("envelope", "lower semicontinuous", env.lsc, envelope=env.describe())
    rep.add("envelope", "continuous", None, value=env.continuous)
    rep.add("envelope", "minimum", None, min=env.minimum, strictly_positive=env.strictly_positive)
    return Outcome(rep)


def cmd_reduce(args) -> Outcome:
    pf = load(args)
    T = kernel_of(pf)
    W = setting(args, pf, "window")
    rep = Report("reduce")
    if is_positive(T):
        norm = normalize_positive(T, window=W)
        rep.add("positive normalization", "S1 = 1", True, L0=str(norm.support))
        rep.add("positive normalization", "inverse norm does not grow", True, m=norm.m, constant=norm.m_out)
        S = norm.kernel
    else:
        red = positive_reduction(T, window=W)
        rep.add("positive reduction", "S is positive", True)
        rep.add("positive reduction", "constant of S is at least m/2", True, m=red.m, constant=red.m_out)
        S = red.kernel
    return Outcome(rep, serialize(problem_for(S, settings=pf.settings)), pipeable=True)


def cmd_lift(args) -> Outcome:
    pf = load(args)
    T = kernel_of(pf)
    W = setting(args, pf, "window")
    lift = adjoin_and_lift(T, window=W)
    rep = Report("lift")
    rep.add("K+1 lift", "envelope of S equals envelope of T plus one", True, point=str(lift.point))
    if lift.envelope_vanishes:
        rep.add("K+1 lift", "constant of S is at least m/2", True, m=lift.m, constant=lift.m_out)
    else:
        rep.add("K+1 lift", "constant of S is at least m/2", None,
                "envelope of T has no zero, so no bound is claimed", m=lift.m, constant=lift.m_out)
    return Outcome(rep, serialize(problem_for(lift.kernel, settings=pf.settings)), pipeable=True)


def cmd_pipeline(args) -> Outcome:
    pf = load(args)
    problems = validate_kernel(pf.kernel).violations
    if problems:
        rep = Report("pipeline")
        rep.add("input", "kernel is valid", False, "; ".join(problems))
        return Outcome(rep)
    res = pipeline(pf.kernel, setting(args, pf, "window"), setting(args, pf, "search_bound"))
    return Outcome(res.report)


def block_spec(text: str) -> Block:
    """``A`` is a seq block, ``A:3`` a finite block with three points."""
    name, _, size = text.partition(":")
    if not size:
        return Block(name, "seq")
    if not size.isdigit():
        raise UsageError(f"bad block spec {text!r}")
    return Block(name, "fin", int(size))


def cmd_example(args) -> Outcome:
    name = args.name
    rep = Report(f"example {name}")
    settings = {}
    if name == "ex52":
        return Outcome(rep, gallery.ex52_text(), pipeable=True)
    if name == "identity":
        K = SpaceDesc(tuple(block_spec(s) for s in args.params)) if args.params else None
        T = gallery.identity(K)
    elif name == "split":
        s = parse_rational(args.params[0]) if args.params else Fraction(1, 8)
        T = gallery.split_mix(s)
    elif name in gallery.NAMED:
        T = gallery.NAMED[name]()
    elif name == "random":
        import random

        kind = args.params[0] if args.params else "positive"
        T = gallery.random_kernel(random.Random(args.seed), kind)
        settings["seed"] = args.seed
    else:
        raise UsageError(f"unknown example {name!r}")
    return Outcome(rep, serialize(problem_for(T, settings=settings)), pipeable=True)


def cmd_selftest(args) -> Outcome:
    return Outcome(selftest.run(args.seed, args.count))


COMMANDS = {
    "validate": (cmd_validate, "check that the file parses and its kernels are valid"),
    "info": (cmd_info, "summarize the kernel"),
    "norms": (cmd_norms, "operator norm and windowed embedding constant"),
    "phi": (cmd_phi, "set map of atoms with weight at least r"),
    "filtration": (cmd_filtration, "threshold filtration of K"),
    "pibase": (cmd_pibase, "clopen set inside a target with a continuous-image witness"),
    "envelope": (cmd_envelope, "row norms y -> ||T* delta_y||"),
    "reduce": (cmd_reduce, "reduce to a positive (unital) kernel"),
    "lift": (cmd_lift, "adjoin an isolated point to K"),
    "pipeline": (cmd_pipeline, "run every reduction and construction"),
    "example": (cmd_example, "print a bundled example problem"),
    "selftest": (cmd_selftest, "seeded property checks"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ck-embed", description="Exact computations with embeddings C(K) -> C(L).")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--json", action="store_true", help="line-delimited JSON output")
        p.add_argument("--seed", type=int, default=0)
        if name == "example":
            p.add_argument("name", help="ex52, identity, cancel, signed2, zero, split or random")
            p.add_argument("params", nargs="*", help="block specs for identity, s for split, kind for random")
            continue
        if name == "selftest":
            p.add_argument("--count", type=int, default=50)
            continue
        p.add_argument("file", nargs="?", default="-", help="problem file, - for stdin")
        p.add_argument("--window", type=int)
        p.add_argument("--oracle", type=int)
        p.add_argument("--search-bound", dest="search_bound", type=int)
        if name == "phi":
            p.add_argument("--r", type=parse_rational)
        if name == "pibase":
            p.add_argument("--target", help="subset literal, e.g. '{ X: 0.., inf }'")
    return ap


def render(out: Outcome, as_json: bool) -> str:
    if as_json:
        text = out.report.render_json()
        if out.artifact is not None:
            text += json.dumps({"artifact": out.artifact}, sort_keys=True) + "\n"
        return text
    if out.artifact is None:
        return out.report.render_text()
    if out.pipeable:
        if not out.report.clauses:
            return out.artifact
        notes = "".join("# " + c.line().replace("\n", "\n# ") + "\n" for c in out.report.clauses)
        return notes + out.artifact
    return out.report.render_text() + out.artifact


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    func = COMMANDS[args.command][0]
    args.problem = None
    try:
        out = func(args)
    except (FormatError, UsageError) as e:
        print(f"ck-embed: error: {e}", file=sys.stderr)
        return 2
    except (KernelError, ConstructionError, ClauseFailure) as e:
        rep = Report(args.command)
        if isinstance(e, ClauseFailure):
            rep.add(e.stage, e.claim, False, e.detail)
        else:
            rep.add("input", "preconditions hold", False, str(e))
        out = Outcome(rep)
    if args.problem is not None and not out.report.ok:
        out.report.attach(serialize(args.problem))
    sys.stdout.write(render(out, args.json))
    return 0 if out.report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
