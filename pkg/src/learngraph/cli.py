"""Command-line front end.

Exit codes: 0 success, 1 validation failure or exceeded cap, 2 usage error.
"""

from __future__ import annotations

import argparse
import re
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import builders, emit
from .analysis import scaling_report, total_complexity
from .core import DEFAULT_NODE_CAP, CapExceeded, ValidationReport, check_flow, validate_structure
from .instances import (ProblemInstance, SubgraphPattern, clique, cycle, decompose_H, parse_edge_list,
                        parse_values, path, star)
from .optimize import containment_exponent, family_balance, g_of_H, table6
from .symmetry import DEFAULT_GROUP_CAP, SymmetryGroup

COMMANDS = ("gtable", "exponent", "build", "verify", "analyze", "optimize", "scaling")
FAMILIES = ("kdist", "clique", "subgraph")


class UsageError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational NUM/DEN: {text!r}") from None
    return value


def _csv(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None


def _options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("-n", "--n", type=int)
    p.add_argument("-k", "--k", type=int)
    p.add_argument("-r", "--r", type=int)
    p.add_argument("-s", "--s", type=_fraction, default=None, metavar="NUM/DEN")
    p.add_argument("--pattern", metavar="FILE", help="edge-list file, or K<k>, P<k>, C<k>, S<leaves>")
    p.add_argument("--instance", metavar="FILE")
    p.add_argument("--gen", metavar="SPEC", help="canonical | planted[:P] (needs --seed unless canonical)")
    p.add_argument("--seed", type=int)
    p.add_argument("--emit", choices=emit.FORMATS, default="text")
    p.add_argument("--cap-nodes", type=int, default=DEFAULT_NODE_CAP)
    p.add_argument("--cap-group", type=int, default=DEFAULT_GROUP_CAP)
    p.add_argument("--samples", type=int)
    p.add_argument("--max-k", type=int, default=6)
    p.add_argument("--n-list", type=_csv)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="learngraph", description="Learning-graph workbench.")
    parser.add_argument("--config", metavar="FILE", help="key=value defaults; flags win")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = _options()
    helps = {
        "gtable": "g(H) and containment exponents for standard pattern families",
        "exponent": "g(H) and containment exponent of one pattern",
        "build": "build a learning graph with its canonical flow",
        "verify": "validate structure and flow of a build",
        "analyze": "per-stage specialities, lengths and complexities",
        "optimize": "balance the exponent terms of a family",
        "scaling": "fitted speciality exponents across sizes",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _config_tokens(path: str) -> list:
    tokens = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (x.strip() for x in line.split("=", 1))
        tokens += ["--" + key.replace("_", "-"), value]
    return tokens


def parse(argv: list) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if known.config:
        cmd = next((i for i, a in enumerate(rest) if a in COMMANDS), None)
        if cmd is not None:
            rest = rest[:cmd + 1] + _config_tokens(known.config) + rest[cmd + 1:]
    return parser.parse_args(rest)


# -- input resolution ------------------------------------------------------------

_NAMED = {"K": clique, "P": path, "C": cycle, "S": star}


def load_pattern(spec: str) -> SubgraphPattern:
    if Path(spec).exists():
        return decompose_H(parse_edge_list(Path(spec).read_text()))
    m = re.fullmatch(r"([KPCS])(\d+)", spec)
    if m:
        return _NAMED[m.group(1)](int(m.group(2)))
    raise UsageError(f"pattern file not found: {spec}")


def _family_pattern(args) -> SubgraphPattern | None:
    if args.family == "clique":
        if args.k is None:
            raise UsageError("clique family needs -k")
        return clique(args.k)
    if args.family == "subgraph":
        if not args.pattern:
            raise UsageError("subgraph family needs --pattern")
        return load_pattern(args.pattern)
    return None


def _require_seed(args):
    sampled = args.samples is not None or (args.gen and args.gen != "canonical")
    if sampled and args.seed is None:
        raise UsageError("--seed is required with --samples or a random --gen")


def make_instance(args, pattern: SubgraphPattern | None) -> ProblemInstance:
    n = args.n
    if args.instance:
        text = Path(args.instance).read_text()
        if args.family == "kdist":
            values = parse_values(text)
            if n is not None and len(values) != n:
                raise UsageError(f"instance has {len(values)} values but -n is {n}")
            return ProblemInstance.distinctness(values, args.k)
        return ProblemInstance.from_graph(n, parse_edge_list(text), pattern)
    spec = args.gen or "canonical"
    if spec == "canonical":
        if args.family == "kdist":
            return ProblemInstance.distinctness([0] * args.k + list(range(1, n - args.k + 1)), args.k)
        return ProblemInstance.from_graph(n, pattern.edges, pattern)
    m = re.fullmatch(r"planted(?::(.+))?", spec)
    if not m:
        raise UsageError(f"unknown generator {spec!r}")
    rng = np.random.default_rng(args.seed)
    if args.family == "kdist":
        alphabet = max(2, n // args.k)
        values = rng.integers(1, alphabet + 1, size=n)
        values[rng.choice(n, size=args.k, replace=False)] = 0
        return ProblemInstance.distinctness(values.tolist(), args.k)
    density = float(Fraction(m.group(1))) if m.group(1) else 0.5
    edges = {(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < density}
    place = rng.choice(n, size=pattern.k, replace=False).tolist()
    edges |= {tuple(sorted((place[u], place[v]))) for u, v in pattern.edges}
    return ProblemInstance.from_graph(n, edges, pattern)


def make_build(args):
    if args.family is None or args.n is None:
        raise UsageError("build commands need --family and -n")
    pattern = _family_pattern(args)
    if args.family == "kdist" and args.k is None:
        raise UsageError("kdist family needs -k")
    k = pattern.k if pattern is not None else args.k
    r = args.r if args.r is not None else builders.default_r(args.n, k, args.family)
    inst = make_instance(args, pattern)
    if not inst.truth:
        raise UsageError("instance is negative; builds need a positive instance")
    if args.family == "kdist":
        _cap_nodes(args, builders.distinctness_vertex_estimate(args.n, k, r))
        return builders.build_kdistinctness(args.n, k, r, inst)
    if args.family == "clique":
        return builders.build_kclique(args.n, k, r, inst, cap=args.cap_nodes)
    s = args.s if args.s is not None else Fraction(1, 2)
    return builders.build_subgraph(args.n, pattern, r, s, inst, cap=args.cap_nodes)


def _cap_nodes(args, count: int):
    if count > args.cap_nodes:
        raise CapExceeded(f"construction needs about {count} L-vertices, above the node cap {args.cap_nodes}")


# -- commands ----------------------------------------------------------------------

def cmd_gtable(args):
    return emit.GTable(tuple(table6(args.max_k)))


def cmd_exponent(args):
    pattern = _family_pattern(args) if args.family else None
    if pattern is None:
        if not args.pattern:
            raise UsageError("exponent needs --pattern (or --family clique -k K)")
        pattern = load_pattern(args.pattern)
    return emit.ExponentSummary(pattern.k, pattern.l, pattern.m, g_of_H(pattern),
                                containment_exponent(pattern))


def cmd_build(args):
    lg, flow = make_build(args)
    return emit.GraphBundle(lg, flow)


def cmd_verify(args):
    lg, flow = make_build(args)
    report = ValidationReport()
    report.extend(validate_structure(lg), "structure")
    report.extend(check_flow(lg, flow), "flow")
    if args.samples:
        from .symmetry import estimate_speciality, max_speciality, speciality_report
        group = SymmetryGroup.for_universe(lg.universe, cap=args.cap_group)
        for i in range(1, lg.n_stages + 1):
            exact = max_speciality(lg, i, group, flow)
            target = next(o.representative for o in speciality_report(lg, i, group, flow)
                          if o.speciality == exact)
            est = estimate_speciality(lg, target, group, flow, samples=args.samples, seed=args.seed)
            if not est.contains(exact):
                report.flags.append(f"stage {lg.label(i)}: sampled interval "
                                    f"[{est.low:.4g}, {est.high:.4g}] misses exact {exact}")
    return report


def cmd_analyze(args):
    lg, flow = make_build(args)
    group = SymmetryGroup.for_universe(lg.universe, cap=args.cap_group)
    return total_complexity(lg, [flow], group)


def cmd_optimize(args):
    if args.family is None:
        raise UsageError("optimize needs --family")
    pattern = _family_pattern(args)
    if args.family == "kdist" and args.k is None:
        raise UsageError("kdist family needs -k")
    return family_balance(args.family, args.k, pattern)


def cmd_scaling(args):
    if args.family is None or not args.n_list:
        raise UsageError("scaling needs --family and --n-list")
    pattern = _family_pattern(args) if args.family == "subgraph" else None
    if args.k is None and pattern is None:
        raise UsageError("scaling needs -k")
    k = pattern.k if pattern is not None else args.k
    r_rule = (lambda n: args.r) if args.r is not None else None
    return scaling_report(args.family, args.n_list, k, r_rule=r_rule, pattern=pattern,
                          s=args.s if args.s is not None else Fraction(1, 2), cap=args.cap_group)


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout.buffer
    stderr = stderr or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse(argv)
    except SystemExit as exc:  # argparse has already printed usage
        return 0 if exc.code == 0 else 2
    except (UsageError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    try:
        _require_seed(args)
        report = HANDLERS[args.command](args)
        payload = emit.emit(report, args.emit)
    except CapExceeded as exc:
        print(f"error: {exc}", file=stderr)
        return 1
    except (UsageError, emit.EmitError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    stdout.write(payload)
    stdout.flush()
    if isinstance(report, ValidationReport) and not report.ok:
        return 1
    return 0


def main() -> None:
    sys.exit(run())
