"""Deterministic JSON, DOT and plain-text emission, plus JSON decoding.

Rationals are written as ``{"num": int, "den": int}``; keys are sorted and
separators compact, so equal reports give byte-identical output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import singledispatch

from .analysis import ComplexityReport, ScalingTable, StageReport
from .core import (AttachmentPoint, FlowAssignment, IndexUniverse, LearningGraph, LVertex,
                   Transition, ValidationReport, _sort_key)
from .instances import ProblemInstance, SubgraphPattern
from .optimize import BalanceSolution, Table6Row
from .symmetry import OrbitReport

FORMATS = ("json", "dot", "text")


class EmitError(ValueError):
    """Requested format does not apply to the report."""


def rat(x) -> dict | None:
    if x is None:
        return None
    x = Fraction(x)
    return {"num": x.numerator, "den": x.denominator}


def unrat(d) -> Fraction | None:
    return None if d is None else Fraction(d["num"], d["den"])


def _plain(obj):
    """Recursively convert Fractions, tuples and sets into JSON values."""
    if isinstance(obj, Fraction):
        return rat(obj)
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return [_plain(v) for v in sorted(obj, key=_sort_key)]
    return obj


def dumps(data) -> str:
    return json.dumps(_plain(data), sort_keys=True, separators=(",", ":")) + "\n"


def _tuplify(x):
    return tuple(_tuplify(v) for v in x) if isinstance(x, list) else x


# -- learning graphs ---------------------------------------------------------------

@dataclass(frozen=True)
class GraphBundle:
    """A learning graph with (optionally) one flow, the unit the CLI emits."""

    graph: LearningGraph
    flow: FlowAssignment | None = None

    def __eq__(self, other):
        return (isinstance(other, GraphBundle) and graphs_equal(self.graph, other.graph)
                and flows_equal(self.flow, other.flow))


def flows_equal(a: FlowAssignment | None, b: FlowAssignment | None) -> bool:
    """Value equality; zero entries are ignored since flows are sparse."""
    if a is None or b is None:
        return a is b
    nz = lambda m: {k: v for k, v in m.items() if v}  # noqa: E731
    return (nz(a.flows) == nz(b.flows) and a.instance == b.instance and nz(a.entries) == nz(b.entries)
            and a.conditioning == b.conditioning and set(a.subflows) == set(b.subflows)
            and all(flows_equal(a.subflows[p], b.subflows[p]) for p in a.subflows))


def graphs_equal(a: LearningGraph, b: LearningGraph) -> bool:
    if (a.universe, a.layers, a.stage_labels) != (b.universe, b.layers, b.stage_labels):
        return False
    if [[(t.source, t.target, t.id) for t in s] for s in a.stages] != \
            [[(t.source, t.target, t.id) for t in s] for s in b.stages]:
        return False
    if set(a.attachments) != set(b.attachments):
        return False
    return all(graphs_equal(a.attachments[p], b.attachments[p]) for p in a.attachments)


def _vertex(v: LVertex) -> dict:
    out = {"queried": sorted(v.queried, key=_sort_key)}
    if v.annotation is not None:
        out["annotation"] = sorted(v.annotation)
    return out


def _unvertex(d) -> LVertex:
    ann = d.get("annotation")
    return LVertex(frozenset(_tuplify(i) for i in d["queried"]),
                   None if ann is None else frozenset(ann))


def _instance(inst: ProblemInstance | None):
    if inst is None:
        return None
    if inst.kind == "distinctness":
        return {"kind": inst.kind, "values": list(inst.values), "k": inst.k}
    return {"kind": inst.kind, "n": inst.n, "edges": sorted(inst.graph.edges),
            "pattern": {"k": inst.pattern.k, "edges": list(inst.pattern.edges)}}


def _uninstance(d):
    if d is None:
        return None
    if d["kind"] == "distinctness":
        return ProblemInstance.distinctness(d["values"], d["k"])
    pat = SubgraphPattern(d["pattern"]["k"], _tuplify(d["pattern"]["edges"]))
    return ProblemInstance.from_graph(d["n"], _tuplify(d["edges"]), pat)


def graph_to_dict(lg: LearningGraph, flow: FlowAssignment | None = None) -> dict:
    subgraphs, sub_index = [], {}
    points = sorted(lg.attachments, key=lambda p: (p.vertex.key(), p.anchor if p.anchor is not None else -1))
    final_pos = {v: i for i, v in enumerate(lg.final_layer)}
    attachments = []
    for p in points:
        sub = lg.attachments[p]
        if id(sub) not in sub_index:
            sub_index[id(sub)] = len(subgraphs)
            subgraphs.append(graph_to_dict(sub))
        attachments.append({"vertex": final_pos[p.vertex], "anchor": p.anchor, "graph": sub_index[id(sub)]})
    positions = [{v: i for i, v in enumerate(layer)} for layer in lg.layers]
    stages = [[{"id": t.id, "from": positions[i][t.source], "to": positions[i + 1][t.target]}
               for t in stage] for i, stage in enumerate(lg.stages)]
    u = lg.universe
    universe = {"size": u.size, "kind": u.kind.value}
    if u.labels is not None:
        universe["labels"] = list(u.labels)
    out = {"universe": universe, "layers": [[_vertex(v) for v in layer] for layer in lg.layers],
           "stages": stages, "labels": list(lg.stage_labels) if lg.stage_labels else None,
           "attachments": attachments, "subgraphs": subgraphs}
    if flow is not None:
        out["flows"] = _flow_to_dict(flow, points)
    return out


def _flow_to_dict(flow: FlowAssignment, points) -> dict:
    idx = {p: i for i, p in enumerate(points)}
    return {"transitions": [[tid, rat(q)] for tid, q in sorted(flow.flows.items())],
            "entries": sorted([idx[p], rat(q)] for p, q in flow.entries.items()),
            "subflows": sorted([idx[p], [[t, rat(q)] for t, q in sorted(f.flows.items())]]
                               for p, f in flow.subflows.items()),
            "conditioning": rat(flow.conditioning), "instance": _instance(flow.instance)}


def graph_from_dict(d: dict, _subs: list | None = None) -> GraphBundle:
    u = d["universe"]
    labels = u.get("labels")
    universe = IndexUniverse(u["size"], u["kind"], None if labels is None else _tuplify(labels))
    layers = tuple(tuple(_unvertex(v) for v in layer) for layer in d["layers"])
    stages = tuple(tuple(Transition(layers[i][t["from"]], layers[i + 1][t["to"]], t["id"]) for t in stage)
                   for i, stage in enumerate(d["stages"]))
    subs = [graph_from_dict(s).graph for s in d.get("subgraphs", [])]
    points = [AttachmentPoint(layers[-1][a["vertex"]], a["anchor"]) for a in d.get("attachments", [])]
    attachments = {p: subs[a["graph"]] for p, a in zip(points, d.get("attachments", []))}
    lg = LearningGraph(universe, layers, stages, attachments,
                       tuple(d["labels"]) if d.get("labels") else None)
    flow = None
    if "flows" in d:
        f = d["flows"]
        flow = FlowAssignment({tid: unrat(q) for tid, q in f["transitions"]},
                              _uninstance(f.get("instance")),
                              {points[i]: unrat(q) for i, q in f["entries"]},
                              {points[i]: FlowAssignment({t: unrat(q) for t, q in fl})
                               for i, fl in f["subflows"]},
                              unrat(f.get("conditioning")))
    return GraphBundle(lg, flow)


def graph_to_dot(lg: LearningGraph, flow: FlowAssignment | None = None) -> str:
    """One node per L-vertex (labelled with its queried set), one edge per
    transition, each layer a ranked cluster."""
    ids = {}
    lines = ["digraph learning_graph {", "  rankdir=TB;", "  node [shape=box, fontsize=10];"]
    for i, layer in enumerate(lg.layers):
        lines.append(f"  subgraph cluster_layer{i} {{")
        lines.append(f'    label="V{i}"; rank=same;')
        for v in layer:
            ids[v] = f"v{len(ids)}"
            lines.append(f'    {ids[v]} [label="{v}"];')
        lines.append("  }")
    for stage in lg.stages:
        for t in stage:
            attr = ""
            if flow is not None and flow.of(t):
                attr = f' [label="{flow.of(t)}"]'
            lines.append(f"  {ids[t.source]} -> {ids[t.target]}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_text(lg: LearningGraph, flow: FlowAssignment | None = None) -> str:
    rows = [f"universe: {lg.universe.kind.value}, n={lg.universe.size}, "
            f"{lg.universe.index_count} indices",
            f"{'layer':>5} {'vertices':>9}   {'stage':<6} {'transitions':>11} {'valid':>6}"]
    for i, layer in enumerate(lg.layers):
        line = f"{i:>5} {len(layer):>9}"
        if i:
            stage = lg.stage(i)
            valid = sum(1 for t in stage if flow is not None and flow.of(t))
            line += f"   {lg.label(i):<6} {len(stage):>11} {valid if flow is not None else '-':>6}"
        rows.append(line)
    if lg.attachments:
        rows.append(f"subroutine stage {lg.subroutine_label}: {len(lg.attachments)} attachment points")
    return "\n".join(rows) + "\n"


# -- reports -----------------------------------------------------------------------

def _stage_dict(s: StageReport) -> dict:
    return {"label": s.label, "length": s.length, "speciality": s.speciality,
            "complexity": s.complexity, "symmetric": s.symmetric, "degenerate": s.degenerate,
            "perInstance": [list(p) for p in s.per_instance]}


def _unstage(d) -> StageReport:
    return StageReport(d["label"], _num(d["length"]), unrat(d["speciality"]), d["complexity"],
                       d["symmetric"], d["degenerate"],
                       tuple((_num(a), unrat(b)) for a, b in d["perInstance"]))


def _num(x):
    return unrat(x) if isinstance(x, dict) else x


@singledispatch
def to_dict(report) -> dict:
    raise EmitError(f"cannot serialize {type(report).__name__}")


@to_dict.register
def _(r: GraphBundle):
    return graph_to_dict(r.graph, r.flow)


@to_dict.register
def _(r: ValidationReport):
    out = {"violations": list(r.violations)}
    if r.flags:
        out["flags"] = list(r.flags)
    if r.stage_sums:
        out["stageSums"] = list(r.stage_sums)
    return out


@to_dict.register
def _(r: ComplexityReport):
    return {"stages": [_stage_dict(s) for s in r.stages],
            "subroutine": _stage_dict(r.subroutine) if r.subroutine else None,
            "total": r.total, "conditioning": r.conditioning}


@to_dict.register
def _(r: BalanceSolution):
    return r.to_dict()


@to_dict.register
def _(r: OrbitReport):
    return r.to_dict()


@to_dict.register
def _(r: ScalingTable):
    return {"family": r.family, "sizes": r.sizes, "params": r.params,
            "specialities": r.specialities, "lengths": r.lengths,
            "fitted": r.fitted, "predicted": r.predicted}


@dataclass(frozen=True)
class GTable:
    rows: tuple


@dataclass(frozen=True)
class ExponentSummary:
    k: int
    l: int
    m: int
    g: Fraction
    exponent: Fraction


@to_dict.register
def _(r: GTable):
    return {"rows": [row.to_dict() for row in r.rows]}


@to_dict.register
def _(r: ExponentSummary):
    return {"k": r.k, "l": r.l, "m": r.m, "g": r.g, "exponent": r.exponent}


def from_dict(d: dict, cls):
    """Inverse of :func:`to_dict` for the report class ``cls``."""
    if cls is GraphBundle:
        return graph_from_dict(d)
    if cls is ValidationReport:
        return ValidationReport(d["violations"], d.get("flags", []),
                                [unrat(x) for x in d.get("stageSums", [])])
    if cls is ComplexityReport:
        return ComplexityReport(tuple(_unstage(s) for s in d["stages"]),
                                _unstage(d["subroutine"]) if d["subroutine"] else None,
                                d["total"], unrat(d["conditioning"]))
    if cls is BalanceSolution:
        return BalanceSolution(unrat(d["alpha"]), unrat(d["beta"]), unrat(d["value"]),
                               tuple(d["tight"]), d["sideConditions"])
    if cls is ScalingTable:
        return ScalingTable(d["family"], d["sizes"], d["params"],
                            {k: [unrat(x) for x in v] for k, v in d["specialities"].items()},
                            {k: [unrat(x) for x in v] for k, v in d["lengths"].items()},
                            d["fitted"], d["predicted"])
    if cls is GTable:
        return GTable(tuple(Table6Row(r["family"], r["param"], r["vertices"], r["l"], r["m"],
                                      unrat(r["g"]), unrat(r["exponent"])) for r in d["rows"]))
    if cls is ExponentSummary:
        return ExponentSummary(d["k"], d["l"], d["m"], unrat(d["g"]), unrat(d["exponent"]))
    raise EmitError(f"cannot decode {cls.__name__}")


def loads(text: str, cls):
    return from_dict(json.loads(text), cls)


# -- text ----------------------------------------------------------------------------

def _table(header, rows) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths))).rstrip()
                     for r in cells) + "\n"


@singledispatch
def to_text(report) -> str:
    raise EmitError(f"no text form for {type(report).__name__}")


@to_text.register
def _(r: GraphBundle):
    return graph_text(r.graph, r.flow)


@to_text.register
def _(r: ValidationReport):
    lines = ["valid" if r.ok else f"{len(r.violations)} violation(s)"]
    lines += [f"  violation: {v}" for v in r.violations]
    lines += [f"  flag: {f}" for f in r.flags]
    return "\n".join(lines) + "\n"


def _fmt_len(x) -> str:
    return f"{x:.6f}" if isinstance(x, float) else str(x)


@to_text.register
def _(r: ComplexityReport):
    rows = []
    for s in r.rows():
        marks = ("" if s.symmetric else "asym ") + ("degenerate" if s.degenerate else "")
        rows.append((s.label, s.speciality, _fmt_len(s.length), f"{s.complexity:.12g}", marks.strip()))
    out = _table(("stage", "speciality", "length", "complexity", "flags"), rows)
    out += f"total {r.total:.12g}\n"
    if r.conditioning is not None:
        out += f"conditioning K = {r.conditioning}\n"
    return out


@to_text.register
def _(r: BalanceSolution):
    lines = [f"alpha = {r.alpha}"]
    if r.beta is not None:
        lines.append(f"beta = {r.beta}")
    lines.append(f"value = {r.value}")
    lines.append("tight: " + ", ".join(r.tight))
    for k, v in r.side_conditions.items():
        lines.append(f"{k}: {'yes' if v else 'no'}")
    return "\n".join(lines) + "\n"


@to_text.register
def _(r: GTable):
    return _table(("family", "k", "vertices", "l", "m", "g(H)", "exponent"),
                  [(x.family, x.param, x.vertices, x.l, x.m, x.g, x.exponent) for x in r.rows])


@to_text.register
def _(r: ExponentSummary):
    return f"k={r.k} l={r.l} m={r.m} g={r.g} exponent={r.exponent}\n"


@to_text.register
def _(r: ScalingTable):
    return r.text() + "\n"


def emit(report, fmt: str = "json") -> bytes:
    if fmt == "json":
        return dumps(to_dict(report)).encode()
    if fmt == "text":
        return to_text(report).encode()
    if fmt == "dot":
        if not isinstance(report, GraphBundle):
            raise EmitError("dot output needs a learning-graph report")
        return graph_to_dot(report.graph, report.flow).encode()
    raise EmitError(f"unknown format {fmt!r}")
