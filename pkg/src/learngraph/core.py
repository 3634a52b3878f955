"""Learning-graph data model.

A learning graph is a layered DAG whose vertices (L-vertices) are labelled by
sets of queried input indices.  Layer 0 holds only the empty set; stage ``i``
holds the transitions from layer ``i - 1`` to layer ``i``.  Flows are exact
:class:`fractions.Fraction` values keyed by transition id.

Graph-type constructions annotate each L-vertex with the set of graph vertices
it has committed to, so that vertices of degree 0 in the queried subgraph are
still tracked.  A final layer may carry subroutine attachments: further
learning graphs appended at a vertex (optionally anchored at one extra graph
vertex), whose flows are scaled by the in-flow of that attachment point.
"""

from __future__ import annotations

import enum
import functools
import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from graphlib import CycleError, TopologicalSorter
from typing import Hashable, Iterable, Mapping, Sequence

Index = Hashable

ZERO = Fraction(0)
ONE = Fraction(1)

DEFAULT_NODE_CAP = 10**6


class CapExceeded(RuntimeError):
    """An enumeration would exceed a configured size cap."""


class UniverseKind(str, enum.Enum):
    POSITIONS = "positions"
    EDGE_SLOTS = "edge-slots"


@dataclass(frozen=True)
class IndexUniverse:
    """The input indices of a problem.

    For ``POSITIONS`` the indices are ``0 .. size-1`` unless explicit
    ``labels`` are given (used for subroutines that run over a subset of a
    parent universe).  For ``EDGE_SLOTS`` the indices are the pairs
    ``(u, v)``, ``u < v < size``.
    """

    size: int
    kind: UniverseKind = UniverseKind.POSITIONS
    labels: tuple | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"universe size must be positive, got {self.size}")
        object.__setattr__(self, "kind", UniverseKind(self.kind))
        if self.labels is not None:
            if self.kind is not UniverseKind.POSITIONS:
                raise ValueError("explicit labels only apply to positions universes")
            if len(self.labels) != self.size or len(set(self.labels)) != self.size:
                raise ValueError("labels must be `size` distinct indices")

    def indices(self) -> tuple:
        if self.kind is UniverseKind.EDGE_SLOTS:
            return tuple(itertools.combinations(range(self.size), 2))
        if self.labels is not None:
            return self.labels
        return tuple(range(self.size))

    @property
    def index_count(self) -> int:
        if self.kind is UniverseKind.EDGE_SLOTS:
            return self.size * (self.size - 1) // 2
        return self.size

    def __contains__(self, idx) -> bool:
        if self.kind is UniverseKind.EDGE_SLOTS:
            return (isinstance(idx, tuple) and len(idx) == 2
                    and 0 <= idx[0] < idx[1] < self.size)
        if self.labels is not None:
            return idx in self._label_set
        return isinstance(idx, int) and 0 <= idx < self.size

    @functools.cached_property
    def _label_set(self) -> frozenset:
        return frozenset(self.labels or ())


def _sort_key(idx):
    return idx if isinstance(idx, tuple) else (idx,)


@dataclass(frozen=True)
class LVertex:
    queried: frozenset = frozenset()
    annotation: frozenset | None = None

    def __post_init__(self):
        object.__setattr__(self, "queried", frozenset(self.queried))
        if self.annotation is not None:
            object.__setattr__(self, "annotation", frozenset(self.annotation))

    def key(self) -> tuple:
        """Canonical sortable form: sorted indices plus sorted annotation."""
        ann = None if self.annotation is None else tuple(sorted(self.annotation))
        return (tuple(sorted(self.queried, key=_sort_key)), ann)

    def __str__(self):
        q = ",".join(_fmt_index(i) for i in sorted(self.queried, key=_sort_key))
        if self.annotation is None:
            return "{" + q + "}"
        a = ",".join(str(v) for v in sorted(self.annotation))
        return "{" + q + "}|{" + a + "}"


def _fmt_index(idx) -> str:
    if isinstance(idx, tuple):
        return "".join(str(x) for x in idx) if all(x < 10 for x in idx) else "-".join(map(str, idx))
    return str(idx)


SOURCE = LVertex()


@dataclass(frozen=True)
class Transition:
    source: LVertex
    target: LVertex
    id: int = field(default=-1, compare=False)

    @property
    def length(self) -> int:
        return len(self.target.queried - self.source.queried)


def transition_length(e: Transition) -> int:
    return e.length


@dataclass(frozen=True)
class AttachmentPoint:
    """Where a subroutine is appended: a final-layer vertex, plus an optional
    anchor graph vertex the subroutine is specialised to."""

    vertex: LVertex
    anchor: int | None = None


@dataclass(frozen=True, eq=False)
class LearningGraph:
    universe: IndexUniverse
    layers: tuple
    stages: tuple
    attachments: Mapping = field(default_factory=dict)
    stage_labels: tuple | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    @classmethod
    def from_stages(cls, universe: IndexUniverse, stages: Sequence[Iterable[tuple]],
                    labels: Sequence[str] | None = None) -> "LearningGraph":
        """Build from per-stage ``(source, target)`` pairs, assigning ids in order.

        Layer ``i`` is the set of targets of stage ``i`` in first-seen order.
        """
        layers = [(SOURCE,)]
        out_stages = []
        tid = 0
        for pairs in stages:
            seen = {}
            stage = []
            for src, dst in pairs:
                stage.append(Transition(src, dst, tid))
                tid += 1
                seen.setdefault(dst, None)
            out_stages.append(tuple(stage))
            layers.append(tuple(seen))
        return cls(universe, tuple(layers), tuple(out_stages),
                   stage_labels=tuple(labels) if labels else None)

    @property
    def n_stages(self) -> int:
        return len(self.stages)

    @property
    def final_layer(self) -> tuple:
        return self.layers[-1]

    def label(self, i: int) -> str:
        if self.stage_labels and i - 1 < len(self.stage_labels):
            return self.stage_labels[i - 1]
        return str(i)

    @property
    def subroutine_label(self) -> str:
        if self.stage_labels and len(self.stage_labels) > self.n_stages:
            return self.stage_labels[self.n_stages]
        return str(self.n_stages + 1)

    def stage(self, i: int) -> tuple:
        """Transitions of stage ``i`` (1-based)."""
        return self.stages[i - 1]

    def transition(self, tid: int) -> Transition:
        return self._id_map()[tid][1]

    def stage_of(self, tid: int) -> int:
        return self._id_map()[tid][0]

    def has_transition(self, tid: int) -> bool:
        return tid in self._id_map()

    def _id_map(self) -> dict:
        if "ids" not in self._cache:
            self._cache["ids"] = {t.id: (i, t) for i, st in enumerate(self.stages, 1) for t in st}
        return self._cache["ids"]

    def stage_index(self, i: int) -> dict:
        """``(source, target) -> Transition`` for stage ``i``."""
        key = ("stage_index", i)
        if key not in self._cache:
            self._cache[key] = {(t.source, t.target): t for t in self.stage(i)}
        return self._cache[key]

    def tid(self, i: int, source: LVertex, target: LVertex) -> int:
        return self.stage_index(i)[(source, target)].id

    def layer_set(self, i: int) -> frozenset:
        key = ("layer_set", i)
        if key not in self._cache:
            self._cache[key] = frozenset(self.layers[i])
        return self._cache[key]

    def vertex_count(self) -> int:
        own = sum(len(layer) for layer in self.layers)
        return own + sum(g.vertex_count() for g in self.attachments.values())

    def transition_count(self) -> int:
        return sum(len(s) for s in self.stages)


@dataclass(frozen=True, eq=False)
class FlowAssignment:
    """Flows of one positive instance on a learning graph.

    ``flows`` is sparse: missing transition ids carry zero flow.  For graphs
    with attachments, ``entries`` holds the in-flow of each attachment point
    and ``subflows`` the unscaled flow inside the appended graph.
    """

    flows: Mapping[int, Fraction]
    instance: object = None
    entries: Mapping = field(default_factory=dict)
    subflows: Mapping = field(default_factory=dict)
    conditioning: Fraction | None = None

    def of(self, t) -> Fraction:
        tid = t.id if isinstance(t, Transition) else t
        return self.flows.get(tid, ZERO)

    def appended(self, point: AttachmentPoint, t) -> Fraction:
        """Flow on a transition of the graph appended at ``point``, scaled by its in-flow."""
        p = self.entries.get(point, ZERO)
        if not p:
            return ZERO
        return p * self.subflows[point].of(t)


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    stage_sums: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def extend(self, other: "ValidationReport", prefix: str):
        self.violations.extend(f"{prefix}: {v}" for v in other.violations)
        self.flags.extend(f"{prefix}: {f}" for f in other.flags)


def _is_degenerate(t: Transition) -> bool:
    """Zero-length transitions are tolerated when nothing is queried yet or
    when the step only grows the vertex annotation."""
    if t.source.queried != t.target.queried:
        return False
    if not t.target.queried:
        return True
    sa, ta = t.source.annotation, t.target.annotation
    return ta is not None and (sa is None or sa < ta)


def validate_structure(lg: LearningGraph) -> ValidationReport:
    report = ValidationReport()
    bad = report.violations
    universe = lg.universe

    if len(lg.layers) != len(lg.stages) + 1:
        bad.append(f"layer count {len(lg.layers)} != stage count {len(lg.stages)} + 1")
    if not lg.layers or len(lg.layers[0]) != 1 or lg.layers[0][0].queried:
        bad.append("source layer must be exactly {∅}")

    for i, layer in enumerate(lg.layers):
        if len(set(layer)) != len(layer):
            bad.append(f"layer {i}: duplicate L-vertices")
        for v in layer:
            stray = [x for x in v.queried if x not in universe]
            if stray:
                bad.append(f"layer {i}: vertex {v} queries indices outside the universe")
            if v.annotation is not None and universe.kind is UniverseKind.EDGE_SLOTS:
                if any(u not in v.annotation or w not in v.annotation for u, w in v.queried):
                    bad.append(f"layer {i}: vertex {v} has an edge outside its annotation")

    arcs = defaultdict(set)
    for i, stage in enumerate(lg.stages, 1):
        if i >= len(lg.layers):
            break
        prev, cur = lg.layer_set(i - 1), lg.layer_set(i)
        reached = set()
        degenerate = 0
        for t in stage:
            if t.source not in prev or t.target not in cur:
                bad.append(f"stage {i}: transition {t.id} does not join layer {i - 1} to layer {i}")
            reached.add(t.target)
            if _is_degenerate(t):
                degenerate += 1
                continue
            if not t.source.queried < t.target.queried:
                bad.append(f"stage {i}: transition {t.id} {t.source} -> {t.target}: not strict superset")
                continue
            sa, ta = t.source.annotation, t.target.annotation
            if sa is not None and (ta is None or not sa <= ta):
                bad.append(f"stage {i}: transition {t.id} shrinks the annotation")
            arcs[t.target].add(t.source)
        missing = cur - reached
        if missing:
            bad.append(f"layer {i}: {len(missing)} vertices unreachable from layer {i - 1}")
        if degenerate:
            report.flags.append(f"stage {i}: {degenerate} zero-length transitions (degenerate)")

    try:
        TopologicalSorter(arcs).prepare()
    except CycleError:
        bad.append("graph has a cycle")

    final = lg.layer_set(len(lg.layers) - 1) if lg.layers else frozenset()
    for point, sub in lg.attachments.items():
        where = f"attachment {point.vertex}" + ("" if point.anchor is None else f"@{point.anchor}")
        if point.vertex not in final:
            bad.append(f"{where}: not a final-layer vertex")
        overlap = set(sub.universe.indices()) & point.vertex.queried
        if overlap:
            bad.append(f"{where}: appended universe overlaps the queried set")
        report.extend(validate_structure(sub), where)
    return report


def layer_inflows(lg: LearningGraph, flow: FlowAssignment) -> list:
    """Per-layer dict of in-flow for vertices with non-zero in-flow (layer 0 gets the source flow)."""
    out = [dict() for _ in lg.layers]
    for tid, p in flow.flows.items():
        if not p:
            continue
        i = lg.stage_of(tid)
        t = lg.transition(tid)
        out[i][t.target] = out[i].get(t.target, ZERO) + p
        if i == 1:
            out[0][t.source] = out[0].get(t.source, ZERO) + p
    return out


def layer_outflows(lg: LearningGraph, flow: FlowAssignment) -> list:
    out = [dict() for _ in lg.layers]
    for tid, p in flow.flows.items():
        if not p:
            continue
        i = lg.stage_of(tid)
        t = lg.transition(tid)
        out[i - 1][t.source] = out[i - 1].get(t.source, ZERO) + p
    return out


def check_flow(lg: LearningGraph, flow: FlowAssignment) -> ValidationReport:
    """Unit source flow, conservation, non-negativity and stage sums.

    Raises ``ValueError`` if the flow names a transition id not in ``lg``.
    """
    unknown = [tid for tid in flow.flows if not lg.has_transition(tid)]
    if unknown:
        raise ValueError(f"flow references unknown transition ids {sorted(unknown)[:5]}")
    report = ValidationReport()
    bad = report.violations

    sums = [ZERO] * lg.n_stages
    for tid, p in flow.flows.items():
        if p < 0:
            bad.append(f"transition {tid}: negative flow {p}")
        sums[lg.stage_of(tid) - 1] += p
    report.stage_sums = sums
    if lg.n_stages and sums[0] != 1:
        bad.append(f"source flow != 1 (got {sums[0]})")
    for i, total in enumerate(sums[1:], 2):
        if total != 1:
            bad.append(f"stage {i}: flow sums to {total}, expected 1")

    ins = layer_inflows(lg, flow)
    outs = layer_outflows(lg, flow)
    for i in range(1, len(lg.layers) - 1):
        for v in set(ins[i]) | set(outs[i]):
            pin, pout = ins[i].get(v, ZERO), outs[i].get(v, ZERO)
            if pin != pout:
                bad.append(f"layer {i}: flow not conserved at {v} (in {pin}, out {pout})")

    if lg.attachments or flow.entries:
        _check_attachment_flow(lg, flow, ins[-1], report)
    return report


def _check_attachment_flow(lg, flow, final_in, report):
    bad = report.violations
    for point in flow.entries:
        if point not in lg.attachments:
            raise ValueError(f"flow references unknown attachment point {point}")
    per_vertex = defaultdict(lambda: ZERO)
    for point, p in flow.entries.items():
        if p < 0:
            bad.append(f"attachment {point.vertex}: negative entry flow {p}")
        per_vertex[point.vertex] += p
    for v in set(final_in) | set(per_vertex):
        if final_in.get(v, ZERO) != per_vertex[v]:
            bad.append(f"attachment flow at {v} is {per_vertex[v]}, in-flow is {final_in.get(v, ZERO)}")
    for point, p in flow.entries.items():
        if not p:
            continue
        sub = flow.subflows.get(point)
        if sub is None:
            bad.append(f"attachment {point.vertex}: positive entry flow but no subroutine flow")
            continue
        report.extend(check_flow(lg.attachments[point], sub), f"attachment {point.vertex}@{point.anchor}")


def average_length(stage: Iterable[Transition], flow: FlowAssignment) -> Fraction:
    total = ZERO
    weighted = ZERO
    for t in stage:
        p = flow.of(t)
        total += p
        weighted += p * t.length
    if total != 1:
        raise ValueError(f"stage flow sums to {total}, expected 1")
    return weighted


def append_subroutine(lg: LearningGraph, subs: Mapping) -> LearningGraph:
    """Attach learning graphs at final-layer vertices.

    ``subs`` maps an :class:`LVertex` or :class:`AttachmentPoint` to the graph
    appended there.  The appended graph must be labelled with indices not yet
    queried at that vertex.
    """
    final = lg.layer_set(len(lg.layers) - 1)
    parent_indices = set(lg.universe.indices())
    attached = dict(lg.attachments)
    for where, sub in subs.items():
        point = where if isinstance(where, AttachmentPoint) else AttachmentPoint(where)
        if point.vertex not in final:
            raise ValueError(f"{point.vertex} is not in the final layer")
        idx = set(sub.universe.indices())
        if idx & point.vertex.queried:
            raise ValueError(f"appended universe overlaps the queried set of {point.vertex}")
        if not idx <= parent_indices:
            raise ValueError("appended universe is not a subset of the parent universe")
        attached[point] = sub
    return LearningGraph(lg.universe, lg.layers, lg.stages, attached, lg.stage_labels)


def attach_flows(lg: LearningGraph, flow: FlowAssignment, subflows: Mapping,
                 entries: Mapping | None = None) -> FlowAssignment:
    """Flow for a graph with attachments.

    Without explicit ``entries``, every un-anchored attachment point receives
    the in-flow of its vertex.  The appended flows are stored unscaled and
    scaled on read (:meth:`FlowAssignment.appended`).
    """
    subflows = {(k if isinstance(k, AttachmentPoint) else AttachmentPoint(k)): v
                for k, v in subflows.items()}
    if entries is None:
        final_in = layer_inflows(lg, flow)[-1]
        entries = {p: final_in.get(p.vertex, ZERO) for p in lg.attachments if p.anchor is None}
    else:
        entries = {(k if isinstance(k, AttachmentPoint) else AttachmentPoint(k)): v
                   for k, v in entries.items()}
    return FlowAssignment(dict(flow.flows), flow.instance, entries, subflows, flow.conditioning)
