"""Explicit learning graphs for k-distinctness, k-clique and H containment.

Graph structure depends only on the sizes, so each structure is built once
and cached; flows are computed per instance from its marked elements.  Every
builder returns ``(LearningGraph, FlowAssignment)``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from fractions import Fraction
from functools import lru_cache

from .analysis import condition_flow
from .core import (DEFAULT_NODE_CAP, SOURCE, AttachmentPoint, CapExceeded, FlowAssignment,
                   IndexUniverse, LearningGraph, LVertex, UniverseKind)
from .instances import ProblemInstance, SubgraphPattern, clique, find_embedding


def _edge(u, v):
    return (u, v) if u < v else (v, u)


def complete_edges(vertices) -> frozenset:
    return frozenset(itertools.combinations(sorted(vertices), 2))


def star_edges(centre: int, others) -> tuple:
    return tuple(_edge(centre, w) for w in sorted(others))


def _subsets(items):
    for size in range(len(items) + 1):
        for combo in itertools.combinations(items, size):
            yield frozenset(combo)


def default_r(n: int, k: int, family: str = "kdist") -> int:
    """Desk-scale stand-in for the asymptotic parameter choice."""
    if family == "kdist":
        return min(n, max(k, math.ceil(n ** (k / (k + 1)) - 1e-9)))
    return min(n - 1, max(k, math.ceil(n ** (1 - 1 / k) - 1e-9)))


def subroutine_r(r: int, marked: int) -> int:
    """Inner parameter for a distinctness subroutine over ``r`` inputs with ``marked`` marks."""
    return min(r, max(marked, math.ceil(r ** (marked / (marked + 1)) - 1e-9)))


# -- k-distinctness --------------------------------------------------------

@lru_cache(maxsize=None)
def distinctness_graph(universe: IndexUniverse, k: int, r: int) -> LearningGraph:
    """Stage 1 queries ``r - k`` indices; stages 2..k+1 query one index each."""
    indices = universe.indices()
    first = [(SOURCE, LVertex(frozenset(c))) for c in itertools.combinations(indices, r - k)]
    stages = [first]
    layer = [dst for _, dst in first]
    for _ in range(k):
        pairs = []
        seen = {}
        for v in layer:
            for x in indices:
                if x not in v.queried:
                    u = LVertex(v.queried | {x})
                    pairs.append((v, u))
                    seen.setdefault(u, None)
        stages.append(pairs)
        layer = list(seen)
    labels = [str(j) for j in range(1, k + 2)]
    return LearningGraph.from_stages(universe, stages, labels)


def distinctness_flow(lg: LearningGraph, marked, instance=None) -> FlowAssignment:
    """Uniform flow over the valid paths for marked indices ``a_1 .. a_k`` (in order)."""
    marked = tuple(marked)
    k = len(marked)
    if lg.n_stages != k + 1:
        raise ValueError(f"graph has {lg.n_stages} stages, expected {k + 1} for {k} marks")
    width = len(lg.stage(1)[0].target.queried)
    others = [i for i in lg.universe.indices() if i not in set(marked)]
    if len(others) < width:
        raise ValueError("fewer unmarked indices than the first stage queries")
    p = Fraction(1, math.comb(len(others), width))
    flows = {}
    for combo in itertools.combinations(others, width):
        v = LVertex(frozenset(combo))
        flows[lg.tid(1, SOURCE, v)] = p
        for j, a in enumerate(marked, 2):
            u = LVertex(v.queried | {a})
            flows[lg.tid(j, v, u)] = p
            v = u
    return FlowAssignment(flows, instance)


def distinctness_vertex_estimate(n: int, k: int, r: int) -> int:
    return sum(math.comb(n, r - k + j) for j in range(k + 1)) + 1


def build_kdistinctness(n: int, k: int, r: int, instance: ProblemInstance):
    if r < k:
        raise ValueError(f"r={r} < k={k}")
    if r > n:
        raise ValueError(f"fewer than r-k={r - k} non-marked positions among n={n}")
    if instance is not None:
        if instance.kind != "distinctness" or instance.n != n:
            raise ValueError("instance is not a distinctness input of matching size")
        if not instance.truth or instance.certificate is None or len(instance.certificate) != k:
            raise ValueError("instance is not positive for k-distinctness")
    lg = distinctness_graph(IndexUniverse(n), k, r)
    return lg, distinctness_flow(lg, instance.certificate, instance)


# -- k-clique ----------------------------------------------------------------

class ConditioningWarning(UserWarning):
    """The selection step keeps too little flow for its complexity bound to apply."""


def _check_cap(count: int, cap: int | None):
    if cap is not None and count > cap:
        raise CapExceeded(f"construction needs about {count} L-vertices, above the node cap {cap}")


@lru_cache(maxsize=None)
def clique_graph(n: int, k: int, r: int, sub_r: int) -> LearningGraph:
    """Stage 1 queries a complete subgraph on ``r-k+1`` vertices; stages 2..k
    add one vertex with all its edges to the subgraph; a distinctness
    subroutine over the ``r`` edges from an anchor vertex follows."""
    universe = IndexUniverse(n, UniverseKind.EDGE_SLOTS)
    stages = []
    layer = []
    pairs = []
    for w in itertools.combinations(range(n), r - k + 1):
        v = LVertex(complete_edges(w), frozenset(w))
        pairs.append((SOURCE, v))
        layer.append(v)
    stages.append(pairs)
    for _ in range(2, k + 1):
        pairs, seen = [], {}
        for v in layer:
            for x in range(n):
                if x in v.annotation:
                    continue
                w = v.annotation | {x}
                u = LVertex(v.queried | set(star_edges(x, v.annotation)), w)
                pairs.append((v, u))
                seen.setdefault(u, None)
        stages.append(pairs)
        layer = list(seen)
    labels = [str(j) for j in range(1, k + 2)]
    lg = LearningGraph.from_stages(universe, stages, labels)
    subs = {}
    for v in lg.final_layer:
        for c in range(n):
            if c not in v.annotation:
                sub_u = IndexUniverse(len(v.annotation), UniverseKind.POSITIONS,
                                      star_edges(c, v.annotation))
                subs[AttachmentPoint(v, c)] = distinctness_graph(sub_u, k - 1, sub_r)
    return LearningGraph(lg.universe, lg.layers, lg.stages, subs, lg.stage_labels)


def build_kclique(n: int, k: int, r: int, instance: ProblemInstance, sub_r: int | None = None,
                  cap: int | None = DEFAULT_NODE_CAP):
    if not k <= r < n:
        raise ValueError(f"need k <= r < n, got k={k}, r={r}, n={n}")
    pattern = clique(k)
    phi = _embedding(instance, pattern, n)
    if phi is None:
        raise ValueError(f"instance has no {k}-clique")
    sub_r = subroutine_r(r, k - 1) if sub_r is None else sub_r
    if not k - 1 <= sub_r <= r:
        raise ValueError(f"subroutine parameter {sub_r} outside [{k - 1}, {r}]")
    _check_cap(sum(math.comb(n, r - k + j) for j in range(1, k + 1)) * (1 + n), cap)
    lg = clique_graph(n, k, r, sub_r)

    a = tuple(phi[v] for v in pattern.order) + (phi[pattern.apex],)
    others = [v for v in range(n) if v not in a]
    p = Fraction(1, math.comb(n - k, r - k + 1))
    flows, entries, subflows = {}, {}, {}
    for w in itertools.combinations(others, r - k + 1):
        v = LVertex(complete_edges(w), frozenset(w))
        flows[lg.tid(1, SOURCE, v)] = p
        for j in range(2, k + 1):
            x = a[j - 2]
            u = LVertex(v.queried | set(star_edges(x, v.annotation)), v.annotation | {x})
            flows[lg.tid(j, v, u)] = p
            v = u
        point = AttachmentPoint(v, a[-1])
        entries[point] = p
        marks = [_edge(a[i], a[-1]) for i in range(k - 1)]
        subflows[point] = distinctness_flow(lg.attachments[point], marks)
    return lg, FlowAssignment(flows, instance, entries, subflows)


def _embedding(instance: ProblemInstance, pattern: SubgraphPattern, n: int):
    if instance.kind != "graph" or instance.n != n:
        raise ValueError("instance is not a graph on n vertices")
    if instance.pattern == pattern and instance.embedding is not None:
        return instance.embedding
    return find_embedding(instance.graph, pattern)


# -- H containment -----------------------------------------------------------

def subgraph_vertex_estimate(n: int, k: int, r: int, m: int) -> int:
    per = [math.comb(n, r - k + j) * 2 ** math.comb(r - k + j, 2) for j in range(1, k + 1)]
    final = per[-1]
    return 1 + sum(per) + m * final + final * (n - r) * 4


@lru_cache(maxsize=None)
def subgraph_graph(n: int, k: int, r: int, m: int, l: int, sub_r: int) -> LearningGraph:
    """Random-subgraph construction: every edge subset is an explicit branch.

    Stages 1..k grow the vertex set to ``r`` vertices, querying any subset of
    the available edges; ``m`` single-edge substages follow; each final vertex
    gets a distinctness subroutine (``l`` marks) per anchor vertex outside it.
    """
    universe = IndexUniverse(n, UniverseKind.EDGE_SLOTS)
    stages = []
    pairs = []
    for w in itertools.combinations(range(n), r - k + 1):
        ws = frozenset(w)
        for e in _subsets(sorted(complete_edges(w))):
            pairs.append((SOURCE, LVertex(e, ws)))
    stages.append(pairs)
    layer = list(dict.fromkeys(dst for _, dst in pairs))
    for _ in range(2, k + 1):
        pairs, seen = [], {}
        for v in layer:
            for x in range(n):
                if x in v.annotation:
                    continue
                w = v.annotation | {x}
                for f in _subsets(star_edges(x, v.annotation)):
                    u = LVertex(v.queried | f, w)
                    pairs.append((v, u))
                    seen.setdefault(u, None)
        stages.append(pairs)
        layer = list(seen)
    for _ in range(m):
        pairs, seen = [], {}
        for v in layer:
            for e in sorted(complete_edges(v.annotation) - v.queried):
                u = LVertex(v.queried | {e}, v.annotation)
                pairs.append((v, u))
                seen.setdefault(u, None)
        stages.append(pairs)
        layer = list(seen)
    labels = [str(j) for j in range(1, k + 1)]
    labels += [f"{k + 2}.{i}" for i in range(1, m + 1)] + [str(k + 3)]
    lg = LearningGraph.from_stages(universe, stages, labels)
    subs = {}
    for v in lg.final_layer:
        for c in range(n):
            if c not in v.annotation:
                sub_u = IndexUniverse(len(v.annotation), UniverseKind.POSITIONS,
                                      star_edges(c, v.annotation))
                subs[AttachmentPoint(v, c)] = distinctness_graph(sub_u, l, sub_r)
    return LearningGraph(lg.universe, lg.layers, lg.stages, subs, lg.stage_labels)


def _bernoulli(s: Fraction, hit: int, total: int) -> Fraction:
    return s ** hit * (1 - s) ** (total - hit)


def selection_threshold(s: Fraction, r: int) -> Fraction:
    """Minimum edge count an L-vertex needs to survive the selection step."""
    return s * r * r / 4


def subgraph_walk_flows(lg: LearningGraph, n: int, pattern: SubgraphPattern, r: int, s, phi) -> dict:
    """Unconditioned flows of stages 1..k: every edge slot offered to the walk
    is queried independently with probability ``s``."""
    s = Fraction(s)
    k = pattern.k
    a = tuple(phi[v] for v in pattern.order)
    marked = set(a) | {phi[pattern.apex]}
    others = [v for v in range(n) if v not in marked]
    base = Fraction(1, math.comb(n - k, r - k + 1))
    flows = {}
    frontier = {}
    for w in itertools.combinations(others, r - k + 1):
        slots = sorted(complete_edges(w))
        for e in _subsets(slots):
            v = LVertex(e, frozenset(w))
            q = base * _bernoulli(s, len(e), len(slots))
            flows[lg.tid(1, SOURCE, v)] = q
            frontier[v] = q
    for j in range(2, k + 1):
        x = a[j - 2]
        nxt = {}
        for v, p in frontier.items():
            star = star_edges(x, v.annotation)
            for f in _subsets(star):
                u = LVertex(v.queried | f, v.annotation | {x})
                q = p * _bernoulli(s, len(f), len(star))
                flows[lg.tid(j, v, u)] = q
                nxt[u] = q
        frontier = nxt
    return flows


def build_subgraph(n: int, pattern: SubgraphPattern, r: int, s, instance: ProblemInstance,
                   sub_r: int | None = None, K=Fraction(2), cap: int | None = DEFAULT_NODE_CAP):
    """H-finding graph; the returned flow is already conditioned on the
    selection step, with ``flow.conditioning`` holding ``1/p``."""
    s = Fraction(s)
    k, l, m = pattern.k, pattern.l, pattern.m
    if k < 3:
        raise ValueError("pattern needs k >= 3")
    if not 0 < s < 1:
        raise ValueError(f"s must lie strictly between 0 and 1, got {s}")
    if not k <= r < n:
        raise ValueError(f"need k <= r < n, got k={k}, r={r}, n={n}")
    if l < 1:
        raise ValueError("pattern has an isolated vertex; no subroutine edges to search")
    phi = _embedding(instance, pattern, n)
    if phi is None:
        raise ValueError("instance does not contain the pattern")
    sub_r = subroutine_r(r, l) if sub_r is None else sub_r
    _check_cap(subgraph_vertex_estimate(n, k, r, m), cap)
    lg = subgraph_graph(n, k, r, m, l, sub_r)

    apex = phi[pattern.apex]
    flows = subgraph_walk_flows(lg, n, pattern, r, s, phi)

    mapped_m = [_edge(phi[u], phi[v]) for u, v in pattern.residual]
    forbidden = frozenset(mapped_m)
    threshold = selection_threshold(s, r)

    def selector(v: LVertex) -> bool:
        return not (v.queried & forbidden) and len(v.queried) >= threshold

    cond = condition_flow(lg, FlowAssignment(flows, instance), selector, K=K, layer=k)
    if cond.warning:
        warnings.warn(f"selection keeps p = {cond.kept} of the flow; 1/p = {cond.k_actual} >= K = {K}",
                      ConditioningWarning, stacklevel=2)
    flows = dict(cond.flow.flows)
    frontier = {v: p for v, p in _layer_in(lg, flows, k).items()}
    for i, e in enumerate(mapped_m, 1):
        nxt = {}
        for v, p in frontier.items():
            u = LVertex(v.queried | {e}, v.annotation)
            flows[lg.tid(k + i, v, u)] = p
            nxt[u] = p
        frontier = nxt

    entries, subflows = {}, {}
    marks = [_edge(phi[u], apex) for u in pattern.apex_neighbours]
    for v, p in frontier.items():
        point = AttachmentPoint(v, apex)
        entries[point] = p
        subflows[point] = distinctness_flow(lg.attachments[point], marks)
    return lg, FlowAssignment(flows, instance, entries, subflows, cond.k_actual)


def _layer_in(lg: LearningGraph, flows: dict, layer: int) -> dict:
    out = {}
    for tid, p in flows.items():
        if p and lg.stage_of(tid) == layer:
            t = lg.transition(tid)
            out[t.target] = out.get(t.target, 0) + p
    return out
