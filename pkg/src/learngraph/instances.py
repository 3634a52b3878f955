"""Problem instances, subgraph patterns and 1-certificate search."""

from __future__ import annotations

import itertools
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence


def _edge(u: int, v: int) -> tuple:
    if u == v:
        raise ValueError(f"self-loop {u}-{v} is not an edge")
    return (u, v) if u < v else (v, u)


def parse_edge_list(text: str) -> list:
    """Parse ``u v`` pairs, one per line; ``#`` starts a comment."""
    edges = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 2:
            raise ValueError(f"line {lineno}: expected 'u v', got {line!r}")
        edges.append(_edge(int(parts[0]), int(parts[1])))
    return edges


def parse_values(text: str) -> list:
    """Integers separated by commas and/or whitespace; ``#`` starts a comment."""
    body = " ".join(line.split("#", 1)[0] for line in text.splitlines())
    return [int(x) for x in re.split(r"[,\s]+", body) if x]


@dataclass(frozen=True)
class SubgraphPattern:
    """A pattern graph ``H`` on vertices ``0 .. k-1`` and its decomposition.

    ``apex`` is the smallest-index vertex of minimum degree (the vertex the
    subroutine searches for last); ``order`` lists the remaining vertices
    ascending; ``residual`` holds the edges not touching the apex, sorted.
    """

    k: int
    edges: tuple

    def __post_init__(self):
        edges = tuple(sorted({_edge(u, v) for u, v in self.edges}))
        if any(v >= self.k or u < 0 for u, v in edges):
            raise ValueError(f"edge endpoint outside 0..{self.k - 1}")
        object.__setattr__(self, "edges", edges)

    @cached_property
    def degrees(self) -> tuple:
        deg = [0] * self.k
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return tuple(deg)

    @property
    def l(self) -> int:
        return min(self.degrees)

    @property
    def m(self) -> int:
        return len(self.edges) - self.l

    @cached_property
    def apex(self) -> int:
        return self.degrees.index(self.l)

    @cached_property
    def order(self) -> tuple:
        return tuple(v for v in range(self.k) if v != self.apex)

    @cached_property
    def residual(self) -> tuple:
        return tuple(e for e in self.edges if self.apex not in e)

    @cached_property
    def apex_neighbours(self) -> tuple:
        return tuple(sorted(u if v == self.apex else v for u, v in self.edges if self.apex in (u, v)))

    @cached_property
    def adjacency(self) -> tuple:
        adj = [set() for _ in range(self.k)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(a) for a in adj)


def decompose_H(edges: Iterable, k: int | None = None) -> SubgraphPattern:
    edges = [_edge(u, v) for u, v in edges]
    if k is None:
        k = 1 + max((v for _, v in edges), default=-1)
    if k < 3:
        raise ValueError(f"pattern needs k >= 3 vertices, got {k}")
    return SubgraphPattern(k, tuple(edges))


def clique(k: int) -> SubgraphPattern:
    return decompose_H(itertools.combinations(range(k), 2), k)


def path(k: int) -> SubgraphPattern:
    return decompose_H([(i, i + 1) for i in range(k - 1)], k)


def cycle(k: int) -> SubgraphPattern:
    return decompose_H([(i, (i + 1) % k) for i in range(k)], k)


def star(leaves: int) -> SubgraphPattern:
    """Star ``S_leaves``: centre 0 joined to ``leaves`` leaves."""
    return decompose_H([(0, i) for i in range(1, leaves + 1)], leaves + 1)


@dataclass(frozen=True)
class Graph:
    n: int
    edges: frozenset

    def __post_init__(self):
        edges = frozenset(_edge(u, v) for u, v in self.edges)
        if any(v >= self.n for _, v in edges):
            raise ValueError("edge endpoint outside the vertex range")
        object.__setattr__(self, "edges", edges)

    @cached_property
    def adjacency(self) -> tuple:
        adj = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return tuple(frozenset(a) for a in adj)


def find_embedding(graph: Graph, pattern: SubgraphPattern) -> tuple | None:
    """Lexicographically first injective map of pattern vertices into ``graph``
    that carries every pattern edge onto a graph edge (backtracking with degree
    pruning)."""
    adj = graph.adjacency
    hadj = pattern.adjacency
    need = pattern.degrees
    phi = [-1] * pattern.k
    used = set()

    def extend(i: int) -> bool:
        if i == pattern.k:
            return True
        for v in range(graph.n):
            if v in used or len(adj[v]) < need[i]:
                continue
            if any(phi[j] not in adj[v] for j in hadj[i] if j < i):
                continue
            phi[i] = v
            used.add(v)
            if extend(i + 1):
                return True
            used.discard(v)
        phi[i] = -1
        return False

    return tuple(phi) if extend(0) else None


def distinctness_certificate(values: Sequence[int], k: int) -> tuple | None:
    """Lexicographically first ``k`` positions holding equal values."""
    counts = Counter(values)
    for i, x in enumerate(values):
        if counts[x] >= k:
            return tuple(j for j in range(i, len(values)) if values[j] == x)[:k]
        counts[x] -= 1
    return None


def find_certificate(instance, target):
    """Marked indices witnessing ``f(x) = 1``, or ``None`` when ``f(x) = 0``.

    ``instance`` is a value sequence (with integer ``target`` = k) or a
    :class:`Graph` (with a :class:`SubgraphPattern` target, whose embedded
    edge slots are returned sorted).
    """
    if isinstance(instance, ProblemInstance):
        instance = instance.graph if instance.kind == "graph" else instance.values
    if isinstance(instance, Graph):
        phi = find_embedding(instance, target)
        if phi is None:
            return None
        return tuple(sorted(_edge(phi[u], phi[v]) for u, v in target.edges))
    return distinctness_certificate(list(instance), target)


@dataclass(frozen=True)
class ProblemInstance:
    """A concrete input with its truth value and one chosen 1-certificate.

    For distinctness the certificate is the marked positions ``a_1 .. a_k``;
    for graphs it is the sorted edge slots of the embedded pattern, and
    ``embedding`` maps pattern vertex ``i`` to a graph vertex.
    """

    kind: str
    n: int
    truth: bool
    certificate: tuple | None
    values: tuple | None = None
    graph: Graph | None = None
    pattern: SubgraphPattern | None = None
    embedding: tuple | None = None
    k: int | None = field(default=None)

    @classmethod
    def distinctness(cls, values: Sequence[int], k: int) -> "ProblemInstance":
        values = tuple(int(x) for x in values)
        cert = distinctness_certificate(values, k)
        return cls("distinctness", len(values), cert is not None, cert, values=values, k=k)

    @classmethod
    def from_graph(cls, n: int, edges: Iterable, pattern: SubgraphPattern) -> "ProblemInstance":
        g = Graph(n, frozenset(edges))
        phi = find_embedding(g, pattern)
        cert = None if phi is None else tuple(sorted(_edge(phi[u], phi[v]) for u, v in pattern.edges))
        return cls("graph", n, phi is not None, cert, graph=g, pattern=pattern, embedding=phi, k=pattern.k)

    def marked_vertices(self, pattern: SubgraphPattern | None = None) -> tuple:
        """Graph vertices ``a_1 .. a_k``: non-apex pattern vertices in order, apex last."""
        pattern = pattern or self.pattern
        if self.embedding is None:
            raise ValueError("instance has no embedding")
        return tuple(self.embedding[v] for v in pattern.order) + (self.embedding[pattern.apex],)
