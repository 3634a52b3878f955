"""Permutation actions on indices, L-vertices, transitions and attachment points.

Two actions are supported: the symmetric group on positions, and graph-vertex
permutations acting on edge slots by ``{u, v} -> {g(u), g(v)}``.  Orbits are
found by breadth-first search over adjacent transpositions, so the group is
never materialised.  Specialities are exact :class:`~fractions.Fraction`
ratios ``|orbit| / #valid``, where a member is valid when it carries positive
flow (in-flow for vertices and attachment points).
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .core import (AttachmentPoint, CapExceeded, IndexUniverse, LearningGraph, LVertex,
                   Transition, UniverseKind, layer_inflows)

DEFAULT_GROUP_CAP = math.factorial(10)
DEFAULT_SAMPLES = 10**5


@dataclass(frozen=True)
class Layer:
    """Selects the vertices of layer ``index`` (rather than a transition stage)."""
    index: int


SUBROUTINE = "subroutine"


class SymmetryGroup:
    """The full symmetric group acting on positions or on graph vertices.

    ``labels`` names the points for a positions group whose indices are not
    ``0 .. degree-1`` (for instance edge slots re-used as positions inside a
    subroutine).
    """

    def __init__(self, degree: int, kind: str = "positions", labels: Sequence | None = None,
                 mode: str = "exhaustive", samples: int | None = None, seed: int | None = None,
                 cap: int | None = DEFAULT_GROUP_CAP):
        if kind not in ("positions", "graph"):
            raise ValueError(f"unknown group kind {kind!r}")
        if mode not in ("exhaustive", "sampled"):
            raise ValueError(f"unknown enumeration mode {mode!r}")
        if labels is not None and (kind != "positions" or len(labels) != degree):
            raise ValueError("labels must name every point of a positions group")
        self.degree = degree
        self.kind = kind
        self.labels = tuple(labels) if labels is not None else None
        self.mode = mode
        self.samples = samples
        self.seed = seed
        self.cap = cap
        if mode == "sampled" and seed is None:
            raise ValueError("sampled mode requires a seed")
        if mode == "exhaustive" and cap is not None and self.order > cap:
            raise CapExceeded(f"group order {degree}! exceeds the exhaustive cap {cap}; "
                              "use sampled mode or raise the cap")
        self._pos = {lab: i for i, lab in enumerate(self.labels)} if self.labels else None

    @classmethod
    def for_universe(cls, universe: IndexUniverse, **kw) -> "SymmetryGroup":
        if universe.kind is UniverseKind.EDGE_SLOTS:
            return cls(universe.size, "graph", **kw)
        return cls(universe.size, "positions", labels=universe.labels, **kw)

    def sampled(self, samples: int = DEFAULT_SAMPLES, seed: int = 0) -> "SymmetryGroup":
        return SymmetryGroup(self.degree, self.kind, self.labels, "sampled", samples, seed, None)

    @property
    def order(self) -> int:
        return math.factorial(self.degree)

    @property
    def cache_key(self) -> tuple:
        return (self.degree, self.kind, self.labels)

    def identity(self) -> tuple:
        return tuple(range(self.degree))

    def generators(self) -> list:
        gens = []
        for i in range(self.degree - 1):
            g = list(range(self.degree))
            g[i], g[i + 1] = g[i + 1], g[i]
            gens.append(tuple(g))
        return gens

    def elements(self):
        """All permutations in lexicographic order (exhaustive mode only)."""
        self._require_exhaustive()
        return itertools.permutations(range(self.degree))

    def _require_exhaustive(self):
        if self.mode != "exhaustive":
            raise ValueError("operation requires exhaustive mode; use estimate_speciality")

    def mover(self, g) -> "_Mover":
        g = tuple(g)
        if len(g) != self.degree or sorted(g) != list(range(self.degree)):
            raise ValueError(f"permutation of degree {len(g)} does not match group degree {self.degree}")
        return _Mover(self, g)

    def act(self, g, target):
        return self.mover(g)(target)


class _Mover:
    """Applies one fixed permutation; caches the induced index map."""

    def __init__(self, group: SymmetryGroup, g: tuple):
        self.g = g
        self.group = group
        self._idx = {}

    def index(self, i):
        try:
            return self._idx[i]
        except KeyError:
            pass
        g, grp = self.g, self.group
        try:
            if grp.kind == "graph":
                a, b = g[i[0]], g[i[1]]
                out = (a, b) if a < b else (b, a)
            elif grp.labels is not None:
                out = grp.labels[g[grp._pos[i]]]
            else:
                out = g[i]
        except (IndexError, KeyError, TypeError):
            raise ValueError(f"index {i!r} is outside the degree-{grp.degree} action") from None
        self._idx[i] = out
        return out

    def point(self, v):
        if self.group.kind == "graph" or self.group.labels is None:
            return self.g[v]
        return self.index(v)

    def vertex(self, v: LVertex) -> LVertex:
        ann = v.annotation
        return LVertex(frozenset(self.index(i) for i in v.queried),
                       None if ann is None else frozenset(self.point(a) for a in ann))

    def __call__(self, target):
        if isinstance(target, Transition):
            return Transition(self.vertex(target.source), self.vertex(target.target))
        if isinstance(target, LVertex):
            return self.vertex(target)
        if isinstance(target, AttachmentPoint):
            anchor = None if target.anchor is None else self.point(target.anchor)
            return AttachmentPoint(self.vertex(target.vertex), anchor)
        return self.index(target)


def act(g, target, group: SymmetryGroup | None = None):
    """Image of an index, L-vertex, transition or attachment point under ``g``.

    Without ``group``, integer indices are treated as positions and pair
    indices as edge slots acted on through their endpoints.
    """
    if group is None:
        kind = "graph" if _looks_like_edges(target) else "positions"
        group = SymmetryGroup(len(g), kind, cap=None)
    return group.act(g, target)


def _looks_like_edges(target) -> bool:
    if isinstance(target, tuple):
        return True
    if isinstance(target, AttachmentPoint):
        target = target.vertex
    if isinstance(target, Transition):
        target = target.target if target.target.queried else target.source
    if isinstance(target, LVertex):
        if target.annotation is not None:
            return True
        return any(isinstance(i, tuple) for i in target.queried)
    return False


@dataclass(frozen=True)
class Orbit:
    representative: object
    members: frozenset
    valid_count: int | None = None

    @property
    def size(self) -> int:
        return len(self.members)


def _bfs_orbit(target, movers) -> set:
    seen = {target}
    queue = deque([target])
    while queue:
        x = queue.popleft()
        for mv in movers:
            y = mv(x)
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return seen


def _movers(group: SymmetryGroup) -> list:
    return [group.mover(g) for g in group.generators()]


def _canon(target):
    if isinstance(target, Transition):
        return Transition(target.source, target.target)
    return target


def orbit(target, group: SymmetryGroup) -> Orbit:
    group._require_exhaustive()
    rep = _canon(target)
    return Orbit(rep, frozenset(_bfs_orbit(rep, _movers(group))))


@dataclass(frozen=True)
class OrbitClass:
    """One equivalence class of a stage, with the stage items it contains."""
    representative: object
    size: int
    items: tuple
    closed: bool = True


def _stage_items(lg: LearningGraph, stage) -> dict:
    """key -> item id for the selected stage."""
    if stage == SUBROUTINE:
        return {p: p for p in lg.attachments}
    if isinstance(stage, Layer):
        return {v: v for v in lg.layers[stage.index]}
    return {Transition(t.source, t.target): t.id for t in lg.stage(stage)}


def orbit_partition(lg: LearningGraph, stage, group: SymmetryGroup) -> list:
    """Partition the items of ``stage`` into orbits (cached on the graph)."""
    group._require_exhaustive()
    key = ("orbits", stage, group.cache_key)
    if key in lg._cache:
        return lg._cache[key]
    items = _stage_items(lg, stage)
    movers = _movers(group)
    done = set()
    classes = []
    for k in items:
        if k in done:
            continue
        members = _bfs_orbit(k, movers)
        present = [items[m] for m in members if m in items]
        done.update(m for m in members if m in items)
        classes.append(OrbitClass(k, len(members), tuple(present), len(present) == len(members)))
    lg._cache[key] = classes
    return classes


def item_values(lg: LearningGraph, stage, flow) -> dict:
    """Positive flow per item id of ``stage``."""
    if stage == SUBROUTINE:
        return {p: v for p, v in flow.entries.items() if v > 0}
    if isinstance(stage, Layer):
        return {v: p for v, p in layer_inflows(lg, flow)[stage.index].items() if p > 0}
    return {tid: p for tid, p in flow.flows.items() if p > 0 and lg.stage_of(tid) == stage}


def _locate(lg: LearningGraph, target, layer: int | None):
    """Stage selector and item id for a single target."""
    if isinstance(target, AttachmentPoint):
        return SUBROUTINE, target
    if isinstance(target, LVertex):
        if layer is None:
            hits = [i for i, lay in enumerate(lg.layers) if target in lg.layer_set(i)]
            if len(hits) != 1:
                raise ValueError(f"vertex {target} needs an explicit layer (found in {hits})")
            layer = hits[0]
        return Layer(layer), target
    if isinstance(target, Transition):
        if target.id >= 0 and lg.has_transition(target.id):
            return lg.stage_of(target.id), target.id
        for i in range(1, lg.n_stages + 1):
            t = lg.stage_index(i).get((target.source, target.target))
            if t is not None:
                return i, t.id
        raise ValueError("transition is not in the learning graph")
    raise TypeError(f"cannot locate {type(target).__name__} in a learning graph")


def speciality(lg: LearningGraph, target, group: SymmetryGroup, flow, layer: int | None = None) -> Fraction:
    stage, _ = _locate(lg, target, layer)
    rep = _canon(target)
    for cls in orbit_partition(lg, stage, group):
        if rep in _class_keys(lg, stage, cls):
            return _class_speciality(cls, item_values(lg, stage, flow))
    raise ValueError("target not found in its stage")


def _class_keys(lg, stage, cls: OrbitClass):
    if stage == SUBROUTINE or isinstance(stage, Layer):
        return set(cls.items)
    return {Transition(lg.transition(t).source, lg.transition(t).target) for t in cls.items}


def _class_speciality(cls: OrbitClass, values: dict) -> Fraction:
    valid = sum(1 for it in cls.items if it in values)
    if not valid:
        raise ValueError("speciality undefined (empty valid set)")
    return Fraction(cls.size, valid)


@dataclass(frozen=True)
class OrbitReport:
    representative: object
    orbit_size: int
    valid_count: int
    speciality: Fraction | None
    mode: str = "exhaustive"

    def to_dict(self) -> dict:
        out = {"orbitSize": self.orbit_size, "validCount": self.valid_count,
               "speciality": None if self.speciality is None else
               {"num": self.speciality.numerator, "den": self.speciality.denominator},
               "mode": self.mode}
        return out


def speciality_report(lg: LearningGraph, stage, group: SymmetryGroup, flow) -> list:
    """Per-orbit sizes, valid counts and specialities for one instance."""
    values = item_values(lg, stage, flow)
    out = []
    for cls in orbit_partition(lg, stage, group):
        valid = sum(1 for it in cls.items if it in values)
        spec = Fraction(cls.size, valid) if valid else None
        out.append(OrbitReport(cls.representative, cls.size, valid, spec))
    return out


def max_speciality(lg: LearningGraph, stage, group: SymmetryGroup, flow) -> Fraction:
    specs = [r.speciality for r in speciality_report(lg, stage, group, flow) if r.speciality is not None]
    if not specs:
        raise ValueError("speciality undefined (empty valid set)")
    return max(specs)


@dataclass
class SymmetryReport:
    symmetric: bool
    offending: list = field(default_factory=list)
    instances: int = 0

    def __bool__(self):
        return self.symmetric


def is_symmetric_stage(lg: LearningGraph, stage, group: SymmetryGroup, flows: Sequence) -> SymmetryReport:
    """Equal flow on valid equivalent items, and an input-independent
    (orbit, flow, speciality) profile across all supplied instances."""
    classes = orbit_partition(lg, stage, group)
    owner = {}
    for ci, cls in enumerate(classes):
        for it in cls.items:
            owner[it] = ci
    report = SymmetryReport(True, instances=len(flows))
    reference = None
    for n, flow in enumerate(flows):
        values = item_values(lg, stage, flow)
        per_class = {}
        for it, p in values.items():
            per_class.setdefault(owner[it], []).append(p)
        profile = []
        for ci, ps in sorted(per_class.items()):
            if len(set(ps)) > 1:
                report.symmetric = False
                report.offending.append(
                    f"instance {n}: orbit of {classes[ci].representative} carries unequal flows "
                    f"{sorted(set(ps))}")
            profile.append((ci, max(ps), Fraction(classes[ci].size, len(ps))))
        profile = tuple(profile)
        if reference is None:
            reference = profile
        elif profile != reference:
            report.symmetric = False
            report.offending.append(f"instance {n}: flow/speciality profile differs from instance 0")
    return report


@dataclass(frozen=True)
class SpecialityEstimate:
    value: Fraction
    low: float
    high: float
    hits: int
    samples: int
    seed: int
    confidence: float

    def contains(self, x) -> bool:
        return self.low <= float(x) <= self.high

    @property
    def width(self) -> float:
        return self.high - self.low

    def to_dict(self) -> dict:
        return {"orbitSize": None, "validCount": self.hits,
                "speciality": {"num": self.value.numerator, "den": self.value.denominator},
                "interval": [self.low, self.high], "confidence": self.confidence,
                "mode": "sampled", "samples": self.samples, "seed": self.seed}


def estimate_speciality(lg: LearningGraph, target, group: SymmetryGroup, flow,
                        samples: int | None = None, seed: int | None = None,
                        layer: int | None = None, confidence: float = 0.99,
                        batch: int = 20000) -> SpecialityEstimate:
    """Monte-Carlo inverse probability that a random group element maps
    ``target`` to a valid item.  Deterministic for a fixed seed."""
    samples = samples or group.samples or DEFAULT_SAMPLES
    seed = group.seed if seed is None else seed
    if seed is None:
        raise ValueError("estimate_speciality needs a seed")
    stage, _ = _locate(lg, target, layer)
    values = item_values(lg, stage, flow)
    enc = _Encoder(group)
    rep = _canon(target)
    valid_keys = set()
    for it in values:
        obj = it if not isinstance(it, int) else lg.transition(it)
        valid_keys.add(enc.key_identity(_canon(obj)))

    rng = np.random.default_rng(seed)
    base = np.arange(group.degree)
    hits = 0
    left = samples
    while left > 0:
        b = min(batch, left)
        perms = rng.permuted(np.tile(base, (b, 1)), axis=1)
        keys = enc.keys(rep, perms)
        hits += sum(1 for k in keys if k in valid_keys)
        left -= b
    if hits == 0:
        raise ValueError("estimate diverged; increase samples")
    phat = hits / samples
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    half = z * math.sqrt(phat * (1 - phat) / samples)
    lo_p, hi_p = phat - half, min(1.0, phat + half)
    high = math.inf if lo_p <= 0 else 1 / lo_p
    return SpecialityEstimate(Fraction(samples, hits), 1 / hi_p, high, hits, samples, seed, confidence)


class _Encoder:
    """Vectorised images of a target under many permutations, as hashable keys."""

    def __init__(self, group: SymmetryGroup):
        self.group = group
        n = group.degree
        if group.kind == "graph":
            slot = np.full((n, n), -1, dtype=np.int64)
            for s, (u, v) in enumerate(itertools.combinations(range(n), 2)):
                slot[u, v] = slot[v, u] = s
            self.slot = slot
            bits = n * (n - 1) // 2
        else:
            bits = n
        self.dtype = np.int64 if bits <= 62 else object

    def _pos(self, i):
        grp = self.group
        return grp._pos[i] if grp.labels is not None else i

    def _index_bits(self, idx_set, perms):
        idx = sorted(idx_set, key=lambda x: x if isinstance(x, tuple) else (x,))
        if not idx:
            return np.zeros(len(perms), dtype=self.dtype)
        if self.group.kind == "graph":
            us = np.array([e[0] for e in idx])
            vs = np.array([e[1] for e in idx])
            bits = self.slot[perms[:, us], perms[:, vs]]
        else:
            bits = perms[:, [self._pos(i) for i in idx]]
        return self._mask(bits)

    def _vertex_bits(self, vs, perms):
        if vs is None:
            return np.full(len(perms), -1, dtype=self.dtype)
        vs = sorted(vs)
        if not vs:
            return np.zeros(len(perms), dtype=self.dtype)
        cols = [v if self.group.kind == "graph" else self._pos(v) for v in vs]
        return self._mask(perms[:, cols])

    def _mask(self, bits):
        if self.dtype is object:
            bits = bits.astype(object)
            return np.sum(np.left_shift(1, bits), axis=1)
        return np.sum(np.left_shift(np.int64(1), bits.astype(np.int64)), axis=1)

    def _columns(self, target, perms):
        if isinstance(target, Transition):
            return (self._index_bits(target.source.queried, perms),
                    self._vertex_bits(target.source.annotation, perms),
                    self._index_bits(target.target.queried, perms),
                    self._vertex_bits(target.target.annotation, perms))
        if isinstance(target, LVertex):
            return (self._index_bits(target.queried, perms),
                    self._vertex_bits(target.annotation, perms))
        if isinstance(target, AttachmentPoint):
            if target.anchor is None:
                anchor = np.full(len(perms), -1)
            else:
                col = target.anchor if self.group.kind == "graph" else self._pos(target.anchor)
                anchor = perms[:, col]
            return (self._index_bits(target.vertex.queried, perms),
                    self._vertex_bits(target.vertex.annotation, perms), anchor)
        raise TypeError(f"cannot encode {type(target).__name__}")

    def keys(self, target, perms) -> list:
        cols = [c.tolist() for c in self._columns(target, perms)]
        return list(zip(*cols))

    def key_identity(self, target) -> tuple:
        ident = np.arange(self.group.degree)[None, :]
        return self.keys(target, ident)[0]
