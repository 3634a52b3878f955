"""Stage complexities, flow conditioning and scaling reports.

Lengths and specialities stay exact; square roots are taken once, at the
final evaluation, in 40-digit decimal arithmetic and returned as floats.
"""

from __future__ import annotations

import decimal
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .core import (ONE, ZERO, FlowAssignment, LearningGraph, LVertex, average_length,
                   layer_inflows, layer_outflows)
from .symmetry import (SUBROUTINE, SymmetryGroup, is_symmetric_stage, max_speciality)

_CTX = decimal.Context(prec=40)


def _dec(x) -> Decimal:
    x = Fraction(x)
    return _CTX.divide(Decimal(x.numerator), Decimal(x.denominator))


def _value(L: Fraction, T: Fraction) -> Decimal:
    if L == 0:
        return Decimal(0)
    if T == 1:
        return _dec(L)
    return _CTX.multiply(_dec(L), _CTX.sqrt(_dec(T)))


def stage_complexity(L, T) -> float:
    """``L * sqrt(T)`` for a symmetric stage."""
    L, T = Fraction(L), Fraction(T)
    if L < 0:
        raise ValueError(f"negative length {L}")
    if T < 1:
        raise ValueError(f"speciality {T} < 1")
    if T == 1:
        return float(L)
    return float(_value(L, T))


def subroutine_stage_value(inflows: Sequence, complexities: Sequence, T) -> float:
    """``(sum_v p_v * l(v)) * sqrt(T)`` from explicit per-vertex data."""
    if not inflows:
        raise ValueError("empty attachment")
    L = sum((_dec(p) * _dec(c) for p, c in zip(inflows, complexities)), Decimal(0))
    T = Fraction(T)
    if T < 1:
        raise ValueError(f"speciality {T} < 1")
    return float(_CTX.multiply(L, _CTX.sqrt(_dec(T))))


@dataclass(frozen=True)
class StageReport:
    label: str
    length: Fraction | float
    speciality: Fraction
    complexity: float
    symmetric: bool = True
    degenerate: bool = False
    per_instance: tuple = ()
    exact: Decimal = field(default=Decimal(0), repr=False, compare=False)


@dataclass(frozen=True)
class ComplexityReport:
    stages: tuple
    subroutine: StageReport | None
    total: float
    conditioning: Fraction | None = None

    def rows(self) -> list:
        return list(self.stages) + ([self.subroutine] if self.subroutine else [])


def _stage_report(lg: LearningGraph, i: int, flows: Sequence, group: SymmetryGroup) -> StageReport:
    stage = lg.stage(i)
    Ls = [average_length(stage, f) for f in flows]
    Ts = [max_speciality(lg, i, group, f) for f in flows]
    sym = is_symmetric_stage(lg, i, group, flows).symmetric
    L, T = max(Ls), max(Ts)
    degenerate = any(t.length == 0 for t in stage)
    per = () if sym else tuple(zip(Ls, Ts))
    exact = _value(L, T)
    return StageReport(lg.label(i), L, T, float(exact), sym, degenerate, per, exact)


def _subroutine_report(lg: LearningGraph, flows: Sequence, group: SymmetryGroup) -> StageReport:
    if not lg.attachments:
        raise ValueError("empty attachment")
    Ls, Ts = [], []
    memo = {}
    for f in flows:
        L = Decimal(0)
        for point, p in f.entries.items():
            if not p:
                continue
            sub = lg.attachments[point]
            subflow = f.subflows[point]
            key = (id(sub), frozenset(subflow.flows.items()))
            if key not in memo:
                sub_group = SymmetryGroup.for_universe(sub.universe, cap=None)
                memo[key] = _total_exact(total_complexity(sub, [subflow], sub_group))
            L += _dec(p) * memo[key]
        Ls.append(L)
        Ts.append(max_speciality(lg, SUBROUTINE, group, f))
    sym = is_symmetric_stage(lg, SUBROUTINE, group, flows).symmetric
    L, T = max(Ls), max(Ts)
    exact = _CTX.multiply(L, _CTX.sqrt(_dec(T)))
    per = () if sym else tuple(zip((float(x) for x in Ls), Ts))
    # the subroutine "length" is an average of complexities, so it is a float
    return StageReport(lg.subroutine_label, float(L), T,
                       float(exact), sym, False, per, exact)


def subroutine_stage_complexity(lg: LearningGraph, flows, group: SymmetryGroup | None = None) -> float:
    """Average appended complexity (each recomputed via :func:`total_complexity`)
    times the square root of the maximal attachment-point speciality."""
    flows = [flows] if isinstance(flows, FlowAssignment) else list(flows)
    group = group or SymmetryGroup.for_universe(lg.universe)
    return _subroutine_report(lg, flows, group).complexity


def _total_exact(report: ComplexityReport) -> Decimal:
    return sum((r.exact for r in report.rows()), Decimal(0))


def total_complexity(lg: LearningGraph, flows, group: SymmetryGroup | None = None) -> ComplexityReport:
    flows = [flows] if isinstance(flows, FlowAssignment) else list(flows)
    if not flows:
        raise ValueError("need the flow of at least one positive instance")
    group = group or SymmetryGroup.for_universe(lg.universe)
    stages = tuple(_stage_report(lg, i, flows, group) for i in range(1, lg.n_stages + 1))
    sub = _subroutine_report(lg, flows, group) if lg.attachments else None
    exact = sum((r.exact for r in stages), Decimal(0)) + (sub.exact if sub else 0)
    conds = [f.conditioning for f in flows if f.conditioning is not None]
    return ComplexityReport(stages, sub, float(exact), max(conds) if conds else None)


# -- flow conditioning -------------------------------------------------------

@dataclass(frozen=True)
class ConditionedFlow:
    flow: FlowAssignment
    k_actual: Fraction
    warning: bool
    kept: Fraction


def condition_flow(lg: LearningGraph, flow: FlowAssignment, selector: Callable[[LVertex], bool],
                   K=Fraction(2), layer: int | None = None) -> ConditionedFlow:
    """Remove all flow that ends at unselected vertices of ``layer`` and
    rescale the rest by ``1/p``, where ``p`` is the selected in-flow.

    Upstream flow on each transition is kept in proportion to the share of it
    that reaches selected vertices; flow downstream of ``layer`` is scaled
    with its source vertex.  ``warning`` is set when ``1/p >= K``.
    """
    layer = len(lg.layers) - 1 if layer is None else layer
    ins = layer_inflows(lg, flow)
    outs = layer_outflows(lg, flow)
    p = sum((q for v, q in ins[layer].items() if selector(v)), ZERO)
    if p == 0:
        raise ValueError("selector removes all flow")

    # share of each vertex's flow that ends at a selected vertex of `layer`
    keep = [dict() for _ in lg.layers]
    keep[layer] = {v: (ONE if selector(v) else ZERO) for v in ins[layer]}
    by_stage = {}
    for tid, q in flow.flows.items():
        if q:
            by_stage.setdefault(lg.stage_of(tid), []).append((lg.transition(tid), q))
    for i in range(layer, 0, -1):
        acc = {}
        for t, q in by_stage.get(i, ()):
            acc[t.source] = acc.get(t.source, ZERO) + q * keep[i].get(t.target, ZERO)
        keep[i - 1] = {v: acc.get(v, ZERO) / total for v, total in outs[i - 1].items() if total}

    new = {}
    for i in range(1, layer + 1):
        for t, q in by_stage.get(i, ()):
            x = q * keep[i].get(t.target, ZERO) / p
            if x:
                new[t.id] = x
    scale = {v: keep[layer][v] / p for v in keep[layer]}
    for i in range(layer + 1, len(lg.layers)):
        nxt_in, old_in = {}, {}
        for t, q in by_stage.get(i, ()):
            x = q * scale.get(t.source, ZERO)
            old_in[t.target] = old_in.get(t.target, ZERO) + q
            if x:
                new[t.id] = x
                nxt_in[t.target] = nxt_in.get(t.target, ZERO) + x
        scale = {v: nxt_in.get(v, ZERO) / q for v, q in old_in.items()}
    entries = {pt: e * scale.get(pt.vertex, ZERO) for pt, e in flow.entries.items()}
    entries = {pt: e for pt, e in entries.items() if e}
    subflows = {pt: f for pt, f in flow.subflows.items() if pt in entries}
    k_actual = 1 / p
    out = FlowAssignment(new, flow.instance, entries, subflows, k_actual)
    return ConditionedFlow(out, k_actual, k_actual >= K, p)


# -- scaling -----------------------------------------------------------------

def predicted_speciality(family: str, label: str, n: int, r: int, k: int,
                         s: Fraction | None = None, m: int = 0) -> float:
    """Tabulated speciality (up to a constant factor) for one stage."""
    if "." in label:
        i = int(label.split(".")[1])
        return n ** (k - 1) / (r ** (k - 3) * float(s) ** (i - 1))
    j = int(label)
    if j == 1:
        return 1.0
    if family == "kdist" or j <= k:
        return n ** (j - 1) / r ** (j - 2)
    if family == "clique":
        return n ** k / r ** (k - 1)
    return n ** k / (r ** (k - 1) * float(s) ** m)


@dataclass
class ScalingTable:
    family: str
    sizes: list
    params: list
    specialities: dict
    lengths: dict
    fitted: dict
    predicted: dict

    def text(self) -> str:
        labels = list(self.specialities)
        head = "stage".ljust(8) + "".join(f"n={n} (r={r})".rjust(16) for n, r in zip(self.sizes, self.params))
        head += "fitted".rjust(10) + "predicted".rjust(11)
        lines = [head]
        for lab in labels:
            cells = "".join(str(t).rjust(16) for t in self.specialities[lab])
            lines.append(lab.ljust(8) + cells + f"{self.fitted[lab]:10.3f}{self.predicted[lab]:11.3f}")
        return "\n".join(lines)


def _slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def scaling_report(family: str, sizes: Sequence[int], k: int = 2, r_rule: Callable | None = None,
                   pattern=None, s=Fraction(1, 2), cap: int | None = None) -> ScalingTable:
    """Exact per-stage specialities across sizes, with log-log fitted
    exponents next to the exponents of the tabulated formulas."""
    from . import builders  # noqa: local import avoids a module cycle
    from .instances import ProblemInstance, clique

    sizes = list(sizes)
    if len(sizes) < 3:
        raise ValueError("scaling fit needs at least 3 sizes")
    if family == "subgraph":
        if pattern is None:
            raise ValueError("subgraph scaling needs a pattern")
        k = pattern.k
    r_rule = r_rule or (lambda n: builders.default_r(n, k, family))
    specs, lens, params = {}, {}, []
    predicted_vals = {}
    for n in sizes:
        r = r_rule(n)
        params.append(r)
        if family == "kdist":
            inst = ProblemInstance.distinctness([0] * k + list(range(1, n - k + 1)), k)
            lg, flow = builders.build_kdistinctness(n, k, r, inst)
        elif family == "clique":
            pat = clique(k)
            inst = ProblemInstance.from_graph(n, pat.edges, pat)
            lg, flow = builders.build_kclique(n, k, r, inst)
        elif family == "subgraph":
            inst = ProblemInstance.from_graph(n, pattern.edges, pattern)
            lg, flow = builders.build_subgraph(n, pattern, r, s, inst)
        else:
            raise ValueError(f"unknown family {family!r}")
        group = SymmetryGroup.for_universe(lg.universe, cap=cap)
        rows = [(lg.label(i), average_length(lg.stage(i), flow), max_speciality(lg, i, group, flow))
                for i in range(1, lg.n_stages + 1)]
        if lg.attachments:
            rows.append((lg.subroutine_label, None, max_speciality(lg, SUBROUTINE, group, flow)))
        m = pattern.m if pattern is not None else 0
        for lab, L, T in rows:
            specs.setdefault(lab, []).append(T)
            lens.setdefault(lab, []).append(L)
            predicted_vals.setdefault(lab, []).append(predicted_speciality(family, lab, n, r, k, s, m))
    fitted = {lab: _slope(sizes, [float(t) for t in ts]) for lab, ts in specs.items()}
    predicted = {lab: _slope(sizes, vs) for lab, vs in predicted_vals.items()}
    return ScalingTable(family, sizes, params, specs, lens, fitted, predicted)
