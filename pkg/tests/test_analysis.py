import itertools
import math
import warnings
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from learngraph.analysis import (condition_flow, scaling_report, stage_complexity,
                                 subroutine_stage_complexity, subroutine_stage_value, total_complexity)
from learngraph.builders import ConditioningWarning, build_kclique, build_kdistinctness, build_subgraph
from learngraph.core import SOURCE, FlowAssignment, IndexUniverse, LearningGraph, LVertex, check_flow
from learngraph.instances import ProblemInstance, clique, path
from learngraph.symmetry import SymmetryGroup

F = Fraction


def isqrt_oracle(L: Fraction, T: Fraction, digits: int = 20) -> float:
    """L*sqrt(T) from an integer square root, independent of decimal/float sqrt."""
    x = L * L * T
    scale = 10 ** (2 * digits)
    return math.isqrt(x.numerator * scale // x.denominator) / 10 ** digits


def V(*idx):
    return LVertex(frozenset(idx))


@pytest.fixture(scope="module")
def dist5():
    return build_kdistinctness(5, 2, 4, ProblemInstance.distinctness([0, 0, 1, 2, 3], 2))


class TestStageComplexity:
    def test_examples(self):
        assert stage_complexity(1, 10) == pytest.approx(3.16227766017, rel=1e-12)
        assert stage_complexity(2, 1) == 2

    def test_rejects_speciality_below_one(self):
        with pytest.raises(ValueError):
            stage_complexity(1, F(1, 2))

    @settings(max_examples=200, deadline=None)
    @given(st.fractions(min_value=0, max_value=1000), st.fractions(min_value=1, max_value=10**6))
    def test_matches_integer_sqrt(self, L, T):
        expected = isqrt_oracle(L, T)
        assert stage_complexity(L, T) == pytest.approx(expected, rel=1e-12, abs=1e-15)

    @given(st.fractions(min_value=0, max_value=10**6))
    def test_exact_identities(self, L):
        assert stage_complexity(L, 1) == float(L)
        assert stage_complexity(0, L + 1) == 0


class TestSubroutineStage:
    def test_weighted_mean(self):
        assert subroutine_stage_value([F(1, 2), F(1, 2)], [2, 4], 9) == 9

    def test_identical_subroutines(self):
        assert subroutine_stage_value([F(1, 4)] * 4, [F(7, 2)] * 4, 1) == 3.5

    def test_empty(self):
        with pytest.raises(ValueError):
            subroutine_stage_value([], [], 1)
        lg, flow = build_kdistinctness(5, 2, 4, ProblemInstance.distinctness([0, 0, 1, 2, 3], 2))
        with pytest.raises(ValueError):
            subroutine_stage_complexity(lg, flow)

    def test_clique_against_closed_form(self):
        p = clique(3)
        lg, flow = build_kclique(6, 3, 4, ProblemInstance.from_graph(6, p.edges, p))
        value = subroutine_stage_complexity(lg, flow)
        n, k, r = 6, 3, 4
        closed = r ** ((k - 1) / k) * math.sqrt(n ** k / r ** (k - 1))
        assert closed / 8 <= value <= closed * 8


class TestTotalComplexity:
    def test_distinctness_example(self, dist5):
        lg, flow = dist5
        rep = total_complexity(lg, flow)
        expected = [2 * math.sqrt(10 / 3), math.sqrt(10), math.sqrt(20 / 3)]
        assert [s.complexity for s in rep.stages] == pytest.approx(expected, rel=1e-12)
        assert rep.total == pytest.approx(sum(expected), rel=1e-12)
        assert [s.length for s in rep.stages] == [2, 1, 1]
        assert all(s.symmetric for s in rep.stages)
        assert rep.subroutine is None

    def test_total_is_sum_of_rows(self, dist5):
        rep = total_complexity(*dist5)
        assert rep.total == pytest.approx(sum(r.complexity for r in rep.rows()), rel=1e-14)

    def test_single_stage(self):
        lg = LearningGraph.from_stages(IndexUniverse(1), [[(SOURCE, V(0))]])
        rep = total_complexity(lg, FlowAssignment({0: F(1)}))
        assert rep.total == 1

    def test_zero_length_stage_changes_nothing(self):
        u = IndexUniverse(3)
        base = LearningGraph.from_stages(u, [[(SOURCE, V(0)), (SOURCE, V(1)), (SOURCE, V(2))]])
        padded = LearningGraph.from_stages(u, [[(SOURCE, SOURCE)],
                                               [(SOURCE, V(0)), (SOURCE, V(1)), (SOURCE, V(2))]])
        f_base = FlowAssignment({0: F(1, 3), 1: F(1, 3), 2: F(1, 3)})
        f_pad = FlowAssignment({0: F(1), 1: F(1, 3), 2: F(1, 3), 3: F(1, 3)})
        a, b = total_complexity(base, f_base), total_complexity(padded, f_pad)
        assert b.stages[0].speciality == 1 and b.stages[0].complexity == 0
        assert a.total == b.total

    def test_clique_rows(self):
        p = clique(3)
        lg, flow = build_kclique(6, 3, 4, ProblemInstance.from_graph(6, p.edges, p))
        rep = total_complexity(lg, flow)
        assert len(rep.stages) == 3 and rep.subroutine is not None
        assert rep.subroutine.speciality == 10

    def test_symmetric_stages_identical_across_instances(self):
        seen = set()
        for values in itertools.product(range(3), repeat=5):
            inst = ProblemInstance.distinctness(values, 2)
            if not inst.truth:
                continue
            lg, flow = build_kdistinctness(5, 2, 4, inst)
            rep = total_complexity(lg, flow, SymmetryGroup(5))
            seen.add(tuple((s.length, s.speciality) for s in rep.stages))
        assert len(seen) == 1

    def test_asymmetric_stage_reports_per_instance(self, dist5):
        lg, flow = dist5
        other = build_kdistinctness(5, 2, 4, ProblemInstance.distinctness([1, 2, 3, 0, 0], 2))[1]
        two = {}
        for first in sorted(t for t, q in flow.flows.items() if q and lg.stage_of(t) == 1)[:2]:
            v = lg.transition(first).target
            two[first] = F(1, 2)
            for j, a in ((2, 0), (3, 1)):
                u = LVertex(v.queried | {a})
                two[lg.tid(j, v, u)] = F(1, 2)
                v = u
        rep = total_complexity(lg, [other, FlowAssignment(two)])
        assert not rep.stages[0].symmetric
        assert len(rep.stages[0].per_instance) == 2
        assert rep.stages[0].speciality == max(T for _, T in rep.stages[0].per_instance)


def two_sink_graph():
    u = IndexUniverse(2)
    lg = LearningGraph.from_stages(u, [[(SOURCE, V(0)), (SOURCE, V(1))], [(V(0), V(0, 1)), (V(1), V(0, 1))]])
    return lg, FlowAssignment({0: F(1, 2), 1: F(1, 2), 2: F(1, 2), 3: F(1, 2)})


class TestConditionFlow:
    def test_accept_all(self, dist5):
        lg, flow = dist5
        out = condition_flow(lg, flow, lambda v: True)
        assert out.flow.flows == {t: q for t, q in flow.flows.items() if q}
        assert out.k_actual == 1 and not out.warning

    def test_keep_one_of_two(self):
        lg, flow = two_sink_graph()
        out = condition_flow(lg, flow, lambda v: v == V(0), layer=1)
        assert out.flow.flows == {0: F(1), 2: F(1)}
        assert out.k_actual == 2
        assert out.warning  # 1/p reaches K = 2
        assert check_flow(lg, out.flow).ok

    def test_removes_everything(self):
        lg, flow = two_sink_graph()
        with pytest.raises(ValueError, match="removes all flow"):
            condition_flow(lg, flow, lambda v: False)

    def test_p3_selection(self):
        p = path(3)
        inst = ProblemInstance.from_graph(6, p.edges, p)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConditioningWarning)
            lg, flow = build_subgraph(6, p, 4, F(1, 2), inst)
        assert flow.conditioning == F(32, 13)
        assert check_flow(lg, flow).ok
        # a looser bound clears the warning
        with warnings.catch_warnings():
            warnings.simplefilter("error", ConditioningWarning)
            build_subgraph(6, p, 4, F(1, 2), inst, K=F(3))

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.integers(1, 9), min_size=6, max_size=6), st.sets(st.integers(0, 3), min_size=1))
    def test_preserves_unit_flow(self, weights, keep):
        # ∅ -> {i} -> {i, j} over 4 positions, arbitrary conserved weights
        u = IndexUniverse(4)
        firsts = [V(i) for i in range(3)]
        pairs = [(V(0), V(0, 3)), (V(1), V(1, 3)), (V(2), V(2, 3)),
                 (V(0), V(0, 1)), (V(1), V(1, 2)), (V(2), V(0, 2))]
        lg = LearningGraph.from_stages(u, [[(SOURCE, v) for v in firsts], pairs])
        total = sum(weights)
        w = [F(x, total) for x in weights]
        first = [w[0] + w[3], w[1] + w[4], w[2] + w[5]]
        flow = FlowAssignment({0: first[0], 1: first[1], 2: first[2],
                               **{3 + i: w[i] for i in range(6)}})
        assert check_flow(lg, flow).ok
        targets = sorted({t for _, t in pairs}, key=lambda v: sorted(v.queried))
        chosen = {targets[i % len(targets)] for i in keep}
        out = condition_flow(lg, flow, lambda v: v in chosen)
        rep = check_flow(lg, out.flow)
        assert rep.ok, rep.violations
        kept = sum(q for t, q in flow.flows.items() if lg.stage_of(t) == 2 and lg.transition(t).target in chosen)
        assert out.k_actual == 1 / kept


class TestScaling:
    def test_needs_three_sizes(self):
        with pytest.raises(ValueError):
            scaling_report("kdist", [6, 8], 2)

    def test_two_distinctness_exponents(self):
        rule = lambda n: math.ceil(n ** (2 / 3) - 1e-9)  # noqa: E731
        table = scaling_report("kdist", [6, 8, 10, 12], 2, r_rule=rule)
        assert abs(table.fitted["1"]) <= 0.2
        assert abs(table.fitted["2"] - 1) <= 0.25
        assert abs(table.fitted["3"] - table.predicted["3"]) <= 0.3
        assert table.params == [4, 4, 5, 6]
        assert table.specialities["2"][0] == 10
