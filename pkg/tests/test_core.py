from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from learngraph.core import (SOURCE, AttachmentPoint, FlowAssignment, IndexUniverse, LearningGraph,
                             LVertex, Transition, UniverseKind, append_subroutine, attach_flows,
                             average_length, check_flow, transition_length, validate_structure)

F = Fraction


def V(*idx, ann=None):
    return LVertex(frozenset(idx), None if ann is None else frozenset(ann))


def chain_graph(n=3):
    """∅ -> {0} -> {0,1} and ∅ -> {1} -> {0,1}."""
    u = IndexUniverse(n)
    stages = [[(SOURCE, V(0)), (SOURCE, V(1))], [(V(0), V(0, 1)), (V(1), V(0, 1))]]
    return LearningGraph.from_stages(u, stages)


class TestUniverse:
    def test_edge_slots(self):
        u = IndexUniverse(4, UniverseKind.EDGE_SLOTS)
        assert u.index_count == 6
        assert (0, 3) in u and (3, 0) not in u and (1, 1) not in u
        assert u.indices()[0] == (0, 1)

    def test_positions_with_labels(self):
        u = IndexUniverse(2, labels=((0, 5), (1, 5)))
        assert (0, 5) in u and 0 not in u

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            IndexUniverse(0)
        with pytest.raises(ValueError):
            IndexUniverse(2, labels=(1, 1))


class TestTransitions:
    def test_length(self):
        t = Transition(V(0), V(0, 1, 2))
        assert t.length == 2 == transition_length(t)

    def test_ids_do_not_affect_equality(self):
        assert Transition(V(), V(1), 3) == Transition(V(), V(1), 9)

    def test_from_stages_assigns_sequential_ids(self):
        lg = chain_graph()
        assert [t.id for s in lg.stages for t in s] == [0, 1, 2, 3]
        assert lg.stage_of(2) == 2
        assert lg.tid(2, V(1), V(0, 1)) == 3


class TestValidateStructure:
    def test_valid_chain(self):
        rep = validate_structure(chain_graph())
        assert rep.ok and rep.violations == []

    def test_non_strict_inclusion(self):
        u = IndexUniverse(3)
        lg = LearningGraph.from_stages(u, [[(SOURCE, V(0))], [(V(0), V(1))]])
        rep = validate_structure(lg)
        assert any("strict superset" in v for v in rep.violations)

    def test_outside_universe(self):
        lg = LearningGraph.from_stages(IndexUniverse(2), [[(SOURCE, V(5))]])
        assert any("outside the universe" in v for v in validate_structure(lg).violations)

    def test_bad_source_layer(self):
        lg = chain_graph()
        broken = LearningGraph(lg.universe, ((V(0),),) + lg.layers[1:], lg.stages)
        assert not validate_structure(broken).ok

    def test_layer_consistency(self):
        lg = chain_graph()
        # transition from layer 0 straight into layer 2
        bad = Transition(SOURCE, V(0, 1), 99)
        broken = LearningGraph(lg.universe, lg.layers, (lg.stages[0], lg.stages[1] + (bad,)))
        assert any("does not join" in v for v in validate_structure(broken).violations)

    def test_unreachable_vertex(self):
        lg = chain_graph()
        layers = lg.layers[:2] + (lg.layers[2] + (V(2, 1, 0),),)
        broken = LearningGraph(lg.universe, layers, lg.stages)
        assert any("unreachable" in v for v in validate_structure(broken).violations)

    def test_annotation_must_cover_edges(self):
        u = IndexUniverse(4, UniverseKind.EDGE_SLOTS)
        lg = LearningGraph.from_stages(u, [[(SOURCE, V((0, 1), ann={0}))]])
        assert any("outside its annotation" in v for v in validate_structure(lg).violations)

    def test_degenerate_empty_step_is_flagged_not_violated(self):
        u = IndexUniverse(4, UniverseKind.EDGE_SLOTS)
        lg = LearningGraph.from_stages(u, [[(SOURCE, V(ann={0}))], [(V(ann={0}), V((0, 1), ann={0, 1}))]])
        rep = validate_structure(lg)
        assert rep.ok
        assert any("degenerate" in f for f in rep.flags)

    def test_annotation_growth_without_query_is_degenerate(self):
        u = IndexUniverse(4, UniverseKind.EDGE_SLOTS)
        a, b = V((0, 1), ann={0, 1}), V((0, 1), ann={0, 1, 2})
        lg = LearningGraph.from_stages(u, [[(SOURCE, a)], [(a, b)]])
        rep = validate_structure(lg)
        assert rep.ok and rep.flags

    def test_same_annotation_same_query_is_violation(self):
        u = IndexUniverse(4, UniverseKind.EDGE_SLOTS)
        a = V((0, 1), ann={0, 1})
        b = V((0, 1), ann={0, 1})
        lg = LearningGraph(u, ((SOURCE,), (a,), (b,)),
                           ((Transition(SOURCE, a, 0),), (Transition(a, b, 1),)))
        assert not validate_structure(lg).ok


class TestCheckFlow:
    def test_valid_flow(self):
        lg = chain_graph()
        f = FlowAssignment({0: F(1, 2), 1: F(1, 2), 2: F(1, 2), 3: F(1, 2)})
        rep = check_flow(lg, f)
        assert rep.ok and rep.stage_sums == [1, 1]

    def test_conservation_violation(self):
        lg = chain_graph()
        f = FlowAssignment({0: F(1, 2), 1: F(1, 2), 2: F(1), 3: F(0)})
        rep = check_flow(lg, f)
        assert any("not conserved" in v for v in rep.violations)

    def test_source_sum(self):
        lg = chain_graph()
        rep = check_flow(lg, FlowAssignment({0: F(1, 2), 2: F(1, 2)}))
        assert any("source flow" in v for v in rep.violations)

    def test_negative_flow(self):
        lg = chain_graph()
        f = FlowAssignment({0: F(3, 2), 1: F(-1, 2), 2: F(3, 2), 3: F(-1, 2)})
        assert any("negative" in v for v in check_flow(lg, f).violations)

    def test_unknown_id(self):
        with pytest.raises(ValueError):
            check_flow(chain_graph(), FlowAssignment({42: F(1)}))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 20), st.integers(1, 20))
    def test_split_flows_conserve(self, a, b):
        p = F(a, a + b)
        lg = chain_graph()
        f = FlowAssignment({0: p, 1: 1 - p, 2: p, 3: 1 - p})
        assert check_flow(lg, f).ok


class TestLengths:
    def test_average_length(self):
        lg = LearningGraph.from_stages(IndexUniverse(4), [[(SOURCE, V(0)), (SOURCE, V(1, 2, 3))]])
        f = FlowAssignment({0: F(1, 4), 1: F(3, 4)})
        assert average_length(lg.stage(1), f) == F(1, 4) + 3 * F(3, 4)

    def test_average_length_needs_unit_stage(self):
        lg = chain_graph()
        with pytest.raises(ValueError):
            average_length(lg.stage(1), FlowAssignment({0: F(1, 2)}))


class TestAttachments:
    def sub(self, labels):
        u = IndexUniverse(len(labels), labels=labels)
        return LearningGraph.from_stages(u, [[(SOURCE, LVertex(frozenset({labels[0]})))]])

    def test_append_and_scale(self):
        lg = chain_graph(4)
        sub = self.sub((2, 3))
        full = append_subroutine(lg, {V(0, 1): sub})
        base = FlowAssignment({0: F(1, 2), 1: F(1, 2), 2: F(1, 2), 3: F(1, 2)})
        f = attach_flows(full, base, {V(0, 1): FlowAssignment({0: F(1)})})
        point = AttachmentPoint(V(0, 1))
        assert f.entries[point] == 1
        assert f.appended(point, sub.stage(1)[0]) == 1
        assert check_flow(full, f).ok
        assert validate_structure(full).ok

    def test_rejects_non_final_vertex(self):
        with pytest.raises(ValueError):
            append_subroutine(chain_graph(4), {V(0): self.sub((2, 3))})

    def test_rejects_overlap(self):
        with pytest.raises(ValueError):
            append_subroutine(chain_graph(4), {V(0, 1): self.sub((1, 2))})

    def test_rejects_foreign_indices(self):
        with pytest.raises(ValueError):
            append_subroutine(chain_graph(4), {V(0, 1): self.sub((2, 9))})

    def test_entry_mismatch_reported(self):
        lg = append_subroutine(chain_graph(4), {V(0, 1): self.sub((2, 3))})
        base = FlowAssignment({0: F(1, 2), 1: F(1, 2), 2: F(1, 2), 3: F(1, 2)})
        f = attach_flows(lg, base, {V(0, 1): FlowAssignment({0: F(1)})}, entries={V(0, 1): F(1, 2)})
        assert any("attachment flow" in v for v in check_flow(lg, f).violations)
