"""Explicit learning graphs: construction, flow and symmetry checks,
stage complexities and exponent optimisation."""

from .analysis import (ComplexityReport, ConditionedFlow, ScalingTable, StageReport, condition_flow,
                       scaling_report, stage_complexity, subroutine_stage_complexity,
                       subroutine_stage_value, total_complexity)
from .builders import (build_kclique, build_kdistinctness, build_subgraph, default_r, distinctness_flow,
                       distinctness_graph)
from .core import (SOURCE, AttachmentPoint, CapExceeded, FlowAssignment, IndexUniverse, LearningGraph,
                   LVertex, Transition, UniverseKind, ValidationReport, append_subroutine, attach_flows,
                   average_length, check_flow, transition_length, validate_structure)
from .instances import (Graph, ProblemInstance, SubgraphPattern, clique, cycle, decompose_H,
                        find_certificate, path, star)
from .optimize import (BalanceSolution, MonomialTerm, balance, containment_exponent, g_of_H,
                       monotone_exponent, stage_exponent_terms, table6)
from .symmetry import (SUBROUTINE, Layer, SymmetryGroup, act, estimate_speciality, is_symmetric_stage,
                       max_speciality, orbit, speciality, speciality_report)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
