"""Build a small 2-distinctness learning graph and look at it stage by stage.

Five positions, two of which hold the same value.  Stage 1 loads r - k = 2
positions, then the two equal positions are added one at a time.

    python demos/01_distinctness_walkthrough.py
"""

from fractions import Fraction

from learngraph import ProblemInstance, SymmetryGroup, build_kdistinctness, check_flow, total_complexity
from learngraph.emit import GraphBundle, emit

values = [0, 0, 1, 2, 3]
instance = ProblemInstance.distinctness(values, k=2)
print(f"input {values}: equal pair at positions {instance.certificate}")

lg, flow = build_kdistinctness(n=5, k=2, r=4, instance=instance)
for i, stage in enumerate(lg.stages, 1):
    valid = [t for t in stage if flow.of(t)]
    print(f"stage {i}: {len(stage):2d} transitions, {len(valid)} carry flow "
          f"({', '.join(sorted({str(flow.of(t)) for t in valid}))} each)")

# every stage moves one unit of flow, and nothing leaks at internal vertices
report = check_flow(lg, flow)
print("flow check:", "ok" if report.ok else report.violations, "| stage sums", [str(x) for x in report.stage_sums])

# speciality and complexity per stage; the whole symmetric group acts on positions
cost = total_complexity(lg, flow, SymmetryGroup(5))
for row in cost.rows():
    print(f"  {row.label}: L = {row.length}, T = {row.speciality}, L*sqrt(T) = {row.complexity:.4f}")
print(f"total {cost.total:.4f}")

# the same speciality, by brute force over all 120 permutations
stage2 = lg.stage(2)[0]
group = SymmetryGroup(5)
valid_pairs = {(t.source, t.target) for t in lg.stage(2) if flow.of(t)}
hits = sum((group.act(g, stage2.source), group.act(g, stage2.target)) in valid_pairs for g in group.elements())
print(f"stage 2 speciality by brute force: 120 / {hits} = {Fraction(120, hits)}")

dot = emit(GraphBundle(lg, flow), "dot").decode()
print(f"DOT output: {dot.count('->')} edges (pipe `learngraph build ... --emit dot` into graphviz to draw it)")
