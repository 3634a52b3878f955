"""Selection by edge count, and what it costs.

The general subgraph construction keeps only vertex sets whose loaded edge
count reaches s r^2 / 4 and that avoid the pattern's residual edges.  At
desk scale that keeps under half the flow, so the rescaling constant
1/p exceeds 2 and a ConditioningWarning is raised.

    python demos/04_conditioning.py
"""

import warnings
from fractions import Fraction

from learngraph import ProblemInstance, check_flow, path, total_complexity
from learngraph.builders import ConditioningWarning, build_subgraph

p3 = path(3)
instance = ProblemInstance.from_graph(6, p3.edges, p3)

with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always", ConditioningWarning)
    lg, flow = build_subgraph(6, p3, r=4, s=Fraction(1, 2), instance=instance)
for w in caught:
    print("warning:", w.message)

print(f"kept fraction p = {1 / flow.conditioning}, constant 1/p = {flow.conditioning}")
print("stage sums after rescaling:", [str(x) for x in check_flow(lg, flow).stage_sums])

cost = total_complexity(lg, flow)
for row in cost.rows():
    print(f"  {row.label:>4}: L = {float(row.length):.3f}  T = {row.speciality}  cost {row.complexity:.3f}")
