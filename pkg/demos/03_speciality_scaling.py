"""Exact specialities over growing n, with fitted log-log slopes.

For 2-distinctness with r = ceil(n^(2/3)) the three stages should scale
like n^0, n^1 and n^2/r.  Each point is an exhaustive orbit computation.

    python demos/03_speciality_scaling.py
"""

import math

from learngraph import scaling_report

table = scaling_report("kdist", [6, 8, 10, 12], k=2, r_rule=lambda n: math.ceil(n ** (2 / 3) - 1e-12))
print(table.text())
