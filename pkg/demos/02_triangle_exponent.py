"""Where the n^(35/27) triangle exponent comes from.

A triangle has k = 3 vertices, minimum degree l = 2 and m = 1 further edge.
The gain g(H) and the balanced stage costs both land on 35/27.

    python demos/02_triangle_exponent.py
"""

from learngraph import clique, containment_exponent, g_of_H, path, stage_exponent_terms
from learngraph.optimize import family_balance, monotone_exponent, table6

tri = clique(3)
print(f"triangle: k={tri.k} l={tri.l} m={tri.m}  g = {g_of_H(tri)}  exponent 2 - 2/k - g = "
      f"{containment_exponent(tri)}")

print("\nstage costs as powers of n (r = n^alpha, s = n^-beta):")
for term in stage_exponent_terms("subgraph", tri.k, tri.l, tri.m):
    print(f"  {term.label:>8}: {term}")

sol = family_balance("subgraph", 3, tri)
print(f"\nbalanced at alpha = {sol.alpha}, beta = {sol.beta}: max exponent {sol.value}")
print("tight terms:", ", ".join(sol.tight))

# a property whose certificates are triangles or 2-paths takes the better of the two
print(f"\nmonotone property with certificates {{K3, P3}}: exponent {monotone_exponent([tri, path(3)])}")

print("\nfamily table up to 5:")
for row in table6(5):
    print(f"  {row.family:>6} {row.param}: g = {str(row.g):>7}  exponent = {row.exponent}")

# the clique family with a plain distinctness subroutine; k = 3 dips below 2 - 2/k
for k in (3, 4, 5):
    s = family_balance("clique", k)
    print(f"clique k={k}: minimax {s.value} at alpha = {s.alpha}")
