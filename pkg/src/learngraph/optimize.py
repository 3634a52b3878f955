"""Closed-form exponents and an exact minimax balancer.

Exponents are measured in powers of ``n``: ``r = n^alpha`` and
``s = n^-beta``.  A :class:`MonomialTerm` ``(a, b, c)`` stands for
``n^a r^b s^c``, whose exponent is ``a + b*alpha - c*beta``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .instances import SubgraphPattern, clique, cycle, path, star

F = Fraction


def g_of_H(pattern: SubgraphPattern) -> Fraction:
    k, l, m = pattern.k, pattern.l, pattern.m
    if k < 3:
        raise ValueError(f"pattern needs k >= 3, got {k}")
    g = F(2 * k - l - 3, k * (l + 1) * (m + 2))
    assert g > 0, f"g(H) = {g} is not positive"
    return g


def containment_exponent(pattern: SubgraphPattern) -> Fraction:
    return 2 - F(2, pattern.k) - g_of_H(pattern)


def monotone_exponent(patterns: Iterable[SubgraphPattern]) -> Fraction:
    patterns = list(patterns)
    if not patterns:
        raise ValueError("need at least one certificate pattern")
    return 2 - min(F(2, p.k) + g_of_H(p) for p in patterns)


# closed forms keyed by family; the argument is the family parameter
CLOSED_FORMS = {
    "clique": lambda k: F(2 * (k - 2), k * k * (k * k - 3 * k + 6)),
    "path": lambda k: F(k - 2, k * k),
    "cycle": lambda k: F(2 * k - 5, 3 * k * k),
    "star": lambda k: F(k - 1, (k + 1) ** 2),
}
_BUILD = {"clique": clique, "path": path, "cycle": cycle, "star": star}


@dataclass(frozen=True)
class Table6Row:
    family: str
    param: int
    vertices: int
    l: int
    m: int
    g: Fraction
    exponent: Fraction

    def to_dict(self) -> dict:
        return {"family": self.family, "param": self.param, "vertices": self.vertices,
                "l": self.l, "m": self.m, "g": self.g, "exponent": self.exponent}


def table6(max_k: int) -> list:
    """Rows for cliques, paths, cycles (``k`` vertices) and stars (``k`` leaves),
    each checked against its closed form."""
    if max_k < 3:
        raise ValueError("max parameter must be at least 3")
    rows = []
    for family, build in _BUILD.items():
        for k in range(3, max_k + 1):
            pattern = build(k)
            g = g_of_H(pattern)
            closed = CLOSED_FORMS[family](k)
            if g != closed:
                raise ArithmeticError(f"{family} k={k}: constructed g={g} but closed form {closed}")
            rows.append(Table6Row(family, k, pattern.k, pattern.l, pattern.m, g,
                                  containment_exponent(pattern)))
    return rows


# -- exponent terms ------------------------------------------------------------

def _fmt_power(sym: str, e: Fraction) -> str:
    if e == 0:
        return ""
    if e == 1:
        return sym
    return f"{sym}^{e}" if e.denominator == 1 and e > 0 else f"{sym}^({e})"


@dataclass(frozen=True)
class MonomialTerm:
    a: Fraction
    b: Fraction
    c: Fraction = F(0)
    label: str = field(default="", compare=False)

    def __post_init__(self):
        for name in "abc":
            object.__setattr__(self, name, F(getattr(self, name)))

    def exponent(self, alpha, beta=0) -> Fraction:
        return self.a + self.b * F(alpha) - self.c * F(beta)

    @property
    def triple(self) -> tuple:
        return (self.a, self.b, self.c)

    def __str__(self) -> str:
        parts = [p for p in (_fmt_power("n", self.a), _fmt_power("r", self.b),
                             _fmt_power("s", self.c)) if p]
        return " ".join(parts) or "1"


def stage_exponent_terms(family: str, k: int, l: int | None = None, m: int | None = None) -> list:
    h = F(1, 2)
    if family == "kdist":
        if k < 1:
            raise ValueError("k must be positive")
        terms = [MonomialTerm(0, 1, 0, "stage 1")]
        terms += [MonomialTerm(h * j, -h * (j - 1), 0, f"stage {j + 1}") for j in range(1, k + 1)]
        return terms
    if family == "clique":
        if k < 3:
            raise ValueError("clique family needs k >= 3")
        return [MonomialTerm(0, 2, 0, "stage 1"),
                MonomialTerm(h * (k - 1), 1 - h * (k - 2), 0, f"stage {k}"),
                MonomialTerm(h * k, F(k - 1, k) - h * (k - 1), 0, "subroutine")]
    if family == "subgraph":
        if k < 3 or l is None or m is None or l < 0 or m < 0:
            raise ValueError("subgraph family needs k >= 3 and non-negative l, m")
        return [MonomialTerm(0, 2, 1, "stage 1"),
                MonomialTerm(h * (k - 1), 1 - h * (k - 2), 1, f"stage {k}"),
                MonomialTerm(h * (k - 1), -h * (k - 3), -h * (m - 1), f"stage {k + 2}"),
                MonomialTerm(h * k, F(l, l + 1) - h * (k - 1), -h * m, f"stage {k + 3}")]
    raise ValueError(f"unknown family {family!r}")


# -- balancing -----------------------------------------------------------------

@dataclass(frozen=True)
class BalanceSolution:
    alpha: Fraction
    beta: Fraction | None
    value: Fraction
    tight: tuple
    side_conditions: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "value": self.value,
                "tight": list(self.tight), "sideConditions": dict(self.side_conditions)}


def _solve(rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]):
    """Exact Gaussian elimination; ``None`` when singular."""
    n = len(rows)
    m = [list(r) + [v] for r, v in zip(rows, rhs)]
    for col in range(n):
        piv = next((i for i in range(col, n) if m[i][col] != 0), None)
        if piv is None:
            return None
        m[col], m[piv] = m[piv], m[col]
        for i in range(n):
            if i != col and m[i][col]:
                f = m[i][col] / m[col][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[col])]
    return [m[i][n] / m[i][i] for i in range(n)]


def balance(terms: Sequence[MonomialTerm], variables: Sequence[str] = ("alpha",)) -> BalanceSolution:
    """Minimise ``max_t exponent_t`` over ``alpha in [0, 1]`` (and ``beta >= 0``).

    The optimum of this small LP lies at a vertex of its epigraph, so every
    vertex (a choice of tight planes among the terms and the box bounds) is
    solved exactly and the best feasible one kept; ties go to the smallest
    ``(alpha, beta)``.
    """
    terms = list(terms)
    if not terms:
        raise ValueError("no terms to balance")
    two = "beta" in variables
    if two and not any(t.c < 0 for t in terms):
        raise ValueError("unbalanced term system")
    # planes as (coef_alpha, coef_beta, coef_z) . x = rhs
    planes = [((t.b, -t.c, F(-1)), -t.a) for t in terms]
    planes += [((F(1), F(0), F(0)), F(0)), ((F(1), F(0), F(0)), F(1))]
    if two:
        planes.append(((F(0), F(1), F(0)), F(0)))
    dim = 3 if two else 2

    def project(p):
        (ca, cb, cz), v = p
        return ([ca, cb, cz] if two else [ca, cz]), v

    best = None
    for combo in itertools.combinations(planes, dim):
        rows, rhs = zip(*(project(p) for p in combo))
        sol = _solve(rows, rhs)
        if sol is None:
            continue
        alpha = sol[0]
        beta = sol[1] if two else F(0)
        if not 0 <= alpha <= 1 or beta < 0:
            continue
        value = max(t.exponent(alpha, beta) for t in terms)
        key = (value, alpha, beta)
        if best is None or key < best:
            best = key
    if best is None:
        raise ValueError("no feasible vertex")
    value, alpha, beta = best
    tight = tuple(str(t) for t in terms if t.exponent(alpha, beta) == value)
    side = {"betaPositive": beta > 0, "sparsePositive": 2 * alpha - beta > 0} if two else {}
    return BalanceSolution(alpha, beta if two else None, value, tight, side)


def family_balance(family: str, k: int, pattern: SubgraphPattern | None = None) -> BalanceSolution:
    if family == "subgraph":
        if pattern is None:
            raise ValueError("subgraph family needs a pattern")
        return balance(stage_exponent_terms(family, pattern.k, pattern.l, pattern.m), ("alpha", "beta"))
    return balance(stage_exponent_terms(family, k))


def connected_patterns(k: int):
    """Every labelled connected graph on ``k`` vertices (brute force over edge subsets)."""
    slots = list(itertools.combinations(range(k), 2))
    for mask in range(1 << len(slots)):
        edges = [e for i, e in enumerate(slots) if mask >> i & 1]
        if len(edges) >= k - 1 and _connected(k, edges):
            yield SubgraphPattern(k, tuple(edges))


def _connected(k: int, edges) -> bool:
    adj = {v: set() for v in range(k)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    seen, todo = {0}, [0]
    while todo:
        for w in adj[todo.pop()] - seen:
            seen.add(w)
            todo.append(w)
    return len(seen) == k
