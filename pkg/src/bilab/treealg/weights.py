"""Edge weights with a formal infinitesimal, delta accounting, and the
descendant-count identities on colored connection trees.

Weights are exact linear expressions c0 + c1*eps over the rationals, ordered
lexicographically in (c0, c1), which is the order of evaluation as eps goes
to 0 from above.  A fixed float epsilon would make the strict comparisons
against d in the reduction unsound, hence the symbolic form.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Callable, Dict, Optional, Sequence, Tuple

from .core import BRANCHING, EXTERNAL, INTERSECTION, MarkedTree

__all__ = ["WeightExpr", "weight", "delta", "check_z_delta", "z_delta_report"]


@total_ordering
@dataclass(frozen=True)
class WeightExpr:
    """value = c0 + c1 * eps with eps an infinitesimal > 0."""

    c0: Fraction
    c1: Fraction = Fraction(0)

    @staticmethod
    def const(x) -> "WeightExpr":
        return WeightExpr(Fraction(x), Fraction(0))

    @staticmethod
    def eps(coeff=1) -> "WeightExpr":
        return WeightExpr(Fraction(0), Fraction(coeff))

    def __add__(self, other) -> "WeightExpr":
        other = _coerce(other)
        return WeightExpr(self.c0 + other.c0, self.c1 + other.c1)

    __radd__ = __add__

    def __sub__(self, other) -> "WeightExpr":
        other = _coerce(other)
        return WeightExpr(self.c0 - other.c0, self.c1 - other.c1)

    def __rsub__(self, other) -> "WeightExpr":
        return _coerce(other) - self

    def __mul__(self, k) -> "WeightExpr":
        if isinstance(k, WeightExpr):
            raise TypeError("WeightExpr * WeightExpr is not defined")
        q = Fraction(k)
        return WeightExpr(self.c0 * q, self.c1 * q)

    __rmul__ = __mul__

    def __neg__(self) -> "WeightExpr":
        return WeightExpr(-self.c0, -self.c1)

    def __eq__(self, other) -> bool:
        other = _coerce(other)
        return (self.c0, self.c1) == (other.c0, other.c1)

    def __lt__(self, other) -> bool:
        other = _coerce(other)
        return (self.c0, self.c1) < (other.c0, other.c1)

    def __hash__(self):
        return hash((self.c0, self.c1))

    def eval(self, eps: float) -> float:
        return float(self.c0) + float(self.c1) * eps

    def as_pair(self) -> Tuple[str, str]:
        return (str(self.c0), str(self.c1))

    def __repr__(self):
        return f"{self.c0}{self.c1:+}e" if self.c1 else f"{self.c0}"


def _coerce(x) -> WeightExpr:
    if isinstance(x, WeightExpr):
        return x
    return WeightExpr(Fraction(x), Fraction(0))


def weight(tree: MarkedTree, alpha: Dict[int, WeightExpr], eps: float = 0.0,
           positions: Optional[Sequence[Tuple[int, ...]]] = None) -> float:
    """p^alpha(T) = prod over edges of 1 / (1 + ||phi(u)-phi(v)||^alpha),
    alpha evaluated at the supplied eps.  Edges are keyed by child vertex."""
    pos = positions if positions is not None else tree.positions
    if pos is None:
        raise ValueError("positions required")
    if len(pos) != tree.size:
        raise ValueError("missing position")
    out = 1.0
    for v in range(1, tree.size):
        u = tree.parent[v]
        d2 = sum((a - b) ** 2 for a, b in zip(pos[u], pos[v]))
        a = alpha[v].eval(eps) if isinstance(alpha[v], WeightExpr) else float(alpha[v])
        out *= 1.0 / (1.0 + d2 ** (a / 2.0))
    return out


def delta(tree: MarkedTree, v: int) -> Fraction:
    """delta of the edge (parent[v], v), per the colored-tree accounting:
    0 when the edge has no parent edge or the parent edge has another color;
    otherwise 1 - 1{u branching}/(deg_i(u)-1) * (2 - 1{deg_i(u)=2}), with
    deg_i the degree of u inside the color class of the edge."""
    u = tree.parent[v]
    if u < 0:
        raise ValueError("root has no parent edge")
    c = tree.color[v]
    if u == 0 or tree.color[u] != c:
        return Fraction(0)
    if tree.vclass[u] != BRANCHING:
        return Fraction(1)
    deg = tree.color_degree(u, c)
    return Fraction(1) - Fraction(1, deg - 1) * (2 - (1 if deg == 2 else 0))


def _color_u(tree: MarkedTree, c: int) -> Optional[int]:
    """The unique branching vertex of degree 2 in the color-c subtree, if any."""
    found = None
    for v in tree.color_vertices(c):
        if tree.vclass[v] == BRANCHING and tree.color_degree(v, c) == 2:
            if found is not None:
                raise ValueError(f"two degree-2 branching vertices in color {c}")
            found = v
    return found


def z_delta_report(tree: MarkedTree,
                   delta_fn: Optional[Callable[[MarkedTree, int], Fraction]] = None
                   ) -> Dict[str, list]:
    """Direct-count verification of the per-color identity and the global
    sandwich, edge by edge.

    Per color i and edge e of color i with child vertex v:
        z_i(e) + sum of delta over color-i edges strictly below v
            = x_i(e) + y_i(e) - 1 + 1{u_i below v (within color i)},
    where x_i, y_i, z_i count external / intersection / branching vertices
    of the whole tree lying in descendants(v) inter vertices(color i), and
    u_i is the color's unique degree-2 branching vertex.

    Global sandwich for every edge e:
        x(e) + y(e) - 1 <= z(e) + sum delta over edges strictly below v
                       <= x(e) + y(e).
    Returns lists of violating edges (empty lists mean the check passes).
    """
    dfn = delta_fn or delta
    deltas = {v: dfn(tree, v) for v in range(1, tree.size)}
    bad_identity = []
    bad_sandwich = []
    desc_cache = {v: set(tree.descendants(v)) for v in range(tree.size)}
    color_verts = {c: tree.color_vertices(c) for c in tree.colors()}
    color_u = {c: _color_u(tree, c) for c in tree.colors()}
    for v in range(1, tree.size):
        c = tree.color[v]
        desc = desc_cache[v]
        in_color = desc & color_verts[c]
        xi = sum(1 for w in in_color if tree.vclass[w] == EXTERNAL)
        yi = sum(1 for w in in_color if tree.vclass[w] == INTERSECTION)
        zi = sum(1 for w in in_color if tree.vclass[w] == BRANCHING)
        dsum = sum((deltas[w] for w in range(1, tree.size)
                    if tree.color[w] == c and w in desc and w != v), Fraction(0))
        u_i = color_u[c]
        ind = 1 if (u_i is not None and u_i in in_color) else 0
        if zi + dsum != xi + yi - 1 + ind:
            bad_identity.append((v, c, zi + dsum, xi + yi - 1 + ind))
        x = sum(1 for w in desc if tree.vclass[w] == EXTERNAL)
        y = sum(1 for w in desc if tree.vclass[w] == INTERSECTION)
        z = sum(1 for w in desc if tree.vclass[w] == BRANCHING)
        tot = z + sum((deltas[w] for w in range(1, tree.size)
                       if w in desc and w != v), Fraction(0))
        if not (x + y - 1 <= tot <= x + y):
            bad_sandwich.append((v, tot, x + y))
    return {"identity": bad_identity, "sandwich": bad_sandwich}


def check_z_delta(tree: MarkedTree,
                  delta_fn: Optional[Callable[[MarkedTree, int], Fraction]] = None
                  ) -> bool:
    rep = z_delta_report(tree, delta_fn)
    return not rep["identity"] and not rep["sandwich"]
