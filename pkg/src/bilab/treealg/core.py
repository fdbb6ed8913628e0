"""Rooted planar trees with vertex classes and edge colors.

A MarkedTree is stored as a parent array in depth-first order (vertex 0 is
the root), with an ordered children table derived from it.  Each non-root
vertex identifies its parent edge, so edge-indexed maps are keyed by the
child vertex.  Vertex classes: external (degree 1), intersection, branching.
Edge colors partition the edge set into per-color subtrees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

EXTERNAL, INTERSECTION, BRANCHING = 0, 1, 2
_CLASS_NAMES = {EXTERNAL: "external", INTERSECTION: "intersection", BRANCHING: "branching"}

__all__ = [
    "EXTERNAL", "INTERSECTION", "BRANCHING", "MarkedTree",
    "n_kd", "s_d", "generated_tree", "lca_table",
]


def n_kd(k: int, d: int) -> int:
    """ceil(d(k-1)/4) - (k-2): trajectories needed to connect k points."""
    if k < 2 or d < 5:
        raise ValueError("need k >= 2 and d >= 5")
    return -((-d * (k - 1)) // 4) - (k - 2)


def s_d(d: int) -> int:
    """ceil(d/4) - 1: the interlacement graph diameter."""
    if d < 5:
        raise ValueError("need d >= 5")
    return -((-d) // 4) - 1


@dataclass(frozen=True)
class MarkedTree:
    """Immutable rooted planar tree with classes, colors and optional
    positions.  ``color[v]`` is the color of the edge (parent[v], v);
    ``color[0]`` is -1.  Children order is planar data: mirrored trees are
    distinct members."""

    parent: Tuple[int, ...]
    vclass: Tuple[int, ...]
    color: Tuple[int, ...]
    positions: Optional[Tuple[Tuple[int, ...], ...]] = None

    @cached_property
    def children(self) -> Tuple[Tuple[int, ...], ...]:
        ch: List[List[int]] = [[] for _ in self.parent]
        for v in range(1, len(self.parent)):
            ch[self.parent[v]].append(v)
        return tuple(tuple(c) for c in ch)

    @property
    def size(self) -> int:
        return len(self.parent)

    @property
    def n_colors(self) -> int:
        return len(set(self.color[1:])) if self.size > 1 else 0

    def degree(self, v: int) -> int:
        return len(self.children[v]) + (1 if v != 0 else 0)

    def externals(self) -> List[int]:
        return [v for v in range(self.size) if self.vclass[v] == EXTERNAL]

    def class_counts(self) -> Tuple[int, int, int]:
        k = sum(1 for c in self.vclass if c == EXTERNAL)
        i = sum(1 for c in self.vclass if c == INTERSECTION)
        b = sum(1 for c in self.vclass if c == BRANCHING)
        return k, i, b

    @cached_property
    def preorder(self) -> Tuple[int, ...]:
        order: List[int] = []
        stack = [0]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(self.children[v]))
        return tuple(order)

    @cached_property
    def depth(self) -> Tuple[int, ...]:
        dep = [0] * self.size
        for v in self.preorder[1:]:
            dep[v] = dep[self.parent[v]] + 1
        return tuple(dep)

    def descendants(self, v: int) -> List[int]:
        out = []
        stack = [v]
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(self.children[u])
        return out

    def color_degree(self, v: int, c: int) -> int:
        """Degree of v inside the color-c subtree."""
        deg = sum(1 for w in self.children[v] if self.color[w] == c)
        if v != 0 and self.color[v] == c:
            deg += 1
        return deg

    def color_vertices(self, c: int) -> Set[int]:
        out: Set[int] = set()
        for v in range(1, self.size):
            if self.color[v] == c:
                out.add(v)
                out.add(self.parent[v])
        return out

    def colors(self) -> List[int]:
        return sorted(set(self.color[1:]))

    def with_positions(self, positions: Sequence[Tuple[int, ...]]) -> "MarkedTree":
        if len(positions) != self.size:
            raise ValueError("one position per vertex required")
        return MarkedTree(self.parent, self.vclass, self.color,
                          tuple(tuple(p) for p in positions))

    def steiner_internal_count(self, leaves: Sequence[int]) -> Tuple[int, Set[int]]:
        """Vertex set of the minimal subtree spanning ``leaves``."""
        verts = steiner_vertices(self.parent, self.depth, leaves)
        return len(verts), verts

    def describe(self) -> str:
        rows = []
        for v in range(self.size):
            rows.append(f"{v}:{_CLASS_NAMES[self.vclass[v]][0]}"
                        f"<-{self.parent[v]}#{self.color[v]}")
        return " ".join(rows)


def lca_table(parent: Sequence[int]) -> Tuple[List[int], callable]:
    """Depth array and a pairwise lca function for a parent-array tree."""
    n = len(parent)
    depth = [-1] * n
    for v0 in range(n):
        chain = []
        v = v0
        while depth[v] < 0 and parent[v] >= 0:
            chain.append(v)
            v = parent[v]
        base = 0 if parent[v] < 0 else depth[v]
        if parent[v] < 0:
            depth[v] = 0
        for u in reversed(chain):
            base += 1
            depth[u] = base

    def lca(u: int, v: int) -> int:
        while depth[u] > depth[v]:
            u = parent[u]
        while depth[v] > depth[u]:
            v = parent[v]
        while u != v:
            u, v = parent[u], parent[v]
        return u

    return depth, lca


def steiner_vertices(parent: Sequence[int], depth_unused: Sequence[int],
                     leaves: Sequence[int]) -> Set[int]:
    """All vertices on paths between members of ``leaves``."""
    if not leaves:
        return set()
    _, lca = lca_table(parent)
    # top = common ancestor of all leaves
    top = leaves[0]
    for v in leaves[1:]:
        top = lca(top, v)
    verts: Set[int] = {top}
    for v in leaves:
        while v != top and v not in verts:
            verts.add(v)
            v = parent[v]
    return verts


def generated_tree(parent: Sequence[int], chosen: Sequence[int],
                   spine: Optional[Sequence[int]] = None
                   ) -> Tuple[List[int], Dict[int, int]]:
    """The tree generated by ``chosen`` vertices in a rooted tree.

    Vertex set: chosen vertices plus all pairwise lowest common ancestors,
    plus (spined variant) the nearest spine vertex of each chosen vertex,
    where ``spine`` is a root-anchored path given as a vertex list.  Edges
    join members whose geodesic contains no other member; since the set is
    closed under pairwise lca this is the nearest-proper-ancestor relation,
    returned as a child -> parent map over the member set.
    """
    if not chosen:
        raise ValueError("need at least one vertex")
    if len(set(chosen)) != len(chosen):
        raise ValueError("vertices must be distinct")
    n = len(parent)
    for v in chosen:
        if not (0 <= v < n):
            raise ValueError(f"vertex {v} not in tree")
    depth, lca = lca_table(parent)
    members: Set[int] = set(chosen)
    vs = list(chosen)
    for i in range(len(vs)):
        for j in range(i + 1, len(vs)):
            members.add(lca(vs[i], vs[j]))
    if spine is not None:
        spine_set = set(spine)
        for v in chosen:
            u = v
            while u not in spine_set:
                u = parent[u]
                if u < 0:
                    raise ValueError("spine is not root-anchored")
            members.add(u)
        # closure: adding spine vertices may create new pairwise lcas, but a
        # spine is a root path so lcas of spine vertices are spine vertices,
        # and lca(spine, v) lies on the spine: recompute to be safe.
        vs2 = sorted(members)
        for i in range(len(vs2)):
            for j in range(i + 1, len(vs2)):
                members.add(lca(vs2[i], vs2[j]))
    edge: Dict[int, int] = {}
    for v in members:
        if parent[v] < 0:
            continue
        u = parent[v]
        while u >= 0 and u not in members:
            u = parent[u]
        if u >= 0:
            edge[v] = u
    return sorted(members), edge
