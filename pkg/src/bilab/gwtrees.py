"""Offspring laws and tree samplers: critical, adjoint, Kesten, invariant.

The infinite trees are sampled as truncations: a spine of ``spine_len``
special vertices with every attached subtree sampled to completion under a
global vertex budget.  Reproduction rules:

* invariant root: i children with probability mu(i-1), the first is special,
  the rest are normal and hang on the future side (no past trees at the
  root);
* Kesten root and every spine vertex: i children with probability
  mu_sb(i) = i mu(i), one of them special uniformly at random;
* normal vertices: mu, all children normal.

Planar convention (fixed here, mirrored variant differs only by relabeling):
children of a spine vertex listed before the special child hang on the
future side of the spine, children after it on the past side.  Worked
example: a spine vertex with children [a, s, b, c] (s special) has a in the
future, b and c in the past.  With this convention the number of past-side
children of a spine vertex is distributed as the adjoint root law
mu~(i) = sum_{j > i} mu(j), which is what makes the past decompose into
adjoint critical trees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "OffspringLaw", "PlaneTree", "TruncatedInfiniteTree",
    "geometric_offspring", "poisson_offspring", "binary_offspring", "dirac_offspring",
    "size_biased", "adjoint_root_law",
    "sample_critical", "sample_adjoint", "sample_infinite_truncated",
    "df_labels", "spine_index", "tree_dump",
]

_PMF_TAIL = 1e-13


@dataclass(frozen=True)
class OffspringLaw:
    """Reproduction law on {0, 1, 2, ...} held as a truncated pmf array.

    The array is cut where the remaining tail is below 1e-13 and renormalized,
    so sampling by inverse cdf is exact to that resolution.  ``variance`` is
    the exact sigma^2 of the untruncated law, ``moment_order_available`` the
    largest moment the untruncated law has (None meaning all of them).
    """

    name: str
    pmf: Tuple[float, ...]
    mean: float
    variance: float
    moment_order_available: Optional[int] = None

    def __post_init__(self):
        total = math.fsum(self.pmf)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"pmf sums to {total}")
        if any(p < 0 for p in self.pmf):
            raise ValueError("negative pmf entry")

    @property
    def is_critical(self) -> bool:
        return abs(self.mean - 1.0) < 1e-9

    def pmf_array(self) -> np.ndarray:
        return np.array(self.pmf)

    def cdf_array(self) -> np.ndarray:
        return np.cumsum(self.pmf)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        return np.searchsorted(self.cdf_array(), u, side="right").astype(np.int64)


def _law_from_fn(name: str, f: Callable[[int], float], mean: float, var: float,
                 moments: Optional[int] = None) -> OffspringLaw:
    pmf: List[float] = []
    total = 0.0
    i = 0
    while total < 1.0 - _PMF_TAIL:
        p = f(i)
        pmf.append(p)
        total += p
        i += 1
        if i > 10_000:
            raise ValueError("pmf tail does not vanish")
    arr = np.array(pmf)
    arr /= arr.sum()
    return OffspringLaw(name, tuple(arr.tolist()), mean, var, moments)


def geometric_offspring(p: float = 0.5) -> OffspringLaw:
    """Geometric on {0,1,...}: pmf(i) = (1-p)^i p.  Critical iff p = 1/2
    (mean (1-p)/p, variance (1-p)/p^2; p=1/2 gives sigma^2 = 2)."""
    q = 1.0 - p
    return _law_from_fn(f"geometric({p})", lambda i: (q ** i) * p, q / p, q / p / p, None)


def poisson_offspring(lam: float = 1.0) -> OffspringLaw:
    return _law_from_fn(f"poisson({lam})",
                        lambda i: math.exp(-lam) * lam ** i / math.factorial(i),
                        lam, lam, None)


def binary_offspring() -> OffspringLaw:
    """0 or 2 children with probability 1/2 each: critical, sigma^2 = 1."""
    return OffspringLaw("binary", (0.5, 0.0, 0.5), 1.0, 1.0, None)


def dirac_offspring(k: int) -> OffspringLaw:
    pmf = [0.0] * (k + 1)
    pmf[k] = 1.0
    return OffspringLaw(f"dirac({k})", tuple(pmf), float(k), 0.0, None)


def offspring_by_name(name: str) -> OffspringLaw:
    table = {
        "geometric": geometric_offspring,
        "poisson": poisson_offspring,
        "binary": binary_offspring,
        "dirac1": lambda: dirac_offspring(1),
    }
    if name not in table:
        raise ValueError(f"unknown offspring law {name!r}")
    return table[name]()


def size_biased(law: OffspringLaw) -> OffspringLaw:
    """mu_sb(i) = i mu(i) for i >= 1; a probability law exactly when mu is
    critical (the total mass is the mean)."""
    if not law.is_critical:
        raise ValueError("size-biasing requires a critical law")
    pmf = [i * p for i, p in enumerate(law.pmf)]
    total = math.fsum(pmf)
    pmf = [p / total for p in pmf]
    return OffspringLaw(f"sb[{law.name}]", tuple(pmf), _pmf_mean(pmf),
                        _pmf_var(pmf), law.moment_order_available)


def adjoint_root_law(law: OffspringLaw) -> OffspringLaw:
    """Tail-sum transform mu~(i) = sum_{j >= i+1} mu(j); total mass equals
    the mean of mu, hence 1 for critical laws."""
    if not law.is_critical:
        raise ValueError("adjoint root law requires a critical law")
    n = len(law.pmf)
    pmf = []
    for i in range(n):
        pmf.append(math.fsum(law.pmf[i + 1:]))
    total = math.fsum(pmf)
    pmf = [p / total for p in pmf]
    while len(pmf) > 1 and pmf[-1] == 0.0:
        pmf.pop()
    return OffspringLaw(f"adj[{law.name}]", tuple(pmf), _pmf_mean(pmf),
                        _pmf_var(pmf), law.moment_order_available)


def _pmf_mean(pmf: Sequence[float]) -> float:
    return math.fsum(i * p for i, p in enumerate(pmf))


def _pmf_var(pmf: Sequence[float]) -> float:
    m = _pmf_mean(pmf)
    return math.fsum((i - m) ** 2 * p for i, p in enumerate(pmf))


# ---------------------------------------------------------------------------
# trees

NORMAL, SPECIAL = 0, 1


@dataclass
class PlaneTree:
    """Rooted ordered tree: parent pointers plus ordered children lists."""

    parent: List[int] = field(default_factory=lambda: [-1])
    children: List[List[int]] = field(default_factory=lambda: [[]])
    mark: List[int] = field(default_factory=lambda: [NORMAL])

    @property
    def size(self) -> int:
        return len(self.parent)

    def add_child(self, u: int, mark: int = NORMAL) -> int:
        v = len(self.parent)
        self.parent.append(u)
        self.children.append([])
        self.mark.append(mark)
        self.children[u].append(v)
        return v

    def child_counts(self) -> List[int]:
        return [len(c) for c in self.children]

    def depth_of(self, u: int) -> int:
        h = 0
        while self.parent[u] != -1:
            u = self.parent[u]
            h += 1
        return h


@dataclass
class TruncatedInfiniteTree:
    """Finite sample of a Kesten / infinite invariant tree.

    ``spine`` lists xi_1..xi_L (the special vertices, root excluded) in
    root-to-tip order.  ``side`` says for every vertex whether it hangs on
    the past (-1) or future (+1) of the spine; spine vertices are past.
    ``anchor`` is the spine index n_u of the nearest spine vertex (0 = root).
    ``overflow`` is set iff the vertex budget was hit, in which case some
    subtrees are truncated breadth-first.
    """

    base: PlaneTree
    kind: str
    spine: List[int]
    budget: int
    overflow: bool
    side: List[int]
    anchor: List[int]

    @property
    def spine_len(self) -> int:
        return len(self.spine)


def _grow_subtrees(tree: PlaneTree, queue: List[int], law: OffspringLaw,
                   budget: int, rng: np.random.Generator) -> bool:
    """BFS completion of the subtrees rooted at queue vertices; returns the
    overflow flag.  Offspring are drawn in queue order so the sample is a
    deterministic function of the rng stream."""
    qi = 0
    cdf = law.cdf_array()
    while qi < len(queue):
        u = queue[qi]
        qi += 1
        k = int(np.searchsorted(cdf, rng.random(), side="right"))
        if tree.size + k > budget:
            return True
        for _ in range(k):
            queue.append(tree.add_child(u, NORMAL))
    return False


def sample_critical(law: OffspringLaw, budget: int, rng: np.random.Generator
                    ) -> Tuple[PlaneTree, bool]:
    """Critical (or any) Galton-Watson tree; truncated breadth-first at the
    budget with the overflow flag set."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    tree = PlaneTree()
    overflow = _grow_subtrees(tree, [0], law, budget, rng)
    return tree, overflow


def sample_adjoint(law: OffspringLaw, budget: int, rng: np.random.Generator
                   ) -> Tuple[PlaneTree, bool]:
    """Adjoint critical tree: root reproduces by the tail-sum law, everyone
    else by mu."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    root_law = adjoint_root_law(law)
    tree = PlaneTree()
    k = int(root_law.sample(rng, 1)[0])
    if k + 1 > budget:
        return tree, True
    queue = [tree.add_child(0, NORMAL) for _ in range(k)]
    overflow = _grow_subtrees(tree, queue, law, budget, rng)
    return tree, overflow


def sample_infinite_truncated(law: OffspringLaw, kind: str, spine_len: int,
                              budget: int, rng: np.random.Generator
                              ) -> TruncatedInfiniteTree:
    """Spine of ``spine_len`` special vertices plus all attached subtrees.

    kind = "invariant": root has i children w.p. mu(i-1), first special,
    the rest future-side.  kind = "kesten": root reproduces like a spine
    vertex (mu_sb, uniform special)."""
    if spine_len < 1:
        raise ValueError("spine_len must be >= 1")
    if law.variance <= 0:
        raise ValueError("infinite trees need sigma^2 > 0")
    if kind not in ("invariant", "kesten"):
        raise ValueError(f"unknown kind {kind!r}")
    sb = size_biased(law)
    tree = PlaneTree()
    side = [0]
    anchor = [0]
    spine: List[int] = []
    overflow = False
    sub_roots: List[int] = []  # queue of subtree roots to complete later

    def add(u: int, mk: int, sd: int, anc: int) -> int:
        v = tree.add_child(u, mk)
        side.append(sd)
        anchor.append(anc)
        return v

    cur = 0  # vertex whose special child is about to be created
    for n in range(1, spine_len + 1):
        if cur == 0 and kind == "invariant":
            k = int(law.sample(rng, 1)[0]) + 1   # i children w.p. mu(i-1)
            special_pos = 0                      # first child special
        else:
            k = int(sb.sample(rng, 1)[0])
            special_pos = int(rng.integers(k))   # uniform among k children
        nxt = -1
        for j in range(k):
            if tree.size >= budget:
                overflow = True
                break
            if j == special_pos:
                nxt = add(cur, SPECIAL, -1, n)
            else:
                if cur == 0 and kind == "invariant":
                    sd = +1                      # no past trees at the root
                else:
                    sd = +1 if j < special_pos else -1
                anc = n - 1
                w = add(cur, NORMAL, sd, anc)
                sub_roots.append(w)
        if nxt < 0:
            overflow = True
            break
        spine.append(nxt)
        cur = nxt
    # complete the hanging subtrees (side/anchor inherited)
    qi = 0
    cdf = law.cdf_array()
    queue = list(sub_roots)
    while qi < len(queue):
        u = queue[qi]
        qi += 1
        kk = int(np.searchsorted(cdf, rng.random(), side="right"))
        if tree.size + kk > budget:
            overflow = True
            break
        for _ in range(kk):
            v = add(u, NORMAL, side[u], anchor[u])
            queue.append(v)
    return TruncatedInfiniteTree(tree, kind, spine, budget, overflow, side, anchor)


def df_labels(t: TruncatedInfiniteTree) -> Dict[int, int]:
    """Z-labels of the truncated sample: root 0, future side nonnegative,
    past side (spine included) negative; relative order matches the
    counter-clockwise depth-first traversal restricted to the truncation.

    Future: root, then future subtrees at the root, then the future
    subtrees at xi_1, xi_2, ... in spine order, each in preorder.
    Past: per spine block, the past subtrees of xi_k in preorder receive
    the labels just above xi_k's own label, which sits at the bottom of
    its block (matching the paper's figure:
    -1..-4 in xi_1's trees, then xi_1 = -5, then xi_2's block).
    """
    if t.overflow:
        raise ValueError("labels undefined on an overflowed sample")
    tree, side = t.base, t.side
    labels: Dict[int, int] = {0: 0}

    def preorder(u: int, acc: List[int]):
        acc.append(u)
        for c in tree.children[u]:
            preorder(c, acc)

    future: List[int] = []
    for c in tree.children[0]:
        if side[c] == +1:
            preorder(c, future)
    spine_set = set(t.spine)
    for x in t.spine:
        for c in tree.children[x]:
            if side[c] == +1 and c not in spine_set:
                preorder(c, future)
    for i, u in enumerate(future):
        labels[u] = i + 1

    offset = 0
    for k, x in enumerate(t.spine, start=1):
        block: List[int] = []
        for c in tree.children[x]:
            if side[c] == -1 and c not in spine_set:
                preorder(c, block)
        B = len(block)
        for j, u in enumerate(block):
            labels[u] = -(offset + B - j)
        labels[x] = -(offset + B + 1)
        offset += B + 1
    return labels


def spine_index(t: TruncatedInfiniteTree, u: int) -> int:
    """n_u: index of the nearest spine vertex (root counts as index 0)."""
    return t.anchor[u]


def tree_dump(tree: PlaneTree) -> str:
    """Golden-test dump: one line per vertex, ``id,parent_id,mark,child_rank``."""
    lines = []
    for v in range(tree.size):
        p = tree.parent[v]
        rank = tree.children[p].index(v) if p >= 0 else 0
        lines.append(f"{v},{p},{tree.mark[v]},{rank}")
    return "\n".join(lines) + "\n"
