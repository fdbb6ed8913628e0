"""Array-based sampler for truncated infinite-tree walks.

The object trees in gwtrees keep full topology and labels; experiments that
only need positions, past/future membership and spine indices use this
engine instead.  A sample is grown spine-first: the spine positions are a
plain theta-walk, each spine vertex hangs past-side and future-side subtree
roots per the size-biased split, and the subtree forests are expanded one
generation at a time with numpy-vectorized offspring draws.

Spatial pruning: a subtree vertex farther than ``prune_radius`` from
``prune_center`` is kept but not expanded, and is recorded as a stub.  All
consumers treat unexpanded descendants as missed events, so hit-style
estimates are biased downward by an amount boundable through the Green
envelope at the stub positions; the stub arrays are returned for exactly
that accounting.  The same holds for budget overflow.

Distributional agreement with the object sampler is covered by tests
(occupation moments, subtree size histograms).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .gwtrees import OffspringLaw, adjoint_root_law, size_biased
from .lattice import JumpLaw, Point

__all__ = ["WalkSample", "sample_walk", "spine_until_exit"]

_STUB_CAP = 200_000


@dataclass
class WalkSample:
    """Positions-only view of one truncated infinite-tree walk.

    past_pos includes the spine vertices xi_1..xi_L (they carry negative
    labels) with past_nu their spine index; subtree vertices inherit the
    index of their anchor.  fut_pos excludes the root, whose position is
    ``start``.
    """

    start: Point
    kind: str
    spine_pos: np.ndarray          # (L+1, d), row 0 = start
    past_pos: np.ndarray           # (Mp, d)
    past_nu: np.ndarray            # (Mp,)
    fut_pos: np.ndarray            # (Mf, d)
    stub_pos: np.ndarray           # (S, d) unexpanded vertices (both sides)
    overflow: bool
    sampled: int

    @property
    def dim(self) -> int:
        return len(self.start)

    @property
    def spine_len(self) -> int:
        return self.spine_pos.shape[0] - 1

    def range_arrays(self) -> List[np.ndarray]:
        out = [np.asarray([self.start], dtype=np.int64)]
        if self.past_pos.size:
            out.append(self.past_pos)
        if self.fut_pos.size:
            out.append(self.fut_pos)
        return out

    def range_keys(self, keyfn) -> np.ndarray:
        return np.unique(np.concatenate([keyfn(a) for a in self.range_arrays()]))


def _draw_counts(cdf: np.ndarray, rng: np.random.Generator, size: int) -> np.ndarray:
    if size == 0:
        return np.zeros(0, dtype=np.int64)
    return np.searchsorted(cdf, rng.random(size), side="right").astype(np.int64)


def _expand_forest(roots_pos: np.ndarray, roots_anchor: np.ndarray,
                   mu_cdf: np.ndarray, steps: np.ndarray, step_cdf: np.ndarray,
                   rng: np.random.Generator, prune_center: Optional[np.ndarray],
                   prune_r2: float, budget: int, sampled: int
                   ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, bool, int]:
    """Generation-by-generation growth of a forest of mu-trees.

    Returns (positions, anchors, stub positions, overflow, sampled)."""
    d = steps.shape[1]
    all_pos = [roots_pos]
    all_anchor = [roots_anchor]
    stubs: List[np.ndarray] = []
    overflow = False
    cur_pos, cur_anchor = roots_pos, roots_anchor
    while cur_pos.shape[0]:
        if prune_center is not None:
            dd = cur_pos - prune_center
            far = np.einsum("ij,ij->i", dd, dd) > prune_r2
            if far.any():
                stubs.append(cur_pos[far])
                cur_pos, cur_anchor = cur_pos[~far], cur_anchor[~far]
                if not cur_pos.shape[0]:
                    break
        counts = _draw_counts(mu_cdf, rng, cur_pos.shape[0])
        total = int(counts.sum())
        if total == 0:
            break
        if sampled + total > budget:
            # keep a budget-sized prefix, everything else becomes stubs
            cum = np.cumsum(counts)
            keep = int(np.searchsorted(cum, budget - sampled, side="right"))
            stubs.append(cur_pos[keep:])
            cur_pos, cur_anchor, counts = cur_pos[:keep], cur_anchor[:keep], counts[:keep]
            total = int(counts.sum())
            overflow = True
            if total == 0:
                break
        parents = np.repeat(np.arange(cur_pos.shape[0]), counts)
        inc = steps[_draw_counts(step_cdf, rng, total)]
        nxt_pos = cur_pos[parents] + inc
        nxt_anchor = cur_anchor[parents]
        all_pos.append(nxt_pos)
        all_anchor.append(nxt_anchor)
        sampled += total
        cur_pos, cur_anchor = nxt_pos, nxt_anchor
        if overflow:
            stubs.append(cur_pos)
            break
    pos = np.concatenate(all_pos) if all_pos else np.zeros((0, d), dtype=np.int64)
    anc = np.concatenate(all_anchor) if all_anchor else np.zeros(0, dtype=np.int64)
    stub = np.concatenate(stubs) if stubs else np.zeros((0, d), dtype=np.int64)
    if stub.shape[0] > _STUB_CAP:
        stub = stub[:_STUB_CAP]
    return pos, anc, stub, overflow, sampled


def sample_walk(jump: JumpLaw, offspring: OffspringLaw, kind: str,
                spine_len: int, start: Point, rng: np.random.Generator,
                two_sided: bool = False,
                prune_center: Optional[Point] = None,
                prune_radius: Optional[float] = None,
                budget: int = 500_000) -> WalkSample:
    """One truncated walk indexed by an infinite critical tree.

    The root rule follows ``kind`` ("invariant" or "kesten"); each spine
    vertex splits its non-special children around the special one, children
    before it future-side, after it past-side.  With ``two_sided`` false the
    future forests are skipped (their counts are still drawn jointly, so a
    one-sided sample is the marginal of a two-sided one).
    """
    if spine_len < 1:
        raise ValueError("spine_len must be >= 1")
    if kind not in ("invariant", "kesten"):
        raise ValueError(f"unknown kind {kind!r}")
    d = jump.dim
    steps = jump.steps_array()
    step_cdf = np.cumsum(jump.probs_array())
    mu_cdf = offspring.cdf_array()
    sb_cdf = size_biased(offspring).cdf_array()
    L = spine_len

    spine_inc = steps[_draw_counts(step_cdf, rng, L)]
    spine_pos = np.vstack([np.zeros((1, d), dtype=np.int64), np.cumsum(spine_inc, axis=0)])
    spine_pos += np.asarray(start, dtype=np.int64)

    past_roots: List[Tuple[int, int]] = []  # (anchor, count)
    fut_roots: List[Tuple[int, int]] = []
    for n in range(L):
        if n == 0 and kind == "invariant":
            nu = int(_draw_counts(mu_cdf, rng, 1)[0]) + 1
            fut, past = nu - 1, 0
        else:
            nu = int(_draw_counts(sb_cdf, rng, 1)[0])
            sp = int(rng.integers(nu))
            fut, past = sp, nu - 1 - sp
        past_roots.append((n, past))
        fut_roots.append((n, fut))

    def roots_arrays(spec: List[Tuple[int, int]]):
        anchors = np.concatenate([np.full(c, a, dtype=np.int64) for a, c in spec]) \
            if any(c for _, c in spec) else np.zeros(0, dtype=np.int64)
        total = anchors.shape[0]
        inc = steps[_draw_counts(step_cdf, rng, total)]
        pos = spine_pos[anchors] + inc
        return pos, anchors

    pc = np.asarray(prune_center, dtype=np.int64) if prune_center is not None else None
    pr2 = (prune_radius * prune_radius) if prune_radius is not None else math.inf
    sampled = L + 1
    overflow = False
    stub_parts: List[np.ndarray] = []

    ppos, panc = roots_arrays(past_roots)
    sampled += ppos.shape[0]
    ppos, panc, stubs, ofl, sampled = _expand_forest(
        ppos, panc, mu_cdf, steps, step_cdf, rng, pc, pr2, budget, sampled)
    overflow |= ofl
    if stubs.size:
        stub_parts.append(stubs)
    # spine vertices are past; their n_u is their own index
    past_pos = np.vstack([spine_pos[1:], ppos]) if ppos.size else spine_pos[1:].copy()
    past_nu = np.concatenate([np.arange(1, L + 1, dtype=np.int64), panc]) \
        if panc.size else np.arange(1, L + 1, dtype=np.int64)

    if two_sided:
        fpos, fanc = roots_arrays(fut_roots)
        sampled += fpos.shape[0]
        fpos, fanc, stubs, ofl, sampled = _expand_forest(
            fpos, fanc, mu_cdf, steps, step_cdf, rng, pc, pr2, budget, sampled)
        overflow |= ofl
        if stubs.size:
            stub_parts.append(stubs)
        fut_pos = fpos
    else:
        fut_pos = np.zeros((0, d), dtype=np.int64)

    stub = np.concatenate(stub_parts) if stub_parts else np.zeros((0, d), dtype=np.int64)
    return WalkSample(tuple(start), kind, spine_pos, past_pos, past_nu,
                      fut_pos, stub, overflow, sampled)


def spine_until_exit(jump: JumpLaw, start: Point, radius: float,
                     rng: np.random.Generator, center: Optional[Point] = None,
                     cap: int = 2_000_000, chunk: int = 4096) -> Tuple[np.ndarray, int]:
    """Spine positions S_0..S_tau where tau is the exit time of the open
    ball B(center, radius); raises on censoring at ``cap`` steps."""
    d = jump.dim
    steps = jump.steps_array()
    step_cdf = np.cumsum(jump.probs_array())
    c = np.asarray(center if center is not None else (0,) * d, dtype=np.int64)
    r2 = radius * radius
    pos = [np.asarray([start], dtype=np.int64)]
    cur = np.asarray(start, dtype=np.int64)
    dd = cur - c
    if float(dd @ dd) >= r2:
        return np.asarray([start], dtype=np.int64).reshape(1, d), 0
    done = 0
    while done < cap:
        inc = steps[_draw_counts(step_cdf, rng, chunk)]
        seg = cur + np.cumsum(inc, axis=0)
        dd = seg - c
        out = np.einsum("ij,ij->i", dd, dd) >= r2
        if out.any():
            stop = int(np.argmax(out))
            pos.append(seg[: stop + 1])
            return np.vstack(pos), done + stop + 1
        pos.append(seg)
        cur = seg[-1]
        done += chunk
    raise TruncationCensored(f"spine did not exit B({radius}) within {cap} steps")


class TruncationCensored(RuntimeError):
    """A quantity needed the sample beyond its truncation."""
