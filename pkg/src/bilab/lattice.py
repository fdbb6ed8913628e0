"""Z^d geometry, jump laws and Green's functions.

Two computation engines live here.

* A dense engine: iterated convolution of the step kernel on a finite box.
  It is exact bookkeeping (all float64, no randomness) and is the reference
  for small boxes and low dimension.  Boxes in d >= 5 at the radii the
  experiments need do not fit in memory (33^9 points), so the dense engine
  guards its size and the experiments use the point engine instead.

* A point engine for axis-aligned jump laws (steps supported on the
  coordinate axes, e.g. the default uniform law on the 2d unit vectors).
  It evaluates the n-step distribution p_n(x) exactly by composing the d
  one-dimensional walks with binomially distributed step counts, then sums
  n <= N with an asymptotically completed tail.  Both

      g(x)   = sum_n p_n(x)
      g*g(x) = sum_n (n+1) p_n(x)

  come out of the same pass, which is how the tree Green's function G is
  evaluated without ever materialising a d-dimensional box.

Conventions: Euclidean norm, open balls, boxes are l-infinity balls.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

Point = Tuple[int, ...]

__all__ = [
    "JumpLaw", "ScalarField", "uniform_axis_law",
    "srw_green", "brw_green", "convolve", "delta_field",
    "green_at", "brw_green_at", "fit_tail_constant",
    "convolution_bound_check", "chain_envelope_step",
    "ball_points", "annulus_reps", "shell_reps", "shell_average",
    "norm_sq", "shell_counts", "green_upper_envelope",
]


def norm_sq(x: Sequence[int]) -> int:
    return int(sum(c * c for c in x))


def ball_points(center: Point, radius: float) -> frozenset:
    """Lattice points of the open Euclidean ball B(center, radius)."""
    d = len(center)
    r2 = radius * radius
    out: List[Point] = []

    def rec(prefix: List[int], rem: float):
        # rem = r^2 - sum of squares so far; strict inequality throughout
        if len(prefix) == d:
            out.append(tuple(c + ce for c, ce in zip(prefix, center)))
            return
        lim = int(math.floor(math.sqrt(rem)))
        for c in range(-lim, lim + 1):
            nr = rem - c * c
            if nr > 0:
                rec(prefix + [c], nr)

    rec([], r2 if r2 != int(r2) else r2 - 0.5)
    return frozenset(out)


def shell_reps(d: int, r_sq: int, count: int = 64) -> Tuple[List[Point], np.ndarray]:
    """Canonical lattice points with ||x||^2 exactly r_sq plus orbit weights.

    Reps are non-increasing nonnegative coordinate vectors; the weight of a
    rep is the size of its orbit under coordinate permutations and sign
    flips, so weighted averages over the reps equal exact sphere averages
    whenever all canonical forms fit within ``count``.
    """
    reps: List[Point] = []

    def rec(prefix: List[int], maxc: int, s: int):
        if len(reps) >= count:
            return
        if len(prefix) == d:
            if s == r_sq:
                reps.append(tuple(prefix))
            return
        rem = d - len(prefix) - 1
        for c in range(min(maxc, int(math.isqrt(r_sq - s))), -1, -1):
            if s + c * c + rem * c * c < r_sq:
                break
            rec(prefix + [c], c, s + c * c)

    rec([], int(math.isqrt(r_sq)), 0)
    if not reps:
        raise ValueError(f"no lattice point with norm^2 = {r_sq} in d={d}")
    weights = []
    for x in reps:
        counts: Dict[int, int] = {}
        for c in x:
            counts[c] = counts.get(c, 0) + 1
        w = math.factorial(d)
        for m in counts.values():
            w //= math.factorial(m)
        w *= 2 ** sum(1 for c in x if c != 0)
        weights.append(float(w))
    return reps, np.array(weights)


def shell_average(values: np.ndarray, weights: np.ndarray) -> float:
    return float(np.dot(values, weights) / weights.sum())


def annulus_reps(d: int, radius: float, count: int = 48, band: float = 0.08) -> List[Point]:
    """Deterministic representative lattice points with norm within
    ``band`` (relative) of ``radius``.  Canonical forms (sorted nonnegative
    coordinates) expanded with one axis permutation each; used to probe
    radial profiles without enumerating spheres."""
    lo2 = (radius * (1 - band)) ** 2
    hi2 = (radius * (1 + band)) ** 2
    found: List[Point] = []

    def rec(prefix: List[int], maxc: int, s: int):
        if len(found) >= count:
            return
        if len(prefix) == d:
            if lo2 <= s <= hi2:
                found.append(tuple(prefix))
            return
        rem = d - len(prefix) - 1
        for c in range(min(maxc, int(math.floor(math.sqrt(hi2 - s)))), -1, -1):
            # prune: even filling all remaining with c cannot reach lo2
            if s + c * c + rem * c * c < lo2:
                break
            rec(prefix + [c], c, s + c * c)
            if len(found) >= count:
                return

    rec([], int(math.floor(radius * (1 + band))), 0)
    if not found:
        raise ValueError(f"no lattice point near radius {radius} in d={d}")
    return found


def _lattice_spans_Zd(steps: Sequence[Sequence[int]], d: int) -> bool:
    """Integer echelon reduction: the subgroup of Z^d generated by the steps
    is all of Z^d iff the generated lattice has determinant +-1."""
    work = [list(s) for s in steps]
    det = 1
    for col in range(d):
        # Euclid on the column until a single nonzero entry remains
        while True:
            nz = [row for row in work if row[col] != 0]
            if len(nz) <= 1:
                break
            nz.sort(key=lambda row: abs(row[col]))
            p = nz[0]
            for row in nz[1:]:
                q = row[col] // p[col]
                for j in range(d):
                    row[j] -= q * p[j]
        pivot = next((row for row in work if row[col] != 0), None)
        if pivot is None:
            return False
        det *= pivot[col]
        work = [row for row in work if row is not pivot]
    return abs(det) == 1


@dataclass(frozen=True)
class JumpLaw:
    """Finite-support step distribution theta on Z^d.

    Invariants enforced at construction: probabilities sum to 1 (1e-12),
    the mean vector is exactly zero, and the support generates Z^d as a
    group.  ``axis_aligned`` is true when every step moves a single
    coordinate; the exact point engine requires it.
    """

    steps: Tuple[Point, ...]
    probs: Tuple[float, ...]

    def __post_init__(self):
        if not self.steps:
            raise ValueError("empty support")
        d = len(self.steps[0])
        if any(len(s) != d for s in self.steps):
            raise ValueError("inconsistent dimension")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {total}, not 1")
        if any(p <= 0 for p in self.probs):
            raise ValueError("probabilities must be positive")
        for j in range(d):
            mean_j = math.fsum(p * s[j] for s, p in zip(self.steps, self.probs))
            if mean_j != 0.0:
                raise ValueError(f"law is not centered (coordinate {j}: {mean_j})")
        if not _lattice_spans_Zd(self.steps, d):
            raise ValueError("support generates a strict subgroup of Z^d")

    @property
    def dim(self) -> int:
        return len(self.steps[0])

    @property
    def max_range(self) -> int:
        return max(max(abs(c) for c in s) for s in self.steps)

    @property
    def axis_aligned(self) -> bool:
        return all(sum(1 for c in s if c != 0) == 1 for s in self.steps)

    def coord_sq_moment(self) -> float:
        """max_j E[step_j^2]"""
        d = self.dim
        return max(
            math.fsum(p * s[j] * s[j] for s, p in zip(self.steps, self.probs))
            for j in range(d)
        )

    def steps_array(self) -> np.ndarray:
        return np.array(self.steps, dtype=np.int64)

    def probs_array(self) -> np.ndarray:
        return np.array(self.probs, dtype=float)

    def axis_decomposition(self) -> List[Tuple[float, Dict[int, float]]]:
        """Per axis j: (w_j, conditional 1-d law).  Requires axis alignment."""
        if not self.axis_aligned:
            raise ValueError("law is not axis-aligned")
        d = self.dim
        out: List[Tuple[float, Dict[int, float]]] = []
        for j in range(d):
            w = 0.0
            cond: Dict[int, float] = {}
            for s, p in zip(self.steps, self.probs):
                if s[j] != 0:
                    w += p
                    cond[s[j]] = cond.get(s[j], 0.0) + p
            if w == 0:
                raise ValueError(f"no step moves coordinate {j}")
            out.append((w, {k: v / w for k, v in cond.items()}))
        return out

    def _key(self) -> tuple:
        return (self.steps, self.probs)


def uniform_axis_law(d: int) -> JumpLaw:
    """The default law: uniform on the 2d unit vectors."""
    steps = []
    for j in range(d):
        e = [0] * d
        e[j] = 1
        steps.append(tuple(e))
        e2 = [0] * d
        e2[j] = -1
        steps.append(tuple(e2))
    p = 1.0 / (2 * d)
    return JumpLaw(tuple(steps), tuple([p] * (2 * d)))


# ---------------------------------------------------------------------------
# dense fields


@dataclass(frozen=True)
class ScalarField:
    """Values on the closed box {x : |x_i| <= box_radius}, origin-centred."""

    box_radius: int
    values: np.ndarray  # shape (2L+1,)*d
    error_bound: float = 0.0

    @property
    def dim(self) -> int:
        return self.values.ndim

    def at(self, x: Sequence[int]) -> float:
        L = self.box_radius
        if any(abs(c) > L for c in x):
            raise KeyError(f"{tuple(x)} outside box of radius {L}")
        return float(self.values[tuple(c + L for c in x)])

    def crop(self, radius: int) -> "ScalarField":
        if radius > self.box_radius:
            raise ValueError("cannot crop outward")
        L, r = self.box_radius, radius
        sl = tuple(slice(L - r, L + r + 1) for _ in range(self.dim))
        return ScalarField(r, self.values[sl].copy(), self.error_bound)

    def to_csv(self, path: str) -> None:
        """Header x1,...,xd,value; one row per box point, lexicographic order."""
        d, L = self.dim, self.box_radius
        with open(path, "w", encoding="utf8", newline="") as fh:
            fh.write(",".join(f"x{i+1}" for i in range(d)) + ",value\n")
            for idx in np.ndindex(*self.values.shape):
                coords = [i - L for i in idx]
                fh.write(",".join(str(c) for c in coords) + f",{self.values[idx]!r}\n")

    @classmethod
    def from_csv(cls, path: str) -> "ScalarField":
        with open(path, "r", encoding="utf8") as fh:
            header = fh.readline().strip().split(",")
            d = len(header) - 1
            rows = [line.strip().split(",") for line in fh if line.strip()]
        L = max(abs(int(r[0])) for r in rows)
        n = 2 * L + 1
        vals = np.zeros((n,) * d)
        for r in rows:
            idx = tuple(int(c) + L for c in r[:d])
            vals[idx] = float(r[d])
        return cls(L, vals)


def delta_field(d: int, box_radius: int) -> ScalarField:
    n = 2 * box_radius + 1
    v = np.zeros((n,) * d)
    v[(box_radius,) * d] = 1.0
    return ScalarField(box_radius, v)


_DENSE_CELL_LIMIT = 40_000_000


def _conv_step(cur: np.ndarray, steps: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """One convolution with the step kernel, zero flux through the boundary
    (mass stepping outside the box is dropped and tracked by the caller)."""
    out = np.zeros_like(cur)
    n = cur.shape[0]
    for s, p in zip(steps, probs):
        dst = []
        src = []
        ok = True
        for sj in s:
            a, b = max(0, sj), n + min(0, sj)
            if a >= b:
                ok = False
                break
            dst.append(slice(a, b))
            src.append(slice(a - sj, b - sj))
        if ok:
            out[tuple(dst)] += p * cur[tuple(src)]
    return out


def fit_tail_constant(jump: JumpLaw, nfit: int = 200) -> float:
    """Constant C with sup_x p_n(x) <= C n^{-d/2} for n in the fitted window,
    taken from p_n(0) over n <= nfit and inflated 2x.  Uses the point engine
    for axis laws, a small dense box otherwise (d <= 4 only)."""
    d = jump.dim
    if jump.axis_aligned:
        p0 = _pn_at_point(jump, (0,) * d, nfit)
    else:
        if d > 4:
            raise ValueError("general laws supported densely only for d <= 4")
        W = int(math.ceil(4 * math.sqrt(nfit * jump.coord_sq_moment()))) + jump.max_range
        cur = delta_field(d, W).values
        steps, probs = jump.steps_array(), jump.probs_array()
        p0 = np.zeros(nfit + 1)
        p0[0] = 1.0
        for n in range(1, nfit + 1):
            cur = _conv_step(cur, steps, probs)
            p0[n] = cur[(W,) * d]
    lo = max(8, nfit // 2)
    vals = [
        (p0[n] + (p0[n + 1] if n + 1 <= nfit else 0.0)) * n ** (d / 2)
        for n in range(lo, nfit)
    ]
    return 2.0 * max(vals)


def _truncation_n(C: float, d: int, tol: float) -> int:
    # C * integral_N^inf t^{-d/2} dt < tol
    if d < 3:
        raise ValueError("transient regime requires d >= 3")
    return max(8, int(math.ceil((2.0 * C / (tol * (d - 2))) ** (2.0 / (d - 2)))))


def srw_green(jump: JumpLaw, box_radius: int, tol: float) -> ScalarField:
    """Green's function g of the theta-walk on the closed box, by summing the
    n-step distributions up to the local-CLT truncation level.

    The working box is at least twice the requested radius and is widened to
    hold four standard deviations of the walk at the truncation time, so the
    mass absorbed at the working boundary stays negligible; the attached
    error_bound adds that absorbed mass to the n-tail bound.
    """
    if box_radius < 1:
        raise ValueError("box_radius must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = jump.dim
    if d < 3:
        raise ValueError("d < 3: the walk is not transient, the series diverges")
    C = fit_tail_constant(jump)
    N = _truncation_n(C, d, tol)
    msq = jump.coord_sq_moment()
    W = max(2 * box_radius, int(math.ceil(4.0 * math.sqrt(N * msq))) + jump.max_range)
    if (2 * W + 1) ** d > _DENSE_CELL_LIMIT:
        raise ValueError(
            f"dense box {(2*W+1)}^{d} exceeds the cell limit; "
            "use green_at for pointwise evaluation in high dimension"
        )
    steps, probs = jump.steps_array(), jump.probs_array()
    cur = delta_field(d, W).values
    acc = cur.copy()
    for _ in range(N):
        cur = _conv_step(cur, steps, probs)
        acc += cur
    lost = 1.0 - float(cur.sum())  # mass absorbed at the working boundary
    tail = C * (N ** (1 - d / 2)) * 2.0 / (d - 2)
    err = tail + lost * 2.0  # escaped walkers contribute at most g(0) ~ 2 on return
    return ScalarField(W, acc, err).crop(box_radius)


def brw_green(jump: JumpLaw, sigma2: float, box_radius: int, tol: float,
              variant: str = "invariant") -> ScalarField:
    """Green's function G of the past of an infinite-tree-indexed walk.

    Spinal decomposition: the past is the spine plus one adjoint critical
    tree per spine node, whose own Green's function is
    Ghat_c = delta + (sigma^2/2)(g - delta).  Summing over the spine gives

        invariant tree:  G = (g - delta) * Ghat_c
        Kesten's tree:   G = g * Ghat_c - delta

    (the invariant tree has no past trees at the root; Kesten's does).  The
    Monte Carlo occupation calibration in the test-suite pins "invariant" as
    the convention matching the sampled trees; see README.  Everything
    reduces to weighted n-step sums: g*g = sum_n (n+1) p_n.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    d = jump.dim
    if d < 5:
        raise ValueError("G requires d >= 5")
    if variant not in ("invariant", "kesten"):
        raise ValueError(f"unknown variant {variant!r}")
    C = fit_tail_constant(jump)
    # tail of sum (n+1) p_n needs the heavier exponent
    N = max(_truncation_n(C, d, tol),
            int(math.ceil((4.0 * C / (tol * (d - 4))) ** (2.0 / (d - 4)))))
    msq = jump.coord_sq_moment()
    W = max(2 * box_radius, int(math.ceil(4.0 * math.sqrt(N * msq))) + jump.max_range)
    if (2 * W + 1) ** d > _DENSE_CELL_LIMIT:
        raise ValueError("dense box too large; use brw_green_at")
    steps, probs = jump.steps_array(), jump.probs_array()
    cur = delta_field(d, W).values
    g = cur.copy()
    gg = cur.copy()  # accumulates (n+1) p_n
    for n in range(1, N + 1):
        cur = _conv_step(cur, steps, probs)
        g += cur
        gg += (n + 1) * cur
    half = sigma2 / 2.0
    G = half * gg + (1.0 - sigma2) * g
    center = (W,) * d
    if variant == "invariant":
        G[center] -= 1.0 - half
    else:
        G[center] += half - 1.0  # g*Ghat_c - delta has the same delta offset
    tail = C * (N ** (1 - d / 2)) * 2.0 / (d - 2) * abs(1.0 - sigma2) \
        + half * C * (N ** (2 - d / 2)) * 4.0 / (d - 4)
    lost = 1.0 - float(cur.sum())
    return ScalarField(W, G, tail + 4.0 * lost).crop(box_radius)


def convolve(f: ScalarField, h: ScalarField) -> ScalarField:
    """(f*h)(x) = sum_y f(y) h(x-y), fields read as zero outside their boxes,
    restricted to the smaller box.  Each output point is summed with
    math.fsum, so the operation is exactly commutative (the multiset of
    products is symmetric in f and h).  Oracle-grade: O(|box_f|*|box_out|).
    """
    if f.dim != h.dim:
        raise ValueError("dimension mismatch")
    d = f.dim
    r = min(f.box_radius, h.box_radius)
    n = 2 * r + 1
    out = np.zeros((n,) * d)
    Lf, Lh = f.box_radius, h.box_radius
    fv, hv = f.values, h.values
    for xi in np.ndindex(*out.shape):
        x = tuple(i - r for i in xi)
        terms = []
        for yi in np.ndindex(*fv.shape):
            fy = fv[yi]
            if fy == 0.0:
                continue
            z = tuple(xc - (yc - Lf) for xc, yc in zip(x, yi))
            if all(abs(c) <= Lh for c in z):
                hz = hv[tuple(c + Lh for c in z)]
                if hz != 0.0:
                    terms.append(fy * hz)
        out[xi] = math.fsum(terms)
    return ScalarField(r, out, f.error_bound + h.error_bound)


# ---------------------------------------------------------------------------
# point engine (axis-aligned laws)


@lru_cache(maxsize=8)
def _oned_tables(law_key, nmax: int, vmax: int):
    """m-step distributions of a 1-d signed-step law, columns |t| <= vmax.

    Returns an (nmax+1, 2*vmax+1) array Q with Q[m, vmax+t] = P(1-d walk of m
    steps is at t).  The full width is kept during the recursion.
    """
    cond = dict(law_key)
    rho = max(abs(t) for t in cond)
    width = rho * nmax
    cur = np.zeros(2 * width + 1)
    cur[width] = 1.0
    keep = np.zeros((nmax + 1, 2 * vmax + 1))
    keep[0, vmax] = 1.0
    for m in range(1, nmax + 1):
        nxt = np.zeros_like(cur)
        for t, p in cond.items():
            if t >= 0:
                nxt[t:] += p * cur[: cur.size - t] if t else p * cur
            else:
                nxt[:t] += p * cur[-t:]
        cur = nxt
        keep[m] = cur[width - vmax: width + vmax + 1]
    return keep


def _pn_at_point(jump: JumpLaw, x: Point, nmax: int) -> np.ndarray:
    """Exact p_n(x) for n = 0..nmax via per-coordinate composition."""
    return _pn_at_points(jump, (tuple(x),), nmax)[0]


def _axis_transfer(alpha: float, beta: float, qcol: np.ndarray, nmax: int) -> np.ndarray:
    """Transfer matrix T[n, k] = C(n, k) alpha^k beta^(n-k) qcol[n-k]:
    of n total steps, k stayed on the previous axes (weight alpha each) and
    n-k ran the new axis (weight beta, landing per qcol).  The new step-count
    profile is D_new[n] = sum_k T[n, k] D_old[k].  Entries are binomial
    probabilities times qcol, hence <= 1; built in log space (convention
    0 * log 0 = 0) to dodge factorial overflow."""
    n_idx = np.arange(nmax + 1)
    lg = gammaln(n_idx + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        lq = np.where(qcol > 0, np.log(np.maximum(qcol, 1e-320)), -np.inf)
        la = math.log(alpha) if alpha > 0 else -math.inf
        lb = math.log(beta) if beta > 0 else -math.inf
        T = np.full((nmax + 1, nmax + 1), -np.inf)
        for n in range(nmax + 1):
            k = np.arange(n + 1)
            lc = lg[n] - lg[k] - lg[n - k]
            ta = np.where(k == 0, 0.0, k * la)
            tb = np.where(n - k == 0, 0.0, (n - k) * lb)
            T[n, : n + 1] = lc + ta + tb + lq[n - k]
    out = np.zeros_like(T)
    np.exp(T, where=np.isfinite(T), out=out)
    return out


def _pn_at_points(jump: JumpLaw, points: Tuple[Point, ...], nmax: int) -> np.ndarray:
    """p_n(x) for each point, shape (len(points), nmax+1)."""
    d = jump.dim
    decomp = jump.axis_decomposition()
    vmax = max(1, max(abs(c) for x in points for c in x))
    P = len(points)
    D = np.zeros((P, nmax + 1))
    D[:, 0] = 1.0
    Wprev = 0.0
    for j, (w, cond) in enumerate(decomp):
        law_key = tuple(sorted(cond.items()))
        Q = _oned_tables(law_key, nmax, vmax)
        Wj = Wprev + w
        alpha, beta = Wprev / Wj, w / Wj
        coords = sorted({x[j] for x in points})
        Mcache = {}
        newD = np.zeros_like(D)
        for v in coords:
            M = Mcache.get(v)
            if M is None:
                M = _axis_transfer(alpha, beta, Q[:, vmax + v], nmax)
                Mcache[v] = M
            rows = [i for i, x in enumerate(points) if x[j] == v]
            newD[rows] = D[rows] @ M.T
        D = newD
        Wprev = Wj
    return D


_POINT_CACHE: Dict[tuple, tuple] = {}


def _canon(x: Sequence[int]) -> Point:
    return tuple(sorted((abs(c) for c in x), reverse=True))


def _green_sums(jump: JumpLaw, points: Sequence[Point], nmax: int):
    """Returns (g, gg, tail_g, tail_gg) arrays where gg = sum (n+1)p_n.

    The n > nmax remainder is completed with the fitted local-CLT profile
    a_x n^{-d/2} estimated from the last computed stretch; the returned tail
    columns hold the completed remainders (already added into g and gg).
    """
    d = jump.dim
    canon_pts = tuple(sorted({_canon(x) for x in points}))
    missing = [x for x in canon_pts if (jump._key(), x, nmax) not in _POINT_CACHE]
    if missing:
        pn = _pn_at_points(jump, tuple(missing), nmax)
        ns = np.arange(nmax + 1)
        lo = max(8, nmax // 2)
        if (nmax - lo) % 2 == 0:
            lo += 1  # even window length balances the parity classes
        for i, x in enumerate(missing):
            p = pn[i]
            # per-n tail amplitude, averaged over parity (zeros included)
            window = p[lo:] * (ns[lo:] ** (d / 2.0))
            a = float(np.mean(window))
            tail_g = a * (nmax ** (1 - d / 2)) / (d / 2 - 1)
            tail_gg = a * (nmax ** (2 - d / 2)) / (d / 2 - 2) if d > 4 else math.inf
            g = float(p.sum()) + tail_g
            gg = float((p * (ns + 1)).sum()) + tail_gg + tail_g
            _POINT_CACHE[(jump._key(), x, nmax)] = (g, gg, tail_g, tail_gg)
    out = np.array([_POINT_CACHE[(jump._key(), _canon(x), nmax)] for x in points])
    return out[:, 0], out[:, 1], out[:, 2], out[:, 3]


def _default_nmax(points: Sequence[Point], d: int) -> int:
    r2 = max((norm_sq(x) for x in points), default=1)
    return max(600, int(6 * r2))


def green_at(jump: JumpLaw, points: Sequence[Point], nmax: Optional[int] = None) -> np.ndarray:
    """g evaluated at the given points (axis-aligned laws, any d >= 3)."""
    d = jump.dim
    if d < 3:
        raise ValueError("d >= 3 required")
    pts = [tuple(x) for x in points]
    nmax = nmax or _default_nmax(pts, d)
    g, _, _, _ = _green_sums(jump, pts, nmax)
    return g


def brw_green_at(jump: JumpLaw, sigma2: float, points: Sequence[Point],
                 nmax: Optional[int] = None, variant: str = "invariant") -> np.ndarray:
    """G evaluated pointwise; see brw_green for the convention."""
    d = jump.dim
    if d < 5:
        raise ValueError("d >= 5 required")
    if variant not in ("invariant", "kesten"):
        raise ValueError(f"unknown variant {variant!r}")
    pts = [tuple(x) for x in points]
    nmax = nmax or _default_nmax(pts, d)
    g, gg, _, _ = _green_sums(jump, pts, nmax)
    half = sigma2 / 2.0
    G = half * gg + (1.0 - sigma2) * g
    delta = np.array([1.0 if norm_sq(x) == 0 else 0.0 for x in pts])
    return G - (1.0 - half) * delta


@lru_cache(maxsize=32)
def green_upper_envelope(jump_key, sigma2: float, d: int, variant: str = "kesten") -> float:
    """Constant C with G(x) <= C / (1 + ||x||^{d-4}) on probed axis points,
    inflated 1.5x; used for truncation-bias bounds, not for estimates."""
    jump = JumpLaw(*jump_key)
    pts = [tuple([r] + [0] * (d - 1)) for r in range(0, 17)]
    G = brw_green_at(jump, sigma2, pts, variant=variant)
    vals = [G[i] * (1 + norm_sq(pts[i]) ** ((d - 4) / 2)) for i in range(len(pts))]
    return 1.5 * float(max(vals))


# ---------------------------------------------------------------------------
# radial machinery: shell counts and convolutions of radial envelopes


@lru_cache(maxsize=16)
def shell_counts(d: int, qmax: int) -> np.ndarray:
    """r_d(q) = number of x in Z^d with ||x||^2 = q, for q = 0..qmax.

    Computed by convolving the 1-d theta series d times (float64; counts are
    exact until they exceed 2^53, large ones only feed envelope checks).
    """
    theta = np.zeros(qmax + 1)
    t = 0
    while t * t <= qmax:
        theta[t * t] += 1.0 if t == 0 else 2.0
        t += 1
    cur = np.zeros(qmax + 1)
    cur[0] = 1.0
    for _ in range(d):
        new = np.zeros(qmax + 1)
        for q in range(qmax + 1):
            if theta[q]:
                new[q:] += theta[q] * cur[: qmax + 1 - q]
        cur = new
    return cur


def _radial_conv_at_axis(d: int, F: np.ndarray, H: np.ndarray, t: int, Y: int) -> float:
    """sum_{y in box(Y)} F[||y||^2] H[||y - t e_1||^2] for radial tables
    F, H indexed by squared norm (length >= Y^2 + (Y+t)^2 + 1)."""
    counts = shell_counts(d - 1, Y * Y)
    total = 0.0
    q = np.arange(Y * Y + 1)
    for y1 in range(-Y, Y + 1):
        a = y1 * y1 + q          # ||y||^2
        b = (y1 - t) ** 2 + q    # ||y - x||^2
        total += float(np.dot(counts, F[a] * H[b]))
    return total


def _power_table(exponent: float, smax: int) -> np.ndarray:
    """table[s] = min(1, s^{-exponent/2}) as a function of squared norm."""
    s = np.arange(smax + 1, dtype=float)
    with np.errstate(divide="ignore"):
        vals = s ** (-exponent / 2.0)
    vals[0] = 1.0
    return np.minimum(vals, 1.0)


def convolution_bound_check(d: int, a: float, b: float,
                            probe_radii: Sequence[int] = (4, 8, 16),
                            box_mult: int = 4) -> dict:
    """Check of the convolution envelope for f = ||x||^{-a}^1, h = ||x||^{-b}^1.

    Cases: a < d and a+b > d gives envelope ||x||^{d-(a+b)}; a > d gives
    ||x||^{-b}.  Evaluates f*h at axis probes x = t e_1 by exact shell sums
    over the box of radius box_mult * max radius, and reports the fitted
    constant sup (f*h)/envelope together with the spread of that ratio
    across the probes (boundedness across doubling radii).
    """
    if not (a >= b > 0):
        raise ValueError("need a >= b > 0")
    if a > d:
        env_exp = b
    elif a < d and a + b > d:
        env_exp = a + b - d
    else:
        raise ValueError("parameters outside the two envelope cases")
    tmax = max(probe_radii)
    Y = box_mult * tmax
    smax = Y * Y + (Y + tmax) ** 2 + 1
    F = _power_table(a, smax)
    H = _power_table(b, smax)
    ratios = {}
    for t in probe_radii:
        val = _radial_conv_at_axis(d, F, H, t, Y)
        env = t ** (-float(env_exp))
        ratios[t] = val / env
    vals = list(ratios.values())
    return {
        "envelope_exponent": -float(env_exp),
        "fitted_constant": max(vals),
        "max_violation_ratio": max(vals) / min(vals),
        "ratios": {str(k): v for k, v in ratios.items()},
    }


def chain_envelope_step(d: int, k: int, probe_radii: Sequence[int] = (4, 8, 16),
                        box_mult: int = 4) -> dict:
    """One rung of the chain bound: convolving 1/(1+||.||^{d-4}) against
    1/(1+||.||^{d-k}) should stay within 1/(1+||.||^{d-4-k}) for 4 <= k < d-4.
    Returns fitted constant and ratio spread at axis probes."""
    if not (4 <= k < d - 4):
        raise ValueError("rung outside the regime 4 <= k < d-4")
    tmax = max(probe_radii)
    Y = box_mult * tmax
    smax = Y * Y + (Y + tmax) ** 2 + 1
    s = np.arange(smax + 1, dtype=float)
    F = 1.0 / (1.0 + s ** ((d - 4) / 2.0))
    H = 1.0 / (1.0 + s ** ((d - k) / 2.0))
    ratios = {}
    for t in probe_radii:
        val = _radial_conv_at_axis(d, F, H, t, Y)
        env = 1.0 / (1.0 + t ** (d - 4.0 - k))
        ratios[t] = val / env
    vals = list(ratios.values())
    return {
        "exponent_in": d - 4,
        "exponent_out": d - 4 - k,
        "fitted_constant": max(vals),
        "max_violation_ratio": max(vals) / min(vals),
        "ratios": {str(k2): v for k2, v in ratios.items()},
    }
