"""Gauges on [0, 1] and constructive delta-fine tagged partitions.

A tagged interval ([a, b], t) is delta-fine when [a, b] is contained in the
open ball (t - delta(t), t + delta(t)).  Partitions are stored as three
parallel arrays (left ends, right ends, tags) sorted by left end.

Gauge evaluators must be vectorized: they receive a float array and return
an array of the same shape.  Plain scalar callables are wrapped with
``np.vectorize`` on first failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

MAX_DEPTH = 60
N_SAMPLE_TAGS = 32
N_ADVERSARIAL = 64
N_RANDOM_ATTEMPTS = 8
# breadth-first bisection stops once this many intervals are pending at one depth
MAX_PENDING = 2**21
# skip the sampled tags of an interval whose half-length exceeds this multiple
# of every gauge value seen at its midpoint and endpoints
SAMPLE_FILTER = 4.0
TINY = np.finfo(float).tiny

FLAVORS = ("perron", "free", "interior-perron")


class PartitionError(ValueError):
    """Invalid partition or gauge input."""


class MaxDepthExceeded(PartitionError):
    """Bisection hit the depth limit; ``interval`` is the first unresolved piece."""

    def __init__(self, interval, depth):
        self.interval = interval
        self.depth = depth
        super().__init__(
            f"no delta-fine tag found for [{interval.a!r}, {interval.b!r}] at depth {depth}"
        )


class PartitionTooLarge(MaxDepthExceeded):
    """Too many intervals pending before the depth limit; the gauge is too small to bisect."""

    def __init__(self, interval, depth, pending):
        self.pending = pending
        super().__init__(interval, depth)
        self.args = (f"{pending} intervals pending at depth {depth}, first unresolved "
                     f"[{interval.a!r}, {interval.b!r}]",)


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not (0.0 <= self.a <= self.b <= 1.0):
            raise PartitionError(f"bad interval [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class TaggedInterval:
    interval: Interval
    tag: float


def _radical_inverse(n: int, base: int = 3) -> float:
    out, f = 0.0, 1.0 / base
    while n:
        n, r = divmod(n, base)
        out += r * f
        f /= base
    return out


SAMPLE_POSITIONS = np.array([_radical_inverse(j + 1) for j in range(N_SAMPLE_TAGS)])


# ---------------------------------------------------------------------------
# gauges


@dataclass(frozen=True, eq=False)
class Gauge:
    """Strictly positive function on [0, 1].

    ``kind`` is ``"general"`` or ``"step"``; step gauges also carry their
    cells as ``(a, b, level)`` triples (``a == b`` marks a one-point cell).
    """

    fn: Callable
    kind: str = "general"
    cells: tuple = ()
    floor: float | None = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("general", "step"):
            raise PartitionError(f"unknown gauge kind {self.kind!r}")

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        try:
            v = np.asarray(self.fn(t_arr), dtype=float)
            v = np.broadcast_to(v, t_arr.shape)
        except (TypeError, ValueError):
            v = np.vectorize(lambda s: float(self.fn(s)), otypes=[float])(t_arr)
        if self.floor is not None:
            v = np.maximum(v, self.floor)
        return float(v) if v.ndim == 0 else np.array(v)

    def transport(self, a: float, b: float) -> "Gauge":
        """Gauge on [0, 1] whose fine partitions map affinely onto fine partitions of [a, b]."""
        a, b = float(a), float(b)
        if not 0.0 <= a < b <= 1.0:
            raise PartitionError(f"cannot transport onto [{a}, {b}]")
        if a == 0.0 and b == 1.0:
            return self
        L = b - a
        fn = self.fn

        def moved(s):
            return np.asarray(fn(a + L * np.asarray(s, dtype=float)), dtype=float) / L

        cells = []
        if self.kind == "step":
            for c0, c1, lev in self.cells:
                solid = c1 > c0 and c1 > a and c0 < b
                if solid or (c0 == c1 and a <= c0 <= b):
                    cells.append(((max(c0, a) - a) / L, (min(c1, b) - a) / L, lev / L))
        return Gauge(moved, self.kind, tuple(cells), self.floor,
                     f"{self.label}@[{a:.6g},{b:.6g}]")


def constant_gauge(value: float) -> Gauge:
    if not value > 0:
        raise PartitionError("gauge must be strictly positive")
    v = float(value)
    return Gauge(lambda t: np.full(np.shape(t), v), label=f"const {v:.6g}")


def _step_evaluator(edges: np.ndarray, levels: np.ndarray, points: np.ndarray, plevels: np.ndarray):
    inner = edges[1:-1]
    left_of = levels[:-1]
    right_of = levels[1:]

    def fn(t):
        t = np.asarray(t, dtype=float)
        j = np.clip(np.searchsorted(edges, t, side="right") - 1, 0, len(levels) - 1)
        out = levels[j]
        if inner.size:
            k = np.searchsorted(inner, t)
            kk = np.minimum(k, inner.size - 1)
            on_edge = inner[kk] == t
            out = np.where(on_edge, np.minimum(left_of[kk], right_of[kk]), out)
        for s, lev in zip(points, plevels):
            out = np.where(t == s, lev, out)
        return out

    return fn


def step_gauge(cells: Sequence) -> Gauge:
    """Piecewise-constant gauge from ``[(Interval or (a, b), level), ...]``.

    The cells must tile [0, 1]; a shared endpoint takes the smaller of the two
    levels.  Degenerate cells ``(s, s)`` set the value at the single point s.
    """
    flat = []
    for item in cells:
        iv, lev = item
        a, b = (iv.a, iv.b) if isinstance(iv, Interval) else (float(iv[0]), float(iv[1]))
        if not 0.0 <= a <= b <= 1.0:
            raise PartitionError(f"bad cell [{a}, {b}]")
        if not lev > 0:
            raise PartitionError("step levels must be > 0")
        flat.append((a, b, float(lev)))
    if not flat:
        raise PartitionError("no cells")
    solid = sorted((c for c in flat if c[1] > c[0]), key=lambda c: c[0])
    points = [c for c in flat if c[1] == c[0]]
    if not solid or solid[0][0] != 0.0 or solid[-1][1] != 1.0:
        raise PartitionError("cells do not cover [0, 1]")
    for (a0, b0, _), (a1, _, _) in zip(solid, solid[1:]):
        if a1 < b0:
            raise PartitionError(f"cells overlap near {a1}")
        if a1 > b0:
            raise PartitionError(f"cells leave a gap ({b0}, {a1})")
    if len({c[0] for c in points}) != len(points):
        raise PartitionError("duplicate one-point cells")
    edges = np.array([c[0] for c in solid] + [1.0])
    levels = np.array([c[2] for c in solid])
    pts = np.array([c[0] for c in points])
    plev = np.array([c[2] for c in points])
    fn = _step_evaluator(edges, levels, pts, plev)
    return Gauge(fn, "step", tuple(solid + points), label=f"step[{len(flat)} cells]")


def refine_gauge(delta: Gauge, factor: float) -> Gauge:
    """Pointwise ``factor * delta``; the kind (and step cells) carry over."""
    if not 0.0 < factor < 1.0:
        raise PartitionError("factor must lie in (0, 1)")
    f = float(factor)
    if delta.kind == "step":
        return step_gauge([((a, b), lev * f) for a, b, lev in delta.cells])
    fn = delta.fn
    return Gauge(lambda t: f * np.asarray(fn(t), dtype=float), "general", (), delta.floor,
                 f"{delta.label}*{f:.6g}")


@dataclass(frozen=True)
class Singularity:
    """Point where the gauge profile must shrink: coef * |t - point| ** power nearby."""

    point: float
    coef: float = 1.0
    power: float = 1.0
    at_point: float = 1e-9


@dataclass(frozen=True)
class GaugeProfile:
    """Gauge family delta_k = 2**-k * min(base, coef * |t - s| ** power over singularities).

    At a singular point itself the value is ``at_point``.
    """

    base: float = 0.5
    singularities: tuple = ()

    def __post_init__(self):
        if not self.base > 0:
            raise PartitionError("profile base must be > 0")
        for s in self.singularities:
            if not (0.0 <= s.point <= 1.0 and s.coef > 0 and s.power > 0 and s.at_point > 0):
                raise PartitionError(f"bad singularity {s}")

    @property
    def breakpoints(self) -> tuple:
        return tuple(sorted({s.point for s in self.singularities if 0.0 < s.point < 1.0}))

    def value(self, t, k: int = 0):
        t = np.asarray(t, dtype=float)
        v = np.full(t.shape, self.base)
        for s in self.singularities:
            v = np.minimum(v, s.coef * np.abs(t - s.point) ** s.power)
        for s in self.singularities:
            v = np.where(t == s.point, s.at_point, v)
        return np.maximum(v * 2.0 ** -k, TINY)

    def gauge(self, k: int = 0) -> Gauge:
        return Gauge(lambda t: self.value(t, k), label=f"profile 2^-{k}")

    def step_gauge(self, k: int = 0) -> Gauge:
        """Step approximation of level k.

        Geometric shells (halving toward each singular point) carry the
        minimum of the profile over the shell; the shell touching the point
        uses the profile at its midpoint, and the point is a cell of its own.
        """
        lam = 2.0 ** -k
        br = {0.0, 1.0}
        for s in self.singularities:
            br.add(s.point)
            r = min(1.0, (self.base / s.coef) ** (1.0 / s.power))
            stop = s.at_point * lam
            for _ in range(MAX_DEPTH):
                for x in (s.point - r, s.point + r):
                    if 0.0 < x < 1.0:
                        br.add(x)
                if r <= stop:
                    break
                r *= 0.5
        edges = np.array(sorted(br))
        cells = []
        pts = {s.point for s in self.singularities}
        for a, b in zip(edges[:-1], edges[1:]):
            lev = self.base
            for s in self.singularities:
                if a < s.point < b:
                    d = 0.0
                else:
                    d = min(abs(a - s.point), abs(b - s.point))
                if d == 0.0:
                    d = 0.5 * (b - a)
                lev = min(lev, s.coef * d ** s.power)
            cells.append(((float(a), float(b)), max(lev * lam, TINY)))
        for s in self.singularities:
            if s.point in pts:
                cells.append(((s.point, s.point), s.at_point * lam))
                pts.discard(s.point)
        g = step_gauge(cells)
        return Gauge(g.fn, "step", g.cells, None, f"step profile 2^-{k}")


# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True, eq=False)
class TaggedPartition:
    """Finite tagged partition stored column-wise."""

    a: np.ndarray
    b: np.ndarray
    tags: np.ndarray
    flavor: str = "perron"
    depth: int = 0

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise PartitionError(f"unknown flavor {self.flavor!r}")
        arrs = []
        for name in ("a", "b", "tags"):
            v = np.array(getattr(self, name), dtype=float).reshape(-1)
            v.setflags(write=False)
            object.__setattr__(self, name, v)
            arrs.append(v)
        if not (len(arrs[0]) == len(arrs[1]) == len(arrs[2])):
            raise PartitionError("column lengths differ")

    def __len__(self):
        return len(self.a)

    @property
    def lengths(self) -> np.ndarray:
        return self.b - self.a

    @property
    def items(self) -> list[TaggedInterval]:
        return [TaggedInterval(Interval(float(x), float(y)), float(t))
                for x, y, t in zip(self.a, self.b, self.tags)]

    def with_tags(self, tags, flavor: str | None = None) -> "TaggedPartition":
        return TaggedPartition(self.a, self.b, tags, flavor or self.flavor, self.depth)

    def is_full(self, atol: float = 1e-12) -> bool:
        """Intervals tile [0, 1]: consecutive, starting at 0, ending at 1."""
        if len(self) == 0:
            return False
        return bool(self.a[0] == 0.0 and self.b[-1] == 1.0
                    and np.all(self.a[1:] == self.b[:-1])
                    and abs(self.lengths.sum() - 1.0) <= atol)

    def mapped(self, lo: float, hi: float) -> "TaggedPartition":
        """Affine image of a partition of [0, 1] on [lo, hi]."""
        L = hi - lo
        return TaggedPartition(lo + L * self.a, lo + L * self.b, lo + L * self.tags,
                               self.flavor, self.depth)


def fine_mask(t, a, b, d):
    return (t - d < a) & (b < t + d)


def flavor_ok(p: TaggedPartition) -> np.ndarray:
    a, b, t = p.a, p.b, p.tags
    if p.flavor == "free":
        return np.ones(len(p), dtype=bool)
    if p.flavor == "perron":
        return (a <= t) & (t <= b)
    inner = (a < t) & (t < b)
    return inner | ((t == 0.0) & (a == 0.0)) | ((t == 1.0) & (b == 1.0))


def is_delta_fine(p: TaggedPartition, delta: Gauge) -> bool:
    """Every item satisfies I within (t - delta(t), t + delta(t)) and the flavor's tag rule."""
    if len(p) == 0:
        return False
    if np.any(p.a > p.b) or np.any(p.a[1:] < p.b[:-1]):
        return False
    d = delta(p.tags)
    return bool(np.all(fine_mask(p.tags, p.a, p.b, d)) and np.all(flavor_ok(p)))


def cousin_perron_partition(delta: Gauge, max_depth: int = MAX_DEPTH) -> TaggedPartition:
    """Delta-fine Perron partition of [0, 1] by breadth-first bisection.

    Each pending interval tries its midpoint, then its endpoints, then the
    32 low-discrepancy points; intervals with no fine tag are halved.
    """
    out_a, out_b, out_t = [], [], []
    a = np.array([0.0])
    b = np.array([1.0])
    depth = 0
    for depth in range(max_depth + 1):
        n = len(a)
        tag = np.full(n, np.nan)
        todo = np.ones(n, dtype=bool)
        m = 0.5 * (a + b)
        dseen = np.zeros(n)
        for cand in (m, a, b):
            idx = np.flatnonzero(todo)
            if idx.size == 0:
                break
            t = cand[idx]
            d = np.asarray(delta(t), dtype=float)
            dseen[idx] = np.maximum(dseen[idx], d)
            ok = fine_mask(t, a[idx], b[idx], d)
            tag[idx[ok]] = t[ok]
            todo[idx[ok]] = False
        idx = np.flatnonzero(todo & (0.5 * (b - a) < SAMPLE_FILTER * dseen))
        if idx.size:
            # all sample positions at once; each interval takes its first feasible one
            lo, hi = a[idx, None], b[idx, None]
            t = lo + SAMPLE_POSITIONS[None, :] * (hi - lo)
            d = np.asarray(delta(t.ravel()), dtype=float).reshape(t.shape)
            ok = fine_mask(t, lo, hi, d)
            hit = ok.any(axis=1)
            first = ok.argmax(axis=1)
            tag[idx[hit]] = t[hit, first[hit]]
            todo[idx[hit]] = False
        done = ~todo
        out_a.append(a[done])
        out_b.append(b[done])
        out_t.append(tag[done])
        if not todo.any():
            break
        if depth == max_depth:
            i = int(np.flatnonzero(todo)[0])
            raise MaxDepthExceeded(Interval(float(a[i]), float(b[i])), depth)
        if 2 * todo.sum() > MAX_PENDING:
            i = int(np.flatnonzero(todo)[0])
            raise PartitionTooLarge(Interval(float(a[i]), float(b[i])), depth, 2 * int(todo.sum()))
        a, m, b = a[todo], m[todo], b[todo]
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
    A = np.concatenate(out_a)
    order = np.argsort(A, kind="stable")
    return TaggedPartition(A[order], np.concatenate(out_b)[order],
                           np.concatenate(out_t)[order], "perron", depth)


def _norms(phi, t):
    v = np.asarray(phi(t), dtype=float)
    if v.ndim == 2:
        v = np.linalg.norm(v, axis=1)
    return np.abs(v)


def adversarial_window(delta: Gauge, p: TaggedPartition):
    """Free-tag search window [b - 2 delta(t0), a + 2 delta(t0)] clipped to [0, 1]."""
    R = 2.0 * np.asarray(delta(p.tags), dtype=float)
    return np.maximum(0.0, p.b - R), np.minimum(1.0, p.a + R)


def free_tag_partition(delta: Gauge, strategy: str = "nearest", phi=None, seed: int = 0,
                       base: TaggedPartition | None = None) -> TaggedPartition:
    """Delta-fine free-tag (McShane) partition of [0, 1].

    The geometry comes from ``cousin_perron_partition`` (or ``base``); tags
    are then re-chosen inside the window [b - 2 delta(t0), a + 2 delta(t0)]
    around each base tag t0:

    * ``nearest``: keep the base tags;
    * ``uniform-random``: up to 8 seeded uniform draws, first fine one wins;
    * ``adversarial``: among 64 evenly spaced window points and the base tag,
      a fine tag maximizing ``||phi(t)||``.
    """
    p = base if base is not None else cousin_perron_partition(delta)
    t0 = p.tags
    if strategy == "nearest":
        return p.with_tags(t0, "free")
    lo, hi = adversarial_window(delta, p)
    if strategy == "uniform-random":
        rng = np.random.default_rng(seed)
        tags = t0.copy()
        todo = np.ones(len(p), dtype=bool)
        for _ in range(N_RANDOM_ATTEMPTS):
            draw = lo + (hi - lo) * rng.random(len(p))
            idx = np.flatnonzero(todo)
            t = draw[idx]
            ok = fine_mask(t, p.a[idx], p.b[idx], np.asarray(delta(t), dtype=float))
            tags[idx[ok]] = t[ok]
            todo[idx[ok]] = False
        return p.with_tags(tags, "free")
    if strategy == "adversarial":
        if phi is None:
            raise PartitionError("adversarial strategy needs phi")
        best_t = t0.copy()
        best_v = _norms(phi, t0)
        for j in range(N_ADVERSARIAL):
            t = lo + (hi - lo) * (j / (N_ADVERSARIAL - 1))
            ok = fine_mask(t, p.a, p.b, np.asarray(delta(t), dtype=float))
            v = np.where(ok, _norms(phi, t), -np.inf)
            better = v > best_v
            best_t = np.where(better, t, best_t)
            best_v = np.where(better, v, best_v)
        return p.with_tags(best_t, "free")
    raise PartitionError(f"unknown strategy {strategy!r}")


def random_perron_retag(delta: Gauge, p: TaggedPartition, seed: int) -> TaggedPartition:
    """Same intervals, tags redrawn uniformly inside each interval while staying fine."""
    rng = np.random.default_rng(seed)
    tags = p.tags.copy()
    todo = np.ones(len(p), dtype=bool)
    for _ in range(N_RANDOM_ATTEMPTS):
        draw = p.a + (p.b - p.a) * rng.random(len(p))
        idx = np.flatnonzero(todo)
        t = draw[idx]
        ok = fine_mask(t, p.a[idx], p.b[idx], np.asarray(delta(t), dtype=float))
        tags[idx[ok]] = t[ok]
        todo[idx[ok]] = False
    return p.with_tags(tags)


def interiorize_partition(p: TaggedPartition, phi, eps: float, delta: Gauge | None = None
                          ) -> TaggedPartition:
    """Move the shared endpoints that carry a tag so every tag becomes interior.

    A boundary x with a tag sitting on it is shifted by eta into the
    neighbouring interval.  eta stays below half the distance to the
    neighbour's tag, below the tag's gauge margin when ``delta`` is given,
    and below eps / (2K (||phi(t_k)|| + ||phi(t_k+1)|| + 1)), so that
    sum_k ||phi(t_k)|| * | |I_k| - |I'_k| | < eps.
    """
    if not eps > 0:
        raise PartitionError("eps must be > 0")
    t = p.tags
    if len(np.unique(t)) != len(t):
        raise PartitionError("tags must be pairwise distinct")
    K = len(p)
    a, b = p.a.copy(), p.b.copy()
    nrm = _norms(phi, t)
    dt = np.asarray(delta(t), dtype=float) if delta is not None else np.full(K, np.inf)
    for k in range(K - 1):
        x = b[k]
        if a[k + 1] != x:
            continue
        cap = eps / (2.0 * K * (nrm[k] + nrm[k + 1] + 1.0))
        if t[k] == x:
            # grow I_k to the right; I_{k+1} keeps its tag strictly inside
            margin = (t[k] + dt[k]) - x
            eta = min(0.5 * (t[k + 1] - x), 0.5 * margin, cap)
            x_new = x + eta
        elif t[k + 1] == x:
            margin = x - (t[k + 1] - dt[k + 1])
            eta = min(0.5 * (x - t[k]), 0.5 * margin, cap)
            x_new = x - eta
        else:
            continue
        if not eta > 0:
            raise PartitionError(f"no room to move the boundary at {x}")
        b[k] = a[k + 1] = x_new
    return TaggedPartition(a, b, t, "interior-perron", p.depth)


def interiorization_cost(p: TaggedPartition, q: TaggedPartition, phi) -> float:
    """sum_k ||phi(t_k)|| * | |I_k| - |I'_k| | between two partitions with the same tags."""
    return float(np.sum(_norms(phi, p.tags) * np.abs(p.lengths - q.lengths)))


def max_depth_bound(delta: Gauge) -> int:
    """Depth bound for step gauges: ceil(log2(1 / min level)) + cells + 2."""
    if delta.kind != "step":
        raise PartitionError("depth bound only defined for step gauges")
    lo = min(c[2] for c in delta.cells)
    return int(math.ceil(math.log2(1.0 / lo))) + len(delta.cells) + 2
