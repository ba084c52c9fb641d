"""Convex compact polytopes in R^d (1 <= d <= 3) in vertex form.

Exact Minkowski arithmetic, support functions, Hausdorff distance and the
Steiner point for d <= 2.  In d = 3 vertex lists are kept without hull
pruning and the metric quantities are computed by direction sampling.

Besides the single-set operations there are batched kernels
(``weighted_minkowski_sum``, ``batch_support`` ...) working on vertex arrays
of shape ``(n, k, d)``; rows are convex polygons listed counter-clockwise,
repeated vertices allowed.  The integrators are built on those.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

COLLINEAR_RTOL = 1e-12
CONTAINS_ATOL = 1e-10
UNIT_ATOL = 1e-12
_MINKOWSKI_PAIRWISE_LIMIT = 4096
_HAUSDORFF_VERTEX_LIMIT = 250_000
_SPHERE_SAMPLES = 4096


class ConvexSetError(ValueError):
    """Invalid input to a convex-set operation."""


@dataclass(frozen=True, eq=False)
class Polytope:
    """Nonempty convex polytope stored by its canonical vertex list.

    Build instances with :func:`canonicalize` (or the operations below);
    the constructor trusts its input.
    """

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2:
            raise ConvexSetError("vertices must be a (k, d) array")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Polytope):
            return NotImplemented
        return self.vertices.shape == other.vertices.shape and bool(
            np.array_equal(self.vertices, other.vertices)
        )

    def __hash__(self):
        return hash((self.vertices.shape, self.vertices.tobytes()))

    def __add__(self, other: "Polytope") -> "Polytope":
        return minkowski_sum(self, other)

    def __mul__(self, lam: float) -> "Polytope":
        return scale(self, lam)

    __rmul__ = __mul__

    def __repr__(self):
        pts = ", ".join("(" + ", ".join(f"{c:.6g}" for c in v) + ")" for v in self.vertices[:8])
        more = ", ..." if len(self) > 8 else ""
        return f"Polytope(d={self.dim}, [{pts}{more}])"

    def tolist(self) -> list[list[float]]:
        return self.vertices.tolist()

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


@dataclass(frozen=True)
class SupportVector:
    """Support values of a set sampled on a grid of unit directions."""

    directions: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.directions) != len(self.values):
            raise ConvexSetError("directions and values differ in length")

    def __add__(self, other: "SupportVector") -> "SupportVector":
        if not np.array_equal(self.directions, other.directions):
            raise ConvexSetError("support vectors live on different grids")
        return SupportVector(self.directions, self.values + other.values)

    def sup_distance(self, other: "SupportVector") -> float:
        if not np.array_equal(self.directions, other.directions):
            raise ConvexSetError("support vectors live on different grids")
        return float(np.max(np.abs(self.values - other.values)))


# ---------------------------------------------------------------------------
# construction


def _as_points(points) -> np.ndarray:
    if isinstance(points, Polytope):
        return np.array(points.vertices)
    try:
        arr = np.asarray(points, dtype=float)
    except ValueError as exc:
        raise ConvexSetError("points have mixed dimensions") from exc
    if arr.size == 0:
        raise ConvexSetError("cannot canonicalize an empty point list")
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ConvexSetError("points have mixed dimensions")
    if not 1 <= arr.shape[1] <= 3:
        raise ConvexSetError(f"dimension {arr.shape[1]} not supported (1..3)")
    if not np.all(np.isfinite(arr)):
        raise ConvexSetError("non-finite coordinates")
    return arr


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _monotone_chain(pts: np.ndarray) -> np.ndarray:
    pts = np.unique(pts, axis=0)  # lexicographic sort, exact duplicates dropped
    if len(pts) <= 2:
        return pts
    P = [tuple(p) for p in pts]
    lower: list = []
    for p in P:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(P):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1], dtype=float)


def _lexmin_index(v: np.ndarray) -> int:
    order = np.lexsort((v[:, 1], v[:, 0]))
    return int(order[0])


def _clean_convex_ccw(v: np.ndarray) -> np.ndarray:
    """Drop (near-)collinear and reflex vertices of a CCW polygon, start at lexmin.

    A vertex is dropped when it is reflex, or when its distance to the chord
    of its neighbours is at most COLLINEAR_RTOL times the bounding-box
    diagonal and it projects inside that chord.
    """
    v = np.asarray(v, dtype=float)
    if len(v) == 0:
        raise ConvexSetError("empty polygon")
    lo, hi = v.min(axis=0), v.max(axis=0)
    scale_ = float(np.hypot(*(hi - lo)))
    if scale_ == 0.0:
        return v[:1].copy()
    tol = COLLINEAR_RTOL * scale_
    while len(v) > 2:
        prev = np.roll(v, 1, axis=0)
        nxt = np.roll(v, -1, axis=0)
        chord = nxt - prev
        clen = np.hypot(chord[:, 0], chord[:, 1])
        cr = chord[:, 0] * (v[:, 1] - prev[:, 1]) - chord[:, 1] * (v[:, 0] - prev[:, 0])
        # cr > 0 means v lies right of prev->nxt, i.e. the vertex is convex for CCW
        height = np.where(clen > 0, -cr / np.where(clen > 0, clen, 1.0), 0.0)
        # a collinear vertex goes only if it sits between its neighbours; on a
        # degenerate sliver the segment's endpoints are collinear too but must stay
        c2 = clen * clen
        s = np.divide(((v - prev) * chord).sum(axis=1), c2, out=np.full(len(v), 0.5),
                      where=c2 > 0)
        between = (s >= -tol / np.maximum(clen, tol)) & (s <= 1 + tol / np.maximum(clen, tol))
        bad = (height < -tol) | ((height <= tol) & between)
        # chords of zero length: v sits between two coincident neighbours
        bad |= (clen == 0) & (np.hypot(*(v - prev).T) <= tol)
        if not bad.any():
            break
        # remove a maximal set of pairwise non-adjacent flagged vertices
        idx = np.flatnonzero(bad)
        keep_drop = [idx[0]]
        for i in idx[1:]:
            if i != keep_drop[-1] + 1:
                keep_drop.append(i)
        if len(keep_drop) > 1 and keep_drop[-1] == len(v) - 1 and keep_drop[0] == 0:
            keep_drop.pop()
        mask = np.ones(len(v), dtype=bool)
        mask[keep_drop] = False
        v = v[mask]
    if len(v) == 2:
        if np.hypot(*(v[1] - v[0])) <= tol:
            return v[:1].copy()
        order = np.lexsort((v[:, 1], v[:, 0]))
        return v[order]
    if len(v) == 1:
        return v
    return np.roll(v, -_lexmin_index(v), axis=0)


def _polygon_from_convex(v: np.ndarray) -> Polytope:
    return Polytope(_clean_convex_ccw(v))


def canonicalize(points) -> Polytope:
    """Convex hull of ``points`` in canonical vertex order.

    d = 1: ascending endpoints; d = 2: counter-clockwise from the
    lexicographic minimum, no (near-)collinear vertices; d = 3: the distinct
    points in lexicographic order (no hull pruning).
    """
    arr = _as_points(points)
    d = arr.shape[1]
    if d == 1:
        lo, hi = float(arr.min()), float(arr.max())
        return Polytope([[lo]] if lo == hi else [[lo], [hi]])
    if d == 2:
        hull = _monotone_chain(arr)
        if len(hull) == 1:
            return Polytope(hull)
        return _polygon_from_convex(hull)
    return Polytope(np.unique(arr, axis=0))


def point(*coords) -> Polytope:
    """Singleton set {x}."""
    if len(coords) == 1 and np.ndim(coords[0]) == 1:
        coords = tuple(coords[0])
    return canonicalize([list(coords)])


def box(lo: Sequence[float], hi: Sequence[float]) -> Polytope:
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    if lo.size == 1:
        return canonicalize([[lo[0]], [hi[0]]])
    if lo.size == 2:
        return canonicalize([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    raise ConvexSetError("box() supports d = 1, 2")


def direction(*coords) -> np.ndarray:
    """Unit vector along ``coords``."""
    if len(coords) == 1 and np.ndim(coords[0]) == 1:
        coords = tuple(coords[0])
    u = np.asarray(coords, dtype=float)
    n = float(np.linalg.norm(u))
    if n == 0.0:
        raise ConvexSetError("zero direction")
    return u / n


def direction_grid(dim: int, n: int = 64) -> np.ndarray:
    """Unit directions: {+1, -1} in d = 1, n equi-angular in d = 2, Fibonacci sphere in d = 3."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        th = 2 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(th), np.sin(th)])
    if dim == 3:
        i = np.arange(n) + 0.5
        z = 1 - 2 * i / n
        r = np.sqrt(1 - z * z)
        phi = np.pi * (3 - math.sqrt(5)) * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise ConvexSetError(f"dimension {dim} not supported")


def _check_same_dim(A: Polytope, B: Polytope):
    if A.dim != B.dim:
        raise ConvexSetError(f"dimension mismatch: {A.dim} vs {B.dim}")


# ---------------------------------------------------------------------------
# arithmetic


def minkowski_sum(A: Polytope, B: Polytope) -> Polytope:
    """A ⊕ B as the hull of pairwise vertex sums.

    Large polygon pairs go through the edge-merge kernel instead, which
    yields the same set.
    """
    _check_same_dim(A, B)
    if A.dim == 2 and len(A) * len(B) > _MINKOWSKI_PAIRWISE_LIMIT:
        return weighted_minkowski_sum(_pad_rows([A.vertices, B.vertices]), np.ones(2))
    sums = (A.vertices[:, None, :] + B.vertices[None, :, :]).reshape(-1, A.dim)
    return canonicalize(sums)


def scale(A: Polytope, lam: float) -> Polytope:
    if not lam >= 0:
        raise ConvexSetError("scale factor must be >= 0 (reflection is not a scalar action here)")
    if lam == 0:
        return Polytope(np.zeros((1, A.dim)))
    v = A.vertices * float(lam)
    if A.dim == 2 and len(A) > 2:
        return _polygon_from_convex(v)
    return Polytope(v)


def translate(A: Polytope, x) -> Polytope:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != A.dim:
        raise ConvexSetError(f"dimension mismatch: {A.dim} vs {x.size}")
    v = A.vertices + x
    if A.dim == 2 and len(A) > 2:
        return _polygon_from_convex(v)
    if A.dim == 3:
        return canonicalize(v)
    return Polytope(v)


def reflect(A: Polytope) -> Polytope:
    """{-a : a in A}; an explicit vertex map, not a scalar action."""
    if A.dim == 3:
        return canonicalize(-A.vertices)
    if len(A) > 2:
        return _polygon_from_convex(-A.vertices)
    return canonicalize(-A.vertices)


# ---------------------------------------------------------------------------
# support function and metric


def support(A: Polytope, u) -> float:
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != A.dim:
        raise ConvexSetError(f"dimension mismatch: {A.dim} vs {u.size}")
    return float(np.max(A.vertices @ u))


def support_many(A: Polytope, U: np.ndarray) -> np.ndarray:
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if U.shape[1] != A.dim:
        raise ConvexSetError(f"dimension mismatch: {A.dim} vs {U.shape[1]}")
    return np.max(A.vertices @ U.T, axis=0)


def set_norm(A: Polytope) -> float:
    """sup of ||x|| over A."""
    return float(np.max(np.linalg.norm(A.vertices, axis=1)))


def _point_segment_dist(P: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distances from points P (n, 2) to segments [a_j, b_j] (m, 2): (n, m)."""
    ab = b - a
    L2 = np.einsum("ij,ij->i", ab, ab)
    AP = P[:, None, :] - a[None, :, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.einsum("nmj,mj->nm", AP, ab) / np.where(L2 > 0, L2, 1.0)
    s = np.clip(np.where(L2 > 0, s, 0.0), 0.0, 1.0)
    closest = a[None, :, :] + s[..., None] * ab[None, :, :]
    return np.linalg.norm(P[:, None, :] - closest, axis=2)


def point_polygon_distance(P: np.ndarray, B: Polytope) -> np.ndarray:
    """Euclidean distance from each point of P (n, 2) to the convex polygon B."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    v = B.vertices
    if len(v) == 1:
        return np.linalg.norm(P - v[0], axis=1)
    a, b = v, np.roll(v, -1, axis=0)
    d = _point_segment_dist(P, a, b).min(axis=1)
    if len(v) >= 3:
        e = b - a
        cr = e[None, :, 0] * (P[:, None, 1] - a[None, :, 1]) - e[None, :, 1] * (P[:, None, 0] - a[None, :, 0])
        inside = np.all(cr >= 0, axis=1)
        d = np.where(inside, 0.0, d)
    return d


def _normal_fan(v: np.ndarray):
    """Sorted outer-normal angles of a CCW polygon and, per arc, the supporting vertex.

    Directions with angle in [phi[j], phi[j+1]) are maximised by v[owner[j]].
    """
    k = len(v)
    if k == 1:
        return np.empty(0), np.zeros(1, dtype=int)
    e = np.roll(v, -1, axis=0) - v
    phi = np.mod(np.arctan2(-e[:, 0], e[:, 1]), 2 * np.pi)  # outward normal (e_y, -e_x)
    owner = (np.arange(k) + 1) % k
    order = np.argsort(phi, kind="stable")
    return phi[order], owner[order]


def _fan_lookup(phi: np.ndarray, owner: np.ndarray, theta: np.ndarray) -> np.ndarray:
    if phi.size == 0:
        return np.zeros(theta.shape, dtype=int)
    j = np.searchsorted(phi, theta, side="right") - 1  # -1 wraps to the last arc
    return owner[j]


def _hausdorff_fan(A: Polytope, B: Polytope) -> float:
    """Exact sup_u |s(u,A) - s(u,B)| by scanning the merged normal fans."""
    va, vb = A.vertices, B.vertices
    pa, oa = _normal_fan(va)
    pb, ob = _normal_fan(vb)
    brk = np.unique(np.concatenate([pa, pb]))
    if brk.size == 0:
        return float(np.linalg.norm(va[0] - vb[0]))
    lo = brk
    hi = np.append(brk[1:], brk[0] + 2 * np.pi)
    mid = np.mod(0.5 * (lo + hi), 2 * np.pi)
    w = va[_fan_lookup(pa, oa, mid)] - vb[_fan_lookup(pb, ob, mid)]
    r = np.hypot(w[:, 0], w[:, 1])
    psi = np.arctan2(w[:, 1], w[:, 0])

    def g(th):
        return np.abs(w[:, 0] * np.cos(th) + w[:, 1] * np.sin(th))

    best = np.maximum(g(lo), g(hi))
    for off in (0.0, np.pi):
        c = np.mod(psi + off - lo, 2 * np.pi)
        inside = c <= (hi - lo)
        best = np.where(inside, np.maximum(best, r), best)
    return float(best.max())


def hausdorff_distance(A: Polytope, B: Polytope) -> float:
    """Hausdorff distance; exact for d <= 2, direction-sampled for d = 3."""
    _check_same_dim(A, B)
    if A.dim == 1:
        (a0, a1), (b0, b1) = (A.vertices[0, 0], A.vertices[-1, 0]), (B.vertices[0, 0], B.vertices[-1, 0])
        return float(max(abs(a0 - b0), abs(a1 - b1)))
    if A.dim == 2:
        if len(A) * len(B) > _HAUSDORFF_VERTEX_LIMIT:
            return _hausdorff_fan(A, B)
        dab = point_polygon_distance(A.vertices, B).max()
        dba = point_polygon_distance(B.vertices, A).max()
        return float(max(dab, dba))
    U = direction_grid(3, _SPHERE_SAMPLES)
    return float(np.max(np.abs(support_many(A, U) - support_many(B, U))))


def radstrom_embed(A: Polytope, grid) -> SupportVector:
    U = np.atleast_2d(np.asarray(grid, dtype=float))
    if U.size == 0:
        raise ConvexSetError("empty direction grid")
    if U.shape[1] != A.dim:
        raise ConvexSetError(f"dimension mismatch: {A.dim} vs {U.shape[1]}")
    if np.any(np.abs(np.linalg.norm(U, axis=1) - 1.0) > 1e-9):
        raise ConvexSetError("grid directions must be unit vectors")
    return SupportVector(U.copy(), support_many(A, U))


def contains(A: Polytope, x) -> bool:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != A.dim:
        raise ConvexSetError(f"dimension mismatch: {A.dim} vs {x.size}")
    v = A.vertices
    if A.dim == 1:
        return bool(v[0, 0] <= x[0] <= v[-1, 0])
    if A.dim == 2:
        if len(v) <= 2:
            return bool(point_polygon_distance(x[None, :], A)[0] <= CONTAINS_ATOL)
        e = np.roll(v, -1, axis=0) - v
        cr = e[:, 0] * (x[1] - v[:, 1]) - e[:, 1] * (x[0] - v[:, 0])
        return bool(np.all(cr / np.hypot(e[:, 0], e[:, 1]) >= -CONTAINS_ATOL))
    U = direction_grid(3, _SPHERE_SAMPLES)
    return bool(np.all(U @ x <= support_many(A, U) + CONTAINS_ATOL))


# ---------------------------------------------------------------------------
# Steiner point


def steiner_point(A: Polytope) -> np.ndarray:
    """Steiner point: midpoint in d = 1, exterior-angle weighted vertex mean in d = 2."""
    if A.dim == 1:
        return np.array([0.5 * (A.vertices[0, 0] + A.vertices[-1, 0])])
    if A.dim == 2:
        return batch_steiner(A.vertices[None, :, :])[0]
    U = direction_grid(3, _SPHERE_SAMPLES)
    return 3.0 * np.mean(support_many(A, U)[:, None] * U, axis=0)


# ---------------------------------------------------------------------------
# batched kernels on (n, k, d) vertex arrays


def _pad_rows(rows: Iterable[np.ndarray]) -> np.ndarray:
    rows = [np.asarray(r, dtype=float) for r in rows]
    k = max(len(r) for r in rows)
    out = np.empty((len(rows), k, rows[0].shape[1]))
    for i, r in enumerate(rows):
        out[i, : len(r)] = r
        out[i, len(r):] = r[-1]
    return out


def stack_polytopes(polys: Sequence[Polytope]) -> np.ndarray:
    """Vertex array (n, k, d) of canonical polytopes, short rows padded by repetition."""
    return _pad_rows([p.vertices for p in polys])


def batch_support(V: np.ndarray, U: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    """s(u_j, conv V_i) for rows V (n, k, d) and directions U (m, d): (n, m)."""
    V = np.asarray(V, dtype=float)
    U = np.atleast_2d(np.asarray(U, dtype=float))
    n, k, _ = V.shape
    m = U.shape[0]
    out = np.empty((n, m))
    step = max(1, chunk // max(1, k * m))
    for s in range(0, n, step):
        out[s: s + step] = np.max(V[s: s + step] @ U.T, axis=1)
    return out


def batch_norm(V: np.ndarray) -> np.ndarray:
    return np.max(np.linalg.norm(np.asarray(V, dtype=float), axis=2), axis=1)


def batch_steiner(V: np.ndarray) -> np.ndarray:
    """Steiner points of the rows of V (n, k, d) for d in {1, 2}."""
    V = np.asarray(V, dtype=float)
    n, k, d = V.shape
    if d == 1:
        return 0.5 * (V.min(axis=1) + V.max(axis=1))
    if d != 2:
        raise ConvexSetError("batch_steiner supports d = 1, 2")
    E = np.roll(V, -1, axis=1) - V  # E[:, j] leaves vertex j
    nz = np.any(E != 0, axis=2)
    ang = np.arctan2(E[..., 1], E[..., 0])
    # outgoing: first nonzero edge at or after j; incoming: last nonzero edge before j
    out_ang = np.full((n, k), np.nan)
    in_ang = np.full((n, k), np.nan)
    cur = np.full(n, np.nan)
    for j in range(2 * k - 1, -1, -1):
        jj = j % k
        cur = np.where(nz[:, jj], ang[:, jj], cur)
        if j < k:
            out_ang[:, jj] = cur
    cur = np.full(n, np.nan)
    for j in range(-k, k):
        jj = j % k
        if j >= 0:
            in_ang[:, jj] = cur
        cur = np.where(nz[:, jj], ang[:, jj], cur)
    fresh = np.roll(nz, 1, axis=1)  # vertex j ends a nonzero edge
    turn = np.mod(out_ang - in_ang, 2 * np.pi)
    w = np.where(fresh & np.isfinite(turn), turn, 0.0)
    tot = w.sum(axis=1)
    pt = np.einsum("nk,nkd->nd", w, V) / np.where(tot > 0, tot, 1.0)[:, None]
    degenerate = tot <= 0
    if degenerate.any():
        pt[degenerate] = V[degenerate, 0]
    return pt


def _row_lexmin(V: np.ndarray) -> np.ndarray:
    x, y = V[..., 0], V[..., 1]
    xmin = x.min(axis=1, keepdims=True)
    ymin = np.where(x == xmin, y, np.inf).min(axis=1)
    return np.column_stack([xmin[:, 0], ymin])


def weighted_minkowski_sum(V: np.ndarray, w: np.ndarray) -> Polytope:
    """⊕_i w_i · conv(V_i) for rows V (n, k, d) with w >= 0.

    d = 1 sums endpoints; d = 2 merges all scaled edge vectors by angle
    starting from the sum of the rows' lexicographic minima.
    """
    V = np.asarray(V, dtype=float)
    w = np.asarray(w, dtype=float)
    if V.ndim != 3 or V.shape[0] != w.shape[0]:
        raise ConvexSetError("weighted_minkowski_sum expects V (n, k, d) and w (n,)")
    if np.any(w < 0):
        raise ConvexSetError("weights must be >= 0")
    d = V.shape[2]
    if d == 1:
        lo = float(np.sum(w * V[:, :, 0].min(axis=1)))
        hi = float(np.sum(w * V[:, :, 0].max(axis=1)))
        return Polytope([[lo]] if lo == hi else [[lo], [hi]])
    if d != 2:
        raise ConvexSetError("weighted_minkowski_sum supports d = 1, 2")
    start = (w[:, None] * _row_lexmin(V)).sum(axis=0)
    E = (np.roll(V, -1, axis=1) - V) * w[:, None, None]
    E = E.reshape(-1, 2)
    E = E[np.any(E != 0, axis=1)]
    if len(E) == 0:
        return Polytope(start[None, :])
    ang = np.arctan2(E[:, 1], E[:, 0])
    ang = np.where(ang <= -np.pi / 2, ang + 2 * np.pi, ang)
    order = np.argsort(ang, kind="stable")
    ang, E = ang[order], E[order]
    cut = np.flatnonzero(np.diff(ang) != 0) + 1
    E = np.add.reduceat(E, np.concatenate([[0], cut]), axis=0)
    pts = start + np.vstack([np.zeros((1, 2)), np.cumsum(E[:-1], axis=0)])
    return _polygon_from_convex(pts)


def grouped_minkowski_sums(V: np.ndarray, w: np.ndarray, starts) -> list:
    """weighted_minkowski_sum over consecutive row groups beginning at ``starts``.

    One vectorized pass instead of one call per group; groups must be nonempty.
    """
    V = np.asarray(V, dtype=float)
    w = np.asarray(w, dtype=float)
    starts = np.asarray(starts, dtype=np.intp)
    n, k, d = V.shape
    if len(starts) == 0 or starts[0] != 0 or np.any(np.diff(starts) <= 0) or starts[-1] >= n:
        raise ConvexSetError("starts must be increasing group offsets beginning at 0")
    if np.any(w < 0):
        raise ConvexSetError("weights must be >= 0")
    if d == 1:
        lo = np.add.reduceat(w * V[:, :, 0].min(axis=1), starts)
        hi = np.add.reduceat(w * V[:, :, 0].max(axis=1), starts)
        return [Polytope([[a]] if a == b else [[a], [b]]) for a, b in zip(lo, hi)]
    if d != 2:
        raise ConvexSetError("grouped_minkowski_sums supports d = 1, 2")
    start = np.add.reduceat(w[:, None] * _row_lexmin(V), starts, axis=0)
    gid = np.repeat(np.repeat(np.arange(len(starts)), np.diff(np.append(starts, n))), k)
    E = ((np.roll(V, -1, axis=1) - V) * w[:, None, None]).reshape(-1, 2)
    keep = np.any(E != 0, axis=1)
    E, gid = E[keep], gid[keep]
    ang = np.arctan2(E[:, 1], E[:, 0])
    ang = np.where(ang <= -np.pi / 2, ang + 2 * np.pi, ang)
    order = np.lexsort((ang, gid))
    E, gid, ang = E[order], gid[order], ang[order]
    bounds = np.searchsorted(gid, np.arange(len(starts) + 1))
    out = []
    for g in range(len(starts)):
        a, b = bounds[g], bounds[g + 1]
        if a == b:
            out.append(Polytope(start[g][None, :]))
            continue
        Eg, ag = E[a:b], ang[a:b]
        cut = np.flatnonzero(np.diff(ag) != 0) + 1
        Eg = np.add.reduceat(Eg, np.concatenate([[0], cut]), axis=0)
        pts = start[g] + np.vstack([np.zeros((1, 2)), np.cumsum(Eg[:-1], axis=0)])
        out.append(_polygon_from_convex(pts))
    return out
