"""Gauge integrals of polytope-valued maps on [0, 1].

All set-valued integrators share one refinement loop: at level k the gauge
is the entry's profile scaled by 2**-k, a fine partition is generated, and
the Riemann set sum is formed.  A level is accepted as converged when the
Hausdorff step to the previous level is below ``tol`` and re-tagged sums
(eight seeded re-taggings, plus adversarial tags for free-tag methods) stay
within ``4 * tol`` of the base sum.  ``converged=True`` is numerical
evidence, not a proof.

Declared singular points split the domain, so every piece is handled by an
affine copy of the partition machinery on [0, 1] with the singularity at an
end of the piece.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import convex_sets as cs
from .convex_sets import Polytope
from .partitions import (
    Gauge,
    N_ADVERSARIAL,
    GaugeProfile,
    MaxDepthExceeded,
    PartitionError,
    TaggedPartition,
    adversarial_window,
    cousin_perron_partition,
    fine_mask,
    free_tag_partition,
    random_perron_retag,
    refine_gauge,
)

N_RETAGS = 8
N_PERMUTATIONS = 16
DEFAULT_MAX_LEVELS = 30
MAX_INTERVALS = 2_000_000
METHODS = ("henstock", "mcshane", "birkhoff", "pettis")


class IntegrationError(ValueError):
    """Invalid integrator input."""


class PettisFailure(IntegrationError):
    """Some direction's scalar integral did not converge; ``report`` has the details."""

    def __init__(self, report):
        self.report = report
        bad = [i for i, ok in enumerate(report["converged"]) if not ok]
        super().__init__(f"support integrals failed to converge in {len(bad)} direction(s)")


# ---------------------------------------------------------------------------
# multifunctions


@dataclass(frozen=True, eq=False)
class Multifunction:
    """t -> convex polytope in R^dim, evaluated in batches.

    ``vertices(ts)`` returns an ``(n, k, dim)`` array; for dim = 2 each row
    lists a convex polygon counter-clockwise (repeats allowed).
    """

    name: str
    dim: int
    vertices: Callable
    profile: GaugeProfile = field(default_factory=GaugeProfile)
    known_integral: Polytope | None = None
    known_support: Callable | None = None
    classes: frozenset = frozenset()
    description: str = ""

    def __call__(self, t) -> Polytope:
        v = np.asarray(self.vertices(np.array([float(t)])), dtype=float)[0]
        return cs.canonicalize(v)

    def rows(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float).reshape(-1)
        v = np.asarray(self.vertices(ts), dtype=float)
        if v.ndim != 3 or v.shape[0] != ts.size or v.shape[2] != self.dim:
            raise IntegrationError(
                f"{self.name}: evaluator returned shape {v.shape}, expected (n, k, {self.dim})")
        return v

    def support(self, ts, U) -> np.ndarray:
        return cs.batch_support(self.rows(ts), U)

    def norm(self, ts) -> np.ndarray:
        return cs.batch_norm(self.rows(ts))

    @property
    def singular_points(self) -> tuple:
        return tuple(s.point for s in self.profile.singularities)

    def translated(self, f: Callable, name: str | None = None) -> "Multifunction":
        """t -> Gamma(t) + f(t) for a vectorized point map f."""
        base = self.vertices

        def verts(ts):
            shift = np.asarray(f(ts), dtype=float).reshape(len(ts), 1, self.dim)
            return np.asarray(base(ts), dtype=float) + shift

        return Multifunction(name or f"{self.name}+f", self.dim, verts, self.profile)

    @classmethod
    def from_pointwise(cls, name: str, dim: int, fn: Callable, **kw) -> "Multifunction":
        """Wrap a per-t map returning a Polytope (slow path, one call per tag)."""

        def verts(ts):
            return cs.stack_polytopes([fn(float(t)) for t in ts])

        return cls(name, dim, verts, **kw)

    @classmethod
    def point_valued(cls, name: str, dim: int, f: Callable, **kw) -> "Multifunction":
        """Singleton-valued map t -> {f(t)}; f is vectorized, returning (n,) or (n, dim)."""

        def verts(ts):
            return np.asarray(f(ts), dtype=float).reshape(len(ts), 1, dim)

        return cls(name, dim, verts, **kw)


def default_grid(dim: int, n: int = 64) -> np.ndarray:
    return cs.direction_grid(dim, n if dim == 2 else 2)


def _watch_directions(dim: int) -> np.ndarray:
    return cs.direction_grid(dim, 8 if dim == 2 else 2)


def _row_scores(V: np.ndarray) -> np.ndarray:
    """Adversarial scores of vertex rows: the set norm, then the positive support
    along each coordinate axis (both signs).  Shape (1 + 2 d, n)."""
    X = V[..., 0]
    if V.shape[2] == 1:
        sq = X * X
        hi, lo = X.max(axis=1), X.min(axis=1)
        return np.stack([np.sqrt(sq.max(axis=1)), np.maximum(hi, 0.0), np.maximum(-lo, 0.0)])
    Y = V[..., 1]
    return np.stack([
        np.sqrt((X * X + Y * Y).max(axis=1)),
        np.maximum(X.max(axis=1), 0.0), np.maximum(-X.min(axis=1), 0.0),
        np.maximum(Y.max(axis=1), 0.0), np.maximum(-Y.min(axis=1), 0.0),
    ])


# ---------------------------------------------------------------------------
# result types


@dataclass
class LevelRecord:
    level: int
    gauge: str
    interval_count: int
    dH_to_prev: float | None
    tag_spread: float | None
    support_values: list = field(default_factory=list)
    value: Polytope | None = field(default=None, repr=False)


@dataclass
class IntegralResult:
    """Computed set plus refinement trail.

    ``converged`` is evidence from the refinement trail, not a proof.
    """

    value: Polytope
    method: str
    levels: list
    error_estimate: float | None
    tag_spread: float | None
    converged: bool
    seed: int
    tol: float
    support_defect: float | None = None
    permutation_defect: float | None = None
    diverging_directions: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    runtimes_ms: list = field(default_factory=list)
    partition: TaggedPartition | None = None


@dataclass
class ScalarResult:
    value: float
    error_estimate: float | None
    converged: bool
    levels: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# partitions of [lo, hi] assembled from pieces between singular points


def _pieces(lo: float, hi: float, cuts: Sequence[float]) -> list:
    pts = [lo] + sorted(c for c in set(cuts) if lo < c < hi) + [hi]
    return list(zip(pts[:-1], pts[1:]))


@dataclass
class _Mesh:
    """One level's partition of [lo, hi], piecewise transported from [0, 1]."""

    gauge: Gauge
    lo: float
    hi: float
    cuts: tuple

    def __post_init__(self):
        self.parts = []
        for x0, x1 in _pieces(self.lo, self.hi, self.cuts):
            g = self.gauge.transport(x0, x1)
            self.parts.append((x0, x1, g, cousin_perron_partition(g)))

    def __len__(self):
        return sum(len(p) for *_, p in self.parts)

    @staticmethod
    def _join(parts: list, flavor: str) -> TaggedPartition:
        a = np.concatenate([p.a for p in parts])
        b = np.concatenate([p.b for p in parts])
        t = np.concatenate([p.tags for p in parts])
        return TaggedPartition(a, b, t, flavor, max(p.depth for p in parts))

    def base(self, flavor: str = "perron") -> TaggedPartition:
        return self._join([p.mapped(x0, x1) for x0, x1, _, p in self.parts], flavor)

    def retag(self, how: str, seed=0) -> TaggedPartition:
        out = []
        for i, (x0, x1, g, p) in enumerate(self.parts):
            s = [*np.atleast_1d(seed).tolist(), i]
            if how == "perron-random":
                q = random_perron_retag(g, p, s)
            elif how == "uniform-random":
                q = free_tag_partition(g, "uniform-random", seed=s, base=p)
            else:
                raise IntegrationError(f"unknown re-tagging {how!r}")
            out.append(q.mapped(x0, x1))
        return self._join(out, "perron" if how == "perron-random" else "free")

    def adversarial(self, G: Multifunction) -> list:
        """Free-tag partitions whose tags maximize each adversarial score.

        Same candidate set as ``free_tag_partition(..., "adversarial")``
        (64 evenly spaced window points plus the base tag), but the rows of
        Gamma are evaluated once per candidate for all scores.
        """
        per_score = None
        for x0, x1, g, p in self.parts:
            L = x1 - x0
            t0 = p.tags
            best_v = _row_scores(G.rows(x0 + L * t0))
            best_t = np.tile(t0, (len(best_v), 1))
            lo, hi = adversarial_window(g, p)
            for j in range(N_ADVERSARIAL):
                t = lo + (hi - lo) * (j / (N_ADVERSARIAL - 1))
                idx = np.flatnonzero(fine_mask(t, p.a, p.b, np.asarray(g(t), dtype=float)))
                if idx.size == 0:
                    continue
                v = _row_scores(G.rows(x0 + L * t[idx]))
                sub_v = best_v[:, idx]
                better = v > sub_v
                best_v[:, idx] = np.where(better, v, sub_v)
                best_t[:, idx] = np.where(better, t[idx], best_t[:, idx])
            if per_score is None:
                per_score = [[] for _ in best_v]
            for r in range(len(best_v)):
                per_score[r].append(p.with_tags(best_t[r], "free").mapped(x0, x1))
        return [self._join(parts, "free") for parts in per_score]


# ---------------------------------------------------------------------------
# Riemann sums


def _check_partition(p: TaggedPartition):
    if len(p) == 0:
        raise IntegrationError("empty partition")


def riemann_set_sum(G: Multifunction, p: TaggedPartition) -> Polytope:
    """Minkowski sum of Gamma(t_i) * |I_i| over the partition."""
    _check_partition(p)
    return cs.weighted_minkowski_sum(G.rows(p.tags), p.lengths)


def _scalar_sum(f: Callable, p: TaggedPartition) -> np.ndarray:
    v = np.asarray(f(p.tags), dtype=float)
    return p.lengths @ v


def _diverging(levels: list, U: np.ndarray, tol: float) -> list:
    if len(levels) < 3:
        return []
    s = np.array([lv.support_values for lv in levels])
    inc = np.abs(np.diff(s, axis=0))
    last, before = inc[-1], inc[-2]
    bad = (last >= tol) & (last >= 0.5 * before)
    return [U[j].tolist() for j in np.flatnonzero(bad)]


def _gauge_for(profile: GaugeProfile, k: int, step: bool) -> Gauge:
    return profile.step_gauge(k) if step else profile.gauge(k)


def _set_driver(G: Multifunction, method: str, tol: float, max_levels: int | None, seed: int,
                interval=(0.0, 1.0), diagnostics: bool = True,
                profile: GaugeProfile | None = None, max_intervals: int = MAX_INTERVALS,
                early_stop: bool = True) -> IntegralResult:
    if not tol > 0:
        raise IntegrationError("tol must be > 0")
    if G.dim not in (1, 2):
        raise IntegrationError("set-valued integration supports dim 1 and 2")
    profile = profile or G.profile
    max_levels = DEFAULT_MAX_LEVELS if max_levels is None else int(max_levels)
    lo, hi = map(float, interval)
    free = method in ("mcshane", "birkhoff")
    step = method in ("birkhoff", "henstock-step")
    U = _watch_directions(G.dim)

    levels, times = [], []
    notes = []
    prev = None
    S = None
    p = None
    spread = None
    perm_defect = 0.0 if step and diagnostics else None
    converged = False
    for k in range(max_levels + 1):
        if len(levels) >= 2:
            n1, n0 = levels[-1].interval_count, levels[-2].interval_count
            if n1 * max(2.0, n1 / max(n0, 1)) > max_intervals:
                notes.append(f"interval budget {max_intervals} reached after level {k - 1}")
                break
        t0 = time.perf_counter()
        gauge = _gauge_for(profile, k, step)
        try:
            mesh = _Mesh(gauge, lo, hi, profile.breakpoints)
        except MaxDepthExceeded as exc:
            if not levels:
                raise
            notes.append(f"partition generation failed at level {k}: {exc}")
            break
        p = mesh.base("free" if free else "perron")
        if levels and len(p) == levels[-1].interval_count:
            # bisection is monotone in the gauge: same count means the same partition,
            # and comparing a partition with itself is no evidence of convergence
            continue
        V = G.rows(p.tags)
        w = p.lengths
        S = cs.weighted_minkowski_sum(V, w)
        dH = None if prev is None else cs.hausdorff_distance(S, prev)
        spread = None
        if diagnostics:
            spread = 0.0
            for j in range(N_RETAGS):
                q = mesh.retag("uniform-random" if free else "perron-random", [seed, k, j])
                spread = max(spread, cs.hausdorff_distance(riemann_set_sum(G, q), S))
            if free:
                for q in mesh.adversarial(G):
                    spread = max(spread, cs.hausdorff_distance(riemann_set_sum(G, q), S))
            if step:
                rng = np.random.default_rng([seed, k, 7919])
                for _ in range(N_PERMUTATIONS):
                    perm = rng.permutation(len(w))
                    Sp = cs.weighted_minkowski_sum(V[perm], w[perm])
                    perm_defect = max(perm_defect, cs.hausdorff_distance(Sp, S))
        levels.append(LevelRecord(k, gauge.label, len(p), dH, spread,
                                  cs.support_many(S, U).tolist(), S))
        times.append((time.perf_counter() - t0) * 1e3)
        prev = S
        # without early stopping the flag describes the last level, so converged
        # still implies error_estimate <= tol
        converged = dH is not None and dH < tol and (spread is None or spread < 4 * tol)
        if converged and early_stop:
            break
    err = levels[-1].dH_to_prev
    return IntegralResult(
        value=S, method=method, levels=levels, error_estimate=err, tag_spread=spread,
        converged=converged, seed=seed, tol=tol, permutation_defect=perm_defect,
        diverging_directions=[] if converged else _diverging(levels, U, tol),
        notes=notes, runtimes_ms=times, partition=p,
    )


def henstock_integral(G: Multifunction, tol: float = 1e-6, profile: GaugeProfile | None = None,
                      max_levels: int | None = None, seed: int = 0, interval=(0.0, 1.0),
                      diagnostics: bool = True, early_stop: bool = True) -> IntegralResult:
    """Henstock integral: Perron partitions, tags re-drawn inside their intervals.

    With ``early_stop=False`` every level up to ``max_levels`` is computed and
    ``converged`` records whether the last level meets the stopping rule.
    """
    return _set_driver(G, "henstock", tol, max_levels, seed, interval, diagnostics, profile,
                       early_stop=early_stop)


def henstock_step_integral(G: Multifunction, tol: float = 1e-6, max_levels: int | None = None,
                          seed: int = 0, profile: GaugeProfile | None = None,
                          interval=(0.0, 1.0), early_stop: bool = True) -> IntegralResult:
    """Henstock integral restricted to step (measurable) gauges."""
    return _set_driver(G, "henstock-step", tol, max_levels, seed, interval, True, profile,
                       early_stop=early_stop)


def mcshane_integral(G: Multifunction, tol: float = 1e-6, max_levels: int | None = None,
                     seed: int = 0, profile: GaugeProfile | None = None,
                     interval=(0.0, 1.0), early_stop: bool = True) -> IntegralResult:
    """McShane integral: free tags, stability also demanded under adversarial tags."""
    return _set_driver(G, "mcshane", tol, max_levels, seed, interval, True, profile,
                       early_stop=early_stop)


def birkhoff_integral(G: Multifunction, tol: float = 1e-6, max_levels: int | None = None,
                      seed: int = 0, profile: GaugeProfile | None = None,
                      interval=(0.0, 1.0), early_stop: bool = True) -> IntegralResult:
    """Birkhoff integral as McShane integration over step gauges.

    Each level's terms are also re-summed in 16 seeded random orders; the
    largest Hausdorff gap is ``permutation_defect``.
    """
    return _set_driver(G, "birkhoff", tol, max_levels, seed, interval, True, profile,
                       early_stop=early_stop)


# ---------------------------------------------------------------------------
# scalar integrals


def _scalar_driver(f: Callable, tol: float, profile: GaugeProfile, max_levels: int | None,
                   seed: int, interval=(0.0, 1.0), max_intervals: int = MAX_INTERVALS):
    if not tol > 0:
        raise IntegrationError("tol must be > 0")
    max_levels = DEFAULT_MAX_LEVELS if max_levels is None else int(max_levels)
    lo, hi = map(float, interval)
    prev = None
    S = None
    trail = []
    ok = None
    counts = []
    for k in range(max_levels + 1):
        if len(counts) >= 2 and counts[-1] * max(2.0, counts[-1] / max(counts[-2], 1)) > max_intervals:
            break
        try:
            mesh = _Mesh(profile.gauge(k), lo, hi, profile.breakpoints)
        except MaxDepthExceeded:
            if not trail:
                raise
            break
        p = mesh.base()
        if counts and len(p) == counts[-1]:
            continue
        S = np.atleast_1d(_scalar_sum(f, p))
        spread = np.zeros_like(S)
        for j in range(N_RETAGS):
            q = mesh.retag("perron-random", [seed, k, j])
            spread = np.maximum(spread, np.abs(np.atleast_1d(_scalar_sum(f, q)) - S))
        step = None if prev is None else np.abs(S - prev)
        counts.append(len(p))
        trail.append((k, len(p), None if step is None else float(step.max()), float(spread.max())))
        ok = None if step is None else (step < tol) & (spread < 4 * tol)
        prev = S
        if ok is not None and ok.all():
            break
    return S, ok, trail


def scalar_hk_channels(f: Callable, tol: float = 1e-6, profile: GaugeProfile | None = None,
                       max_levels: int | None = None, seed: int = 0, interval=(0.0, 1.0)):
    """Henstock-Kurzweil integrals of the columns of a vectorized f: ts -> (n, m).

    Returns (values, converged flags, trail) with one value and flag per column.
    """
    profile = profile or GaugeProfile()
    S, ok, trail = _scalar_driver(f, tol, profile, max_levels, seed, interval)
    if ok is None:
        ok = np.zeros(S.shape, dtype=bool)
    return S, ok, trail


def scalar_hk_integral(f: Callable, tol: float = 1e-6, profile: GaugeProfile | None = None,
                       max_levels: int | None = None, seed: int = 0,
                       interval=(0.0, 1.0)) -> ScalarResult:
    """Henstock-Kurzweil integral of a vectorized real function on [lo, hi]."""
    S, ok, trail = scalar_hk_channels(lambda t: np.asarray(f(t), dtype=float)[:, None], tol,
                                      profile, max_levels, seed, interval)
    err = trail[-1][2] if trail else None
    return ScalarResult(float(S[0]), err, bool(ok[0]), trail)


def support_oracle(G: Multifunction, U: np.ndarray, tol: float = 1e-6, seed: int = 0,
                   interval=(0.0, 1.0), max_levels: int | None = None):
    """Per-direction scalar HK integrals of s(u, Gamma(.)) on the grid U."""
    return scalar_hk_channels(lambda ts: G.support(ts, U), tol, G.profile, max_levels, seed,
                              interval)


def support_defect(value: Polytope, G: Multifunction, U: np.ndarray | None = None,
                   tol: float = 1e-6, seed: int = 0, interval=(0.0, 1.0)):
    """max_u |s(u, value) - HK integral of s(u, Gamma)| and whether the oracle converged."""
    U = default_grid(G.dim) if U is None else U
    m, ok, _ = support_oracle(G, U, tol, seed, interval)
    return float(np.max(np.abs(cs.support_many(value, U) - m))), bool(np.all(ok))


# ---------------------------------------------------------------------------
# Pettis


def _halfplane_polygon(U: np.ndarray, m: np.ndarray) -> Polytope:
    """Intersection of {x : <u_i, x> <= m_i} (bounded, U spanning the circle)."""
    n = len(U)
    i, j = np.triu_indices(n, 1)
    A = np.stack([U[i], U[j]], axis=1)
    det = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
    good = np.abs(det) > 1e-12
    A, rhs = A[good], np.stack([m[i[good]], m[j[good]]], axis=1)
    pts = np.linalg.solve(A, rhs[..., None])[..., 0]
    scale_ = 1.0 + float(np.max(np.abs(m)))
    feas = np.all(pts @ U.T <= m + 1e-9 * scale_, axis=1)
    if not feas.any():
        raise IntegrationError("inconsistent support data")
    return cs.canonicalize(pts[feas])


def _pettis_core(G: Multifunction, U: np.ndarray, tol: float, seed: int,
                 max_levels: int | None):
    m, ok, trail = support_oracle(G, U, tol, seed, max_levels=max_levels)
    # Pettis needs Lebesgue integrability of every s(u, Gamma); for scalar
    # functions that is HK integrability of the absolute value
    a, ok_abs, trail_abs = scalar_hk_channels(lambda ts: np.abs(G.support(ts, U)), tol,
                                              G.profile, max_levels, seed)
    report = {
        "directions": U.tolist(),
        "values": m.tolist(),
        "converged": (ok & ok_abs).tolist(),
        "trail": trail,
        "abs_trail": trail_abs,
    }
    return m, ok & ok_abs, report


def pettis_integral_via_support(G: Multifunction, grid=None, tol: float = 1e-6, seed: int = 0,
                                max_levels: int | None = None) -> Polytope:
    """Set with support values m(u) = integral of s(u, Gamma) on the grid.

    The result is the outer polytope cut out by the grid half-planes, so it
    matches m exactly on the grid and nowhere else is claimed.  Raises
    PettisFailure when some direction does not converge.
    """
    U = default_grid(G.dim) if grid is None else np.atleast_2d(np.asarray(grid, dtype=float))
    if G.dim == 2 and len(U) < 3:
        raise IntegrationError("need at least 3 directions in the plane")
    m, ok, report = _pettis_core(G, U, tol, seed, max_levels)
    if not ok.all():
        raise PettisFailure(report)
    return _reconstruct(G.dim, U, m)


def _reconstruct(dim: int, U: np.ndarray, m: np.ndarray) -> Polytope:
    if dim == 1:
        up = m[U[:, 0] > 0].min()
        dn = -m[U[:, 0] < 0].min()
        return cs.canonicalize([[dn], [up]])
    return _halfplane_polygon(U, m)


def pettis_integral(G: Multifunction, tol: float = 1e-6, seed: int = 0, grid=None,
                    max_levels: int | None = None) -> IntegralResult:
    """Pettis integration packaged as an IntegralResult (never raises on divergence)."""
    U = default_grid(G.dim) if grid is None else np.atleast_2d(np.asarray(grid, dtype=float))
    t0 = time.perf_counter()
    m, ok, report = _pettis_core(G, U, tol, seed, max_levels)
    value = _reconstruct(G.dim, U, m)
    levels = [LevelRecord(k, f"profile 2^-{k}", n, st, sp) for k, n, st, sp in report["trail"]]
    err = levels[-1].dH_to_prev if levels else None
    res = IntegralResult(value, "pettis", levels, err, levels[-1].tag_spread, bool(ok.all()),
                         seed, tol, runtimes_ms=[(time.perf_counter() - t0) * 1e3])
    if not ok.all():
        res.diverging_directions = [U[j].tolist() for j in np.flatnonzero(~ok)]
        res.notes.append("scalar support integrals did not converge in every direction")
    return res


def integrate(G: Multifunction, method: str, tol: float = 1e-6, max_levels: int | None = None,
              seed: int = 0, check_support: bool = False, grid=None,
              early_stop: bool = True) -> IntegralResult:
    """Dispatch to one of henstock, henstock-step, mcshane, birkhoff, pettis.

    ``early_stop`` applies to the gauge methods only.
    """
    kw = dict(max_levels=max_levels, seed=seed, early_stop=early_stop)
    if method == "henstock":
        res = henstock_integral(G, tol, **kw)
    elif method == "henstock-step":
        res = henstock_step_integral(G, tol, **kw)
    elif method == "mcshane":
        res = mcshane_integral(G, tol, **kw)
    elif method == "birkhoff":
        res = birkhoff_integral(G, tol, **kw)
    elif method == "pettis":
        res = pettis_integral(G, tol, seed=seed, grid=grid, max_levels=max_levels)
    else:
        raise IntegrationError(f"unknown method {method!r}")
    if check_support:
        U = default_grid(G.dim) if grid is None else np.asarray(grid, dtype=float)
        res.support_defect, _ = support_defect(res.value, G, U, tol, seed)
    return res


# ---------------------------------------------------------------------------
# variational notions


@lru_cache(maxsize=200_000)
def _primitive(G: Multifunction, a: float, b: float, tol: float, max_levels) -> Polytope:
    # full stopping rule: on oscillating maps a small level-to-level step alone can come early
    res = _set_driver(G, "henstock", tol, max_levels, 0, (a, b))
    return res.value


def variational_primitive(G: Multifunction, I, tol: float = 1e-6,
                          max_levels: int | None = None) -> Polytope:
    """Phi(I): the Henstock integral of Gamma over I (memoized)."""
    a, b = (I.a, I.b) if hasattr(I, "a") else map(float, I)
    a, b = float(a), float(b)
    if not 0.0 <= a <= b <= 1.0:
        raise IntegrationError(f"bad interval [{a}, {b}]")
    if a == b:
        return Polytope(np.zeros((1, G.dim)))
    return _primitive(G, a, b, float(tol), max_levels)


def variational_sum(G: Multifunction, p: TaggedPartition, tol: float = 1e-6) -> float:
    """sum_j d_H(Phi(I_j), Gamma(t_j) |I_j|), each Phi(I_j) computed to tol * |I_j|."""
    _check_partition(p)
    rows = G.rows(p.tags)
    total = 0.0
    for x, y, r in zip(p.a, p.b, rows):
        L = y - x
        if L <= 0:
            continue
        phi = variational_primitive(G, (x, y), tol * L)
        total += cs.hausdorff_distance(phi, cs.weighted_minkowski_sum(r[None], np.array([L])))
    return total


FINE_EXTRA_LEVELS = 3
FINE_MAX_EXTRA = 10


def _fine_level(G: Multifunction, profile: GaugeProfile, k: int, tol: float):
    """Smallest level >= k + FINE_EXTRA_LEVELS whose sum over [0, 1] moved by < tol."""
    prev = None
    for f in range(k + FINE_EXTRA_LEVELS - 1, k + FINE_MAX_EXTRA + 1):
        p = _Mesh(profile.gauge(f), 0.0, 1.0, profile.breakpoints).base()
        if len(p) > MAX_INTERVALS // 4:
            break
        S = cs.weighted_minkowski_sum(G.rows(p.tags), p.lengths)
        if prev is not None and cs.hausdorff_distance(S, prev[1]) < tol:
            return p
        prev = (p, S)
    return None if prev is None else prev[0]


def nested_primitives(G: Multifunction, coarse: TaggedPartition, fine: TaggedPartition):
    """Phi(I_j) for every interval of ``coarse``, as grouped Riemann sums of ``fine``.

    Returns None when ``fine`` does not refine ``coarse``.
    """
    if not np.all(np.isin(coarse.a, fine.a)) or not np.all(np.isin(coarse.b, fine.b)):
        return None
    starts = np.searchsorted(fine.a, coarse.a)
    return cs.grouped_minkowski_sums(G.rows(fine.tags), fine.lengths, starts)


def variational_sum_trail(G: Multifunction, levels: Sequence[int], tol: float = 1e-6,
                          profile: GaugeProfile | None = None, per_interval: bool = False) -> list:
    """Variational sums over the Perron partitions of the given gauge levels.

    By default Phi(I_j) comes from one finer Henstock partition of [0, 1]:
    gauge levels are pointwise ordered, so bisection partitions are nested and
    the fine sum restricted to I_j is a Henstock sum over I_j.  The fine level
    is raised until the whole-interval sum is stable to ``tol``.
    ``per_interval=True`` runs a separate Henstock integration per interval.
    """
    profile = profile or G.profile
    out = []
    fine = None if per_interval else _fine_level(G, profile, max(levels), tol)
    for k in levels:
        p = _Mesh(profile.gauge(k), 0.0, 1.0, profile.breakpoints).base()
        phis = None if fine is None else nested_primitives(G, p, fine)
        if phis is None:
            out.append((k, len(p), variational_sum(G, p, tol)))
            continue
        rows = G.rows(p.tags)
        total = 0.0
        for phi, r, L in zip(phis, rows, p.lengths):
            total += cs.hausdorff_distance(phi, cs.weighted_minkowski_sum(r[None], np.array([L])))
        out.append((k, len(p), total))
    return out


def _components(E) -> list:
    comps = [(float(a), float(b)) for a, b in E]
    for a, b in comps:
        if not 0.0 <= a < b <= 1.0:
            raise IntegrationError(f"bad component [{a}, {b}]")
    comps.sort()
    for (a0, b0), (a1, b1) in zip(comps, comps[1:]):
        if a1 < b0:
            raise IntegrationError("components of E overlap")
    return comps


def variational_measure_lower_bound(G: Multifunction, E, delta: Gauge, samples: int = 10,
                                    seed: int = 0, tol: float = 1e-6) -> float:
    """Lower bound for Var(Phi, delta, E): best of ``samples`` delta-fine Perron families.

    Sample i shrinks delta by a factor drawn from [1/4, 1] with the stream
    seeded by (seed, i) and covers each component of E by bisection, so a
    larger sample count can only raise the bound.
    """
    if samples < 1:
        raise IntegrationError("samples must be >= 1")
    comps = _components(E)
    best = None
    for i in range(int(samples)):
        rng = np.random.default_rng([seed, i])
        shrink = float(rng.uniform(0.25, 1.0))
        g = delta if shrink >= 1.0 else refine_gauge(delta, shrink)
        total = 0.0
        for a, b in comps:
            try:
                p = cousin_perron_partition(g.transport(a, b)).mapped(a, b)
            except PartitionError:
                continue
            for x, y in zip(p.a, p.b):
                total += cs.set_norm(variational_primitive(G, (x, y), tol * (y - x)))
        best = total if best is None else max(best, total)
    if best is None:
        raise IntegrationError("no delta-fine family found")
    return best


def interval_additivity_defect(G: Multifunction, a: float, tol: float = 1e-6) -> float:
    """d_H(Phi([0, 1]), Phi([0, a]) + Phi([a, 1]))."""
    if not 0.0 < a < 1.0:
        raise IntegrationError("split point must lie in (0, 1)")
    whole = variational_primitive(G, (0.0, 1.0), tol)
    left = variational_primitive(G, (0.0, a), tol)
    right = variational_primitive(G, (a, 1.0), tol)
    return cs.hausdorff_distance(whole, cs.minkowski_sum(left, right))
