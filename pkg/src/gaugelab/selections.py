"""Selections of multifunctions and numerical checks of the decomposition results.

A Henstock (resp. step-gauge Henstock, variationally Henstock) integrable
multifunction splits as a selection f plus G = Gamma - f, where G contains 0
everywhere and is McShane (resp. Birkhoff) integrable.  ``decomposition_verify``
integrates the three pieces and measures d_H(int Gamma, int f + int G).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import convex_sets as cs
from . import integrators as itg
from .integrators import IntegralResult, Multifunction
from .partitions import _radical_inverse

N_MEMBERSHIP = 1000
MODES = {
    "h-to-ms": "h-to-ms",
    "hk-to-ms": "h-to-ms",
    "hcal-to-birkhoff": "hcal-to-birkhoff",
    "vh-to-birkhoff": "vh-to-birkhoff",
}
# outer method for Gamma and f, inner method for G
_MODE_METHODS = {
    "h-to-ms": ("henstock", "mcshane"),
    "hcal-to-birkhoff": ("henstock-step", "birkhoff"),
    "vh-to-birkhoff": ("henstock", "birkhoff"),
}


class SelectionError(ValueError):
    """A point map left its multifunction; ``t`` is the first offending sample."""

    def __init__(self, msg, t=None):
        self.t = t
        super().__init__(msg)


def sample_points(n: int = N_MEMBERSHIP) -> np.ndarray:
    """First n van der Corput points (base 2), starting at 0."""
    return np.array([_radical_inverse(i, 2) for i in range(n)])


@dataclass(frozen=True, eq=False)
class Selection:
    """Vectorized point map f: ts -> (n, dim) with f(t) in Gamma(t)."""

    f: Callable
    dim: int
    provenance: str
    parent: str

    def __call__(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        return np.asarray(self.f(ts), dtype=float).reshape(len(ts), self.dim)

    def as_multifunction(self, profile=None, name: str | None = None) -> Multifunction:
        return Multifunction.point_valued(name or f"{self.provenance}({self.parent})", self.dim,
                                          self.__call__, **({"profile": profile} if profile else {}))


def _membership_failures(G: Multifunction, sel: Selection, ts: np.ndarray) -> list:
    pts = sel(ts)
    bad = []
    for t, x in zip(ts, pts):
        if not cs.contains(G(t), x):
            bad.append(float(t))
    return bad


def check_membership(G: Multifunction, sel: Selection, n: int = N_MEMBERSHIP) -> list:
    """Sample points t where f(t) is not in Gamma(t)."""
    return _membership_failures(G, sel, sample_points(n))


def steiner_selection(G: Multifunction) -> Selection:
    """f(t) = Steiner point of Gamma(t)."""
    if G.dim not in (1, 2):
        raise SelectionError("Steiner selections are implemented for dim 1 and 2")
    return Selection(lambda ts: cs.batch_steiner(G.rows(ts)), G.dim, "steiner", G.name)


def _extreme_rows(V: np.ndarray, u: np.ndarray) -> np.ndarray:
    score = V @ u
    top = score.max(axis=1, keepdims=True)
    scale_ = 1.0 + np.abs(V).max(axis=(1, 2))[:, None]
    cand = score >= top - 1e-12 * scale_
    # lexicographic max among candidates: largest x, then largest y
    X = np.where(cand, V[..., 0], -np.inf)
    xmax = X.max(axis=1, keepdims=True)
    cand &= X == xmax
    if V.shape[2] == 2:
        Y = np.where(cand, V[..., 1], -np.inf)
        j = np.argmax(Y, axis=1)
    else:
        j = np.argmax(cand, axis=1)
    return V[np.arange(len(V)), j]


def extreme_selection(G: Multifunction, u) -> Selection:
    """f(t) = vertex of Gamma(t) maximizing <u, .>, ties to the lexicographic max."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.size != G.dim or abs(np.linalg.norm(u) - 1.0) > 1e-12:
        raise SelectionError("u must be a unit vector of the right dimension")
    label = "extreme(" + ",".join(f"{c:g}" for c in u) + ")"
    return Selection(lambda ts: _extreme_rows(G.rows(ts), u), G.dim, label, G.name)


def default_extreme_direction(dim: int) -> np.ndarray:
    return np.array([-1.0]) if dim == 1 else np.array([1.0, 0.0])


def make_selection(G: Multifunction, kind: str) -> Selection:
    """``steiner``, ``extreme`` (default direction) or ``extreme:u1,u2``."""
    if kind == "steiner":
        return steiner_selection(G)
    if kind == "extreme":
        return extreme_selection(G, default_extreme_direction(G.dim))
    if kind.startswith("extreme:"):
        u = cs.direction([float(c) for c in kind.split(":", 1)[1].split(",")])
        return extreme_selection(G, u)
    raise SelectionError(f"unknown selection {kind!r}")


def decompose(G: Multifunction, sel: Selection, n: int = N_MEMBERSHIP) -> Multifunction:
    """t -> Gamma(t) - f(t); raises SelectionError if f leaves Gamma at a sample."""
    bad = check_membership(G, sel, n)
    if bad:
        raise SelectionError(f"selection leaves {G.name} at t = {bad[0]!r}", bad[0])
    return G.translated(lambda ts: -sel(ts), name=f"{G.name}-{sel.provenance}")


@dataclass
class ZeroProfile:
    fraction: float
    samples: int
    violations: list


def contains_zero_profile(G: Multifunction, n: int = N_MEMBERSHIP) -> ZeroProfile:
    """Fraction of n deterministic sample points t with 0 in G(t)."""
    if n < 1:
        raise SelectionError("n must be >= 1")
    ts = sample_points(n)
    zero = np.zeros(G.dim)
    bad = [float(t) for t in ts if not cs.contains(G(t), zero)]
    return ZeroProfile(1.0 - len(bad) / n, n, bad)


@dataclass
class DecompositionReport:
    gamma: str
    selection: str
    g: str
    mode: str
    tol: float
    integral_gamma: IntegralResult
    integral_f: IntegralResult
    integral_g: IntegralResult
    closure_defect: float
    support_defect: float
    zero_fraction: float
    converged: dict
    passed: bool | None
    variational: dict = field(default_factory=dict)


def _decreasing(trail: list, tol: float) -> bool:
    vals = [v for *_, v in trail]
    return all(b <= a + tol for a, b in zip(vals, vals[1:]))


def decomposition_verify(G: Multifunction, selection: str = "steiner", mode: str = "h-to-ms",
                         tol: float = 1e-5, seed: int = 0, max_levels: int | None = None,
                         var_levels: tuple = (2, 3, 4, 5)) -> DecompositionReport:
    """Integrate Gamma, a selection f and G = Gamma - f; compare int Gamma with int f + int G.

    ``passed`` is None when some integral did not converge (no verdict),
    otherwise whether the closure defect is at most 3 * tol (and, in the
    variational mode, whether the variational sums of Gamma and G decrease).
    """
    if mode not in MODES:
        raise SelectionError(f"unknown mode {mode!r}")
    mode = MODES[mode]
    outer, inner = _MODE_METHODS[mode]
    sel = make_selection(G, selection)
    Gm = decompose(G, sel)
    fm = sel.as_multifunction(G.profile)
    r_gamma = itg.integrate(G, outer, tol, max_levels, seed)
    r_f = itg.integrate(fm, outer, tol, max_levels, seed)
    r_g = itg.integrate(Gm, inner, tol, max_levels, seed)
    total = cs.minkowski_sum(r_f.value, r_g.value)
    defect = cs.hausdorff_distance(r_gamma.value, total)
    U = itg.default_grid(G.dim)
    sdef = float(np.max(np.abs(cs.support_many(r_gamma.value, U)
                               - (U @ r_f.value.vertices[0] + cs.support_many(r_g.value, U)))))
    zp = contains_zero_profile(Gm)
    conv = {"gamma": r_gamma.converged, "f": r_f.converged, "g": r_g.converged}
    variational = {}
    ok_var = True
    if mode == "vh-to-birkhoff":
        tg = itg.variational_sum_trail(G, var_levels, tol)
        tgg = itg.variational_sum_trail(Gm, var_levels, tol)
        variational = {"gamma": tg, "g": tgg,
                       "gamma_decreasing": _decreasing(tg, tol),
                       "g_decreasing": _decreasing(tgg, tol)}
        ok_var = variational["gamma_decreasing"] and variational["g_decreasing"]
    passed = None
    if all(conv.values()):
        passed = bool(defect <= 3 * tol and zp.fraction == 1.0 and ok_var)
    return DecompositionReport(G.name, sel.provenance, Gm.name, mode, tol, r_gamma, r_f, r_g,
                               defect, sdef, zp.fraction, conv, passed, variational)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class RiemannMeasurabilityReport:
    weak: float
    strong: float
    trials_used: int
    passed: bool


def _clip_to(F: list, a: float, b: float) -> list:
    out = []
    for lo, hi in F:
        x, y = max(lo, a), min(hi, b)
        if x <= y:
            out.append((x, y))
    return out


def riemann_measurability_diagnostic(phi: Callable, eps: float, eta: float, F, trials: int = 32,
                                     seed: int = 0) -> RiemannMeasurabilityReport:
    """Tag-swap stability of Riemann sums of phi on a closed set F.

    Each trial lays a randomly shifted grid of mesh < eta over [0, 1]; on
    every cell meeting F two tags t, t' are drawn in the cell's intersection
    with F.  Reports the largest ||sum (phi(t) - phi(t')) |I||| (weak form)
    and sum ||phi(t) - phi(t')|| |I| (strong form); passes iff both < eps.
    """
    if not eta > 0 or not eps > 0:
        raise SelectionError("eps and eta must be > 0")
    F = [(float(a), float(b)) for a, b in F]
    rng = np.random.default_rng(seed)
    weak = strong = 0.0
    used = 0
    for _ in range(trials):
        h = eta * rng.uniform(0.5, 0.999)
        off = rng.uniform(0.0, h)
        edges = np.unique(np.clip(np.concatenate([[0.0], off + h * np.arange(int(1 / h) + 2), [1.0]]),
                                  0.0, 1.0))
        t1, t2, w = [], [], []
        for a, b in zip(edges[:-1], edges[1:]):
            pieces = _clip_to(F, a, b)
            if not pieces:
                continue
            lens = np.array([y - x for x, y in pieces])
            pick = lambda: pieces[rng.choice(len(pieces), p=lens / lens.sum())  # noqa: E731
                                  if lens.sum() > 0 else rng.integers(len(pieces))]
            x, y = pick()
            t1.append(rng.uniform(x, y))
            x, y = pick()
            t2.append(rng.uniform(x, y))
            w.append(b - a)
        if not w:
            continue
        used += 1
        d = np.asarray(phi(np.array(t1)), dtype=float) - np.asarray(phi(np.array(t2)), dtype=float)
        d = d.reshape(len(w), -1)
        w = np.array(w)
        weak = max(weak, float(np.linalg.norm(w @ d)))
        strong = max(strong, float(np.sum(np.linalg.norm(d, axis=1) * w)))
    if used == 0:
        raise SelectionError("F meets no cell in any trial")
    return RiemannMeasurabilityReport(weak, strong, used, bool(weak < eps and strong < eps))


@dataclass
class BoundCheck:
    value: float
    converged: bool


def integrable_bound_check(G: Multifunction, tol: float = 1e-6, max_levels: int | None = None
                           ) -> BoundCheck:
    """HK integral of t -> ||Gamma(t)||; ``converged=False`` flags divergence."""
    r = itg.scalar_hk_integral(G.norm, tol, G.profile, max_levels)
    return BoundCheck(r.value, r.converged)


def selection_integrability_check(sel: Selection, modes, tol: float = 1e-5, profile=None,
                                  max_levels: int | None = None, var_levels=(2, 3, 4, 5)) -> dict:
    """Run the requested integrators on f as a point-valued map; one flag per mode.

    ``variational-sum-decrease`` requires each of three gauge halvings to at
    least halve the variational sum (up to tol).
    """
    modes = set(modes)
    known = {"henstock", "mcshane", "birkhoff", "variational-sum-decrease"}
    if not modes or not modes <= known:
        raise SelectionError(f"modes must be a nonempty subset of {sorted(known)}")
    fm = sel.as_multifunction(profile)
    out = {}
    for m in sorted(modes & {"henstock", "mcshane", "birkhoff"}):
        r = itg.integrate(fm, m, tol, max_levels)
        out[m] = {"converged": r.converged, "value": r.value.vertices[0].tolist(),
                  "tag_spread": r.tag_spread}
    if "variational-sum-decrease" in modes:
        trail = itg.variational_sum_trail(fm, var_levels, tol)
        vals = [v for *_, v in trail]
        ok = all(b <= 0.5 * a + tol for a, b in zip(vals, vals[1:]))
        out["variational-sum-decrease"] = {"converged": ok, "sums": vals}
    return out
