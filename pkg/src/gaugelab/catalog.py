"""Named multifunctions with known answers and default gauge settings."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import convex_sets as cs
from .integrators import Multifunction
from .partitions import GaugeProfile, Singularity

HENSTOCK = "expected-henstock"
MCSHANE = "expected-mcshane"
BIRKHOFF = "expected-birkhoff"
PETTIS = "expected-pettis"
VH = "expected-vh"
NONINTEGRABLE = "expected-nonintegrable"
WELL_BEHAVED = frozenset({HENSTOCK, MCSHANE, BIRKHOFF, PETTIS, VH})

# Slightly above 1/4: bisection then stops at intervals of length 2**-(k+1),
# so a delta_k-fine tag can only sit within 0.01 * 2**-k of the midpoint.
PINNED_BASE = 0.26

# F(t) = t^2 sin(t^-2): F' exists everywhere, is HK integrable, not Lebesgue integrable.
# The phase t^-2 turns at rate 2 t^-3, so the cubic term keeps the phase step per
# interval bounded near 0; the quadratic term refines further out, where the
# midpoint errors at jumps of the dyadic mesh cancel less well.
OSCILLATING_PROFILE = GaugeProfile(
    0.038, (Singularity(0.0, 12.8, 3.0, 0.4), Singularity(0.0, 0.09, 2.0, 0.4)))


def F(t):
    t = np.asarray(t, dtype=float)
    safe = np.where(t == 0, 1.0, t)
    return np.where(t == 0, 0.0, safe ** 2 * np.sin(safe ** -2.0))


def F_prime(t):
    t = np.asarray(t, dtype=float)
    safe = np.where(t == 0, 1.0, t)
    v = 2 * safe * np.sin(safe ** -2.0) - 2 / safe * np.cos(safe ** -2.0)
    return np.where(t == 0, 0.0, v)


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    multifunction: Multifunction
    tol: float = 1e-6
    max_levels: int | None = None

    @property
    def name(self) -> str:
        return self.multifunction.name

    @property
    def dim(self) -> int:
        return self.multifunction.dim

    @property
    def classes(self) -> frozenset:
        return self.multifunction.classes

    @property
    def description(self) -> str:
        return self.multifunction.description

    @property
    def known_integral(self):
        return self.multifunction.known_integral

    @property
    def profile(self) -> GaugeProfile:
        return self.multifunction.profile

    def known_support(self, U) -> np.ndarray | None:
        """Exact support values of the integral on directions U, when known."""
        mf = self.multifunction
        U = np.atleast_2d(np.asarray(U, dtype=float))
        if mf.known_support is not None:
            return np.asarray(mf.known_support(U), dtype=float)
        if mf.known_integral is not None:
            return cs.support_many(mf.known_integral, U)
        return None


def _constant(P: cs.Polytope):
    row = P.vertices

    def verts(ts):
        return np.broadcast_to(row, (len(ts),) + row.shape).copy()

    return verts


PENTAGON = cs.canonicalize([(1.0, 0.0), (0.3, 0.95), (-0.8, 0.6), (-0.8, -0.6), (0.3, -0.95)])
TRIANGLE = cs.canonicalize([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])
UNIT_BOX = cs.box([-1.0, -1.0], [1.0, 1.0])
SHIFTED_SQUARE = cs.box([-1.0, 0.0], [0.0, 1.0])


def _growing(ts):
    return np.stack([np.zeros_like(ts), ts], axis=1)[:, :, None]


def _step(ts):
    c = cs.stack_polytopes([TRIANGLE, SHIFTED_SQUARE])
    return np.where((ts <= 0.5)[:, None, None], c[0], c[1])


def _rotating(ts):
    z = np.zeros_like(ts)
    return np.stack([np.stack([z, z], axis=1),
                     np.stack([np.cos(2 * np.pi * ts), np.sin(2 * np.pi * ts)], axis=1)], axis=1)


def _scaled(ts):
    return ts[:, None, None] * UNIT_BOX.vertices[None, :, :]


def _improper(ts):
    safe = np.where(ts == 0, 1.0, ts)
    top = np.where(ts == 0, 0.0, safe ** -0.5)
    return np.stack([np.zeros_like(ts), top], axis=1)[:, :, None]


def _singular(ts):
    return F_prime(ts)[:, None, None]


def _conv_zero_g(ts):
    return np.stack([np.zeros_like(ts), F_prime(ts)], axis=1)[:, :, None]


def _disk_support(U):
    return np.full(len(U), 1.0 / math.pi)


@lru_cache(maxsize=1)
def _entries() -> tuple:
    one = cs.canonicalize([[-1.0], [2.0]])
    half = lambda P: cs.scale(P, 0.5)  # noqa: E731
    E = [
        CatalogEntry(Multifunction(
            "const_set", 2, _constant(PENTAGON), GaugeProfile(PINNED_BASE), known_integral=PENTAGON,
            classes=WELL_BEHAVED, description="constant pentagon in the plane")),
        CatalogEntry(Multifunction(
            "const_set_1d", 1, _constant(one), GaugeProfile(PINNED_BASE), known_integral=one,
            classes=WELL_BEHAVED, description="constant interval [-1, 2]")),
        CatalogEntry(Multifunction(
            "zero_set", 2, _constant(cs.point(0.0, 0.0)), GaugeProfile(PINNED_BASE),
            known_integral=cs.point(0.0, 0.0), classes=WELL_BEHAVED,
            description="constant {0}; its variational measure vanishes")),
        CatalogEntry(Multifunction(
            "growing_interval", 1, _growing, GaugeProfile(PINNED_BASE),
            known_integral=cs.canonicalize([[0.0], [0.5]]), classes=WELL_BEHAVED,
            description="[0, t]")),
        CatalogEntry(Multifunction(
            "step_set", 2, _step, GaugeProfile(0.25, (Singularity(0.5, 0.5, 1.0, 1e-6),)),
            known_integral=cs.minkowski_sum(half(TRIANGLE), half(SHIFTED_SQUARE)),
            classes=WELL_BEHAVED,
            description="triangle on [0, 1/2], unit square shifted left on (1/2, 1]")),
        CatalogEntry(Multifunction(
            "rotating_segment", 2, _rotating, GaugeProfile(PINNED_BASE), known_support=_disk_support,
            classes=WELL_BEHAVED,
            description="segment from 0 to (cos 2 pi t, sin 2 pi t); integral is the disk "
                        "of radius 1/pi")),
        CatalogEntry(Multifunction(
            "scaled_square", 2, _scaled, GaugeProfile(PINNED_BASE), known_integral=half(UNIT_BOX),
            classes=WELL_BEHAVED, description="t * [-1, 1]^2")),
        CatalogEntry(Multifunction(
            "improper_bounded", 1, _improper,
            GaugeProfile(0.5, (Singularity(0.0, 0.5, 1.0, 1e-12),)),
            known_integral=cs.canonicalize([[0.0], [2.0]]), classes=WELL_BEHAVED,
            description="conv{0, t^-1/2}, {0} at t = 0; unbounded but integrably bounded")),
        CatalogEntry(Multifunction(
            "singular_derivative", 1, _singular, OSCILLATING_PROFILE,
            known_integral=cs.point(math.sin(1.0)), classes=frozenset({HENSTOCK}),
            description="{F'(t)} with F(t) = t^2 sin(t^-2): Henstock but not McShane"),
            tol=1e-4, max_levels=7),
        CatalogEntry(Multifunction(
            "conv_zero_g", 1, _conv_zero_g, OSCILLATING_PROFILE,
            classes=frozenset({NONINTEGRABLE}),
            description="conv{0, F'(t)}: the positive part of F' is not HK integrable"),
            tol=1e-4, max_levels=7),
    ]
    return tuple(E)


def catalog() -> list[CatalogEntry]:
    return list(_entries())


def get(name: str) -> CatalogEntry:
    for e in _entries():
        if e.name == name:
            return e
    raise KeyError(name)


def names() -> list[str]:
    return [e.name for e in _entries()]
