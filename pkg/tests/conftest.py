import os
import sys

import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from gaugelab import convex_sets as cs  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

coord = st.floats(-5, 5, allow_nan=False, allow_infinity=False).map(lambda x: round(x, 6))


@st.composite
def point_sets(draw, dim=None, max_size=16):
    d = draw(st.sampled_from([1, 2])) if dim is None else dim
    n = draw(st.integers(1, max_size))
    pts = draw(st.lists(st.tuples(*[coord] * d), min_size=n, max_size=n))
    return np.array(pts, dtype=float)


@st.composite
def polytopes(draw, dim=None, max_size=16):
    return cs.canonicalize(draw(point_sets(dim, max_size)))


@st.composite
def polytope_pairs(draw, dim=None):
    d = draw(st.sampled_from([1, 2])) if dim is None else dim
    return draw(polytopes(d)), draw(polytopes(d))


def random_polytope(rng, dim, max_vertices=16):
    n = int(rng.integers(1, max_vertices + 1))
    return cs.canonicalize(rng.uniform(-5, 5, size=(n, dim)))


def unit(dim, rng):
    u = rng.normal(size=dim)
    return u / np.linalg.norm(u)
