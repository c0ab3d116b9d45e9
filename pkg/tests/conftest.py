import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from nsbox.polytope import ns_vertex_list
from nsbox.correlation import mix

VERTICES = ns_vertex_list()


def random_ns_box(rng, support=None, max_weight=20):
    """Exact random mixture of the 24 no-signaling vertices."""
    idx = list(range(24)) if support is None else list(support)
    w = rng.integers(0, max_weight + 1, size=len(idx))
    if w.sum() == 0:
        w[0] = 1
    total = int(w.sum())
    return mix([(Fraction(int(k), total), VERTICES[i].box) for k, i in zip(w, idx) if k])


def random_local_box(rng, max_weight=20):
    return random_ns_box(rng, support=range(16), max_weight=max_weight)


@st.composite
def ns_boxes(draw, local_only=False):
    n = 16 if local_only else 24
    weights = draw(st.lists(st.integers(0, 12), min_size=n, max_size=n).filter(lambda w: sum(w) > 0))
    total = sum(weights)
    return mix([(Fraction(k, total), VERTICES[i].box) for i, k in enumerate(weights) if k])


def unit_vectors(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


BITS = list(itertools.product(range(2), repeat=4))
