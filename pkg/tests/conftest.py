import numpy as np
import pytest
from hypothesis import strategies as st

from shiftvp.dynsys import make_system


@st.composite
def systems(draw, max_points=6, unit_mass=False):
    n = draw(st.integers(1, max_points))
    amap = draw(st.lists(st.integers(0, n - 1), min_size=n, max_size=n))
    if unit_mass:
        mass = [1.0] * n
    else:
        mass = draw(st.lists(st.floats(0.5, 2.0), min_size=n, max_size=n))
    return make_system(amap, mass)


@st.composite
def measures(draw, n, interior=False):
    lo = 0.05 if interior else 0.0
    raw = np.array(draw(st.lists(st.floats(lo, 1.0), min_size=n, max_size=n)))
    if raw.sum() <= 0:
        raw = np.ones(n)
    return raw / raw.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def fixed_point():
    # map [0, 0], masses (1, 2)
    return make_system([0, 0], [1.0, 2.0])


@pytest.fixture
def swap():
    return make_system([1, 0])


@pytest.fixture
def identity2():
    return make_system([0, 1])
