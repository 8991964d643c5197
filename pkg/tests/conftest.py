from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from ggqmom.model import MVSDEModel, SDEModel
from ggqmom.polynomial import Polynomial
from ggqmom.quadrature import QuadratureMeasure


@st.composite
def random_models(draw, max_degree: int = 5):
    """SDE or MV models with polynomial drift/potential of degree <= max_degree."""
    deg = draw(st.integers(0, max_degree))
    c = draw(st.lists(st.floats(-2, 2), min_size=deg + 1, max_size=deg + 1))
    b = draw(st.lists(st.floats(-1, 1), min_size=1, max_size=3))
    b[0] = 1.0 + abs(b[0])
    sigma = draw(st.floats(0.1, 2.0))
    if draw(st.booleans()):
        return SDEModel(Polynomial(c), Polynomial(b), sigma)
    p = draw(st.lists(st.floats(-2, 2), min_size=1, max_size=4))
    theta = draw(st.floats(-2, 2))
    return MVSDEModel(Polynomial(c), Polynomial(p), theta, Polynomial(b), sigma)


@st.composite
def random_states(draw, max_n: int = 6):
    n = draw(st.integers(1, max_n))
    gaps = draw(st.lists(st.floats(0.05, 1.5), min_size=n, max_size=n))
    x = np.cumsum(gaps) - draw(st.floats(0, 1.5 * n))
    w = np.array(draw(st.lists(st.floats(0.02, 1.0), min_size=n, max_size=n)))
    return QuadratureMeasure.normalized(x, w)
