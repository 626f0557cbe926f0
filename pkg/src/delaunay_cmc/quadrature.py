"""Composite Gauss-Legendre quadrature over integrator panels."""

from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

NODES_PER_PANEL = 16


@lru_cache(maxsize=32)
def _rule(n):
    return leggauss(n)


def panel_edges(a, b, steps=None, panels=None):
    """Panel boundaries on ``[a, b]``.

    With ``panels`` given the interval is split uniformly, otherwise the
    accepted integrator steps inside ``[a, b]`` are used.
    """
    if panels is not None:
        return np.linspace(a, b, int(panels) + 1)
    steps = np.asarray(steps, dtype=float)
    inner = steps[(steps > a) & (steps < b)]
    return np.concatenate([[a], inner, [b]])


def nodes_and_weights(edges, n=NODES_PER_PANEL):
    """Flattened nodes and weights of the composite rule on ``edges``."""
    x, w = _rule(int(n))
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    t = half * x[None, :] + 0.5 * (hi + lo)
    return t.ravel(), (half * w[None, :]).ravel()


def integrate_samples(f, edges, n=NODES_PER_PANEL):
    """Integrate ``f(t)`` (vectorized) over the panels ``edges``.

    ``f`` may return a tuple of arrays; a matching tuple of integrals is
    returned. The node count is returned alongside.
    """
    t, w = nodes_and_weights(edges, n)
    vals = f(t)
    if isinstance(vals, tuple):
        return tuple(float(w @ v) for v in vals), t.size
    return float(w @ vals), t.size
