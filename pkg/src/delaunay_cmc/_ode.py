"""Thin wrappers around scipy's DOP853 integrator and zero-crossing search."""

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import IntegrationError

EVENT_TOL = 1e-12


def integrate(fun, span, y0, tol, events=None):
    """Integrate ``y' = fun(t, y)`` over ``span`` with dense output.

    Returns the scipy result object. Raises IntegrationError on failure,
    carrying ``(t, y)`` of the last accepted step.
    """
    res = solve_ivp(fun, span, np.asarray(y0, dtype=float), method="DOP853",
                    rtol=tol, atol=tol, dense_output=True, events=events)
    if res.status == -1:
        raise IntegrationError(f"integration failed: {res.message}",
                               last_state=(res.t[-1], res.y[:, -1].copy()))
    return res


def upward_zeros(dense, ts, ys, component, include_start=False, tol=EVENT_TOL):
    """Locate sign changes from negative to non-negative in one component.

    Brackets are taken between accepted integrator steps ``ts`` and refined
    on the dense interpolant. If ``include_start`` the initial point counts
    as a crossing when the component starts at zero.
    """
    g = ys[component]
    roots = []
    if include_start and abs(g[0]) <= tol:
        roots.append(float(ts[0]))
    for k in range(len(ts) - 1):
        if g[k] < 0.0 <= g[k + 1]:
            a, b = ts[k], ts[k + 1]
            if g[k + 1] == 0.0:
                roots.append(float(b))
                continue
            f = lambda t: dense(t)[component]
            r = brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            roots.append(float(r))
    out = []
    for r in roots:
        if not out or r > out[-1]:
            out.append(r)
    return np.array(out)
