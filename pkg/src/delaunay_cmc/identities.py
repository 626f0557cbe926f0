"""Quadrature checks of exact identities satisfied by unduloid profiles.

Each check integrates a single period between consecutive necks and
returns an IdentityReport comparing a computed left-hand side with its
exact right-hand side.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import coefficients as coef
from .delaunay_core import (check_tau, integrate_profile, integrate_s_param,
                            period, profile_acceleration)
from .quadrature import NODES_PER_PANEL, integrate_samples, panel_edges
from ._ode import upward_zeros

IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class IdentityReport:
    name: str
    tau: float
    lhs: float
    rhs: float
    abs_err: float
    rel_err: float
    n_quadrature_nodes: int

    @classmethod
    def build(cls, name, tau, lhs, rhs, nodes):
        err = abs(lhs - rhs)
        return cls(name, float(tau), float(lhs), float(rhs), float(err),
                   float(err / max(abs(rhs), 1.0)), int(nodes))

    def to_record(self):
        rec = asdict(self)
        rec["nodes"] = rec.pop("n_quadrature_nodes")
        return rec


@dataclass(frozen=True)
class AverageOneData:
    I1: float
    I2: float
    product_check: float


def profile_mean_curvature(phi, zeta, phi_pp):
    """Mean curvature of the surface of revolution with profile ``phi(psi)``."""
    w = 1.0 + zeta * zeta
    return -phi_pp / (w * np.sqrt(w)) + 1.0 / (phi * np.sqrt(w))


def mean_curvature_profile(traj):
    """Return ``(psi, H)`` along an unforced trajectory.

    The second derivative comes from the ODE right-hand side.
    """
    acc = profile_acceleration(traj.phi, traj.zeta)
    return traj.psi, profile_mean_curvature(traj.phi, traj.zeta, acc)


def _one_period(tau, tol, extra=0.0):
    P = period(tau)
    traj = integrate_profile(tau, (0.0, P * 1.05 + extra), tol=tol)
    a, b = traj.events[0], traj.events[1]
    return traj, float(a), float(b)


def average_one_check(tau, tol=IDENTITY_TOL, nodes=NODES_PER_PANEL, panels=None):
    """Check the averaging identity of the geodesic Jacobi coefficients.

    Over one period ``[a, b]``,
    ``int u dpsi * int phi**2 / psidot**3 dpsi = (b - a)**2``
    where ``u`` is the potential coefficient divided by ``phi``.

    Parameters
    ----------
    tau : float
        Delaunay parameter, strictly below 1/4.
    tol : float
        Integrator tolerance of the underlying trajectory.
    nodes : int
        Gauss-Legendre nodes per panel.
    panels : int, optional
        Uniform panel count; integrator steps are used when omitted.

    Returns
    -------
    (AverageOneData, IdentityReport)
    """
    tau = check_tau(tau, allow_cylinder=False)
    traj, a, b = _one_period(tau, tol)
    edges = panel_edges(a, b, traj.steps, panels)

    def f(t):
        y = traj.dense(t)
        return coef.average_one_integrands(y[0], y[1])

    (iu, iv), n = integrate_samples(f, edges, nodes)
    length = b - a
    I1 = iv / length
    I2 = iu / iv
    data = AverageOneData(I1, I2, I1 * I1 * I2)
    return data, IdentityReport.build("average_one", tau, iu * iv, length ** 2, n)


def average_zero_check(tau, tol=IDENTITY_TOL, nodes=NODES_PER_PANEL, panels=None,
                       shift=0.0):
    """Check that ``phi * zeta * F4`` has zero mean over a period.

    ``lhs`` is the period integral divided by the integral of its absolute
    value, so ``abs_err`` is the normalized defect. ``shift`` translates
    the window by a fixed amount.
    """
    tau = check_tau(tau, allow_cylinder=False)
    traj, a, b = _one_period(tau, tol, extra=abs(shift))
    a, b = a + shift, b + shift
    edges = panel_edges(a, b, traj.steps, panels)

    def f(t):
        y = traj.dense(t)
        g = y[0] * y[1] * coef.f4(y[0], y[1])
        return g, np.abs(g)

    (total, scale), n = integrate_samples(f, edges, nodes)
    return IdentityReport.build("average_zero", tau, total / scale, 0.0, n)


def _s_period(tau, tol, periods=1):
    # arc-length period grows from 2 pi (cylinder) as tau decreases
    span = 8.0 * (periods + 1)
    while True:
        straj = integrate_s_param(tau, (0.0, span), tol=tol)
        ts = np.linspace(0.0, span, int(400 * span))
        necks = upward_zeros(straj.dense, ts, straj.dense(ts), 1,
                             include_start=True)
        if necks.size > periods:
            return straj, necks
        span *= 2.0


def average_zero_sigma_check(tau, tol=IDENTITY_TOL, nodes=NODES_PER_PANEL):
    """Arc-length form of the zero-mean identity.

    With ``sigma = log(phi / sqrt(tau))`` the identity reads
    ``int sigma_s**2 (phi phi_ss + phi_s**2 - 2 (phi**2 + tau)(phi**2 - tau)) ds = 0``
    over one period; reported normalized like ``average_zero_check``.
    """
    tau = check_tau(tau, allow_cylinder=False)
    straj, necks = _s_period(tau, tol)
    a, b = necks[0], necks[1]
    edges = np.linspace(a, b, 65)

    def f(t):
        phi, phid, _ = straj.dense(t)
        v = phi * phi + tau
        phidd = phi - 2.0 * phi * v
        sig_s = phid / phi
        g = sig_s ** 2 * (phi * phidd + phid * phid - 2.0 * v * (phi * phi - tau))
        return g, np.abs(g)

    (total, scale), n = integrate_samples(f, edges, nodes)
    return IdentityReport.build("average_zero_sigma", tau, total / scale, 0.0, n)


def wronskian_drift(tau, tol=IDENTITY_TOL, nodes=NODES_PER_PANEL, method="log"):
    """Wronskian ratio ``R(b) / R(a)`` of the Jacobi operator over one period.

    ``method="log"`` integrates ``d log R / dpsi = -p`` by quadrature;
    ``method="determinant"`` takes the determinant of the one-period matrix
    of an integrated fundamental pair.
    """
    tau = check_tau(tau, allow_cylinder=False)
    if method == "determinant":
        from .linearization import monodromy
        m = monodromy(tau, tol=tol, check=False)
        det = float(np.linalg.det(m.entries))
        return IdentityReport.build("wronskian_determinant", tau, det, 1.0, 0)
    traj, a, b = _one_period(tau, tol)
    edges = panel_edges(a, b, traj.steps)

    def f(t):
        phi, zeta = traj.dense(t)
        return 6.0 * np.sqrt(1.0 + zeta * zeta) * zeta - 2.0 * zeta / phi

    integral, n = integrate_samples(f, edges, nodes)
    return IdentityReport.build("wronskian", tau, math.exp(-integral), 1.0, n)


def sigma_relations(straj):
    """Pointwise residuals of the two logarithmic-radius relations.

    Returns ``(r1, r2)`` with ``r1 = 1 - sigma_s**2 - 4 tau cosh(sigma)**2``
    and ``r2 = sigma_ss + 2 tau sinh(2 sigma)``.
    """
    tau = straj.tau
    phi, phid = straj.phi, straj.phidot
    sigma = np.log(phi / math.sqrt(tau))
    sig_s = phid / phi
    phidd = phi - 2.0 * phi * (phi * phi + tau)
    sig_ss = phidd / phi - sig_s ** 2
    r1 = 1.0 - sig_s ** 2 - 4.0 * tau * np.cosh(sigma) ** 2
    r2 = sig_ss + 2.0 * tau * np.sinh(2.0 * sigma)
    return r1, r2


def sigma_identity_check(tau, tol=IDENTITY_TOL):
    """Max residual of both logarithmic-radius relations over two periods."""
    tau = check_tau(tau)
    if tau == 0.25:
        straj = integrate_s_param(tau, (0.0, 4.0 * math.pi), tol=tol)
    else:
        straj, _ = _s_period(tau, tol, periods=2)
    r1, r2 = sigma_relations(straj)
    worst = float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))
    return IdentityReport.build("sigma_relations", tau, worst, 0.0, straj.s.size)


def sigma_reflection_check(tau, tol=IDENTITY_TOL, n=401):
    """Odd symmetry of ``sigma`` about a point where ``phi = sqrt(tau)``.

    The reflection point is the first zero of ``sigma`` past half a period;
    the check covers a full half-window on both sides.
    """
    tau = check_tau(tau, allow_cylinder=False)
    straj, necks = _s_period(tau, tol, periods=2)
    S = necks[1] - necks[0]
    sol = straj.dense
    root = math.sqrt(tau)
    ts = np.linspace(0.5 * S, 1.5 * S, 2001)
    g = sol(ts)[0] - root
    k = int(np.nonzero(np.sign(g[:-1]) != np.sign(g[1:]))[0][0])
    from scipy.optimize import brentq
    s2 = brentq(lambda s: sol(s)[0] - root, ts[k], ts[k + 1], xtol=1e-15)
    t = np.linspace(0.0, 0.5 * S, n)
    sig = lambda s: np.log(sol(s)[0] / root)
    worst = float(np.max(np.abs(sig(s2 - t) + sig(s2 + t))))
    return IdentityReport.build("sigma_reflection", tau, worst, 0.0, n)


IDENTITY_CHECKS = {
    "average_one": lambda tau: average_one_check(tau)[1],
    "average_zero": average_zero_check,
    "average_zero_sigma": average_zero_sigma_check,
    "wronskian": wronskian_drift,
    "sigma_relations": sigma_identity_check,
    "sigma_reflection": sigma_reflection_check,
}


def run_identity_grid(taus):
    """All identity reports for each ``tau`` of a grid, grid-major order."""
    return [check(tau) for tau in taus for check in IDENTITY_CHECKS.values()]
