"""Unforced Delaunay unduloid profiles.

The profile curve of an unduloid with mean curvature 2 is described either
by arc length ``s`` on the generating curve,

    phidot**2 + (phi**2 + tau)**2 = phi**2,   psidot = phi**2 + tau,

or by the axial coordinate ``psi`` with ``zeta = dphi/dpsi``,

    phi'' = (1 + zeta**2) / phi - 2 * (1 + zeta**2)**1.5.

``tau = -phi**2 + phi / sqrt(1 + zeta**2)`` is conserved. ``tau = 1/4`` is
the cylinder of radius 1/2 and ``tau -> 0`` a chain of unit spheres.
Trajectories start at a neck, ``phi(0) = phi_min``, ``zeta(0) = 0``.
"""

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ._ode import EVENT_TOL, integrate, upward_zeros
from .errors import DegenerateLimitWarning, DomainError

TAU_FLOOR = 1e-3
TAU_CYLINDER = 0.25
NEAR_CYLINDER = 0.2499
DEFAULT_TOL = 1e-10
SAMPLES_PER_UNIT = 64
# just above the smallest rtol DOP853 accepts; the period error is
# amplified by the neck curvature times the number of periods in shooting
PERIOD_TOL = 2.5e-14


@dataclass(frozen=True)
class DelaunayParameter:
    tau: float
    phi_min: float
    phi_max: float


@dataclass(frozen=True)
class ProfileState:
    psi: float
    phi: float
    zeta: float


@dataclass(frozen=True)
class SParamState:
    s: float
    phi: float
    psi: float
    phidot: float


@dataclass(frozen=True)
class Trajectory:
    """Densely sampled solution of a profile ODE.

    Attributes
    ----------
    psi, phi, zeta, tau : ndarray
        Samples on a uniform grid in ``psi`` with the first integral
        evaluated at each sample.
    events : ndarray
        Increasing ``psi`` values where ``zeta`` crosses zero upward
        (necks). The start is included when it is a neck.
    span : tuple
        ``(psi_start, psi_end)``.
    tolerance : float
        Integrator tolerance.
    dense : callable
        Interpolant returning the state vector at any ``psi`` in ``span``.
    steps : ndarray
        Accepted integrator step boundaries, used as quadrature panels.
    """

    psi: np.ndarray
    phi: np.ndarray
    zeta: np.ndarray
    tau: np.ndarray
    events: np.ndarray
    span: tuple
    tolerance: float
    dense: object = field(repr=False, compare=False)
    steps: np.ndarray = field(repr=False, compare=False)

    def states(self):
        for p, f, z in zip(self.psi, self.phi, self.zeta):
            yield ProfileState(float(p), float(f), float(z))

    def __call__(self, psi):
        """Return ``(phi, zeta)`` at ``psi`` from the dense interpolant."""
        y = self.dense(psi)
        return y[0], y[1]


@dataclass(frozen=True)
class SParamTrajectory:
    s: np.ndarray
    phi: np.ndarray
    phidot: np.ndarray
    psi: np.ndarray
    tau: float
    tolerance: float
    dense: object = field(repr=False, compare=False)

    def states(self):
        for s, f, p, d in zip(self.s, self.phi, self.psi, self.phidot):
            yield SParamState(float(s), float(f), float(p), float(d))


def check_tau(tau, allow_cylinder=True, floor=TAU_FLOOR):
    """Raise DomainError unless ``tau`` lies in the admissible range.

    The floor itself is accepted so that the sphere-chain end of a grid
    can be sampled at exactly ``TAU_FLOOR``.
    """
    tau = float(tau)
    upper_ok = tau <= TAU_CYLINDER if allow_cylinder else tau < TAU_CYLINDER
    if not (tau >= floor and upper_ok) or math.isnan(tau):
        hi = "1/4]" if allow_cylinder else "1/4)"
        raise DomainError(f"tau = {tau!r} is outside [{floor:g}, {hi}; "
                          "the Delaunay parameter must lie in (0, 1/4]")
    return tau


def delaunay_params(tau):
    """Neck and bulge radii for the Delaunay parameter ``tau``.

    They are the roots of ``phi**2 - phi + tau = 0``.
    """
    tau = float(tau)
    if not (0.0 < tau <= TAU_CYLINDER):
        raise DomainError(f"tau = {tau!r} is outside (0, 1/4]")
    disc = math.sqrt(max(1.0 - 4.0 * tau, 0.0))
    # the small root via the product of roots avoids cancellation
    phi_max = 0.5 * (1.0 + disc)
    phi_min = tau / phi_max
    return DelaunayParameter(tau, phi_min, phi_max)


def first_integral(phi, zeta):
    """Conserved quantity ``-phi**2 + phi / sqrt(1 + zeta**2)``."""
    return -phi * phi + phi / np.sqrt(1.0 + zeta * zeta)


def profile_acceleration(phi, zeta):
    """``phi''`` of the unforced profile ODE; accepts arrays."""
    w = 1.0 + zeta * zeta
    return w / phi - 2.0 * w * np.sqrt(w)


def profile_rhs(state):
    """Value of ``phi''`` at a ProfileState."""
    if state.phi <= 0:
        raise DomainError("phi must be positive")
    return float(profile_acceleration(state.phi, state.zeta))


def _psi_system(t, y):
    phi, zeta = y
    w = 1.0 + zeta * zeta
    return [zeta, w / phi - 2.0 * w * math.sqrt(w)]


def _sample_grid(a, b, n_samples):
    if n_samples is None:
        n_samples = max(int(math.ceil((b - a) * SAMPLES_PER_UNIT)) + 1, 2)
    return np.linspace(a, b, n_samples)


def build_trajectory(res, span, tol, n_samples=None, include_start=True):
    """Assemble a Trajectory from a scipy result with dense output."""
    a, b = span
    grid = _sample_grid(a, b, n_samples)
    y = res.sol(grid)
    events = upward_zeros(res.sol, res.t, res.y, 1, include_start=include_start)
    return Trajectory(psi=grid, phi=y[0], zeta=y[1],
                      tau=first_integral(y[0], y[1]), events=events,
                      span=(float(a), float(b)), tolerance=tol,
                      dense=res.sol, steps=np.asarray(res.t))


def integrate_profile(tau, span, tol=DEFAULT_TOL, n_samples=None, phi0=None):
    """Integrate the psi-form ODE from the neck of the ``tau`` orbit.

    Parameters
    ----------
    tau : float
        Delaunay parameter in ``(TAU_FLOOR, 1/4]``.
    span : tuple of float
        ``(0, psi_end)``; the start is where ``phi = phi_min``.
    tol : float
        Relative and absolute integrator tolerance.
    n_samples : int, optional
        Number of uniform output samples (default 64 per unit of psi).
    phi0 : float, optional
        Override of the starting radius; the orbit then has a different
        first integral. Used for finite-difference checks.

    Returns
    -------
    Trajectory
    """
    tau = check_tau(tau)
    a, b = float(span[0]), float(span[1])
    if not (b > a) or not math.isfinite(b):
        raise DomainError("span must be a finite interval with end > start")
    start = delaunay_params(tau).phi_min if phi0 is None else float(phi0)
    res = integrate(_psi_system, (a, b), [start, 0.0], tol)
    return build_trajectory(res, (a, b), tol, n_samples)


@lru_cache(maxsize=256)
def _period_numeric(tau, tol):
    # psi-period lies in (2, pi); a 4-unit window always holds the next neck
    p = delaunay_params(tau)
    res = integrate(_psi_system, (0.0, 4.0), [p.phi_min, 0.0], tol)
    ev = upward_zeros(res.sol, res.t, res.y, 1)
    ev = ev[ev > 1.0]
    return float(ev[0])


def period(tau, tol=None):
    """Psi-distance between consecutive necks of the ``tau`` orbit.

    For ``tau > 0.2499`` the oscillation is too shallow to time reliably
    and the cylinder limit ``pi`` is returned with a
    DegenerateLimitWarning. ``tau = 1/4`` itself raises DomainError.
    """
    tau = float(tau)
    if tau == TAU_CYLINDER:
        raise DomainError("the cylinder tau = 1/4 has no intrinsic period; "
                          "use the limit value pi explicitly")
    tau = check_tau(tau, allow_cylinder=False)
    if tau > NEAR_CYLINDER:
        warnings.warn(f"tau = {tau!r} is within 1e-4 of the cylinder; "
                      "returning the limit period pi", DegenerateLimitWarning,
                      stacklevel=2)
        return math.pi
    return _period_numeric(tau, PERIOD_TOL if tol is None else float(tol))


def _s_system(tau):
    def rhs(t, y):
        phi, phidot, psi = y
        v = phi * phi + tau
        return [phidot, phi - 2.0 * phi * v, v]
    return rhs


def integrate_s_param(tau, span, tol=DEFAULT_TOL, n_samples=None):
    """Integrate the arc-length form starting at the neck.

    The second-order form ``phi_ss = phi - 2 phi (phi**2 + tau)`` is used so
    the square root in the constraint never has to pick a branch.
    """
    tau = check_tau(tau)
    a, b = float(span[0]), float(span[1])
    if not (b > a) or not math.isfinite(b):
        raise DomainError("span must be a finite interval with end > start")
    p = delaunay_params(tau)
    res = integrate(_s_system(tau), (a, b), [p.phi_min, 0.0, 0.0], tol)
    grid = _sample_grid(a, b, n_samples)
    y = res.sol(grid)
    return SParamTrajectory(s=grid, phi=y[0], phidot=y[1], psi=y[2], tau=tau,
                            tolerance=tol, dense=res.sol)


def s_constraint_residual(traj):
    """Pointwise ``phidot**2 + (phi**2 + tau)**2 - phi**2``."""
    v = traj.phi ** 2 + traj.tau
    return traj.phidot ** 2 + v * v - traj.phi ** 2


def proper_sizes(L_gamma, tau0, n_max):
    """Scales ``eps_N = L_gamma / (N * period(tau0))`` for ``N = 1..n_max``."""
    L_gamma = float(L_gamma)
    if not L_gamma > 0:
        raise DomainError("L_gamma must be positive")
    if int(n_max) < 1:
        raise DomainError("n_max must be at least 1")
    P = period(tau0)
    n = np.arange(1, int(n_max) + 1, dtype=float)
    return L_gamma / (n * P)


def nearest_proper_size(L_gamma, tau0, epsilon):
    """Snap ``epsilon`` to the closest proper size. Returns ``(eps_N, N)``."""
    P = period(tau0)
    n = max(int(round(float(L_gamma) / (float(epsilon) * P))), 1)
    return float(L_gamma) / (n * P), n


__all__ = [
    "DEFAULT_TOL", "EVENT_TOL", "TAU_FLOOR", "DelaunayParameter", "ProfileState",
    "SParamState", "SParamTrajectory", "Trajectory", "build_trajectory",
    "check_tau", "delaunay_params", "first_integral", "integrate_profile",
    "integrate_s_param", "nearest_proper_size", "period", "profile_acceleration",
    "profile_rhs", "proper_sizes", "s_constraint_residual",
]
