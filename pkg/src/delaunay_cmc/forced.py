"""The curvature-forced profile ODE and its variational systems.

The forced profile solves

    zeta' = (1 + zeta**2) / phi - (2 + rho) * (1 + zeta**2)**1.5

with

    rho = -eps**2 * F1*Pi0(R1) + eps * F4 * xi(x0) + eps**3 * mu(psi)
          + eps**3 * omega * zeta / phi,

``x0 = eps * (psi + delta)`` and ``mu`` read at ``psi + delta``. Along
solutions the first integral drifts as ``dtau/dpsi = rho * phi * zeta``.

Variational columns are integrated alongside the base state. Their
coefficients come from complex-step derivatives of the right-hand side,
which are exact to rounding for these closed-form coefficient functions.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import coefficients as coef
from ._ode import integrate
from .delaunay_core import (build_trajectory, check_tau, delaunay_params,
                            first_integral, nearest_proper_size, period)
from .errors import AnnulusExitError, DomainError
from .profiles import PeriodicProfile

SHOOT_TOL = 3e-14
CSTEP = 1e-30


@dataclass(frozen=True)
class ForcingSpec:
    """Forcing data of the 0th-mode problem.

    ``a`` and ``b`` are the circle averages of the curvature components
    ``R(U, X0, U, X0)`` and ``R(U, U_theta, U, U_theta)`` along the geodesic,
    ``xi`` the first-mode coupling and ``mu`` the 0th-mode correction, all
    periodic: ``a, b, xi`` in ``x0`` with period ``L_gamma`` and ``mu`` in
    ``psi`` with period ``L_gamma / epsilon``. Build with ``make_forcing``.
    """

    epsilon: float
    tau0: float
    L_gamma: float
    a: PeriodicProfile
    b: PeriodicProfile
    xi: PeriodicProfile
    mu: PeriodicProfile
    omega: float = 0.0
    phi0: float = None
    n_periods: int = 0
    psi_period: float = 0.0
    requested_epsilon: float = None
    delta1: float = field(default=None)

    def __post_init__(self):
        check_tau(self.tau0, allow_cylinder=False)
        ratio = self.L_gamma / (self.epsilon * self.psi_period)
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) != self.n_periods:
            raise DomainError(f"epsilon = {self.epsilon!r} is not a proper size "
                              f"(L_gamma / (eps * period) = {ratio!r})")
        if self.delta1 is None:
            object.__setattr__(self, "delta1",
                               min(self.tau0, 0.25 - self.tau0) / 2.0)
        if self.phi0 is None:
            object.__setattr__(self, "phi0", delaunay_params(self.tau0).phi_min)

    @property
    def psi_end(self):
        return self.n_periods * self.psi_period

    @property
    def is_unforced(self):
        return (self.a.is_zero and self.b.is_zero and self.xi.is_zero
                and self.mu.is_zero)

    def with_params(self, omega=None, phi0=None):
        return replace(self, omega=self.omega if omega is None else float(omega),
                       phi0=self.phi0 if phi0 is None else float(phi0))

    def with_profiles(self, **kw):
        return replace(self, **kw)

    def describe(self):
        return {"epsilon": self.epsilon, "tau0": self.tau0,
                "L_gamma": self.L_gamma, "N": self.n_periods,
                "a": self.a.describe(), "b": self.b.describe(),
                "xi": self.xi.describe(), "mu": self.mu.describe(),
                "omega": self.omega, "phi0": self.phi0}


def make_forcing(L_gamma, tau0, epsilon=None, N=None, a="zero", b="zero",
                 xi="zero", mu="zero", omega=0.0, phi0=None, delta1=None):
    """Build a ForcingSpec, snapping ``epsilon`` to the nearest proper size.

    Exactly one of ``epsilon`` and ``N`` must be given. Profiles may be
    PeriodicProfile objects, preset strings or node arrays.
    """
    tau0 = check_tau(tau0, allow_cylinder=False)
    L_gamma = float(L_gamma)
    if not L_gamma > 0:
        raise DomainError("L_gamma must be positive")
    if (epsilon is None) == (N is None):
        raise DomainError("give exactly one of epsilon and N")
    P = period(tau0)
    if N is not None:
        N = int(N)
        if N < 1:
            raise DomainError("N must be at least 1")
        eps = L_gamma / (N * P)
    else:
        if not float(epsilon) > 0:
            raise DomainError("epsilon must be positive")
        eps, N = nearest_proper_size(L_gamma, tau0, epsilon)
    mu_period = L_gamma / eps
    return ForcingSpec(
        epsilon=eps, tau0=tau0, L_gamma=L_gamma,
        a=PeriodicProfile.parse(a, L_gamma), b=PeriodicProfile.parse(b, L_gamma),
        xi=PeriodicProfile.parse(xi, L_gamma),
        mu=PeriodicProfile.parse(mu, mu_period),
        omega=float(omega), phi0=phi0, n_periods=N, psi_period=P,
        requested_epsilon=None if epsilon is None else float(epsilon),
        delta1=delta1)


def rho_value(phi, zeta, eps, a, b, xi, mu, omega):
    """Forcing term for given profile values; accepts complex ``phi, zeta``."""
    r = 0.0
    if a != 0.0 or b != 0.0:
        r = r - eps * eps * coef.f1_star(phi, zeta, a, b)
    if xi != 0.0:
        r = r + eps * coef.f4(phi, zeta) * xi
    e3 = eps * eps * eps
    return r + e3 * mu + e3 * omega * zeta / phi


def rho(state, x0, forcing):
    """Forcing term at a ProfileState with geodesic coordinate ``x0``."""
    f = forcing
    return float(rho_value(state.phi, state.zeta, f.epsilon, f.a(x0), f.b(x0),
                           f.xi(x0), f.mu(state.psi), f.omega))


class ForcedField:
    """Right-hand side of the forced ODE with variational columns.

    Parameters
    ----------
    forcing : ForcingSpec
    delta : float
        Start offset; profiles are read at ``psi + delta``.
    columns : sequence
        Each entry is ``None`` for a homogeneous column or a callable
        ``source(psi, phi, zeta, w32)`` returning the inhomogeneous term,
        where ``w32 = (1 + zeta**2)**1.5``.
    """

    def __init__(self, forcing, delta=0.0, columns=()):
        f = forcing
        self.forcing = f
        self.delta = float(delta)
        self.eps = f.epsilon
        self.omega = f.omega
        self.columns = list(columns)
        self._a = None if f.a.is_zero else f.a
        self._b = None if f.b.is_zero else f.b
        self._xi = None if f.xi.is_zero else f.xi
        self._mu = None if f.mu.is_zero else f.mu

    def profile_values(self, psi):
        x0 = self.eps * (psi + self.delta)
        a = self._a(x0) if self._a is not None else 0.0
        b = self._b(x0) if self._b is not None else 0.0
        xi = self._xi(x0) if self._xi is not None else 0.0
        mu = self._mu(psi + self.delta) if self._mu is not None else 0.0
        return a, b, xi, mu

    def accel(self, phi, zeta, vals):
        w = 1.0 + zeta * zeta
        r = rho_value(phi, zeta, self.eps, *vals, self.omega)
        return w / phi - (2.0 + r) * w * w ** 0.5

    def partials(self, phi, zeta, vals):
        """``(G, dG/dphi, dG/dzeta)`` for the acceleration ``G``."""
        g = self.accel(phi, zeta, vals)
        gp = self.accel(complex(phi, CSTEP), zeta, vals).imag / CSTEP
        gz = self.accel(phi, complex(zeta, CSTEP), vals).imag / CSTEP
        return g, gp, gz

    def __call__(self, psi, y):
        phi, zeta = y[0], y[1]
        vals = self.profile_values(psi)
        if not self.columns:
            return [zeta, self.accel(phi, zeta, vals)]
        g, gp, gz = self.partials(phi, zeta, vals)
        out = [zeta, g]
        w32 = (1.0 + zeta * zeta) ** 1.5
        for k, src in enumerate(self.columns):
            b0, b1 = y[2 + 2 * k], y[3 + 2 * k]
            acc = gp * b0 + gz * b1
            if src is not None:
                acc += src(psi, phi, zeta, w32)
            out.append(b1)
            out.append(acc)
        return out


def annulus_events(forcing):
    """Terminal events for leaving the band ``|tau - tau0| < delta1``."""
    lo = forcing.tau0 - forcing.delta1
    hi = forcing.tau0 + forcing.delta1

    def low(t, y):
        return first_integral(y[0], y[1]) - lo

    def high(t, y):
        return hi - first_integral(y[0], y[1])

    low.terminal = high.terminal = True
    return [low, high]


@dataclass(frozen=True)
class ForcedTrajectory:
    base: object
    tau_track: np.ndarray
    x0_track: np.ndarray
    annulus_flag: bool
    exit_psi: float
    start_delta: float
    forcing: ForcingSpec = field(repr=False)
    end_state: np.ndarray = field(repr=False, default=None)

    @property
    def psi(self):
        return self.base.psi

    @property
    def phi(self):
        return self.base.phi

    @property
    def zeta(self):
        return self.base.zeta


def run_forced(forcing, delta=0.0, columns=(), init_columns=None, span=None,
               tol=SHOOT_TOL, guard=True):
    """Integrate the forced system with optional variational columns.

    Returns ``(result, exit_psi)`` where ``exit_psi`` is None unless the
    annulus guard stopped the integration.
    """
    fld = ForcedField(forcing, delta, columns)
    y0 = [forcing.phi0, 0.0]
    if init_columns is None:
        init_columns = [(0.0, 0.0)] * len(columns)
    for c in init_columns:
        y0.extend(c)
    end = forcing.psi_end if span is None else float(span)
    res = integrate(fld, (0.0, end), y0, tol,
                    events=annulus_events(forcing) if guard else None)
    exit_psi = None
    if res.status == 1:
        exit_psi = float(res.t[-1])
    return res, exit_psi


def integrate_forced(forcing, start_delta=0.0, tol=SHOOT_TOL, raise_on_exit=True,
                     span=None, n_samples=None):
    """Integrate the forced profile ODE over ``[0, L_gamma / epsilon]``.

    The start is ``(forcing.phi0, 0)``; profiles are read at
    ``x0 = epsilon * (psi + start_delta)``.

    Raises
    ------
    AnnulusExitError
        If ``|tau - tau0|`` reaches ``delta1`` and ``raise_on_exit``.
    """
    res, exit_psi = run_forced(forcing, start_delta, span=span, tol=tol)
    if exit_psi is not None and raise_on_exit:
        raise AnnulusExitError(f"trajectory left the annulus at psi = {exit_psi!r}",
                               exit_psi)
    end = float(res.t[-1])
    base = build_trajectory(res, (0.0, end), tol, n_samples)
    return ForcedTrajectory(base=base, tau_track=base.tau,
                            x0_track=forcing.epsilon * base.psi,
                            annulus_flag=exit_psi is None,
                            exit_psi=exit_psi if exit_psi is not None else math.nan,
                            start_delta=float(start_delta), forcing=forcing,
                            end_state=res.y[:, -1].copy())


def omega_source(forcing):
    e3 = forcing.epsilon ** 3

    def src(psi, phi, zeta, w32):
        return -e3 * zeta / phi * w32
    return src


def mu_source(forcing, dmu, delta=0.0):
    e3 = forcing.epsilon ** 3

    def src(psi, phi, zeta, w32):
        return -e3 * w32 * dmu(psi + delta)
    return src


def xi_source(forcing, dxi, delta=0.0):
    eps = forcing.epsilon

    def src(psi, phi, zeta, w32):
        return -eps * coef.f4(phi, zeta) * w32 * dxi(eps * (psi + delta))
    return src


def tau_gradient(phi, zeta):
    """Partial derivatives of the first integral in ``(phi, zeta)``."""
    s = math.sqrt(1.0 + zeta * zeta)
    return -2.0 * phi + 1.0 / s, -phi * zeta / s ** 3
