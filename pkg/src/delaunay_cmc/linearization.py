"""Linearized profile operator: fundamental pairs, one-period matrices,
transfer products, sensitivities and the boundary Jacobian.

The linearization of ``phi'' = G(psi, phi, zeta)`` about a solution is

    beta'' + p beta' + q beta = source,   p = -dG/dzeta,  q = -dG/dphi.

For the unforced profile ``p = 6 sqrt(1+zeta**2) zeta - 2 zeta / phi`` and
``q = (1 + zeta**2) / phi**2``. The one-period matrix of the unforced
operator is unipotent, ``[[1, 0], [kappa, 1]]``, because ``phi'`` is a
periodic solution (axial translation) and the second solution grows
linearly (change of necksize).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._ode import integrate
from .delaunay_core import (check_tau, delaunay_params, first_integral,
                            integrate_profile, period, profile_acceleration)
from .errors import DegenerateError, StructureError
from .forced import (SHOOT_TOL, ForcedField, mu_source, omega_source,
                     run_forced, tau_gradient, xi_source)
from .profiles import PeriodicProfile

LINEAR_TOL = 1e-12
STRUCTURE_TOL = 1e-6
FD_FLAG_TOL = 1e-3


@dataclass(frozen=True)
class FundamentalPair:
    """Solutions with identity initial matrix at ``psi[0]``.

    ``beta1`` and ``beta2`` have columns ``(beta, beta')``. ``wronskian`` is
    the determinant of the solution matrix and ``wronskian_log`` the value
    ``exp(-int p)`` integrated alongside.
    """

    psi: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    wronskian: np.ndarray
    wronskian_log: np.ndarray
    end_matrix: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class PeriodMatrix:
    entries: np.ndarray
    kappa: float
    structure_defect: float

    @property
    def determinant(self):
        return float(np.linalg.det(self.entries))

    @property
    def trace(self):
        return float(np.trace(self.entries))


@dataclass(frozen=True)
class PeriodicSolutionData:
    psi: np.ndarray
    v: np.ndarray
    v_prime: np.ndarray
    h1: float
    h2: float
    translation_residual: float
    decomposition_residual: float


@dataclass(frozen=True)
class TransferProducts:
    necks: np.ndarray
    steps: list
    products: list


@dataclass(frozen=True)
class SensitivitySolution:
    which: str
    psi: np.ndarray
    beta: np.ndarray
    sup_norm: float
    sup_deriv_norm: float


@dataclass(frozen=True)
class BoundaryJacobian:
    """``d(dtau, zeta_end) / d(omega, phi0)`` with residuals at the point.

    ``fd_matrix`` is the central-difference estimate when requested and
    ``fd_flag`` is set when the two disagree by more than 1e-3 relative.
    """

    matrix: np.ndarray
    residual: tuple
    fd_matrix: np.ndarray = None
    fd_flag: bool = False
    exit_psi: float = None


def _unforced_partials(phi, zeta):
    w = 1.0 + zeta * zeta
    s = math.sqrt(w)
    g = w / phi - 2.0 * w * s
    return g, -w / (phi * phi), 2.0 * zeta / phi - 6.0 * zeta * s


class _Unforced:
    """Partials provider for the unforced field."""

    def partials_at(self, psi, phi, zeta):
        return _unforced_partials(phi, zeta)


class _Forced:
    def __init__(self, forcing, delta):
        self.field = ForcedField(forcing, delta)

    def partials_at(self, psi, phi, zeta):
        return self.field.partials(phi, zeta, self.field.profile_values(psi))


def linearized_coefficients(state, forcing=None, start_delta=0.0):
    """Coefficients ``(p, q)`` of the linearized operator at ``state``.

    With a forcing the derivatives of the forcing term with respect to
    ``(phi, zeta)`` are included; profiles are read at
    ``x0 = epsilon * (state.psi + start_delta)``.
    """
    if forcing is None:
        _, gp, gz = _unforced_partials(state.phi, state.zeta)
    else:
        _, gp, gz = _Forced(forcing, start_delta).partials_at(
            state.psi, state.phi, state.zeta)
    return -gz, -gp


def forced_corrections(state, forcing, start_delta=0.0):
    """The forcing parts ``(Fbar1, Fbar2)`` of ``(p, q)``."""
    p0, q0 = linearized_coefficients(state)
    p, q = linearized_coefficients(state, forcing, start_delta)
    return p - p0, q - q0


def _pair_system(provider):
    def rhs(psi, y):
        phi, zeta = y[0], y[1]
        g, gp, gz = provider.partials_at(psi, phi, zeta)
        return [zeta, g,
                y[3], gp * y[2] + gz * y[3],
                y[5], gp * y[4] + gz * y[5],
                gz]
    return rhs


def _base_state(source, psi, tol, start_delta):
    """Base ``(phi, zeta)`` at ``psi`` and the partials provider."""
    if isinstance(source, (int, float)):
        tau = check_tau(source, allow_cylinder=True)
        start = [delaunay_params(tau).phi_min, 0.0]
        provider = _Unforced()
        if psi == 0.0:
            return start, provider
        traj = integrate_profile(tau, (0.0, psi), tol=tol, n_samples=2)
        return [traj.phi[-1], traj.zeta[-1]], provider
    provider = _Forced(source, start_delta)
    if psi == 0.0:
        return [source.phi0, 0.0], provider
    res, _ = run_forced(source, start_delta, span=psi, tol=tol, guard=False)
    return list(res.y[:2, -1]), provider


def fundamental_pair(source, window, tol=LINEAR_TOL, n_samples=None,
                     start_delta=0.0):
    """Fundamental pair of the linearized operator on ``window``.

    Parameters
    ----------
    source : float or ForcingSpec
        Delaunay parameter of an unforced base orbit, or forcing data.
    window : tuple
        ``(psi_a, psi_b)`` with ``psi_a >= 0``; the base solution starts at a
        neck at ``psi = 0``.
    """
    a, b = float(window[0]), float(window[1])
    base, provider = _base_state(source, a, tol, start_delta)
    y0 = base + [1.0, 0.0, 0.0, 1.0, 0.0]
    res = integrate(_pair_system(provider), (a, b), y0, tol)
    if n_samples is None:
        n_samples = max(int(math.ceil((b - a) * 64)) + 1, 2)
    grid = np.linspace(a, b, n_samples)
    y = res.sol(grid)
    b1 = np.stack([y[2], y[3]], axis=1)
    b2 = np.stack([y[4], y[5]], axis=1)
    det = y[2] * y[5] - y[4] * y[3]
    end = res.y[:, -1]
    M = np.array([[end[2], end[4]], [end[3], end[5]]])
    return FundamentalPair(psi=grid, beta1=b1, beta2=b2, wronskian=det,
                           wronskian_log=np.exp(y[6]), end_matrix=M)


def _period_matrix(M):
    defect = float(max(abs(M[0, 0] - 1.0), abs(M[1, 1] - 1.0), abs(M[0, 1])))
    return PeriodMatrix(entries=M, kappa=float(M[1, 0]), structure_defect=defect)


def monodromy(tau, tol=LINEAR_TOL, check=True):
    """One-period matrix of the unforced linearized operator.

    Raises StructureError when the matrix is not unipotent to 1e-6, which
    indicates a misdetected period.
    """
    tau = check_tau(tau, allow_cylinder=False)
    P = period(tau)
    pair = fundamental_pair(tau, (0.0, P), tol=tol, n_samples=2)
    pm = _period_matrix(pair.end_matrix)
    if check and pm.structure_defect > STRUCTURE_TOL:
        raise StructureError(f"one-period matrix at tau = {tau!r} has defect "
                             f"{pm.structure_defect:.3e}", pm.structure_defect)
    return pm


def kappa_finite_difference(tau, h=1e-6, tol=LINEAR_TOL):
    """``d zeta(P) / d phi(0)`` by central differences of the nonlinear flow."""
    tau = check_tau(tau, allow_cylinder=False)
    P = period(tau)
    p = delaunay_params(tau)
    zs = []
    for s in (1.0, -1.0):
        tr = integrate_profile(tau, (0.0, P), tol=tol, n_samples=2,
                               phi0=p.phi_min + s * h)
        zs.append(tr.zeta[-1])
    return (zs[0] - zs[1]) / (2.0 * h)


def periodic_solution(tau, tol=LINEAR_TOL, n=513):
    """Normalized periodic and linearly growing solutions of the operator.

    ``W2 = h2 * phi'`` with ``h2 * phi''(0) = 1`` is periodic. The other
    solution decomposes as ``W1 = h1 * psi * phi' + v`` with ``v`` periodic,
    ``v(0) = 1`` and ``v'(0) = 0``. ``h1`` is fitted by least squares from
    the one-period increment ``W1(psi + P) - W1(psi) = h1 * P * phi'(psi)``.
    """
    tau = check_tau(tau, allow_cylinder=True)
    p = delaunay_params(tau)
    acc0 = float(profile_acceleration(p.phi_min, 0.0))
    if abs(acc0) < 1e-10:
        raise DegenerateError("phi'' vanishes at the neck (cylinder); "
                              "the translation mode is trivial")
    h2 = 1.0 / acc0
    P = period(tau)
    pair = fundamental_pair(tau, (0.0, 2.0 * P), tol=tol, n_samples=2 * n - 1)
    psi = pair.psi[:n]
    traj = integrate_profile(tau, (0.0, 2.0 * P), tol=tol, n_samples=2 * n - 1)
    zeta = traj.zeta
    acc = profile_acceleration(traj.phi, zeta)
    trans = max(np.max(np.abs(pair.beta2[:, 0] - h2 * zeta)),
                np.max(np.abs(pair.beta2[:, 1] - h2 * acc)))
    b1 = pair.beta1
    inc = b1[n - 1:, 0] - b1[:n, 0]
    basis = P * zeta[:n]
    h1 = float(basis @ inc / (basis @ basis))
    v = b1[:n, 0] - h1 * psi * zeta[:n]
    vp = b1[:n, 1] - h1 * (zeta[:n] + psi * acc[:n])
    second = pair.psi[n - 1:]
    recon = h1 * second * zeta[n - 1:] + v
    decomp = float(np.max(np.abs(b1[n - 1:, 0] - recon)))
    return PeriodicSolutionData(psi=psi, v=v, v_prime=vp, h1=h1, h2=h2,
                                translation_residual=float(trans),
                                decomposition_residual=decomp)


def transfer_products(forcing, n, start_delta=0.0, tol=LINEAR_TOL):
    """Per-period matrices of the forced operator and their cumulative products.

    Periods run between consecutive necks of the forced base solution,
    starting from the neck at ``psi = 0``. ``products[i]`` is
    ``A^(i+1) = M_i ... M_0``.
    """
    from .delaunay_core import build_trajectory
    n = int(n)
    span = (n + 0.75) * forcing.psi_period
    res, _ = run_forced(forcing, start_delta, span=span, tol=tol, guard=False)
    base = build_trajectory(res, (0.0, span), tol, n_samples=2)
    necks = base.events[: n + 1]
    if necks.size < n + 1:
        raise StructureError(f"forced base has only {necks.size - 1} periods", math.nan)
    provider = _Forced(forcing, start_delta)
    rhs = _pair_system(provider)
    steps, products = [], []
    A = np.eye(2)
    for i in range(n):
        y = res.sol(necks[i])
        y0 = [y[0], y[1], 1.0, 0.0, 0.0, 1.0, 0.0]
        r = integrate(rhs, (necks[i], necks[i + 1]), y0, tol)
        e = r.y[:, -1]
        M = np.array([[e[2], e[4]], [e[3], e[5]]])
        steps.append(M)
        A = M @ A
        products.append(_period_matrix(A.copy()))
    return TransferProducts(necks=necks, steps=steps, products=products)


def _sources_for(forcing, which, delta_profile, start_delta):
    if which == "omega":
        scale = 1.0 if delta_profile is None else float(delta_profile)
        base = omega_source(forcing)
        return lambda psi, phi, zeta, w32: scale * base(psi, phi, zeta, w32)
    if which == "mu":
        return mu_source(forcing, delta_profile, start_delta)
    if which == "xi":
        return xi_source(forcing, delta_profile, start_delta)
    raise ValueError(f"unknown sensitivity kind {which!r}")


def sensitivity(forcing, which, delta_profile=None, start_delta=0.0,
                tol=SHOOT_TOL, n_samples=None):
    """Response of the forced profile to a perturbation of ``mu``, ``xi`` or ``omega``.

    Solves the linearized equation with the matching source term and zero
    initial data over ``[0, L_gamma / epsilon]``. For ``which="omega"``,
    ``delta_profile`` is the scalar size of the perturbation (default 1).
    """
    if which in ("mu", "xi") and not isinstance(delta_profile, PeriodicProfile):
        raise ValueError("mu and xi perturbations must be PeriodicProfile objects")
    src = _sources_for(forcing, which, delta_profile, start_delta)
    res, _ = run_forced(forcing, start_delta, columns=[src], tol=tol, guard=False)
    end = forcing.psi_end
    if n_samples is None:
        n_samples = max(int(math.ceil(end * 16)) + 1, 2)
    grid = np.linspace(0.0, end, n_samples)
    y = res.sol(grid)
    beta = np.stack([y[2], y[3]], axis=1)
    return SensitivitySolution(which=which, psi=grid, beta=beta,
                               sup_norm=float(np.max(np.abs(beta[:, 0]))),
                               sup_deriv_norm=float(np.max(np.abs(beta[:, 1]))))


def perturbed_forcing(forcing, which, delta_profile, h):
    if which == "omega":
        scale = 1.0 if delta_profile is None else float(delta_profile)
        return forcing.with_params(omega=forcing.omega + h * scale)
    current = getattr(forcing, which)
    return forcing.with_profiles(**{which: current + delta_profile * h})


def sensitivity_fd(forcing, which, delta_profile=None, h=1e-6, start_delta=0.0,
                   tol=SHOOT_TOL, n_samples=None):
    """Central-difference counterpart of ``sensitivity`` on the same grid."""
    end = forcing.psi_end
    if n_samples is None:
        n_samples = max(int(math.ceil(end * 16)) + 1, 2)
    grid = np.linspace(0.0, end, n_samples)
    ys = []
    for s in (1.0, -1.0):
        f = perturbed_forcing(forcing, which, delta_profile, s * h)
        res, _ = run_forced(f, start_delta, tol=tol, guard=False)
        ys.append(res.sol(grid)[:2])
    d = (ys[0] - ys[1]) / (2.0 * h)
    return grid, d.T


def boundary_residual(forcing, start_delta=0.0, tol=SHOOT_TOL):
    """``(dtau, zeta_end)`` and the annulus exit point (None if inside)."""
    res, exit_psi = run_forced(forcing, start_delta, tol=tol)
    y = res.y[:, -1]
    dtau = first_integral(y[0], y[1]) - first_integral(forcing.phi0, 0.0)
    return (float(dtau), float(y[1])), exit_psi


def _jacobian_run(forcing, start_delta, tol):
    cols = [None, omega_source(forcing)]
    res, exit_psi = run_forced(forcing, start_delta, columns=cols,
                               init_columns=[(1.0, 0.0), (0.0, 0.0)], tol=tol)
    y = res.y[:, -1]
    phi, zeta = y[0], y[1]
    tp, tz = tau_gradient(phi, zeta)
    tp0, _ = tau_gradient(forcing.phi0, 0.0)
    J = np.array([[tp * y[4] + tz * y[5], tp * y[2] + tz * y[3] - tp0],
                  [y[5], y[3]]])
    dtau = first_integral(phi, zeta) - first_integral(forcing.phi0, 0.0)
    return J, (float(dtau), float(zeta)), exit_psi, res


def boundary_jacobian_fd(forcing, start_delta=0.0, h_omega=1e-5, h_phi0=1e-7,
                         tol=SHOOT_TOL):
    """Central-difference boundary Jacobian."""
    cols = []
    for name, h in (("omega", h_omega), ("phi0", h_phi0)):
        r = []
        for s in (1.0, -1.0):
            if name == "omega":
                f = forcing.with_params(omega=forcing.omega + s * h)
            else:
                f = forcing.with_params(phi0=forcing.phi0 + s * h)
            (dt, ze), _ = boundary_residual(f, start_delta, tol)
            r.append(np.array([dt, ze]))
        cols.append((r[0] - r[1]) / (2.0 * h))
    return np.stack(cols, axis=1)


def boundary_jacobian(forcing, start_delta=0.0, fd_check=True, tol=SHOOT_TOL):
    """Jacobian of the boundary residuals by variational integration.

    Columns are ``omega`` then ``phi0``; rows ``dtau`` then ``zeta_end``.
    With ``fd_check`` the central-difference estimate is attached and
    compared entrywise relative to the largest entry of its row.
    """
    J, r, exit_psi, _ = _jacobian_run(forcing, start_delta, tol)
    fd, flag = None, False
    if fd_check:
        fd = boundary_jacobian_fd(forcing, start_delta, tol=tol)
        scale = np.maximum(np.max(np.abs(J), axis=1, keepdims=True), 1e-300)
        flag = bool(np.max(np.abs(J - fd) / scale) > FD_FLAG_TOL)
    return BoundaryJacobian(matrix=J, residual=r, fd_matrix=fd, fd_flag=flag,
                            exit_psi=exit_psi)
