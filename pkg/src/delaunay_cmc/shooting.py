"""Boundary matching for the forced profile and the start-point scan.

``match_boundary`` finds ``(omega, phi0)`` such that the forced profile
started at a neck returns to a neck with the same first integral after
``L_gamma / epsilon``: ``dtau = 0`` and ``zeta_end = 0``. ``scan_start_point``
repeats this for translated forcing data and locates zeros of ``omega``
as a function of the start offset.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .delaunay_core import (build_trajectory, delaunay_params, first_integral,
                            integrate_profile, period, profile_acceleration)
from .errors import (AnnulusExitError, ConvergenceError, IntegrationError,
                     ProjectionError)
from .forced import (SHOOT_TOL, ForcedTrajectory, ForcingSpec, integrate_forced,
                     make_forcing, rho, run_forced)
from .linearization import _jacobian_run

NEWTON_TOL = 1e-10
MAX_ITER = 25
MAX_HALVINGS = 6
ZERO_OMEGA_TOL = 1e-10

__all__ = [
    "ForcingSpec", "ForcedTrajectory", "PhaseMap", "ScanResult", "ShootingResult",
    "energy_derivative", "energy_integral", "integrate_forced", "make_forcing",
    "match_boundary", "phase_align", "rho", "scan_start_point",
]


@dataclass(frozen=True)
class ShootingResult:
    omega: float
    phi0: float
    residual_tau: float
    residual_zeta: float
    iterations: int
    trajectory: ForcedTrajectory = field(repr=False)
    start_delta: float = 0.0
    history: tuple = field(default=(), repr=False)
    jacobian: np.ndarray = field(default=None, repr=False)

    @property
    def forcing(self):
        return self.trajectory.forcing


@dataclass(frozen=True)
class PhaseMap:
    """Nearest-point phase map onto a reference orbit.

    ``Phi[k]`` is the reference-orbit ``psi`` of the point nearest to the
    forced state at ``psi[k]``, unwrapped so that ``Phi[0] = 0``.
    """

    psi: np.ndarray
    Phi: np.ndarray
    distance: np.ndarray
    sup_shift: float
    sup_slope_defect: float
    sup_phi_defect: float
    sup_zeta_defect: float
    tau_ref: float


@dataclass(frozen=True)
class ScanResult:
    deltas: np.ndarray
    omegas: np.ndarray
    phi0s: np.ndarray
    residual_tau: np.ndarray
    residual_zeta: np.ndarray
    energy_integrals: np.ndarray
    zeros: list
    symmetry_class: str
    failures: dict
    all_zero: bool = False


def _weighted_norm(r, scale):
    return math.hypot(r[0] / scale[0], r[1] / scale[1])


def match_boundary(forcing, start_delta=0.0, tol=NEWTON_TOL, max_iter=MAX_ITER,
                   initial=None, integ_tol=SHOOT_TOL):
    """Newton iteration on ``(omega, phi0)`` for the periodic boundary data.

    Parameters
    ----------
    forcing : ForcingSpec
        Forcing data; its ``omega`` and ``phi0`` are ignored unless
        ``initial`` is None, in which case ``omega = 0`` and
        ``phi0 = phi_min(tau0)`` are used.
    start_delta : float
        Offset of the forcing data along the geodesic, in units of ``psi``.
    tol : float
        Required bound on both ``|dtau|`` and ``|zeta_end|``.
    initial : tuple, optional
        Starting ``(omega, phi0)``.

    Returns
    -------
    ShootingResult

    Raises
    ------
    ConvergenceError
        After ``max_iter`` steps without meeting ``tol``.
    AnnulusExitError
        When the starting point already leaves the annulus.
    """
    if initial is None:
        initial = (0.0, delaunay_params(forcing.tau0).phi_min)
    omega, phi0 = float(initial[0]), float(initial[1])
    f = forcing.with_params(omega=omega, phi0=phi0)
    J, r, exit_psi, _ = _jacobian_run(f, start_delta, integ_tol)
    if exit_psi is not None:
        raise AnnulusExitError(f"initial guess leaves the annulus at psi = {exit_psi!r}",
                               exit_psi)
    scale = (max(abs(J[0, 0]), 1e-300), max(abs(J[1, 1]), 1e-300))
    history = [r]
    it = 0
    while not (abs(r[0]) <= tol and abs(r[1]) <= tol):
        if it >= max_iter:
            raise ConvergenceError(f"no convergence after {max_iter} iterations; "
                                   f"residual {r}", history)
        step = np.linalg.solve(J, -np.asarray(r))
        lam = 1.0
        norm0 = _weighted_norm(r, scale)
        for _ in range(MAX_HALVINGS + 1):
            trial = f.with_params(omega=omega + lam * step[0],
                                  phi0=phi0 + lam * step[1])
            try:
                Jt, rt, ex, _ = _jacobian_run(trial, start_delta, integ_tol)
            except IntegrationError:
                # a wild trial step is rejected like one that leaves the annulus
                Jt = rt = None
                ex = math.nan
            if ex is None and _weighted_norm(rt, scale) < norm0:
                break
            lam *= 0.5
        else:
            if ex is not None:
                raise AnnulusExitError("damped Newton step left the annulus or failed "
                                       "to integrate", ex)
            # accept the smallest step when the residual sits at the noise floor
        f, J, r = trial, Jt, rt
        omega, phi0 = f.omega, f.phi0
        history.append(r)
        it += 1
    traj = integrate_forced(f, start_delta, tol=integ_tol)
    return ShootingResult(omega=omega, phi0=phi0, residual_tau=r[0],
                          residual_zeta=r[1], iterations=it, trajectory=traj,
                          start_delta=float(start_delta), history=tuple(history),
                          jacobian=J)


def energy_integral(traj):
    """Positive weight ``I`` of the energy derivative.

    ``I = int_0^{L/eps} int_0^{2 pi} phi^-1 zeta^2 <N, U> dS`` with the
    orientation making ``<N, U>`` positive. On the scaled surface
    ``<N, U> dS = eps**2 phi psidot ds dtheta`` and ``ds = dpsi / psidot``,
    so ``I = 2 pi eps**2 int zeta**2 dpsi``.
    """
    eps = traj.forcing.epsilon
    from .quadrature import integrate_samples, panel_edges
    base = traj.base
    edges = panel_edges(base.span[0], base.span[1], base.steps)
    val, _ = integrate_samples(lambda t: base.dense(t)[1] ** 2, edges)
    return 2.0 * math.pi * eps * eps * val


def energy_derivative(result):
    """``dE/ddelta = -eps**3 * omega * I`` for a matched result."""
    if result.omega == 0.0:
        return 0.0
    eps = result.trajectory.forcing.epsilon
    return -eps ** 3 * result.omega * energy_integral(result.trajectory)


def phase_align(traj, tau_ref, grid=1024, n_samples=None, psi=None):
    """Project a forced trajectory onto the ``tau_ref`` orbit.

    Each sample ``(phi, zeta)`` is matched to the nearest point of the
    reference orbit in the phase plane; its reference ``psi`` coordinate,
    unwrapped across periods, gives ``Phi``.

    Samples are the integrator steps by default, ``n_samples`` uniform
    points, or the increasing array ``psi``; consecutive samples must be
    closer than half a period for the unwrapping to hold.

    Raises
    ------
    ProjectionError
        If a sample is farther than the annulus half-width from the orbit.
    """
    f = traj.forcing
    P = period(tau_ref)
    ref = integrate_profile(tau_ref, (0.0, P), tol=1e-13, n_samples=grid + 1)
    rp, rz = ref.phi[:-1], ref.zeta[:-1]
    rpsi = ref.psi[:-1]
    if psi is not None:
        psi = np.asarray(psi, dtype=float)
        phi, zeta = traj.base(psi)
    elif n_samples is None:
        psi = traj.base.psi
        phi, zeta = traj.base.phi, traj.base.zeta
    else:
        psi = np.linspace(traj.base.span[0], traj.base.span[1], n_samples)
        phi, zeta = traj.base(psi)
    # coarse nearest grid point, processed in chunks
    idx = np.empty(psi.size, dtype=int)
    for s in range(0, psi.size, 2048):
        d = ((phi[s:s + 2048, None] - rp[None, :]) ** 2
             + (zeta[s:s + 2048, None] - rz[None, :]) ** 2)
        idx[s:s + 2048] = np.argmin(d, axis=1)
    t = rpsi[idx].copy()
    # Newton polish on the stationarity condition of the squared distance
    for _ in range(8):
        y = ref.dense(np.mod(t, P))
        qp, qz = y[0], y[1]
        acc = profile_acceleration(qp, qz)
        dacc = (profile_acceleration(qp, qz + 1e-6) - profile_acceleration(qp, qz - 1e-6)) / 2e-6
        dacc_dphi = -(1.0 + qz * qz) / qp ** 2
        jerk = dacc_dphi * qz + dacc * acc
        g = -(phi - qp) * qz - (zeta - qz) * acc
        dg = qz * qz - (phi - qp) * acc + acc * acc - (zeta - qz) * jerk
        t = t - g / dg
    y = ref.dense(np.mod(t, P))
    dist = np.hypot(phi - y[0], zeta - y[1])
    if np.max(dist) > f.delta1:
        k = int(np.argmax(dist))
        raise ProjectionError(f"sample at psi = {psi[k]!r} is {dist[k]:.3e} from "
                              f"the reference orbit (limit {f.delta1:.3e})")
    # unwrap: consecutive values move by much less than a period
    t = np.mod(t, P)
    Phi = np.unwrap(t * (2.0 * math.pi / P)) * (P / (2.0 * math.pi))
    Phi = Phi - Phi[0]
    slope = np.gradient(Phi, psi)
    return PhaseMap(psi=psi, Phi=Phi, distance=dist,
                    sup_shift=float(np.max(np.abs(Phi - psi))),
                    sup_slope_defect=float(np.max(np.abs(slope[1:-1] - 1.0))),
                    sup_phi_defect=float(np.max(np.abs(phi - y[0]))),
                    sup_zeta_defect=float(np.max(np.abs(zeta - y[1]))),
                    tau_ref=float(tau_ref))


def _scan_point(args):
    forcing, delta, tol, max_iter = args
    try:
        res = match_boundary(forcing, delta, tol=tol, max_iter=max_iter)
    except (ConvergenceError, AnnulusExitError, IntegrationError) as exc:
        return None, f"{type(exc).__name__}: {exc}"
    return (res.omega, res.phi0, res.residual_tau, res.residual_zeta,
            energy_integral(res.trajectory)), None


def default_jobs():
    env = os.environ.get("DELAUNAY_CMC_JOBS")
    if env:
        return max(int(env), 1)
    return os.cpu_count() or 1


def _refine_zero(forcing, lo, hi, w_lo, w_hi, tol, max_iter):
    def omega_at(d):
        return match_boundary(forcing, d, tol=tol * 1e-2, max_iter=max_iter).omega

    cache = {}

    def g(d):
        if d not in cache:
            cache[d] = omega_at(d)
        return cache[d]

    cache[lo], cache[hi] = w_lo, w_hi
    d = brentq(g, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    res = match_boundary(forcing, d, tol=tol * 1e-2, max_iter=max_iter)
    return {"delta": float(d), "omega": float(res.omega),
            "bracket": [float(lo), float(hi)], "phi0": float(res.phi0)}


def scan_start_point(forcing, delta_grid=64, tol=NEWTON_TOL, max_iter=MAX_ITER,
                     jobs=1, refine=True):
    """Tabulate matched ``omega`` over start offsets and locate its zeros.

    Parameters
    ----------
    forcing : ForcingSpec
    delta_grid : int or array
        Number of uniform offsets in ``[0, L_gamma / epsilon)`` or explicit
        offsets.
    jobs : int
        Worker processes; results are merged by grid index so the output
        does not depend on this value.

    Returns
    -------
    ScanResult
    """
    end = forcing.psi_end
    if np.ndim(delta_grid) == 0:
        deltas = np.arange(int(delta_grid)) * (end / int(delta_grid))
    else:
        deltas = np.asarray(delta_grid, dtype=float)
    tasks = [(forcing, float(d), tol, max_iter) for d in deltas]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            out = list(ex.map(_scan_point, tasks))
    else:
        out = [_scan_point(t) for t in tasks]
    n = len(deltas)
    cols = np.full((5, n), np.nan)
    failures = {}
    for k, (vals, err) in enumerate(out):
        if vals is None:
            failures[k] = err
        else:
            cols[:, k] = vals
    omegas = cols[0]
    ok = ~np.isnan(omegas)
    spread = float(np.ptp(omegas[ok])) if ok.any() else math.inf
    max_abs = float(np.max(np.abs(omegas[ok]))) if ok.any() else math.inf
    if not ok.any():
        symmetry = "failed"
    else:
        symmetry = "constant" if spread <= ZERO_OMEGA_TOL else "generic"
    all_zero = max_abs <= ZERO_OMEGA_TOL
    zeros = []
    if symmetry == "generic" and refine:
        for k in range(n):
            j = (k + 1) % n
            if not (ok[k] and ok[j]):
                continue
            a, b = omegas[k], omegas[j]
            hi = deltas[j] if j > k else deltas[j] + end
            if a == 0.0:
                zeros.append({"delta": float(deltas[k]), "omega": 0.0,
                              "bracket": [float(deltas[k]), float(deltas[k])],
                              "phi0": float(cols[1, k])})
            elif a * b < 0.0:
                z = _refine_zero(forcing, float(deltas[k]), float(hi), a, b,
                                 tol, max_iter)
                z["delta"] = z["delta"] % end
                zeros.append(z)
    return ScanResult(deltas=deltas, omegas=omegas, phi0s=cols[1],
                      residual_tau=cols[2], residual_zeta=cols[3],
                      energy_integrals=cols[4], zeros=zeros,
                      symmetry_class=symmetry, failures=failures,
                      all_zero=all_zero)
