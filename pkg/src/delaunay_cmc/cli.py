"""Command-line front end.

Subcommands: delaunay, verify, shoot, scan, mesh, monodromy. Each writes
its outputs and a ``manifest.json`` into ``--out``.

Exit codes: 0 success, 1 verification threshold exceeded, 2 invalid
arguments or input values, 3 numerical failure (integration, structure,
projection), 4 non-convergence, 5 annulus exit, 6 I/O.
"""

import argparse
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import (AnnulusExitError, ConvergenceError, DelaunayError,
                     DomainError)

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_CONVERGENCE = 4
EXIT_ANNULUS = 5
EXIT_IO = 6

DEFAULT_TAUS = (0.05, 0.10, 0.16, 0.20, 0.24)


def fmt(x):
    return f"{float(x):.17g}"


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
    return path


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


class Run:
    """Collects outputs and writes the manifest."""

    def __init__(self, command, out, digest_source):
        self.command = command
        self.out = out
        self.outputs = []
        self.start = time.perf_counter()
        self.digest = hashlib.sha256(digest_source).hexdigest()
        os.makedirs(out, exist_ok=True)

    def path(self, name):
        p = os.path.join(self.out, name)
        self.outputs.append(p)
        return p

    def finish(self):
        manifest = {"command": self.command, "config_digest": self.digest,
                    "tool_version": __version__, "outputs": self.outputs,
                    "wall_time": time.perf_counter() - self.start}
        write_json(os.path.join(self.out, "manifest.json"), manifest)
        return manifest


def _args_digest(args, keys):
    return json.dumps({k: getattr(args, k) for k in keys}, sort_keys=True).encode()


def load_problem(path):
    """Read a problem file; returns ``(ForcingSpec, newton options, raw bytes)``."""
    from .shooting import make_forcing
    with open(path, "rb") as fh:
        raw = fh.read()
    try:
        spec = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DomainError(f"problem file is not valid JSON: {exc}") from None
    for key in ("L_gamma", "tau0"):
        if key not in spec:
            raise DomainError(f"problem file lacks {key!r}")
    prof = spec.get("profiles", {})
    unknown = set(prof) - {"a", "b", "xi", "mu"}
    if unknown:
        raise DomainError(f"unknown profiles {sorted(unknown)}")
    try:
        forcing = make_forcing(spec["L_gamma"], spec["tau0"],
                               epsilon=spec.get("epsilon"), N=spec.get("N"),
                               **{k: prof.get(k, "zero") for k in ("a", "b", "xi", "mu")})
    except ValueError as exc:
        raise DomainError(str(exc)) from None
    newton = spec.get("newton", {})
    opts = {"tol": float(newton.get("tol", 1e-10)),
            "max_iter": int(newton.get("max_iter", 25))}
    return forcing, opts, raw


def _write_trajectory(run, psi, phi, zeta, tau, name="trajectory.csv"):
    return write_csv(run.path(name), ("psi", "phi", "zeta", "tau"),
                     zip(psi, phi, zeta, tau))


def cmd_delaunay(args):
    from .delaunay_core import check_tau, integrate_profile, period
    tau = check_tau(args.tau)
    if args.periods <= 0:
        raise DomainError("--periods must be positive")
    P = math.pi if tau >= 0.2499 else period(tau)
    run = Run("delaunay", args.out,
              _args_digest(args, ("tau", "periods", "tol", "samples")))
    traj = integrate_profile(tau, (0.0, args.periods * P), tol=args.tol,
                             n_samples=args.samples)
    _write_trajectory(run, traj.psi, traj.phi, traj.zeta, traj.tau)
    write_csv(run.path("events.csv"), ("index", "psi_i"),
              ((str(i), e) for i, e in enumerate(traj.events)))
    run.finish()
    return EXIT_OK


def _parse_taus(text):
    if text is None:
        return list(DEFAULT_TAUS)
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise DomainError(f"bad tau list {text!r}") from None


def cmd_verify(args):
    from .delaunay_core import check_tau
    from .identities import run_identity_grid
    taus = [check_tau(t, allow_cylinder=False) for t in _parse_taus(args.taus)]
    run = Run("verify", args.out, _args_digest(args, ("taus", "threshold")))
    reports = run_identity_grid(taus)
    rows = [(r.name, r.tau, r.lhs, r.rhs, r.abs_err, r.rel_err, str(r.n_quadrature_nodes))
            for r in reports]
    write_csv(run.path("identities.csv"),
              ("name", "tau", "lhs", "rhs", "abs_err", "rel_err", "nodes"), rows)
    run.finish()
    worst = max(r.rel_err for r in reports)
    print(f"{len(reports)} identity reports, worst rel_err {worst:.3e}")
    return EXIT_THRESHOLD if worst > args.threshold else EXIT_OK


def cmd_shoot(args):
    from .shooting import energy_derivative, energy_integral, match_boundary
    forcing, opts, raw = load_problem(args.problem)
    run = Run("shoot", args.out, raw)
    res = match_boundary(forcing, args.delta, tol=opts["tol"], max_iter=opts["max_iter"])
    tr = res.trajectory
    _write_trajectory(run, tr.psi, tr.phi, tr.zeta, tr.tau_track)
    summary = {"omega": res.omega, "phi0": res.phi0,
               "residual_tau": res.residual_tau, "residual_zeta": res.residual_zeta,
               "iterations": res.iterations, "start_delta": res.start_delta,
               "epsilon": forcing.epsilon, "N": forcing.n_periods,
               "requested_epsilon": forcing.requested_epsilon,
               "energy_integral": energy_integral(tr),
               "energy_derivative": energy_derivative(res),
               "forcing": forcing.describe()}
    write_json(run.path("shoot.json"), _jsonable(summary))
    run.finish()
    print(f"omega = {fmt(res.omega)}  phi0 = {fmt(res.phi0)}  iterations = {res.iterations}")
    return EXIT_OK


def resolve_jobs(flag):
    env = os.environ.get("DELAUNAY_CMC_JOBS")
    if env:
        try:
            return max(int(env), 1)
        except ValueError:
            raise DomainError(f"DELAUNAY_CMC_JOBS must be an integer, got {env!r}") from None
    if flag is not None:
        return max(int(flag), 1)
    return os.cpu_count() or 1


def cmd_scan(args):
    from .shooting import scan_start_point
    forcing, opts, raw = load_problem(args.problem)
    if args.points < 2:
        raise DomainError("--points must be at least 2")
    run = Run("scan", args.out, raw + f"|points={args.points}".encode())
    res = scan_start_point(forcing, args.points, tol=opts["tol"],
                           max_iter=opts["max_iter"], jobs=resolve_jobs(args.jobs))
    rows = zip(res.deltas, res.omegas, res.phi0s, res.residual_tau,
               res.residual_zeta, res.energy_integrals)
    write_csv(run.path("scan.csv"), ("delta", "omega", "phi0", "residual_tau",
                                     "residual_zeta", "energy_integral"), rows)
    zeros = {"symmetry_class": res.symmetry_class,
             "all_delta": res.all_zero,
             "zeros": res.zeros,
             "failures": {str(k): v for k, v in res.failures.items()}}
    write_json(run.path("zeros.json"), _jsonable(zeros))
    run.finish()
    label = "all delta" if res.all_zero else f"{len(res.zeros)} zeros"
    print(f"{len(res.deltas)} scan points, {label}, {len(res.failures)} failures")
    return EXIT_OK


def cmd_mesh(args):
    from .delaunay_core import check_tau, integrate_profile, period
    from .geometry import embed_tube, embed_unduloid, export_obj
    if args.problem:
        from .shooting import match_boundary
        forcing, opts, raw = load_problem(args.problem)
        res = match_boundary(forcing, args.delta, tol=opts["tol"], max_iter=opts["max_iter"])
        traj, eps, periodic = res.trajectory, forcing.epsilon, True
        L = forcing.L_gamma
        digest = raw
    else:
        if args.tau is None:
            raise DomainError("mesh needs --tau or --problem")
        tau = check_tau(args.tau)
        P = math.pi if tau >= 0.2499 else period(tau)
        traj = integrate_profile(tau, (0.0, args.periods * P), tol=1e-12)
        eps, periodic = args.epsilon, args.periodic
        L = eps * args.periods * P
        digest = _args_digest(args, ("tau", "periods", "epsilon", "periodic"))
    run = Run("mesh", args.out, digest + f"|{args.theta_res}|{args.rings}|{args.tube}".encode())
    mesh = embed_unduloid(traj, eps, args.theta_res, args.rings, periodic=periodic)
    export_obj(mesh, run.path("surface.obj"), h_csv=run.path("surface_H.csv"))
    if args.tube:
        tube = embed_tube(traj, eps, L, args.theta_res, args.rings)
        export_obj(tube, run.path("tube_not_cmc.obj"))
        write_json(run.path("tube_metadata.json"), tube.metadata)
    run.finish()
    return EXIT_OK


def cmd_monodromy(args):
    from .delaunay_core import check_tau
    from .linearization import kappa_finite_difference, monodromy
    taus = [check_tau(t, allow_cylinder=False) for t in _parse_taus(args.taus)]
    run = Run("monodromy", args.out, _args_digest(args, ("taus",)))
    rows = []
    for tau in taus:
        m = monodromy(tau, check=False)
        M = m.entries
        rows.append((tau, M[0, 0], M[0, 1], M[1, 0], M[1, 1], m.kappa,
                     kappa_finite_difference(tau), m.structure_defect))
    write_csv(run.path("monodromy.csv"), ("tau", "m11", "m12", "m21", "m22", "kappa",
                                          "kappa_fd", "structure_defect"), rows)
    run.finish()
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="delaunay-cmc",
                                description="Delaunay profiles, identities and forced shooting.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("delaunay", help="integrate an unforced profile")
    d.add_argument("--tau", type=float, required=True)
    d.add_argument("--periods", type=float, default=1.0)
    d.add_argument("--tol", type=float, default=1e-10)
    d.add_argument("--samples", type=int, default=None)
    d.set_defaults(func=cmd_delaunay)

    v = sub.add_parser("verify", help="run the identity checks over a tau grid")
    v.add_argument("--taus", default=None, help="comma-separated tau values")
    v.add_argument("--threshold", type=float, default=1e-6)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("shoot", help="match boundary data for a problem file")
    s.add_argument("problem")
    s.add_argument("--delta", type=float, default=0.0)
    s.set_defaults(func=cmd_shoot)

    c = sub.add_parser("scan", help="scan start offsets for zeros of omega")
    c.add_argument("problem")
    c.add_argument("--points", type=int, default=64)
    c.add_argument("--jobs", type=int, default=None)
    c.set_defaults(func=cmd_scan)

    m = sub.add_parser("mesh", help="export a surface mesh")
    m.add_argument("--tau", type=float, default=None)
    m.add_argument("--periods", type=int, default=1)
    m.add_argument("--epsilon", type=float, default=0.1)
    m.add_argument("--periodic", action="store_true")
    m.add_argument("--problem", default=None)
    m.add_argument("--delta", type=float, default=0.0)
    m.add_argument("--theta-res", type=int, default=32)
    m.add_argument("--rings", type=int, default=None)
    m.add_argument("--tube", action="store_true")
    m.set_defaults(func=cmd_mesh)

    n = sub.add_parser("monodromy", help="one-period matrices over a tau grid")
    n.add_argument("--taus", default=None)
    n.set_defaults(func=cmd_monodromy)

    for sp in (d, v, s, c, m, n):
        sp.add_argument("--out", default=".", help="output directory")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AnnulusExitError as exc:
        code, msg = EXIT_ANNULUS, str(exc)
    except ConvergenceError as exc:
        code, msg = EXIT_CONVERGENCE, str(exc)
    except DomainError as exc:
        code, msg = EXIT_USAGE, str(exc)
    except DelaunayError as exc:
        code, msg = EXIT_NUMERICAL, str(exc)
    except OSError as exc:
        code, msg = EXIT_IO, str(exc)
    except ValueError as exc:
        code, msg = EXIT_USAGE, str(exc)
    print(f"error: {msg}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
