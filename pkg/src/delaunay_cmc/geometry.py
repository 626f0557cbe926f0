"""Surface realization: Fermi metric expansion, embeddings and mean curvature.

Embeddings place the profile on a straight axis, the third coordinate,
scaled by ``epsilon``:

    X(psi, theta) = eps * (phi cos(theta), phi sin(theta), psi)

Mean curvature is the sum of the principal curvatures, so a cylinder of
radius 1/2 has ``H = 2``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .delaunay_core import profile_acceleration
from .forced import ForcedTrajectory, rho_value
from .identities import profile_mean_curvature


@dataclass(frozen=True)
class FermiMetricSample:
    x: tuple
    g: np.ndarray
    curvature_input: np.ndarray = field(repr=False)


def _as_tensor(curvature):
    R = np.asarray(curvature, dtype=float)
    if R.shape != (3, 3, 3, 3):
        raise ValueError("curvature must be a 3x3x3x3 array R[a, b, c, d] = R(X_a, X_b, X_c, X_d)")
    return R


def constant_curvature_tensor(K):
    """``R(X, Y, Z, W) = K (<Y, Z><X, W> - <X, Z><Y, W>)`` in an orthonormal frame."""
    d = np.eye(3)
    return float(K) * (np.einsum("bc,ad->abcd", d, d) - np.einsum("ac,bd->abcd", d, d))


def fermi_metric(x, curvature):
    """Metric coefficients in Fermi coordinates through quadratic order.

    Parameters
    ----------
    x : sequence of 3 floats
        ``(x0, x1, x2)``; only the normal coordinates enter.
    curvature : array (3, 3, 3, 3)
        Curvature tensor at the foot point in the frame ``X0, X1, X2``.

    Returns
    -------
    FermiMetricSample
        ``g`` with ``g_ij = delta_ij + R(X_k, X_i, X_l, X_j) x_k x_l / 3``,
        ``g_0i = 2 R(X_k, X_0, X_l, X_i) x_k x_l / 3`` and
        ``g_00 = 1 + R(X_k, X_0, X_l, X_0) x_k x_l``.
    """
    R = _as_tensor(curvature)
    x = tuple(float(v) for v in x)
    n = np.array(x[1:])
    nn = np.outer(n, n)
    Rn = R[1:, :, 1:, :]  # indices k, a, l, b with k, l normal
    g = np.eye(3)
    g[1:, 1:] += np.einsum("kilj,kl->ij", Rn[:, 1:, :, 1:], nn) / 3.0
    g0 = 2.0 * np.einsum("kli,kl->i", Rn[:, 0, :, 1:], nn) / 3.0
    g[0, 1:] += g0
    g[1:, 0] += g0
    g[0, 0] += np.einsum("kl,kl->", Rn[:, 0, :, 0], nn)
    return FermiMetricSample(x=x, g=g, curvature_input=R)


@dataclass(frozen=True)
class SurfaceMesh:
    """Triangulated surface of revolution.

    Vertices are stored ring by ring, ``theta_res`` per ring, with the
    theta seam identified. ``periodic`` marks a mesh whose last ring is
    glued back to the first.
    """

    vertices: np.ndarray
    faces: np.ndarray
    theta_res: int
    n_rings: int
    per_vertex_H: np.ndarray = None
    closed_in_theta: bool = True
    periodic: bool = False
    metadata: dict = field(default_factory=dict)

    def euler_characteristic(self):
        edges = set()
        for a, b, c in self.faces:
            for u, v in ((a, b), (b, c), (c, a)):
                edges.add((min(u, v), max(u, v)))
        return len(self.vertices) - len(edges) + len(self.faces)

    def is_consistently_oriented(self):
        """Every edge shared by two faces is traversed once in each direction.

        This is the orientation test that also covers the closing faces of
        a periodic straight-axis mesh, which join the two end rings.
        """
        seen = {}
        for a, b, c in self.faces:
            for u, v in ((a, b), (b, c), (c, a)):
                seen[(u, v)] = seen.get((u, v), 0) + 1
        return all(n == 1 for n in seen.values())

    def face_normals(self):
        v = self.vertices
        f = self.faces
        return np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])


def _profile_arrays(traj):
    base = traj.base if isinstance(traj, ForcedTrajectory) else traj
    return base


def _ring_faces(n_rings, T, periodic):
    faces = []
    last = n_rings if periodic else n_rings - 1
    for i in range(last):
        i2 = (i + 1) % n_rings
        for j in range(T):
            j2 = (j + 1) % T
            a, b = i * T + j, i * T + j2
            c, d = i2 * T + j, i2 * T + j2
            # outward normals: theta direction crossed with the axial direction
            faces.append((a, b, c))
            faces.append((b, d, c))
    return np.array(faces, dtype=np.int64).reshape(-1, 3)


def _rings(traj, n_rings, periodic):
    base = _profile_arrays(traj)
    a, b = base.span
    if n_rings is None:
        psi = np.asarray(base.psi, dtype=float)
        phi = np.asarray(base.phi, dtype=float)
        if periodic:
            psi, phi = psi[:-1], phi[:-1]
        return psi, phi
    n_rings = int(n_rings)
    psi = np.linspace(a, b, n_rings + 1 if periodic else n_rings)
    if periodic:
        psi = psi[:-1]
    phi = base.dense(psi)[0]
    return psi, phi


def embed_unduloid(traj, epsilon, theta_res=32, n_rings=None, periodic=False,
                   with_H=True):
    """Mesh of the ``epsilon``-scaled surface of revolution of a profile.

    Parameters
    ----------
    traj : Trajectory or ForcedTrajectory
    epsilon : float
    theta_res : int
        Vertices per ring, at least 8.
    n_rings : int, optional
        Rings uniformly spaced in ``psi``; the trajectory samples are used
        when omitted.
    periodic : bool
        Identify the end ring with the start ring, as for a trajectory
        spanning exactly ``L_gamma / epsilon``.
    """
    T = int(theta_res)
    if T < 8:
        raise ValueError("theta_res must be at least 8")
    eps = float(epsilon)
    psi, phi = _rings(traj, n_rings, periodic)
    th = 2.0 * np.pi * np.arange(T) / T
    r = eps * phi[:, None]
    shape = (psi.size, T)
    verts = np.stack([r * np.cos(th)[None, :], r * np.sin(th)[None, :],
                      np.broadcast_to(eps * psi[:, None], shape)], axis=-1)
    verts = verts.reshape(-1, 3)
    faces = _ring_faces(psi.size, T, periodic)
    H = None
    if with_H:
        _, h = surface_mean_curvature(traj, eps, psi)
        H = np.repeat(h, T)
    return SurfaceMesh(vertices=verts, faces=faces, theta_res=T, n_rings=psi.size,
                       per_vertex_H=H, periodic=bool(periodic),
                       metadata={"embedding": "straight axis", "cmc": True,
                                 "epsilon": eps})


def embed_tube(traj, epsilon, L_gamma, theta_res=32, n_rings=None):
    """Bend the straight-axis surface around a planar circle of length ``L_gamma``.

    For pictures only: the result is not a constant mean curvature surface
    of flat space, and its metadata says so.
    """
    T = int(theta_res)
    if T < 8:
        raise ValueError("theta_res must be at least 8")
    eps = float(epsilon)
    psi, phi = _rings(traj, n_rings, True)
    R0 = float(L_gamma) / (2.0 * math.pi)
    ang = eps * psi / R0
    th = 2.0 * np.pi * np.arange(T) / T
    rad = R0 + eps * phi[:, None] * np.cos(th)[None, :]
    verts = np.stack([rad * np.cos(ang)[:, None], rad * np.sin(ang)[:, None],
                      np.broadcast_to(eps * phi[:, None] * np.sin(th)[None, :], rad.shape)],
                     axis=-1).reshape(-1, 3)
    faces = _ring_faces(psi.size, T, True)
    # the circle axis reverses the frame orientation, flip to keep outward normals
    faces = faces[:, ::-1].copy()
    return SurfaceMesh(vertices=verts, faces=faces, theta_res=T, n_rings=psi.size,
                       periodic=True,
                       metadata={"embedding": "circle axis", "cmc": False,
                                 "note": "visualization only; not constant mean curvature",
                                 "epsilon": eps})


@dataclass(frozen=True)
class MeanCurvatureSample:
    """Mean curvature of the scaled surface along ``psi``.

    ``H`` is the flat surface-of-revolution value. For forced profiles,
    ``H_model`` removes the curvature-induced forcing and keeps only the
    ``omega`` term, and ``H_predicted = 2/eps + eps**2 omega zeta / phi``.
    """

    psi: np.ndarray
    H: np.ndarray
    H_model: np.ndarray = None
    H_predicted: np.ndarray = None


FD_STEP = 1e-4


def surface_mean_curvature(traj, epsilon, psi=None, detail=False):
    """Mean curvature ``H_profile / epsilon`` along a trajectory.

    For an unforced Trajectory the second derivative comes from the profile
    ODE. For a ForcedTrajectory it is a centered difference of the dense
    ``zeta`` output, so the comparison with the prediction is a genuine
    residual check.

    Returns
    -------
    (psi, H) or MeanCurvatureSample when ``detail`` is set.
    """
    eps = float(epsilon)
    forced = isinstance(traj, ForcedTrajectory)
    base = _profile_arrays(traj)
    if psi is None:
        psi = np.asarray(base.psi, dtype=float)
    else:
        psi = np.asarray(psi, dtype=float)
    phi, zeta = base.dense(psi)
    if not forced:
        acc = profile_acceleration(phi, zeta)
        H = profile_mean_curvature(phi, zeta, acc) / eps
        return MeanCurvatureSample(psi, H) if detail else (psi, H)
    a, b = base.span
    h = FD_STEP
    lo = np.clip(psi - h, a, b)
    hi = np.clip(psi + h, a, b)
    acc = (base.dense(hi)[1] - base.dense(lo)[1]) / (hi - lo)
    H = profile_mean_curvature(phi, zeta, acc) / eps
    f = traj.forcing
    from .forced import ForcedField
    fld = ForcedField(f, traj.start_delta)
    extra = np.empty_like(psi)
    for k, t in enumerate(psi):
        vals = fld.profile_values(t)
        full = rho_value(phi[k], zeta[k], f.epsilon, *vals, f.omega)
        extra[k] = full - f.epsilon ** 3 * f.omega * zeta[k] / phi[k]
    H_model = H - extra / eps
    H_pred = 2.0 / eps + eps * eps * f.omega * zeta / phi
    if detail:
        return MeanCurvatureSample(psi, H, H_model, H_pred)
    return psi, H


def embedding_mean_curvature(traj, epsilon, psi, theta=0.0, h=FD_STEP):
    """Mean curvature from the fundamental forms of the embedding.

    All first and second derivatives of ``X(psi, theta)`` are centered
    differences with step ``h``; the normal points toward the axis.
    """
    eps = float(epsilon)
    base = _profile_arrays(traj)
    psi = np.atleast_1d(np.asarray(psi, dtype=float))

    def X(u, v):
        p = base.dense(u)[0]
        return eps * np.stack([p * np.cos(v), p * np.sin(v), u + 0.0 * v], axis=-1)

    u, v = psi, np.full_like(psi, float(theta))
    Xu = (X(u + h, v) - X(u - h, v)) / (2 * h)
    Xv = (X(u, v + h) - X(u, v - h)) / (2 * h)
    X0 = X(u, v)
    Xuu = (X(u + h, v) - 2 * X0 + X(u - h, v)) / (h * h)
    Xvv = (X(u, v + h) - 2 * X0 + X(u, v - h)) / (h * h)
    Xuv = (X(u + h, v + h) - X(u + h, v - h) - X(u - h, v + h)
           + X(u - h, v - h)) / (4 * h * h)
    n = np.cross(Xu, Xv)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    E = np.sum(Xu * Xu, -1)
    F = np.sum(Xu * Xv, -1)
    G = np.sum(Xv * Xv, -1)
    e = np.sum(Xuu * n, -1)
    f = np.sum(Xuv * n, -1)
    g = np.sum(Xvv * n, -1)
    return (e * G - 2 * f * F + g * E) / (E * G - F * F)


def export_obj(mesh, destination, h_csv=None):
    """Write a Wavefront OBJ file and optionally a ``vertex_index,H`` CSV."""
    with open(destination, "w") as fh:
        for x, y, z in mesh.vertices:
            fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in mesh.faces:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")
    if h_csv is not None:
        if mesh.per_vertex_H is None:
            raise ValueError("mesh carries no per-vertex H")
        with open(h_csv, "w") as fh:
            fh.write("vertex_index,H\n")
            for k, val in enumerate(mesh.per_vertex_H):
                fh.write(f"{k},{val:.17g}\n")


def read_obj(source):
    """Parse ``v`` and ``f`` lines of an OBJ file into arrays (0-based faces)."""
    verts, faces = [], []
    with open(source) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(t) for t in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(t.split("/")[0]) - 1 for t in parts[1:4]])
    return np.array(verts, dtype=float), np.array(faces, dtype=np.int64)
