import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delaunay_cmc.delaunay_core import integrate_profile, period
from delaunay_cmc.forced import integrate_forced, make_forcing
from delaunay_cmc.geometry import (constant_curvature_tensor, embed_tube,
                                   embed_unduloid, embedding_mean_curvature,
                                   export_obj, fermi_metric, read_obj,
                                   surface_mean_curvature)
from delaunay_cmc.identities import profile_mean_curvature

coords = st.sampled_from(np.linspace(-0.3, 0.3, 7).tolist())


def kulkarni_nomizu(S):
    # S wedge identity, a tensor with all the algebraic curvature symmetries
    d = np.eye(3)
    return (np.einsum("ad,bc->abcd", S, d) + np.einsum("bc,ad->abcd", S, d)
            - np.einsum("ac,bd->abcd", S, d) - np.einsum("bd,ac->abcd", S, d))


S_FIXED = np.array([[0.7, 0.2, -0.4], [0.2, -0.3, 0.5], [-0.4, 0.5, 1.1]])


def fermi_loops(x, R):
    g = np.eye(3)
    for k in (1, 2):
        for l in (1, 2):
            w = x[k] * x[l]
            g[0, 0] += R[k, 0, l, 0] * w
            for i in (1, 2):
                g[0, i] += 2 * R[k, 0, l, i] * w / 3
                g[i, 0] += 2 * R[k, 0, l, i] * w / 3
                for j in (1, 2):
                    g[i, j] += R[k, i, l, j] * w / 3
    return g


class TestFermiMetric:
    def test_on_geodesic(self):
        g = fermi_metric((0.4, 0.0, 0.0), kulkarni_nomizu(S_FIXED)).g
        assert np.array_equal(g, np.eye(3))

    def test_flat(self):
        g = fermi_metric((0.1, 0.2, -0.3), np.zeros((3, 3, 3, 3))).g
        assert np.array_equal(g, np.eye(3))

    def test_curvature_symmetries_of_fixture(self):
        R = kulkarni_nomizu(S_FIXED)
        assert np.allclose(R, -R.transpose(1, 0, 2, 3))
        assert np.allclose(R, R.transpose(2, 3, 0, 1))
        assert np.allclose(R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2), 0)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            fermi_metric((0, 0, 0), np.zeros((3, 3)))

    @settings(max_examples=40, deadline=None)
    @given(coords, coords)
    def test_constant_curvature(self, x1, x2):
        K = 0.8
        g = fermi_metric((0.0, x1, x2), constant_curvature_tensor(K)).g
        n = np.array([x1, x2])
        r2 = n @ n
        assert g[0, 0] == pytest.approx(1 - K * r2, abs=1e-15)
        assert np.all(g[0, 1:] == 0)
        expect = np.eye(2) - K / 3 * (r2 * np.eye(2) - np.outer(n, n))
        assert np.allclose(g[1:, 1:], expect, atol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(coords, coords, coords)
    def test_general_against_loops(self, x0, x1, x2):
        R = kulkarni_nomizu(S_FIXED)
        g = fermi_metric((x0, x1, x2), R).g
        assert np.allclose(g, g.T, atol=0)
        assert np.allclose(g, fermi_loops((x0, x1, x2), R), atol=1e-15)


@pytest.fixture(scope="module")
def unduloid():
    return integrate_profile(0.16, (0.0, 3 * period(0.16)), tol=1e-12)


class TestMeshes:
    def test_periodic_cylinder_counts(self):
        tr = integrate_profile(0.25, (0.0, 2 * math.pi))
        m = embed_unduloid(tr, 0.1, theta_res=8, n_rings=8, periodic=True)
        assert m.vertices.shape == (64, 3) and m.faces.shape == (128, 3)
        assert m.euler_characteristic() == 0
        assert m.is_consistently_oriented()
        r = np.hypot(m.vertices[:, 0], m.vertices[:, 1])
        assert np.max(np.abs(r - 0.05)) < 1e-15

    def test_open_mesh_radius_and_orientation(self, unduloid):
        eps = 0.1
        m = embed_unduloid(unduloid, eps, theta_res=16, n_rings=40)
        T = m.theta_res
        psi = m.vertices[::T, 2] / eps
        phi = unduloid.dense(psi)[0]
        r = np.hypot(m.vertices[:, 0], m.vertices[:, 1]).reshape(-1, T)
        assert np.max(np.abs(r - eps * phi[:, None])) <= 1e-12
        assert m.euler_characteristic() == 0 and m.is_consistently_oriented()
        n = m.face_normals()
        c = m.vertices[m.faces].mean(axis=1)
        assert np.all(n[:, 0] * c[:, 0] + n[:, 1] * c[:, 1] > 0)

    def test_theta_resolution_guard(self, unduloid):
        with pytest.raises(ValueError):
            embed_unduloid(unduloid, 0.1, theta_res=4)

    def test_tube(self):
        f = make_forcing(2 * math.pi, 0.16, N=8)
        tr = integrate_forced(f)
        m = embed_tube(tr, f.epsilon, f.L_gamma, theta_res=12, n_rings=64)
        assert m.metadata["cmc"] is False and "note" in m.metadata
        assert m.euler_characteristic() == 0 and m.is_consistently_oriented()
        n = m.face_normals()
        c = m.vertices[m.faces].mean(axis=1)
        # outward from the core circle of radius L / (2 pi)
        rho = np.hypot(c[:, 0], c[:, 1])
        core = np.stack([c[:, 0] / rho, c[:, 1] / rho, 0 * rho], axis=1)
        assert np.all(np.sum(n * (c - core), axis=1) > 0)

    def test_obj_round_trip(self, unduloid, tmp_path):
        m = embed_unduloid(unduloid, 0.1, theta_res=8, n_rings=12)
        obj, csv = tmp_path / "s.obj", tmp_path / "h.csv"
        export_obj(m, obj, csv)
        v, f = read_obj(obj)
        assert np.array_equal(v, m.vertices) and np.array_equal(f, m.faces)
        assert f.min() == 0 and f.max() == len(v) - 1
        rows = csv.read_text().splitlines()
        assert rows[0] == "vertex_index,H" and len(rows) == len(v) + 1

    def test_obj_without_h(self, unduloid, tmp_path):
        m = embed_unduloid(unduloid, 0.1, theta_res=8, n_rings=4, with_H=False)
        with pytest.raises(ValueError):
            export_obj(m, tmp_path / "s.obj", tmp_path / "h.csv")


class TestMeanCurvature:
    def test_cylinder(self):
        tr = integrate_profile(0.25, (0.0, 5.0))
        _, H = surface_mean_curvature(tr, 0.1)
        assert np.max(np.abs(H - 20.0)) <= 1e-12

    def test_unduloid_constant(self, unduloid):
        _, H = surface_mean_curvature(unduloid, 0.1)
        assert np.max(np.abs(H - 20.0)) <= 1e-8

    def test_sphere_scaling(self):
        psi = np.linspace(0.1, 1.9, 19)
        phi = np.sqrt(1 - (psi - 1) ** 2)
        zeta = -(psi - 1) / phi
        phipp = -1 / phi - (psi - 1) ** 2 / phi ** 3
        H = profile_mean_curvature(phi, zeta, phipp) / 0.5
        assert np.max(np.abs(H - 4.0)) <= 1e-12

    def test_embedding_route(self, unduloid):
        psi = np.linspace(0.3, 8.0, 11)
        a = embedding_mean_curvature(unduloid, 0.1, psi, theta=0.7)
        _, b = surface_mean_curvature(unduloid, 0.1, psi)
        assert np.max(np.abs(a - b)) <= 1e-5

    def test_forced_model(self):
        f = make_forcing(2 * math.pi, 0.16, N=8, a="sin:0.5,1", xi="cos:0.3,1",
                         omega=0.5)
        tr = integrate_forced(f)
        psi = np.linspace(0.2, f.psi_end - 0.2, 50)
        m = surface_mean_curvature(tr, f.epsilon, psi, detail=True)
        assert np.max(np.abs(m.H_model - m.H_predicted)) * f.epsilon <= 1e-6
        # the raw value still carries the curvature forcing
        assert np.max(np.abs(m.H - m.H_predicted)) * f.epsilon > 1e-3
