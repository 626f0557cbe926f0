import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delaunay_cmc import coefficients as coef
from delaunay_cmc.delaunay_core import (ProfileState, delaunay_params,
                                        first_integral, integrate_profile, period)
from delaunay_cmc.errors import AnnulusExitError, DomainError
from delaunay_cmc.forced import (ForcedField, integrate_forced, make_forcing,
                                 rho, rho_value, tau_gradient)
from delaunay_cmc.linearization import boundary_residual
from delaunay_cmc.profiles import PeriodicProfile

L = 2 * math.pi


class TestProfiles:
    def test_presets(self):
        assert PeriodicProfile.parse("zero", 1.0).is_zero
        assert PeriodicProfile.parse("constant:2.5", 1.0)(0.3) == 2.5
        s = PeriodicProfile.parse("sin:2,1", 4.0)
        assert s(1.0) == pytest.approx(2.0)
        c = PeriodicProfile.parse("cos:1.5,2", 4.0)
        assert c(1.0) == pytest.approx(-1.5)
        assert PeriodicProfile.parse(0.7, 1.0).is_constant

    @pytest.mark.parametrize("bad", ["sine:1", "sin:a,b", "constant:", "zero:1"])
    def test_bad_preset(self, bad):
        with pytest.raises(ValueError):
            PeriodicProfile.parse(bad, 1.0)

    def test_table_wrap_and_interpolation(self):
        x = np.linspace(0, 2.0, 64, endpoint=False)
        vals = np.sin(2 * np.pi * x / 2.0)
        p = PeriodicProfile.table(vals, 2.0)
        closed = PeriodicProfile.table(np.append(vals, vals[0]), 2.0)
        t = np.linspace(-3, 5, 101)
        assert np.max(np.abs(p(t) - np.sin(np.pi * t))) < 1e-5
        assert np.max(np.abs(p(t) - closed(t))) == 0.0
        # scalar fast path agrees with the array path
        assert max(abs(p(float(v)) - p(np.array([v]))[0]) for v in t) < 1e-14
        d = p.derivative(t)
        assert np.max(np.abs(d - np.pi * np.cos(np.pi * t))) < 1e-3

    def test_periodicity(self):
        p = PeriodicProfile.parse("sin:1,3", 2.5) + PeriodicProfile.table([0, 1, 0.5, 2], 2.5)
        t = np.linspace(0, 2.5, 17)
        assert np.max(np.abs(p(t) - p(t + 2.5))) < 1e-13

    def test_scaling(self):
        p = PeriodicProfile.table([0, 1, 0.5, 2], 1.0) * 3.0
        q = PeriodicProfile.table([0, 3, 1.5, 6], 1.0)
        t = np.linspace(0, 1, 13)
        assert np.max(np.abs(p(t) - q(t))) < 1e-13


class TestMakeForcing:
    def test_snap(self):
        f = make_forcing(L, 0.16, epsilon=0.1)
        assert f.requested_epsilon == 0.1
        assert L / (f.epsilon * period(0.16)) == pytest.approx(f.n_periods, abs=1e-9)
        assert f.phi0 == delaunay_params(0.16).phi_min
        assert f.delta1 == pytest.approx(0.045)

    def test_errors(self):
        with pytest.raises(DomainError):
            make_forcing(L, 0.16)
        with pytest.raises(DomainError):
            make_forcing(L, 0.25, N=3)
        with pytest.raises(DomainError):
            make_forcing(-1.0, 0.16, N=3)


class TestRho:
    def test_zero(self):
        f = make_forcing(L, 0.16, N=8)
        assert rho(ProfileState(0.0, 0.3, 0.4), 0.0, f) == 0.0

    def test_neck_only_curvature(self):
        f = make_forcing(L, 0.16, N=8, a="constant:1.3", b="constant:0.4",
                         omega=2.0)
        val = rho(ProfileState(0.0, 0.3, 0.0), 0.0, f)
        expect = -f.epsilon ** 2 * coef.f1_star(0.3, 0.0, 1.3, 0.4)
        assert val == pytest.approx(expect, rel=1e-14)

    def test_eps_powers(self):
        phi, zeta = 0.35, 0.2
        e = 0.3
        xi1 = rho_value(phi, zeta, e, 0.0, 0.0, 1.0, 0.0, 0.0)
        xi2 = rho_value(phi, zeta, e / 2, 0.0, 0.0, 1.0, 0.0, 0.0)
        mu1 = rho_value(phi, zeta, e, 0.0, 0.0, 0.0, 1.0, 0.0)
        mu2 = rho_value(phi, zeta, e / 2, 0.0, 0.0, 0.0, 1.0, 0.0)
        w1 = rho_value(phi, zeta, e, 0.0, 0.0, 0.0, 0.0, 1.0)
        w2 = rho_value(phi, zeta, e / 2, 0.0, 0.0, 0.0, 0.0, 1.0)
        assert xi2 / xi1 == pytest.approx(0.5)
        assert mu2 / mu1 == pytest.approx(0.125)
        assert w2 / w1 == pytest.approx(0.125)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(np.linspace(0.22, 0.78, 8).tolist()),
       st.sampled_from(np.linspace(-1.5, 1.5, 7).tolist()))
def test_tau_derivative_identity(phi, zeta):
    # dtau/dpsi = rho * phi * zeta, checked through the gradient of tau
    f = make_forcing(L, 0.16, N=4, a="constant:0.8", b="constant:-0.3",
                     xi="constant:0.5", mu="constant:1.1", omega=0.7)
    fld = ForcedField(f)
    vals = fld.profile_values(0.0)
    acc = fld.accel(phi, zeta, vals)
    tp, tz = tau_gradient(phi, zeta)
    r = rho_value(phi, zeta, f.epsilon, *vals, f.omega)
    assert tp * zeta + tz * acc == pytest.approx(r * phi * zeta, rel=1e-10, abs=1e-13)


class TestIntegrateForced:
    def test_zero_forcing_matches_unforced(self):
        f = make_forcing(L, 0.16, N=4)
        tr = integrate_forced(f)
        ref = integrate_profile(0.16, (0.0, f.psi_end), tol=1e-13)
        phi, zeta = ref(tr.psi)
        assert np.max(np.abs(tr.phi - phi)) < 1e-9
        assert np.max(np.abs(tr.zeta - zeta)) < 1e-9
        assert np.all(tr.x0_track == f.epsilon * tr.psi)
        assert tr.annulus_flag

    def test_constant_a_drift_scaling(self):
        sups = []
        for N in (8, 16, 32):
            f = make_forcing(L, 0.16, N=N, a="constant:0.5")
            tr = integrate_forced(f)
            sups.append(np.max(np.abs(tr.tau_track - tr.tau_track[0])))
        for a, b in zip(sups[:-1], sups[1:]):
            assert 3.0 <= a / b <= 5.0

    def test_omega_monotone(self):
        f = make_forcing(L, 0.16, N=8)
        ws = np.linspace(-0.02, 0.02, 9)
        dt = [boundary_residual(f.with_params(omega=w))[0][0] for w in ws]
        assert np.all(np.diff(dt) > 0)

    def test_annulus_exit(self):
        f = make_forcing(L, 0.16, N=4, a="constant:40")
        with pytest.raises(AnnulusExitError) as exc:
            integrate_forced(f)
        assert 0 < exc.value.exit_psi < f.psi_end
        tr = integrate_forced(f, raise_on_exit=False)
        assert not tr.annulus_flag and tr.exit_psi == pytest.approx(exc.value.exit_psi)
        assert abs(first_integral(tr.phi[-1], tr.zeta[-1]) - 0.16) == pytest.approx(f.delta1, rel=1e-6)
