"""Tests for curves, parallel frames, and the geometric potentials."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bectube import geometry as geo


def frame_for(curve, n=1024):
    return geo.bishop_frame(geo.reparameterize_arclength(curve), n_nodes=n)


class TestCurves:
    def test_line_is_arclength(self):
        c = geo.line()
        assert c.arclength
        assert np.allclose(c.speed(np.linspace(-5, 5, 11)), 1.0)

    def test_circle_speed(self):
        c = geo.circle(2.0)
        assert np.allclose(c.speed(np.linspace(0, 2 * np.pi, 17)), 2.0)

    def test_reparameterize_circle_length(self):
        c = geo.reparameterize_arclength(geo.circle(2.0))
        assert c.arclength
        assert np.isclose(c.x_max - c.x_min, 4.0 * np.pi)
        x = np.linspace(c.x_min, c.x_max, 33)
        assert np.allclose(c.speed(x), 1.0, atol=1e-9)

    def test_reparameterize_general_curve(self):
        c = geo.reparameterize_arclength(geo.bump_line())
        x = np.linspace(c.x_min, c.x_max, 257)
        assert np.allclose(c.speed(x), 1.0, atol=1e-6)

    def test_degenerate_curve_rejected(self):
        # constant curve: speed vanishes identically
        t = np.linspace(0.0, 1.0, 101)
        pts = np.ones((101, 3))
        with pytest.raises(geo.GeometryError, match="not regular"):
            geo.reparameterize_arclength(geo.sampled_curve(t, pts))

    def test_sampled_curve_matches_source(self):
        t = np.linspace(0, 2 * np.pi, 513)
        src = geo.circle(1.5)
        smp = geo.sampled_curve(t, src.c(t))
        tt = np.linspace(0.3, 5.9, 41)
        assert np.allclose(smp.c(tt), src.c(tt), atol=1e-8)


class TestBishopFrame:
    def test_requires_arclength(self):
        with pytest.raises(geo.GeometryError, match="arc-length"):
            geo.bishop_frame(geo.circle(1.0))

    def test_circle_curvature(self):
        fr = frame_for(geo.circle(2.0))
        assert np.max(np.abs(fr.kappa - 0.5)) < 1e-8

    def test_helix_curvature(self):
        # kappa = R / (R^2 + h^2) = 1/2 for R = h = 1
        fr = frame_for(geo.helix(1.0, 1.0))
        assert np.max(np.abs(fr.kappa - 0.5)) < 1e-6

    def test_orthonormality(self):
        for curve in (geo.circle(1.0), geo.helix(1.0, 0.5), geo.bump_line()):
            fr = frame_for(curve)
            assert fr.orthonormality_defect() < 1e-8

    def test_line_frame_trivial(self):
        fr = geo.bishop_frame(geo.line())
        assert np.max(fr.kappa) == 0.0
        assert fr.orthonormality_defect() < 1e-14

    def test_frame_continuity(self):
        # parallel transport: no jumps in the normal fields
        fr = frame_for(geo.helix(1.0, 1.0))
        assert np.max(np.linalg.norm(np.diff(fr.e1, axis=0), axis=-1)) < 0.05

    def test_to_csv(self, tmp_path):
        fr = frame_for(geo.circle(1.0), n=64)
        path = tmp_path / "frame.csv"
        fr.to_csv(path)
        header = path.read_text().splitlines()[0]
        assert header.split(",")[0] == "x"
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape == (64, 13)


class TestPotentials:
    def test_straight_guide_flat(self):
        fr = geo.bishop_frame(geo.line())
        v = geo.geometric_potential(fr, geo.no_twist(), 1.0)
        assert np.all(v == 0.0)

    def test_circle_bending_value(self):
        fr = frame_for(geo.circle(2.0))
        v = geo.geometric_potential(fr, geo.no_twist(), 0.0)
        assert np.allclose(v, -1.0 / 16.0, atol=1e-8)

    def test_twist_adds_repulsive_term(self):
        fr = geo.bishop_frame(geo.line())
        rate, lchi2 = 0.3, 0.145
        v = geo.geometric_potential(fr, geo.linear_twist(rate), lchi2)
        assert np.allclose(v, rate**2 * lchi2)

    def test_lchi2_must_be_nonnegative(self):
        fr = geo.bishop_frame(geo.line())
        with pytest.raises(geo.GeometryError):
            geo.geometric_potential(fr, geo.no_twist(), -1.0)

    def test_bending_potential_eps0_limit(self):
        fr = frame_for(geo.circle(2.0))
        r = np.array([fr.x[len(fr.x) // 2], 0.1, -0.2])
        v = geo.bending_potential(r, 0.0, fr, geo.no_twist())
        assert np.isclose(v, -0.5**2 / 4.0, atol=1e-8)  # kappa = 1/2


class TestMetricFactors:
    def test_rho_formula(self):
        fr = frame_for(geo.circle(2.0))
        x = fr.x[len(fr.x) // 2]
        r = np.array([x, 0.3, -0.1])
        eps = 0.2
        rho, s = geo.metric_factors(r, eps, fr, geo.no_twist())
        u = float(np.array([0.3, -0.1]) @ fr.kappa_vec_at(x))
        assert np.isclose(rho, 1.0 - eps * u)
        assert np.isclose(s, (rho**2 - 1.0) / (eps * rho**2))

    def test_s_small_eps_limit(self):
        fr = frame_for(geo.circle(2.0))
        x = fr.x[len(fr.x) // 2]
        r = np.array([x, 0.3, -0.1])
        u = float(np.array([0.3, -0.1]) @ fr.kappa_vec_at(x))
        _, s0 = geo.metric_factors(r, 0.0, fr, geo.no_twist())
        assert np.isclose(s0, -2.0 * u)
        _, s = geo.metric_factors(r, 1e-4, fr, geo.no_twist())
        assert abs(s - s0) < 1e-3

    def test_rho_positivity_guard(self):
        fr = frame_for(geo.circle(0.5))  # kappa = 2
        x = fr.x[len(fr.x) // 2]
        kv = fr.kappa_vec_at(x)
        y = 2.0 * kv / (kv @ kv)  # y . kappa = 2, so rho < 0 at eps = 1
        with pytest.raises(geo.GeometryError, match="rho"):
            geo.metric_factors(np.array([x, y[0], y[1]]), 1.0, fr,
                               geo.no_twist())

    def test_jacobian_matches_rho(self):
        fr = frame_for(geo.circle(2.0))
        x = fr.x[len(fr.x) // 2]
        r = np.array([x, 0.3, -0.1])
        eps = 0.1
        rho, _ = geo.metric_factors(r, eps, fr, geo.no_twist())
        det = geo.embed_jacobian_det(r, eps, fr, geo.no_twist())
        assert np.isclose(abs(det), eps**2 * rho, rtol=1e-4)


class TestOverlapMargin:
    def test_line_feasible(self):
        c1, c2, feasible = geo.overlap_margin(geo.line())
        assert feasible
        assert c1 > 0.9  # straight line: distance equals parameter gap

    def test_helix_feasible(self):
        c = geo.reparameterize_arclength(geo.helix(1.0, 1.0))
        c1, c2, feasible = geo.overlap_margin(c)
        assert feasible
        assert 0 < c1 <= 1.0 and c2 > 0

    def test_closed_circle_seam_flagged(self):
        # a full closed loop revisits its start: far parameter values map to
        # the same point, so the linear lower bound is infeasible at the seam
        c = geo.reparameterize_arclength(geo.circle(2.0))
        _, _, feasible = geo.overlap_margin(c)
        assert not feasible


@given(rate=st.floats(-2.0, 2.0), x=st.floats(-5.0, 5.0))
@settings(max_examples=40, deadline=None)
def test_twist_rotation_orthogonal(rate, x):
    R = geo.linear_twist(rate).rotation(x)
    assert np.allclose(R @ R.T, np.eye(2), atol=1e-12)
    assert np.isclose(np.linalg.det(R), 1.0)


@given(y1=st.floats(-0.4, 0.4), y2=st.floats(-0.4, 0.4),
       eps=st.floats(0.01, 0.3))
@settings(max_examples=25, deadline=None)
def test_metric_factor_positive_for_thin_tubes(y1, y2, eps):
    fr = _CIRCLE_FRAME
    x = fr.x[len(fr.x) // 2]
    rho, _ = geo.metric_factors(np.array([x, y1, y2]), eps, fr, geo.no_twist())
    assert rho > 0.5  # |y| < 1, kappa = 1/2, eps < 0.3 keeps rho away from 0


_CIRCLE_FRAME = frame_for(geo.circle(2.0), n=256)
