import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from transmission_lab import errors
from transmission_lab.curves import Circle, Ellipse, RoundedPolygon
from transmission_lab.geometry import Region, build_geometry

from conftest import GOLDEN_SPEC


def test_canonical_annulus_builds(golden_geom):
    assert golden_geom.k2 > golden_geom.k1 > 0
    assert golden_geom.separation > 0.14


def test_inner_not_contained():
    spec = dict(GOLDEN_SPEC)
    spec["inner"] = {"kind": "circle", "radius": 1.2}
    with pytest.raises(errors.InnerNotContained):
        build_geometry(spec)


def test_support_touches_interface():
    spec = dict(GOLDEN_SPEC)
    spec["damping"] = {"kind": "radial", "plateau": 1.0, "r0": 0.2,
                      "r1": 0.25, "r2": 0.35, "r3": 0.4}
    with pytest.raises(errors.SupportTouchesInterface):
        build_geometry(spec)
    # the relaxed mode admits the same field for boundary-operator diagnostics
    g = build_geometry(spec, relaxed_interface_separation=True)
    assert g.b_max_on_interface() > 0.9


def test_nonpositive_speeds():
    spec = dict(GOLDEN_SPEC)
    spec["k1"] = -1.0
    with pytest.raises(errors.NonPositiveSpeeds):
        build_geometry(spec)


def test_equal_speeds_constructible():
    spec = dict(GOLDEN_SPEC)
    spec["k2"] = 1.0
    g = build_geometry(spec)
    assert not g.speeds_ordered


class TestEvalB:
    def test_plateau_point(self, golden_geom):
        v, grad = golden_geom.eval_b((0.7, 0.0))
        assert v == pytest.approx(1.0)
        assert np.linalg.norm(grad) == 0.0

    def test_outside_support(self, compact_bump_geom):
        v, grad = compact_bump_geom.eval_b((0.35, 0.0))
        assert v == 0.0 and np.linalg.norm(grad) == 0.0

    def test_shoulder_gradient_matches_finite_difference(self, golden_geom):
        # central-difference oracle on the bump formula
        x = (0.5, 0.1)   # on the rising ramp
        _, grad = golden_geom.eval_b(x)
        h = 1e-6
        for i in range(2):
            xp = list(x)
            xm = list(x)
            xp[i] += h
            xm[i] -= h
            fd = (golden_geom.damping(xp[0], xp[1])
                  - golden_geom.damping(xm[0], xm[1])) / (2 * h)
            assert grad[i] == pytest.approx(fd, rel=1e-6, abs=1e-9)

    def test_point_outside_domain(self, golden_geom):
        with pytest.raises(errors.PointOutsideDomain):
            golden_geom.eval_b((1.5, 0.0))
        with pytest.raises(errors.PointOutsideDomain):
            golden_geom.eval_b((0.0, 0.0))   # inside the inclusion


class TestNormals:
    def test_unit_circle(self, golden_geom):
        n = golden_geom.normal_at("outer", 0.0)
        assert n == pytest.approx([1.0, 0.0], abs=1e-12)
        n = golden_geom.normal_at("outer", 0.25)
        assert n == pytest.approx([0.0, 1.0], abs=1e-12)

    def test_ellipse_axis_point(self):
        e = Ellipse(a=2.0, b=1.0)
        assert e.normal(0.0) == pytest.approx([1.0, 0.0], abs=1e-12)

    @given(st.floats(0.0, 1.0, exclude_max=True))
    @settings(max_examples=60, deadline=None)
    def test_normal_perpendicular_to_tangent(self, s):
        for curve in (Circle(radius=0.7), Ellipse(a=1.5, b=0.8),
                      RoundedPolygon([(0, 0), (1, 0), (1, 1), (0, 1)], 0.2)):
            n = curve.normal(s)
            t = curve.tangent(s)
            assert abs(np.dot(n, t)) / np.linalg.norm(t) < 1e-10
            assert np.linalg.norm(n) == pytest.approx(1.0, abs=1e-12)


class TestClassify:
    @pytest.mark.parametrize("point,expected", [
        ((0.0, 0.0), Region.OMEGA2),
        ((0.65, 0.0), Region.OMEGA1),
        ((0.3, 0.0), Region.ON_INTERFACE),
        ((1.0, 0.0), Region.ON_OUTER),
        ((1.2, 0.0), Region.OUTSIDE),
    ])
    def test_named_points(self, golden_geom, point, expected):
        assert golden_geom.classify(point) is expected

    def test_constant_along_noncrossing_segments(self, golden_geom):
        rng = np.random.default_rng(11)
        for _ in range(40):
            # random chord within one region, checked by dense sampling
            r = rng.uniform(0.35, 0.95)
            a0 = rng.uniform(0, 2 * math.pi)
            a1 = a0 + rng.uniform(0.05, 0.4)
            p0 = np.array([r * math.cos(a0), r * math.sin(a0)])
            p1 = np.array([r * math.cos(a1), r * math.sin(a1)])
            chord_min_r = min(np.linalg.norm((p0 + t * (p1 - p0)))
                              for t in np.linspace(0, 1, 30))
            if chord_min_r <= 0.305:
                continue
            regions = {golden_geom.classify(p0 + t * (p1 - p0))
                       for t in np.linspace(0, 1, 60)}
            assert regions == {Region.OMEGA1}


class TestConvexity:
    def test_circle_and_ellipse_convex(self, golden_geom):
        rep = golden_geom.convexity_report()
        assert rep.outer_convex and rep.inner_convex
        assert rep.min_curvature_outer == pytest.approx(1.0)
        assert rep.min_curvature_inner == pytest.approx(1.0 / 0.3)
        assert rep.strictly_convex

    def test_nonconvex_rounded_polygon(self):
        # an L-shaped hull with a reflex corner
        verts = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
        spec = {
            "outer": {"kind": "rounded_polygon", "vertices": verts,
                      "corner_radius": 0.15},
            "inner": {"kind": "circle", "center": [0.5, 0.5], "radius": 0.2},
            "k1": 1.0, "k2": 2.0,
            "damping": {"kind": "zero"},
        }
        geom = build_geometry(spec)
        rep = geom.convexity_report()
        assert not rep.outer_convex
        assert rep.min_curvature_outer < -1.0


def test_geometry_descriptor_roundtrip_ellipse():
    spec = {
        "outer": {"kind": "ellipse", "a": 1.4, "b": 1.0},
        "inner": {"kind": "circle", "radius": 0.3},
        "k1": 1.0, "k2": 2.0,
        "damping": {"kind": "radial", "plateau": 0.5, "r0": 0.5, "r1": 0.6},
    }
    geom = build_geometry(spec)
    assert geom.classify((0.0, 0.0)) is Region.OMEGA2
    assert geom.classify((1.2, 0.0)) is Region.OMEGA1
