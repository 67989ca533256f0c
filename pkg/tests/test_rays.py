import math

import numpy as np
import pytest

from transmission_lab import errors, rays
from transmission_lab.rays import (
    Budget,
    InterfacePair,
    Medium,
    Termination,
    char_residual,
    classify_interface_pair,
    critical_angle,
    flow_segment,
    outer_reflection,
    phase_point,
    snell_event,
    trace_ray,
)


class TestFlow:
    def test_straight_chord_in_inclusion(self, golden_geom, kernel_std):
        p = phase_point(golden_geom, kernel_std, (0.0, 0.0), (1.0, 0.0),
                        medium=Medium.OMEGA2)
        fl = flow_segment(golden_geom, kernel_std, p, 10.0)
        assert fl.hit is not None and fl.hit.curve_id == "inner"
        assert fl.end.x[0] == pytest.approx(0.3, abs=1e-10)
        # constant-coefficient flow: the symbol is untouched, drift is exactly 0
        drift = (char_residual(golden_geom, kernel_std, fl.end)
                 - char_residual(golden_geom, kernel_std, p))
        assert drift == 0.0
        assert fl.end.xi == p.xi
        # speed sqrt(k2): the chord takes 0.3 / sqrt(2) time units
        assert fl.end.t == pytest.approx(0.3 / math.sqrt(2.0), rel=1e-12)

    def test_straight_outside_support(self, compact_bump_geom, kernel_std):
        p = phase_point(compact_bump_geom, kernel_std, (0.35, 0.0), (0.0, 1.0),
                        medium=Medium.OMEGA1)
        fl = flow_segment(compact_bump_geom, kernel_std, p, 0.2)
        pts = fl.points
        # all polyline points on one line through the start
        d = np.array([0.0, 1.0])
        rel = pts - pts[0]
        cross = rel[:, 0] * d[1] - rel[:, 1] * d[0]
        assert np.max(np.abs(cross)) < 1e-12

    def test_radial_bump_conserves_symbol_and_angular_momentum(
            self, compact_bump_geom, kernel_std):
        rng = np.random.default_rng(5)
        worst_p = 0.0
        worst_L = 0.0
        for _ in range(60):
            ang = rng.uniform(0, 2 * math.pi)
            x = (0.38 * math.cos(ang), 0.38 * math.sin(ang))
            beta = rng.uniform(0, 2 * math.pi)
            p = phase_point(compact_bump_geom, kernel_std, x,
                            (math.cos(beta), math.sin(beta)),
                            medium=Medium.OMEGA1)
            L0 = p.x[0] * p.xi[1] - p.x[1] * p.xi[0]
            fl = flow_segment(compact_bump_geom, kernel_std, p, 0.9)
            worst_p = max(worst_p, abs(char_residual(compact_bump_geom,
                                                     kernel_std, fl.end)))
            L1 = fl.end.x[0] * fl.end.xi[1] - fl.end.x[1] * fl.end.xi[0]
            worst_L = max(worst_L, abs(L1 - L0))
        assert worst_p <= 1e-8
        assert worst_L <= 1e-8


class TestSnell:
    def test_refraction_value(self, golden_geom, kernel_std):
        th1 = math.asin(0.5)
        n = np.array([1.0, 0.0])
        t = np.array([0.0, 1.0])
        d = -math.cos(th1) * n + math.sin(th1) * t
        p = phase_point(golden_geom, kernel_std, (0.3, 0.0), tuple(d),
                        medium=Medium.OMEGA1)
        ev = snell_event(golden_geom, kernel_std, p)
        tr = ev.outgoing("transmitted")
        assert tr is not None and tr.medium is Medium.OMEGA2
        sin2 = abs(tr.xi[1]) * math.sqrt(golden_geom.k2) / abs(tr.tau)
        assert sin2 == pytest.approx(0.5 * math.sqrt(2.0), abs=1e-15)
        # tangential covector continuity
        assert tr.xi[1] == pytest.approx(p.xi[1], abs=1e-15)
        re = ev.outgoing("reflected")
        assert re.xi[1] == pytest.approx(p.xi[1], abs=1e-15)
        assert re.xi[0] == pytest.approx(-p.xi[0], abs=1e-15)

    def test_critical_angle_value(self):
        assert critical_angle(1.0, 2.0) == pytest.approx(math.pi / 4.0,
                                                         abs=1e-15)

    def test_total_internal_reflection_above_critical(self, golden_geom,
                                                      kernel_std):
        th1 = math.pi / 4 + 0.05
        n = np.array([1.0, 0.0])
        t = np.array([0.0, 1.0])
        d = -math.cos(th1) * n + math.sin(th1) * t
        p = phase_point(golden_geom, kernel_std, (0.3, 0.0), tuple(d),
                        medium=Medium.OMEGA1)
        ev = snell_event(golden_geom, kernel_std, p)
        assert ev.outgoing("transmitted") is None
        assert ev.outgoing("reflected") is not None
        assert ev.classification is InterfacePair.H1_E2

    def test_from_fast_side_always_transmits(self, golden_geom, kernel_std):
        # the law is never vacuous for incidence from the inclusion
        for th2 in np.linspace(-1.45, 1.45, 21):
            n = np.array([1.0, 0.0])
            t = np.array([0.0, 1.0])
            d = math.cos(th2) * n + math.sin(th2) * t   # leaving the inclusion
            p = phase_point(golden_geom, kernel_std, (0.3, 0.0), tuple(d),
                            medium=Medium.OMEGA2)
            ev = snell_event(golden_geom, kernel_std, p)
            tr = ev.outgoing("transmitted")
            assert tr is not None and tr.medium is Medium.OMEGA1


class TestOuterReflection:
    def test_normal_incidence_reversed(self, golden_geom, kernel_std):
        p = phase_point(golden_geom, kernel_std, (1.0, 0.0), (1.0, 0.0),
                        medium=Medium.OMEGA1)
        ev = outer_reflection(golden_geom, kernel_std, p, 0.0)
        out = ev.outgoing("reflected")
        assert out.xi[0] == pytest.approx(-p.xi[0], rel=1e-12)
        assert abs(out.xi[1]) < 1e-15
        assert ev.classification == "H"

    def test_45_degree_specular(self, golden_geom, kernel_std):
        n = np.array([1.0, 0.0])
        t = np.array([0.0, 1.0])
        d = math.cos(math.pi / 4) * n + math.sin(math.pi / 4) * t
        p = phase_point(golden_geom, kernel_std, (1.0, 0.0), tuple(d),
                        medium=Medium.OMEGA1)
        ev = outer_reflection(golden_geom, kernel_std, p, 0.0)
        out = ev.outgoing("reflected")
        assert out.xi[1] == pytest.approx(p.xi[1], abs=1e-12)
        assert out.xi[0] == pytest.approx(-p.xi[0], rel=1e-12)
        assert ev.incidence_angle == pytest.approx(math.pi / 4, abs=1e-12)

    def test_tangential_hit_is_glancing(self, nodamp_geom, kernel_std):
        d = (0.0, 1.0)   # tangent to the outer circle at (1, 0)
        p = phase_point(nodamp_geom, kernel_std, (1.0, 0.0), d,
                        medium=Medium.OMEGA1)
        ev = outer_reflection(nodamp_geom, kernel_std, p, 0.0)
        assert ev.glancing and ev.classification == "G"


class TestClassifyPair:
    def test_normal_incidence(self, golden_geom):
        assert classify_interface_pair(golden_geom, 0.0, 1.0) \
            is InterfacePair.H1_H2

    def test_threshold_cases(self, golden_geom):
        tau = 1.0
        th2 = tau ** 2 / golden_geom.k2
        th1 = tau ** 2 / golden_geom.k1
        assert classify_interface_pair(golden_geom, th2, tau) \
            is InterfacePair.H1_G2
        assert classify_interface_pair(golden_geom, 0.5 * (th1 + th2), tau) \
            is InterfacePair.H1_E2
        assert classify_interface_pair(golden_geom, th1, tau) \
            is InterfacePair.G1_E2
        assert classify_interface_pair(golden_geom, 1.5 * th1, tau) \
            is InterfacePair.E1_E2

    def test_zero_tau(self, golden_geom):
        with pytest.raises(errors.ZeroTau):
            classify_interface_pair(golden_geom, 0.1, 0.0)


def test_noncharacteristic_input_rejected(golden_geom, kernel_std):
    p = phase_point(golden_geom, kernel_std, (0.3, 0.0), (-1.0, 0.0),
                    medium=Medium.OMEGA1)
    corrupted = rays.PhasePoint(p.x, p.t, (3.0 * p.xi[0], 3.0 * p.xi[1]),
                                p.tau, p.medium)
    with pytest.raises(errors.NonCharacteristicInput):
        snell_event(golden_geom, kernel_std, corrupted)


def whispering_start(geom, kernel, r=0.95, angle_from_tangent=0.12):
    x = (r, 0.0)
    d = (-math.sin(angle_from_tangent), math.cos(angle_from_tangent))
    return phase_point(geom, kernel, x, d, medium=Medium.OMEGA1)


class TestTraceRay:
    def test_disk_billiard_diameter(self, nodamp_geom, kernel_std):
        # diametral chord: events alternate antipodes
        p = phase_point(nodamp_geom, kernel_std, (0.31, 0.0), (1.0, 0.0),
                        medium=Medium.OMEGA1, t=0.0)
        tr = trace_ray(nodamp_geom, kernel_std, p,
                       Budget(max_time=7.9, max_events=64), policy="transmit")
        pts = [ev.point for ev in tr.events if ev.curve_id == "outer"]
        assert len(pts) >= 3
        for a, b in zip(pts[:-1], pts[1:]):
            assert a[0] == pytest.approx(-b[0], abs=1e-9)
            assert a[1] == pytest.approx(-b[1], abs=1e-9)

    def test_chord_angle_invariance(self, nodamp_geom, kernel_std):
        p = whispering_start(nodamp_geom, kernel_std)
        tr = trace_ray(nodamp_geom, kernel_std, p, Budget(10.0, 40))
        angles = [ev.incidence_angle for ev in tr.events]
        assert len(angles) >= 10
        assert max(angles) - min(angles) <= 1e-10

    def test_start_inside_support(self, golden_geom, kernel_std):
        p = phase_point(golden_geom, kernel_std, (-0.7, 0.0), (1.0, 0.0),
                        medium=Medium.OMEGA1)
        tr = trace_ray(golden_geom, kernel_std, p, Budget(4.0, 16))
        assert tr.terminated is Termination.ENTERED_SUPP_B
        assert tr.supp_entry[0] == (-0.7, 0.0)

    def test_radial_ray_stays_radial_through_inclusion(self, nodamp_geom,
                                                       kernel_std):
        p = phase_point(nodamp_geom, kernel_std, (0.6, 0.0), (-1.0, 0.0),
                        medium=Medium.OMEGA1)
        tr = trace_ray(nodamp_geom, kernel_std, p, Budget(1.2, 8),
                       policy="transmit")
        # normal-incidence transmission keeps the ray on the diameter
        for seg in tr.segments:
            assert abs(seg.end.x[1]) < 1e-10
        crossings = [ev for ev in tr.events if ev.curve_id == "inner"]
        assert len(crossings) >= 2
        media = {seg.start.medium for seg in tr.segments}
        assert media == {Medium.OMEGA1, Medium.OMEGA2}

    def test_time_reversal_retraces(self, nodamp_geom, kernel_std):
        p = whispering_start(nodamp_geom, kernel_std)
        tr = trace_ray(nodamp_geom, kernel_std, p, Budget(6.0, 40))
        end = tr.final
        back = rays.PhasePoint(end.x, 0.0, (-end.xi[0], -end.xi[1]),
                               -end.tau, end.medium)
        back_tr = trace_ray(nodamp_geom, kernel_std, back,
                            Budget(6.0, 40))
        fwd = [ev.point for ev in tr.events]
        rev = [ev.point for ev in back_tr.events][::-1]
        assert len(fwd) == len(rev)
        for a, b in zip(fwd, rev):
            assert a[0] == pytest.approx(b[0], abs=1e-7)
            assert a[1] == pytest.approx(b[1], abs=1e-7)

    def test_characteristic_conservation_along_traces(self, golden_geom,
                                                      kernel_std):
        rng = np.random.default_rng(9)
        for _ in range(20):
            ang = rng.uniform(0, 2 * math.pi)
            beta = rng.uniform(0, 2 * math.pi)
            x = (0.36 * math.cos(ang), 0.36 * math.sin(ang))
            p = phase_point(golden_geom, kernel_std, x,
                            (math.cos(beta), math.sin(beta)),
                            medium=Medium.OMEGA1)
            tr = trace_ray(golden_geom, kernel_std, p, Budget(3.0, 24),
                           policy="transmit")
            for seg in tr.segments:
                assert abs(char_residual(golden_geom, kernel_std,
                                         seg.end)) <= 1e-8

    def test_tangential_continuity_at_events(self, nodamp_geom, kernel_std):
        rng = np.random.default_rng(13)
        for _ in range(20):
            beta = rng.uniform(0, 2 * math.pi)
            p = phase_point(nodamp_geom, kernel_std, (0.5, 0.0),
                            (math.cos(beta), math.sin(beta)),
                            medium=Medium.OMEGA1)
            tr = trace_ray(nodamp_geom, kernel_std, p, Budget(3.0, 10),
                           policy="transmit")
            for ev in tr.events:
                curve = (nodamp_geom.outer if ev.curve_id == "outer"
                         else nodamp_geom.inner)
                n = curve.normal(ev.s)
                tvec = np.array([-n[1], n[0]])
                for _tag, out in ev.outcomes:
                    pass
                incoming = None
                for seg in tr.segments:
                    if abs(seg.end.t - ev.t) < 1e-12:
                        incoming = seg.end
                if incoming is None:
                    continue
                xi_t_in = incoming.xi[0] * tvec[0] + incoming.xi[1] * tvec[1]
                for _tag, out in ev.outcomes:
                    xi_t_out = out.xi[0] * tvec[0] + out.xi[1] * tvec[1]
                    assert xi_t_out == pytest.approx(xi_t_in, rel=1e-10,
                                                     abs=1e-12)

    def test_tree_mode_branches(self, nodamp_geom, kernel_std):
        th1 = 0.3   # below critical: both branches exist
        n = np.array([1.0, 0.0])
        t = np.array([0.0, 1.0])
        d = -math.cos(th1) * n + math.sin(th1) * t
        p = phase_point(nodamp_geom, kernel_std, (0.52, -0.12), tuple(d),
                        medium=Medium.OMEGA1)
        tree = trace_ray(nodamp_geom, kernel_std, p, Budget(2.0, 12),
                         policy="both")
        assert tree.branch_event is not None
        assert len(tree.children) == 2
        media = {ch.trace.start.medium for ch in tree.children}
        assert media == {Medium.OMEGA1, Medium.OMEGA2}

    def test_budget_exhaustion_reported(self, nodamp_geom, kernel_std):
        p = whispering_start(nodamp_geom, kernel_std)
        tr = trace_ray(nodamp_geom, kernel_std, p, Budget(50.0, 5))
        assert tr.terminated is Termination.MAX_EVENTS
        assert len(tr.events) == 5
