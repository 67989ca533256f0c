"""Bicharacteristic tracing through the two-medium geometry.

Phase points carry (x, t, xi, tau) with the characteristic constraint
tau^2 = c(x) |xi|^2, where c = k1 (1 - k0 b(x)) in the annulus and c = k2 in
the inclusion. The flow is the Hamiltonian system of p = tau^2 - c(x)|xi|^2:

    x' = 2 c(x) xi,      xi' = k1 k0 |xi|^2 grad b(x),
    t' = -2 tau,         tau' = 0,

so rays move in straight lines wherever b vanishes (both media) and bend only
inside the damping support, where an adaptive step-doubling RK4 integrates the
system. tau is normalized to -1 at launch so that physical time increases
along the flow; it is conserved globally, including across interface events,
and |xi| rescales through the characteristic constraint when the medium
changes.

At the interface the tangential covector component is continuous, which is
Snell's law sin(theta_1)/sqrt(k1) = sin(theta_2)/sqrt(k2) once b vanishes
there. Crossings from the slow side transmit only below the critical angle;
crossings from the fast side always transmit. Boundary events are classified
hyperbolic/glancing/elliptic per side by comparing |xi'|^2 with tau^2/k_i.
Glancing propagation is not modelled: traces terminate as unresolved at
tangential events beyond the angular tolerance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    LeftDomain,
    NonCharacteristicInput,
    StiffnessFailure,
    ZeroTau,
)
from .geometry import Region


class Medium(enum.Enum):
    OMEGA1 = 1
    OMEGA2 = 2


class Termination(enum.Enum):
    TIME_BUDGET = "time_budget"
    MAX_EVENTS = "max_events"
    ENTERED_SUPP_B = "entered_supp_b"
    GLANCING_UNRESOLVED = "glancing_unresolved"
    INTERFACE_CROSSED = "interface_crossed"   # only in stop-at-interface mode


class InterfacePair(enum.Enum):
    H1_H2 = "H1xH2"
    H1_G2 = "H1xG2"
    H1_E2 = "H1xE2"
    G1_E2 = "G1xE2"
    E1_E2 = "E1xE2"


@dataclass(frozen=True)
class RayParams:
    ode_rtol: float = 1e-10
    ode_atol: float = 1e-12
    glancing_tol: float = 1e-8        # radians from tangent
    boundary_root_tol: float = 1e-10  # distance units
    classify_tol: float = 1e-9        # relative, interface set decomposition
    max_ode_steps: int = 500_000
    max_step_arclength: float = 0.05  # times domain diameter


@dataclass(frozen=True)
class ObservationParams:
    """Quantitative reading of 'crosses the damping support transversally'."""

    eps_b_rel: float = 1e-3       # level set threshold, times max b
    theta_min_deg: float = 1.0    # minimal crossing angle with the level set
    ell_min_rel: float = 1e-3     # minimal dwell chord, times diam(Omega)

    def resolve(self, geom):
        eps_b = self.eps_b_rel * geom.damping.max_value
        ell = self.ell_min_rel * geom.diameter
        return eps_b, math.sin(math.radians(self.theta_min_deg)), ell


@dataclass(frozen=True)
class PhasePoint:
    x: tuple[float, float]
    t: float
    xi: tuple[float, float]
    tau: float
    medium: Medium

    @property
    def direction(self):
        n = math.hypot(self.xi[0], self.xi[1])
        return (self.xi[0] / n, self.xi[1] / n)


@dataclass(frozen=True)
class Hit:
    curve_id: str          # "outer" | "inner"
    s: float
    point: tuple[float, float]


@dataclass
class FlowResult:
    points: np.ndarray
    end: PhasePoint
    hit: Hit | None
    time_used: float
    supp_entry: tuple[tuple[float, float], float] | None = None  # (point, t)


@dataclass
class BoundaryEvent:
    curve_id: str
    s: float
    point: tuple[float, float]
    t: float
    side_from: Medium
    incidence_angle: float
    classification: InterfacePair | str     # pair at the interface, "H"/"G" at the wall
    outcomes: list = field(default_factory=list)   # (tag, PhasePoint)
    glancing: bool = False

    def outgoing(self, tag):
        for k, p in self.outcomes:
            if k == tag:
                return p
        return None


@dataclass
class RaySegment:
    start: PhasePoint
    end: PhasePoint
    points: np.ndarray


@dataclass
class RayTrace:
    start: PhasePoint
    segments: list
    events: list
    terminated: Termination
    supp_entry: tuple[tuple[float, float], float] | None = None

    @property
    def final(self):
        return self.segments[-1].end if self.segments else self.start


@dataclass
class RayTraceTree:
    trace: RayTrace
    branch_event: BoundaryEvent | None = None
    children: list = field(default_factory=list)

    def leaves(self):
        if not self.children:
            return [self]
        out = []
        for ch in self.children:
            out.extend(ch.leaves())
        return out


@dataclass(frozen=True)
class Budget:
    max_time: float
    max_events: int = 64


# ---------------------------------------------------------------------------
# Phase-point construction and the characteristic constraint
# ---------------------------------------------------------------------------

def speed_sq(geom, kernel, x, medium):
    if medium is Medium.OMEGA2:
        return geom.k2
    b = geom.damping.value_and_gradient(x[0], x[1])[0]
    return geom.k1 * (1.0 - kernel.k0 * b)


def char_residual(geom, kernel, p):
    c = speed_sq(geom, kernel, p.x, p.medium)
    xi2 = p.xi[0] ** 2 + p.xi[1] ** 2
    return (p.tau ** 2 - c * xi2) / p.tau ** 2


def phase_point(geom, kernel, x, direction, medium=None, t=0.0, tau=-1.0):
    """Launch a ray at x along `direction`, with |xi| set by the constraint."""
    if tau == 0.0:
        raise ZeroTau("tau must be nonzero")
    if medium is None:
        region = geom.classify(x)
        if region is Region.OMEGA2:
            medium = Medium.OMEGA2
        elif region is Region.OMEGA1:
            medium = Medium.OMEGA1
        else:
            raise NonCharacteristicInput(
                f"cannot infer medium at {tuple(x)} ({region}); pass medium=")
    d = math.hypot(direction[0], direction[1])
    c = speed_sq(geom, kernel, x, medium)
    scale = abs(tau) / (math.sqrt(c) * d)
    return PhasePoint(x=(float(x[0]), float(x[1])), t=float(t),
                      xi=(direction[0] * scale, direction[1] * scale),
                      tau=float(tau), medium=medium)


def critical_angle(k1, k2):
    """Incidence from the slow side at which transmission turns tangential."""
    return math.asin(math.sqrt(k1 / k2))


def classify_interface_pair(geom, r_tangential_sq, tau, tol=1e-9):
    """Decompose an interface phase point by its tangential frequency.

    r = |xi'|^2 is compared with tau^2/k1 and tau^2/k2; with k1 < k2 the side-1
    threshold is the larger one. Equalities use a relative tolerance.
    """
    if tau == 0.0:
        raise ZeroTau("tau must be nonzero")
    r = float(r_tangential_sq)
    th1 = tau * tau / geom.k1
    th2 = tau * tau / geom.k2
    near1 = abs(r - th1) <= tol * th1
    near2 = abs(r - th2) <= tol * th2
    if near2 and r < th1 and not near1:
        return InterfacePair.H1_G2
    if near1 and r > th2 and not near2:
        return InterfacePair.G1_E2
    if r < th2 and r < th1:
        return InterfacePair.H1_H2
    if th2 < r < th1:
        return InterfacePair.H1_E2
    return InterfacePair.E1_E2


# ---------------------------------------------------------------------------
# Flow
# ---------------------------------------------------------------------------

def _curve_first_hit(geom, x, d, medium, exclude=None, eps=None):
    """Nearest boundary hit along the unit direction d from x."""
    eps = 1e-12 if eps is None else eps
    best = None
    curves = (("inner", geom.inner),) if medium is Medium.OMEGA2 else \
        (("inner", geom.inner), ("outer", geom.outer))
    for cid, curve in curves:
        skip_close = (exclude == cid)
        for t, s in curve.ray_hits(x, d):
            if t <= eps:
                continue
            if skip_close and t <= 1e-9:
                continue
            if best is None or t < best[0]:
                best = (t, cid, s)
            break  # ray_hits sorted; first admissible is nearest on this curve
    return best


def _annulus_entry(bump, x, d, max_len):
    """Arc-length at which the straight ray enters the support bounding annulus.

    Returns None if the annulus is not reached within max_len; 0.0 if x is
    already inside the radial band.
    """
    cx = x[0] - bump.center[0]
    cy = x[1] - bump.center[1]
    r2 = cx * cx + cy * cy
    r_out = bump.support_outer_radius
    lo2 = bump.r0 * bump.r0
    hi2 = math.inf if math.isinf(r_out) else r_out * r_out
    if lo2 <= r2 <= hi2:
        return 0.0
    # crossing parameters with both bounding circles
    ts = []
    b = 2.0 * (cx * d[0] + cy * d[1])
    for rad2 in (lo2, (None if math.isinf(r_out) else hi2)):
        if rad2 is None or rad2 == 0.0:
            continue
        disc = b * b - 4.0 * (r2 - rad2)
        if disc < 0:
            continue
        sq = math.sqrt(disc)
        ts.extend([(-b - sq) / 2.0, (-b + sq) / 2.0])
    ts = sorted(t for t in ts if 1e-12 < t < max_len)
    for t in ts:
        mid = t + 1e-9
        mx, my = cx + mid * d[0], cy + mid * d[1]
        rm2 = mx * mx + my * my
        inside = rm2 >= lo2 - 1e-12 and (math.isinf(hi2) or rm2 <= hi2 * (1 + 1e-12))
        if inside:
            return t
    return None


def _in_annulus(bump, x):
    r = math.hypot(x[0] - bump.center[0], x[1] - bump.center[1])
    return bump.r0 - 1e-12 <= r <= bump.support_outer_radius + 1e-12


def flow_segment(geom, kernel, p0, max_time, params=None, b_stop=None):
    """Advance one arc: straight stepping off the support, Hamiltonian ODE on it.

    Stops at the first boundary crossing (root-refined on the signed distance)
    or when the physical-time budget runs out. The symbol p is conserved
    exactly on straight stretches and to integrator tolerance inside the
    support. `b_stop = (eps_b, dwell_len)` lets the caller cut the arc short
    once it has spent dwell_len of arclength in {b >= eps_b}, so observation
    tests do not pay for integrating through thick damping shells.
    """
    params = params or RayParams()
    bump = geom.damping
    k1, k2, k0 = geom.k1, geom.k2, kernel.k0
    x = [p0.x[0], p0.x[1]]
    xi = [p0.xi[0], p0.xi[1]]
    t = p0.t
    abs_tau = abs(p0.tau)
    remaining = max_time
    pts = [tuple(x)]
    on_curve = _on_curve_id(geom, p0.x)

    while remaining > 1e-14 * max(1.0, abs(max_time)):
        xi_norm = math.hypot(xi[0], xi[1])
        d = (xi[0] / xi_norm, xi[1] / xi_norm)
        curved = (p0.medium is Medium.OMEGA1 and not bump.is_zero
                  and _in_annulus(bump, x))
        if not curved:
            c = k2 if p0.medium is Medium.OMEGA2 else speed_sq(geom, kernel, x, p0.medium)
            speed = math.sqrt(c)
            max_len = remaining * speed
            hit = _curve_first_hit(geom, x, d, p0.medium, exclude=on_curve)
            entry = None
            if p0.medium is Medium.OMEGA1 and not bump.is_zero:
                lim = max_len if hit is None else min(max_len, hit[0])
                entry = _annulus_entry(bump, x, d, lim)
                if entry == 0.0:
                    entry = None  # already inside: handled by `curved` next pass
            if entry is not None and (hit is None or entry < hit[0]):
                step = entry
                x = [x[0] + step * d[0], x[1] + step * d[1]]
                t += step / speed
                remaining -= step / speed
                pts.append(tuple(x))
                on_curve = None
                # re-enter loop in curved mode
                p0 = replace(p0, x=(x[0], x[1]), t=t, xi=(xi[0], xi[1]))
                continue
            if hit is not None and hit[0] <= max_len:
                step, cid, s = hit
                curve = geom.outer if cid == "outer" else geom.inner
                xh = curve.point(s)
                t += step / speed
                pts.append((float(xh[0]), float(xh[1])))
                end = PhasePoint((float(xh[0]), float(xh[1])), t,
                                 (xi[0], xi[1]), p0.tau, p0.medium)
                return FlowResult(np.asarray(pts), end, Hit(cid, s, end.x),
                                  max_time - (remaining - step / speed))
            # budget exhausted on a straight stretch
            x = [x[0] + max_len * d[0], x[1] + max_len * d[1]]
            t += remaining
            pts.append(tuple(x))
            end = PhasePoint((x[0], x[1]), t, (xi[0], xi[1]), p0.tau, p0.medium)
            return FlowResult(np.asarray(pts), end, None, max_time)

        # ---- curved stretch through the support annulus -------------------
        res = _ode_flow(geom, kernel, x, xi, t, abs_tau, remaining, params,
                        pts, b_stop)
        x, xi, t, remaining, hit, dwelled = res
        if hit is not None or dwelled:
            end = PhasePoint((x[0], x[1]), t, (xi[0], xi[1]), p0.tau, p0.medium)
            return FlowResult(np.asarray(pts), end, hit, max_time - remaining)
        if remaining <= 1e-14 * max(1.0, abs(max_time)):
            break
        on_curve = None
        p0 = replace(p0, x=(x[0], x[1]), t=t, xi=(xi[0], xi[1]))

    end = PhasePoint((x[0], x[1]), t, (xi[0], xi[1]), p0.tau, p0.medium)
    return FlowResult(np.asarray(pts), end, None, max_time)


def _on_curve_id(geom, x):
    if abs(geom.outer.signed_distance(x)) < 1e-9:
        return "outer"
    if abs(geom.inner.signed_distance(x)) < 1e-9:
        return "inner"
    return None


def _ode_flow(geom, kernel, x, xi, t, abs_tau, remaining, params, pts,
              b_stop=None):
    """Adaptive RK4 (step doubling) inside the support bounding annulus."""
    bump = geom.damping
    k1, k0 = geom.k1, kernel.k0
    bg = bump.value_and_gradient
    dwell = 0.0

    def rhs(s):
        b, gx, gy = bg(s[0], s[1])
        c2 = 2.0 * k1 * (1.0 - k0 * b)
        f = k1 * k0 * (s[2] * s[2] + s[3] * s[3])
        return (c2 * s[2], c2 * s[3], f * gx, f * gy)

    def rk4(s, h):
        # unrolled stages: this is the hot loop of every curved arc
        x1, x2, q1, q2 = s
        b, gx, gy = bg(x1, x2)
        c2 = 2.0 * k1 * (1.0 - k0 * b)
        f = k1 * k0 * (q1 * q1 + q2 * q2)
        a0, a1, a2, a3 = c2 * q1, c2 * q2, f * gx, f * gy
        hh = 0.5 * h
        y1, y2, p1, p2 = x1 + hh * a0, x2 + hh * a1, q1 + hh * a2, q2 + hh * a3
        b, gx, gy = bg(y1, y2)
        c2 = 2.0 * k1 * (1.0 - k0 * b)
        f = k1 * k0 * (p1 * p1 + p2 * p2)
        b0, b1, b2, b3 = c2 * p1, c2 * p2, f * gx, f * gy
        y1, y2, p1, p2 = x1 + hh * b0, x2 + hh * b1, q1 + hh * b2, q2 + hh * b3
        b, gx, gy = bg(y1, y2)
        c2 = 2.0 * k1 * (1.0 - k0 * b)
        f = k1 * k0 * (p1 * p1 + p2 * p2)
        c0, c1, c2_, c3 = c2 * p1, c2 * p2, f * gx, f * gy
        y1, y2, p1, p2 = x1 + h * c0, x2 + h * c1, q1 + h * c2_, q2 + h * c3
        b, gx, gy = bg(y1, y2)
        c2 = 2.0 * k1 * (1.0 - k0 * b)
        f = k1 * k0 * (p1 * p1 + p2 * p2)
        d0, d1, d2, d3 = c2 * p1, c2 * p2, f * gx, f * gy
        h6 = h / 6.0
        return (x1 + h6 * (a0 + 2 * (b0 + c0) + d0),
                x2 + h6 * (a1 + 2 * (b1 + c1) + d1),
                q1 + h6 * (a2 + 2 * (b2 + c2_) + d2),
                q2 + h6 * (a3 + 2 * (b3 + c3) + d3))

    state = (x[0], x[1], xi[0], xi[1])
    # flow-parameter budget: dt = 2 |tau| dsigma
    sigma_left = remaining / (2.0 * abs_tau)
    speed0 = math.hypot(*rhs(state)[:2])
    h = min(0.01 * geom.diameter / max(speed0, 1e-12), sigma_left)
    h_floor = 1e-15 * max(1.0, sigma_left)
    max_arc = params.max_step_arclength * geom.diameter
    sd_outer0 = geom.outer.signed_distance((state[0], state[1]))
    sd_inner0 = geom.inner.signed_distance((state[0], state[1]))
    steps = 0

    while sigma_left > 1e-16 and steps < params.max_ode_steps:
        steps += 1
        h = min(h, sigma_left)
        # cap the arclength so curved steps cannot leap across a curve
        v = rhs(state)
        vn = math.hypot(v[0], v[1])
        if vn * h > max_arc:
            h = max_arc / vn
        full = rk4(state, h)
        half = rk4(rk4(state, 0.5 * h), 0.5 * h)
        err = max(abs(full[i] - half[i]) for i in range(4))
        scale = params.ode_atol + params.ode_rtol * max(
            1.0, max(abs(s) for s in state))
        if err > scale and h > h_floor:
            h = max(h * max(0.2, 0.9 * (scale / err) ** 0.2), h_floor)
            if h <= h_floor:
                raise StiffnessFailure("ray integrator step collapsed")
            continue
        # accept (Richardson-extrapolated endpoint)
        new = tuple(half[i] + (half[i] - full[i]) / 15.0 for i in range(4))
        vun = rhs(new)
        sd_outer1 = geom.outer.signed_distance((new[0], new[1]))
        sd_inner1 = geom.inner.signed_distance((new[0], new[1]))
        crossed = None
        if sd_outer1 >= -params.boundary_root_tol and sd_outer0 < 0:
            crossed = ("outer", geom.outer)
        elif (sd_inner1 <= params.boundary_root_tol and sd_inner0 > 0) or \
             (sd_inner1 >= -params.boundary_root_tol and sd_inner0 < 0):
            crossed = ("inner", geom.inner)
        if crossed is not None:
            cid, curve = crossed
            a_root = _hermite_root(curve, state, v, new, vun, h, params)
            xs, xis = _hermite_eval(state, v, new, vun, h, a_root)
            s_par = curve.param_of_point(xs)
            xc = curve.point(s_par)
            dt_used = 2.0 * abs_tau * a_root * h
            pts.append((float(xc[0]), float(xc[1])))
            return ([float(xc[0]), float(xc[1])], [xis[0], xis[1]],
                    t + dt_used, remaining - dt_used,
                    Hit(cid, s_par, (float(xc[0]), float(xc[1]))), False)
        if sd_outer1 > 10 * params.boundary_root_tol:
            raise LeftDomain("integrator escaped the domain")
        step_arc = math.hypot(new[0] - state[0], new[1] - state[1])
        state = new
        sd_outer0, sd_inner0 = sd_outer1, sd_inner1
        dt_used = 2.0 * abs_tau * h
        t += dt_used
        remaining -= dt_used
        sigma_left -= h
        pts.append((state[0], state[1]))
        if b_stop is not None:
            if bg(state[0], state[1])[0] >= b_stop[0]:
                dwell += step_arc
                if dwell >= b_stop[1]:
                    return ([state[0], state[1]], [state[2], state[3]],
                            t, remaining, None, True)
            else:
                dwell = 0.0
        if err > 0:
            h = min(h * min(5.0, 0.9 * (scale / err) ** 0.2), 10 * max_arc / max(vn, 1e-12))
        if not _in_annulus(bump, state):
            break

    if steps >= params.max_ode_steps:
        raise StiffnessFailure("ray integrator exceeded max steps")
    return ([state[0], state[1]], [state[2], state[3]], t, remaining, None, False)


def _hermite_eval(s0, v0, s1, v1, h, a):
    """Cubic Hermite interpolation of the 4-state over one accepted step."""
    h00 = (1 + 2 * a) * (1 - a) ** 2
    h10 = a * (1 - a) ** 2
    h01 = a * a * (3 - 2 * a)
    h11 = a * a * (a - 1)
    out = [h00 * s0[i] + h10 * h * v0[i] + h01 * s1[i] + h11 * h * v1[i]
           for i in range(4)]
    return (out[0], out[1]), (out[2], out[3])


def _hermite_root(curve, s0, v0, s1, v1, h, params):
    """Bisection + secant on the signed distance along the Hermite arc."""
    def f(a):
        xs, _ = _hermite_eval(s0, v0, s1, v1, h, a)
        return curve.signed_distance(xs)

    lo, hi = 0.0, 1.0
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return 0.0
    # locate the first sign change over a few interior samples
    prev_a, prev_f = lo, flo
    for k in range(1, 9):
        a = k / 8.0
        fa = f(a)
        if fa == 0.0:
            return a
        if (fa > 0) != (prev_f > 0):
            lo, flo, hi, fhi = prev_a, prev_f, a, fa
            break
        prev_a, prev_f = a, fa
    else:
        lo, flo = prev_a, prev_f
        hi, fhi = 1.0, f(1.0)
    a = 0.5 * (lo + hi)
    for _ in range(200):
        # secant proposal, safeguarded by the bracket
        denom = fhi - flo
        a_sec = hi - fhi * (hi - lo) / denom if denom != 0 else 0.5 * (lo + hi)
        a = a_sec if lo < a_sec < hi else 0.5 * (lo + hi)
        fa = f(a)
        if abs(fa) <= params.boundary_root_tol or hi - lo < 1e-15:
            return a
        if (fa > 0) == (fhi > 0):
            hi, fhi = a, fa
        else:
            lo, flo = a, fa
    return a


# ---------------------------------------------------------------------------
# Boundary events
# ---------------------------------------------------------------------------

def _split_covector(p, normal):
    xin = p.xi[0] * normal[0] + p.xi[1] * normal[1]
    xit = (p.xi[0] - xin * normal[0], p.xi[1] - xin * normal[1])
    return xin, xit


def outer_reflection(geom, kernel, incoming, s=None, params=None):
    """Specular reflection at the outer wall (homogeneous Dirichlet side)."""
    params = params or RayParams()
    s = geom.outer.param_of_point(incoming.x) if s is None else s
    n = geom.outer.normal(s)
    xin, xit = _split_covector(incoming, n)
    xi_norm = math.hypot(*incoming.xi)
    sin_from_tangent = abs(xin) / xi_norm
    glancing = sin_from_tangent < math.sin(params.glancing_tol)
    r = xit[0] ** 2 + xit[1] ** 2
    c_here = speed_sq(geom, kernel, incoming.x, incoming.medium)
    mag2 = incoming.tau ** 2 / c_here - r
    mag = math.sqrt(max(mag2, 0.0))
    xi_ref = (xit[0] - math.copysign(mag, xin) * n[0],
              xit[1] - math.copysign(mag, xin) * n[1])
    refl = PhasePoint(incoming.x, incoming.t, xi_ref, incoming.tau, incoming.medium)
    incidence = math.asin(min(1.0, math.sqrt(r * c_here) / abs(incoming.tau)))
    ev = BoundaryEvent(curve_id="outer", s=s, point=incoming.x, t=incoming.t,
                       side_from=incoming.medium, incidence_angle=incidence,
                       classification="G" if glancing else "H",
                       glancing=glancing)
    if not glancing:
        ev.outcomes.append(("reflected", refl))
    return ev


def snell_event(geom, kernel, incoming, s=None, params=None):
    """Reflection/transmission bookkeeping at the interface.

    The tangential covector is preserved; outgoing normal components are
    rebuilt from the characteristic constraint of their medium, so Snell's law
    holds to machine precision by construction. Incidence from the slow side
    above the critical angle yields total internal reflection; incidence from
    the fast side always transmits.
    """
    params = params or RayParams()
    s = geom.inner.param_of_point(incoming.x) if s is None else s
    n = geom.inner.normal(s)   # outward from the inclusion, into the annulus
    xin, xit = _split_covector(incoming, n)
    xi_norm = math.hypot(*incoming.xi)
    if xi_norm == 0.0:
        raise NonCharacteristicInput("zero covector")
    tau2 = incoming.tau ** 2
    r = xit[0] ** 2 + xit[1] ** 2
    c_from = speed_sq(geom, kernel, incoming.x, incoming.medium)
    other = Medium.OMEGA2 if incoming.medium is Medium.OMEGA1 else Medium.OMEGA1
    c_to = geom.k2 if other is Medium.OMEGA2 else \
        geom.k1 * (1.0 - kernel.k0 * geom.damping.value_and_gradient(*incoming.x)[0])

    res = abs(tau2 - c_from * (xi_norm ** 2)) / tau2
    if res > 1e-6:
        raise NonCharacteristicInput(f"characteristic residual {res:.3e}")

    glancing_in = abs(xin) / xi_norm < math.sin(params.glancing_tol)
    incidence = math.asin(min(1.0, math.sqrt(r * c_from) / abs(incoming.tau)))
    pair = classify_interface_pair(geom, r, incoming.tau, tol=params.classify_tol)

    ev = BoundaryEvent(curve_id="inner", s=s, point=incoming.x, t=incoming.t,
                       side_from=incoming.medium, incidence_angle=incidence,
                       classification=pair, glancing=glancing_in)

    # reflected ray, same side
    mag_from = math.sqrt(max(tau2 / c_from - r, 0.0))
    xi_ref = (xit[0] - math.copysign(mag_from, xin) * n[0],
              xit[1] - math.copysign(mag_from, xin) * n[1])
    ev.outcomes.append(("reflected", PhasePoint(
        incoming.x, incoming.t, xi_ref, incoming.tau, incoming.medium)))

    # transmitted ray, other side, below the other-side threshold
    trans_gap = tau2 / c_to - r
    if abs(trans_gap) <= params.classify_tol * tau2 / c_to:
        ev.outcomes.append(("gliding", PhasePoint(
            incoming.x, incoming.t, xit, incoming.tau, other)))
    elif trans_gap > 0:
        mag_to = math.sqrt(trans_gap)
        xi_tr = (xit[0] + math.copysign(mag_to, xin) * n[0],
                 xit[1] + math.copysign(mag_to, xin) * n[1])
        ev.outcomes.append(("transmitted", PhasePoint(
            incoming.x, incoming.t, xi_tr, incoming.tau, other)))
    return ev


# ---------------------------------------------------------------------------
# Support-crossing (observation) test along arcs
# ---------------------------------------------------------------------------

def _first_supp_crossing(geom, points, t0, t1, obs, allow_start_inside=True):
    """First transversal crossing of {b >= eps_b} along a polyline arc.

    Returns (entry point, entry time) or None. Transversality asks the entry
    angle against the level line to exceed theta_min and the in-level chord to
    reach ell_min. An arc that begins inside the level set counts once its
    dwell reaches ell_min (continuation of an earlier entry), unless the
    caller already examined that entry on a preceding sub-arc.
    """
    bump = geom.damping
    if bump.is_zero:
        return None
    eps_b, sin_min, ell_min = obs.resolve(geom)
    pts = np.asarray(points)
    if len(pts) < 2:
        return None
    seg = np.diff(pts, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    total = float(seg_len.sum())
    if total <= 0:
        return None
    step = max(min(ell_min / 2.0, total / 8.0), total * 1e-6)
    n = int(total / step) + 2
    ss = np.linspace(0.0, total, n)
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    loc = np.searchsorted(cum, ss, side="right") - 1
    loc = np.clip(loc, 0, len(seg) - 1)
    frac = (ss - cum[loc]) / np.maximum(seg_len[loc], 1e-300)
    xs = pts[loc, 0] + frac * seg[loc, 0]
    ys = pts[loc, 1] + frac * seg[loc, 1]
    bv = bump.value_grid(xs, ys)
    mask = bv >= eps_b
    if not mask.any():
        return None
    idx = int(np.argmax(mask))
    # dwell length inside the level set from the first entry
    run_end = idx
    while run_end < n and mask[run_end]:
        run_end += 1
    dwell = ss[min(run_end, n - 1)] - ss[idx]
    if run_end >= n:
        dwell = total - ss[idx]
    if dwell < ell_min:
        return None
    entry_s = ss[idx]
    x_entry = (float(xs[idx]), float(ys[idx]))
    if idx == 0 and not allow_start_inside:
        # skip the initial run, look for a fresh entry later on the arc
        while idx < n and mask[idx]:
            idx += 1
        rest = mask[idx:]
        if not rest.any():
            return None
        idx = idx + int(np.argmax(rest))
        run_end = idx
        while run_end < n and mask[run_end]:
            run_end += 1
        dwell = (total if run_end >= n else ss[min(run_end, n - 1)]) - ss[idx]
        if dwell < ell_min:
            return None
        entry_s = ss[idx]
        x_entry = (float(xs[idx]), float(ys[idx]))
    if idx > 0:
        # refine entry by bisection on b - eps_b, then check the crossing angle
        a, b_ = ss[idx - 1], ss[idx]
        for _ in range(40):
            m = 0.5 * (a + b_)
            pm = _point_at(pts, cum, seg, seg_len, m)
            if bump.value_and_gradient(pm[0], pm[1])[0] >= eps_b:
                b_ = m
            else:
                a = m
        entry_s = b_
        x_entry = _point_at(pts, cum, seg, seg_len, entry_s)
        j = np.searchsorted(cum, entry_s, side="right") - 1
        j = min(max(j, 0), len(seg) - 1)
        d = seg[j] / max(seg_len[j], 1e-300)
        _, gx, gy = bump.value_and_gradient(x_entry[0], x_entry[1])
        gn = math.hypot(gx, gy)
        if gn > 0:
            sin_cross = abs(d[0] * gx + d[1] * gy) / gn
            if sin_cross < sin_min:
                return None
    t_entry = t0 + (t1 - t0) * (entry_s / total)
    return (x_entry, float(t_entry))


def _point_at(pts, cum, seg, seg_len, s):
    j = np.searchsorted(cum, s, side="right") - 1
    j = min(max(j, 0), len(seg) - 1)
    fr = (s - cum[j]) / max(seg_len[j], 1e-300)
    return (float(pts[j, 0] + fr * seg[j, 0]), float(pts[j, 1] + fr * seg[j, 1]))


# ---------------------------------------------------------------------------
# Tracing
# ---------------------------------------------------------------------------

def trace_ray(geom, kernel, p0, budget, policy="transmit", params=None,
              obs=None, stop_at_interface=False):
    """Follow a ray through flow segments and boundary events.

    policy: 'transmit' follows the transmitted branch where it exists,
    'reflect' always stays on the reflected branch, 'both' explores the branch
    tree (returns a RayTraceTree, node count capped by budget.max_events).
    Traces stop at the first transversal crossing of the damping support
    (the observation condition), at unresolved glancing events, or on budget.
    """
    params = params or RayParams()
    obs = obs or ObservationParams()
    if policy == "both":
        counter = [0]
        return _trace_tree(geom, kernel, p0, budget, params, obs, counter)
    trace, _branches = _trace_linear(geom, kernel, p0, budget, policy, params,
                                     obs, stop_at_interface)
    return trace


def _immediate_entry(geom, p0, obs):
    eps_b, _, _ = obs.resolve(geom)
    if geom.damping.is_zero:
        return False
    return geom.damping.value_and_gradient(p0.x[0], p0.x[1])[0] >= eps_b


def _trace_linear(geom, kernel, p0, budget, policy, params, obs,
                  stop_at_interface):
    segments, events = [], []
    if _immediate_entry(geom, p0, obs):
        return RayTrace(p0, segments, events, Termination.ENTERED_SUPP_B,
                        supp_entry=(p0.x, p0.t)), None
    current = p0
    t_end = p0.t + budget.max_time
    eps_b, _, ell_min = obs.resolve(geom)
    b_stop = None if geom.damping.is_zero else (eps_b, 2.5 * ell_min)
    skip_stop = False
    while True:
        remaining = t_end - current.t
        if remaining <= 0:
            return RayTrace(p0, segments, events, Termination.TIME_BUDGET), None
        resumed = skip_stop
        use_stop = (b_stop if current.medium is Medium.OMEGA1 and not skip_stop
                    else None)
        flow = flow_segment(geom, kernel, current, remaining, params,
                            b_stop=use_stop)
        if current.medium is Medium.OMEGA1:
            entry = _first_supp_crossing(geom, flow.points, current.t,
                                         flow.end.t, obs,
                                         allow_start_inside=not resumed)
            if entry is not None:
                segments.append(RaySegment(current, flow.end, flow.points))
                return RayTrace(p0, segments, events,
                                Termination.ENTERED_SUPP_B,
                                supp_entry=entry), None
        segments.append(RaySegment(current, flow.end, flow.points))
        if flow.hit is None:
            early = use_stop is not None and flow.end.t < t_end - 1e-12
            if early:
                # dwell trigger without a confirmed transversal crossing:
                # resume the arc without the shortcut
                skip_stop = True
                current = flow.end
                continue
            return RayTrace(p0, segments, events, Termination.TIME_BUDGET), None
        skip_stop = False
        if len(events) >= budget.max_events:
            return RayTrace(p0, segments, events, Termination.MAX_EVENTS), None
        if flow.hit.curve_id == "outer":
            ev = outer_reflection(geom, kernel, flow.end, flow.hit.s, params)
            events.append(ev)
            if ev.glancing:
                return RayTrace(p0, segments, events,
                                Termination.GLANCING_UNRESOLVED), None
            current = ev.outgoing("reflected")
        else:
            ev = snell_event(geom, kernel, flow.end, flow.hit.s, params)
            events.append(ev)
            if ev.glancing:
                return RayTrace(p0, segments, events,
                                Termination.GLANCING_UNRESOLVED), None
            if stop_at_interface:
                return RayTrace(p0, segments, events,
                                Termination.INTERFACE_CROSSED), None
            nxt = None
            if policy == "transmit":
                nxt = ev.outgoing("transmitted") or ev.outgoing("reflected")
            elif policy == "reflect":
                nxt = ev.outgoing("reflected")
            if nxt is None:
                return RayTrace(p0, segments, events,
                                Termination.GLANCING_UNRESOLVED), None
            current = nxt


def _trace_tree(geom, kernel, p0, budget, params, obs, counter):
    counter[0] += 1
    trace, _ = _trace_linear(geom, kernel, p0, budget, "reflect", params, obs,
                             stop_at_interface=True)
    node = RayTraceTree(trace=trace)
    if trace.terminated is not Termination.INTERFACE_CROSSED:
        return node
    ev = trace.events[-1]
    node.branch_event = ev
    if counter[0] >= budget.max_events:
        trace.terminated = Termination.MAX_EVENTS
        return node
    sub_budget = Budget(max_time=p0.t + budget.max_time - ev.t,
                        max_events=budget.max_events)
    for tag in ("reflected", "transmitted"):
        child = ev.outgoing(tag)
        if child is not None and counter[0] < budget.max_events:
            node.children.append(
                _trace_tree(geom, kernel, child, sub_budget, params, obs, counter))
    return node
