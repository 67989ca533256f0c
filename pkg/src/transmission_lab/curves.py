"""Closed parametrized curves with analytic normals and exact ray intersections.

All curves are parametrized counterclockwise by s in [0, 1). The curve family
is restricted to shapes whose intersection with a straight line is available in
closed form (circle, ellipse, polygon with circular corner fillets), so that
billiard steps introduce no root-finding error on straight flight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTangent, NonSimpleCurve

_TWO_PI = 2.0 * math.pi
_HIT_EPS = 1e-12


def _rot90(v):
    return np.array([-v[1], v[0]])


class Curve:
    """Base interface: point/tangent/normal/curvature by parameter, exact line hits."""

    orientation = "counterclockwise"
    smoothness_samples: int = 256

    # -- parametric data -------------------------------------------------
    def point(self, s):
        raise NotImplementedError

    def tangent(self, s):
        """d point / d s (not normalized)."""
        raise NotImplementedError

    def normal(self, s):
        """Outward unit normal (rotate the ccw tangent by -90 degrees)."""
        t = self.tangent(s)
        n = np.linalg.norm(t)
        if n < 1e-9:
            raise DegenerateTangent(f"tangent norm {n:.3e} at s={s}")
        return np.array([t[1], -t[0]]) / n

    def curvature(self, s):
        """Signed curvature; positive where the curve bends like a ccw circle."""
        raise NotImplementedError

    # -- implicit / metric queries ---------------------------------------
    def signed_distance(self, x):
        """Approximate signed distance, negative inside. Exact for circles."""
        raise NotImplementedError

    def contains(self, x):
        return self.signed_distance(x) < 0.0

    def param_of_point(self, x):
        """Parameter of a point assumed on (or very near) the curve."""
        raise NotImplementedError

    def ray_hits(self, origin, direction):
        """All intersections with the ray origin + t*direction, t > eps.

        Returns a list of (t, s) sorted by t. `direction` need not be unit.
        """
        raise NotImplementedError

    # -- bookkeeping -------------------------------------------------------
    def params(self, n):
        return np.arange(n) / n

    def bounding_box(self):
        s = self.params(4 * self.smoothness_samples)
        pts = np.array([self.point(si) for si in s])
        return pts.min(axis=0), pts.max(axis=0)

    @property
    def diameter(self):
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def validate(self):
        """Check closedness, simplicity and nondegenerate tangents at samples."""
        n = self.smoothness_samples
        p0 = self.point(0.0)
        p1 = self.point(1.0 - 1e-15)
        if np.linalg.norm(np.asarray(p0) - np.asarray(p1)) > 1e-9:
            raise NonSimpleCurve("curve is not closed")
        ss = self.params(n)
        pts = np.array([self.point(si) for si in ss])
        for si in ss:
            t = self.tangent(si)
            if np.linalg.norm(t) < 1e-9:
                raise DegenerateTangent(f"tangent degenerate at s={si}")
        _check_simple(pts)
        return self


def _check_simple(pts):
    """Pairwise segment intersection test on the sampled polygon."""
    n = len(pts)
    seg_a = pts
    seg_b = np.roll(pts, -1, axis=0)
    d = seg_b - seg_a
    for i in range(n):
        a, da = seg_a[i], d[i]
        # skip adjacent segments which share endpoints
        js = [j for j in range(i + 2, n) if not (i == 0 and j == n - 1)]
        if not js:
            continue
        b = seg_a[js]
        db = d[js]
        denom = da[0] * db[:, 1] - da[1] * db[:, 0]
        rel = b - a
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (rel[:, 0] * db[:, 1] - rel[:, 1] * db[:, 0]) / denom
            u = (rel[:, 0] * da[1] - rel[:, 1] * da[0]) / (-denom)
        crossing = (
            np.isfinite(t) & np.isfinite(u)
            & (t > 1e-12) & (t < 1 - 1e-12) & (u > 1e-12) & (u < 1 - 1e-12)
        )
        if np.any(crossing):
            raise NonSimpleCurve("sampled curve self-intersects")


@dataclass(frozen=True)
class Circle(Curve):
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0
    smoothness_samples: int = 256

    def point(self, s):
        a = _TWO_PI * s
        return np.array([self.center[0] + self.radius * math.cos(a),
                         self.center[1] + self.radius * math.sin(a)])

    def tangent(self, s):
        a = _TWO_PI * s
        r = self.radius * _TWO_PI
        return np.array([-r * math.sin(a), r * math.cos(a)])

    def normal(self, s):
        a = _TWO_PI * s
        return np.array([math.cos(a), math.sin(a)])

    def curvature(self, s):
        return 1.0 / self.radius

    def bounding_box(self):
        c = np.asarray(self.center, dtype=float)
        r = np.array([self.radius, self.radius])
        return c - r, c + r

    def signed_distance(self, x):
        return math.hypot(x[0] - self.center[0], x[1] - self.center[1]) - self.radius

    def param_of_point(self, x):
        a = math.atan2(x[1] - self.center[1], x[0] - self.center[0])
        return (a / _TWO_PI) % 1.0

    def ray_hits(self, origin, direction):
        ox = origin[0] - self.center[0]
        oy = origin[1] - self.center[1]
        dx, dy = direction[0], direction[1]
        a = dx * dx + dy * dy
        b = 2.0 * (ox * dx + oy * dy)
        c = ox * ox + oy * oy - self.radius * self.radius
        disc = b * b - 4.0 * a * c
        if disc < 0.0:
            return []
        sq = math.sqrt(disc)
        hits = []
        for t in ((-b - sq) / (2 * a), (-b + sq) / (2 * a)):
            if t > _HIT_EPS:
                p = (origin[0] + t * dx, origin[1] + t * dy)
                hits.append((t, self.param_of_point(p)))
        hits.sort()
        return hits


@dataclass(frozen=True)
class Ellipse(Curve):
    center: tuple[float, float] = (0.0, 0.0)
    a: float = 1.0
    b: float = 1.0
    smoothness_samples: int = 256

    def point(self, s):
        th = _TWO_PI * s
        return np.array([self.center[0] + self.a * math.cos(th),
                         self.center[1] + self.b * math.sin(th)])

    def tangent(self, s):
        th = _TWO_PI * s
        return np.array([-self.a * _TWO_PI * math.sin(th),
                         self.b * _TWO_PI * math.cos(th)])

    def normal(self, s):
        th = _TWO_PI * s
        v = np.array([self.b * math.cos(th), self.a * math.sin(th)])
        return v / np.linalg.norm(v)

    def curvature(self, s):
        th = _TWO_PI * s
        denom = (self.a ** 2 * math.sin(th) ** 2 + self.b ** 2 * math.cos(th) ** 2) ** 1.5
        return self.a * self.b / denom

    def bounding_box(self):
        c = np.asarray(self.center, dtype=float)
        r = np.array([self.a, self.b])
        return c - r, c + r

    def _implicit(self, x):
        u = (x[0] - self.center[0]) / self.a
        v = (x[1] - self.center[1]) / self.b
        return u * u + v * v - 1.0

    def signed_distance(self, x):
        # implicit value scaled by its gradient: first-order distance estimate
        u = (x[0] - self.center[0]) / self.a
        v = (x[1] - self.center[1]) / self.b
        f = u * u + v * v - 1.0
        g = 2.0 * math.hypot(u / self.a, v / self.b)
        if g < 1e-300:
            return -min(self.a, self.b)
        return f / g

    def param_of_point(self, x):
        th = math.atan2((x[1] - self.center[1]) / self.b,
                        (x[0] - self.center[0]) / self.a)
        return (th / _TWO_PI) % 1.0

    def ray_hits(self, origin, direction):
        ox = (origin[0] - self.center[0]) / self.a
        oy = (origin[1] - self.center[1]) / self.b
        dx = direction[0] / self.a
        dy = direction[1] / self.b
        qa = dx * dx + dy * dy
        qb = 2.0 * (ox * dx + oy * dy)
        qc = ox * ox + oy * oy - 1.0
        disc = qb * qb - 4.0 * qa * qc
        if disc < 0.0:
            return []
        sq = math.sqrt(disc)
        hits = []
        for t in ((-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)):
            if t > _HIT_EPS:
                p = (origin[0] + t * direction[0], origin[1] + t * direction[1])
                hits.append((t, self.param_of_point(p)))
        hits.sort()
        return hits


# ---------------------------------------------------------------------------
# Rounded polygon: straight edges joined by circular corner fillets (C^1).
# ---------------------------------------------------------------------------

@dataclass
class _Piece:
    kind: str                 # "segment" | "arc"
    length: float = 0.0
    # segment
    p0: np.ndarray | None = None
    p1: np.ndarray | None = None
    # arc
    center: np.ndarray | None = None
    radius: float = 0.0
    a0: float = 0.0           # start angle
    da: float = 0.0           # swept angle, sign = orientation
    s0: float = 0.0           # cumulative parameter offset
    s1: float = 0.0


@dataclass
class RoundedPolygon(Curve):
    """Polygon with every corner replaced by a tangent circular fillet.

    Vertices must be listed counterclockwise. Reflex corners are admissible and
    produce negatively curved (inward) fillets, which is how the non-convex
    test shapes are built.
    """

    vertices: list[tuple[float, float]]
    corner_radius: float = 0.1
    smoothness_samples: int = 256
    pieces: list[_Piece] = field(default_factory=list, repr=False)

    def __post_init__(self):
        self._build()

    def _build(self):
        vs = [np.asarray(v, dtype=float) for v in self.vertices]
        n = len(vs)
        if n < 3:
            raise NonSimpleCurve("need at least 3 vertices")
        r = self.corner_radius
        cut_pts = []   # per corner: (entry point, exit point, arc data)
        for i in range(n):
            prev, cur, nxt = vs[(i - 1) % n], vs[i], vs[(i + 1) % n]
            u = cur - prev
            w = nxt - cur
            lu, lw = np.linalg.norm(u), np.linalg.norm(w)
            u /= lu
            w /= lw
            cross = u[0] * w[1] - u[1] * w[0]
            dot = float(np.dot(u, w))
            turn = math.atan2(cross, dot)          # ccw turn angle at corner
            if abs(turn) < 1e-12:
                cut_pts.append((cur.copy(), cur.copy(), None))
                continue
            half = abs(turn) / 2.0
            cut = r * math.tan(half)
            if cut > 0.45 * min(lu, lw):
                raise NonSimpleCurve("corner radius too large for edge lengths")
            pa = cur - cut * u
            pb = cur + cut * w
            # fillet center lies along the inner bisector at distance r / cos(half)
            nrm_u = _rot90(u) * (1.0 if turn > 0 else -1.0)
            center = pa + r * nrm_u
            a0 = math.atan2(pa[1] - center[1], pa[0] - center[0])
            a1 = math.atan2(pb[1] - center[1], pb[0] - center[0])
            da = (a1 - a0) % _TWO_PI if turn > 0 else -((a0 - a1) % _TWO_PI)
            cut_pts.append((pa, pb, (center, r, a0, da)))

        pieces = []
        for i in range(n):
            pa_prev = cut_pts[i][1]                   # exit of corner i
            pb_next = cut_pts[(i + 1) % n][0]         # entry of corner i+1
            seg_len = float(np.linalg.norm(pb_next - pa_prev))
            if seg_len > 1e-14:
                pieces.append(_Piece("segment", seg_len, p0=pa_prev, p1=pb_next))
            arc = cut_pts[(i + 1) % n][2]
            if arc is not None:
                center, rr, a0, da = arc
                pieces.append(_Piece("arc", abs(da) * rr, center=center,
                                     radius=rr, a0=a0, da=da))
        total = sum(p.length for p in pieces)
        acc = 0.0
        for p in pieces:
            p.s0 = acc / total
            acc += p.length
            p.s1 = acc / total
        self.pieces = pieces
        self._total_length = total

    def _locate(self, s):
        s = s % 1.0
        for p in self.pieces:
            if p.s0 - 1e-15 <= s <= p.s1 + 1e-15:
                local = 0.0 if p.s1 == p.s0 else (s - p.s0) / (p.s1 - p.s0)
                return p, min(max(local, 0.0), 1.0)
        return self.pieces[-1], 1.0

    def point(self, s):
        p, u = self._locate(s)
        if p.kind == "segment":
            return p.p0 + u * (p.p1 - p.p0)
        a = p.a0 + u * p.da
        return p.center + p.radius * np.array([math.cos(a), math.sin(a)])

    def tangent(self, s):
        p, u = self._locate(s)
        if p.kind == "segment":
            return (p.p1 - p.p0) / (p.s1 - p.s0)
        a = p.a0 + u * p.da
        dir_ = np.array([-math.sin(a), math.cos(a)]) * (1.0 if p.da > 0 else -1.0)
        return dir_ * p.length / (p.s1 - p.s0)

    def curvature(self, s):
        p, _ = self._locate(s)
        if p.kind == "segment":
            return 0.0
        return (1.0 if p.da > 0 else -1.0) / p.radius

    def signed_distance(self, x):
        x = np.asarray(x, dtype=float)
        best = math.inf
        for p in self.pieces:
            if p.kind == "segment":
                d = p.p1 - p.p0
                t = float(np.dot(x - p.p0, d) / np.dot(d, d))
                t = min(max(t, 0.0), 1.0)
                best = min(best, float(np.linalg.norm(x - (p.p0 + t * d))))
            else:
                v = x - p.center
                ang = math.atan2(v[1], v[0])
                rel = (ang - p.a0) % _TWO_PI if p.da > 0 else (p.a0 - ang) % _TWO_PI
                if rel <= abs(p.da):
                    best = min(best, abs(float(np.linalg.norm(v)) - p.radius))
                else:
                    for a in (p.a0, p.a0 + p.da):
                        q = p.center + p.radius * np.array([math.cos(a), math.sin(a)])
                        best = min(best, float(np.linalg.norm(x - q)))
        return -best if self._winding_contains(x) else best

    def _winding_contains(self, x):
        # crossing count against the sampled polygon; samples are dense enough
        # for containment queries away from the boundary itself
        n = 4 * self.smoothness_samples
        pts = np.array([self.point(s) for s in self.params(n)])
        px, py = pts[:, 0], pts[:, 1]
        qx, qy = np.roll(px, -1), np.roll(py, -1)
        cond = (py > x[1]) != (qy > x[1])
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = px + (x[1] - py) * (qx - px) / (qy - py)
        return bool(np.sum(cond & (xint > x[0])) % 2)

    def bounding_box(self):
        los, his = [], []
        for p in self.pieces:
            if p.kind == "segment":
                los.append(np.minimum(p.p0, p.p1))
                his.append(np.maximum(p.p0, p.p1))
            else:
                los.append(p.center - p.radius)
                his.append(p.center + p.radius)
        return np.min(los, axis=0), np.max(his, axis=0)

    def param_of_point(self, x):
        x = np.asarray(x, dtype=float)
        best, best_s = math.inf, 0.0
        for p in self.pieces:
            if p.kind == "segment":
                d = p.p1 - p.p0
                t = float(np.dot(x - p.p0, d) / np.dot(d, d))
                t = min(max(t, 0.0), 1.0)
                q = p.p0 + t * d
                dist = float(np.linalg.norm(x - q))
                s = p.s0 + t * (p.s1 - p.s0)
            else:
                v = x - p.center
                ang = math.atan2(v[1], v[0])
                rel = (ang - p.a0) % _TWO_PI if p.da > 0 else (p.a0 - ang) % _TWO_PI
                rel = min(rel, abs(p.da))
                a = p.a0 + rel * (1.0 if p.da > 0 else -1.0)
                q = p.center + p.radius * np.array([math.cos(a), math.sin(a)])
                dist = float(np.linalg.norm(x - q))
                s = p.s0 + (rel / abs(p.da)) * (p.s1 - p.s0)
            if dist < best:
                best, best_s = dist, s
        return best_s % 1.0

    def ray_hits(self, origin, direction):
        ox, oy = float(origin[0]), float(origin[1])
        dx, dy = float(direction[0]), float(direction[1])
        hits = []
        for p in self.pieces:
            if p.kind == "segment":
                ex, ey = p.p1[0] - p.p0[0], p.p1[1] - p.p0[1]
                denom = dx * ey - dy * ex
                if abs(denom) < 1e-300:
                    continue
                rx, ry = p.p0[0] - ox, p.p0[1] - oy
                t = (rx * ey - ry * ex) / denom
                u = (rx * dy - ry * dx) / denom
                if t > _HIT_EPS and -1e-12 <= u <= 1 + 1e-12:
                    s = p.s0 + min(max(u, 0.0), 1.0) * (p.s1 - p.s0)
                    hits.append((t, s))
            else:
                cx, cy = p.center
                qa = dx * dx + dy * dy
                qb = 2.0 * ((ox - cx) * dx + (oy - cy) * dy)
                qc = (ox - cx) ** 2 + (oy - cy) ** 2 - p.radius ** 2
                disc = qb * qb - 4 * qa * qc
                if disc < 0:
                    continue
                sq = math.sqrt(disc)
                for t in ((-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)):
                    if t <= _HIT_EPS:
                        continue
                    hx, hy = ox + t * dx, oy + t * dy
                    ang = math.atan2(hy - cy, hx - cx)
                    rel = (ang - p.a0) % _TWO_PI if p.da > 0 else (p.a0 - ang) % _TWO_PI
                    if rel <= abs(p.da) + 1e-12:
                        frac = min(rel / abs(p.da), 1.0)
                        hits.append((t, p.s0 + frac * (p.s1 - p.s0)))
        hits.sort()
        return hits


def make_curve(kind, **kw):
    """Factory for the descriptor-driven builders."""
    kind = kind.lower()
    if kind == "circle":
        return Circle(center=tuple(kw.get("center", (0.0, 0.0))),
                      radius=float(kw["radius"]),
                      smoothness_samples=int(kw.get("smoothness_samples", 256)))
    if kind == "ellipse":
        return Ellipse(center=tuple(kw.get("center", (0.0, 0.0))),
                       a=float(kw["a"]), b=float(kw["b"]),
                       smoothness_samples=int(kw.get("smoothness_samples", 256)))
    if kind in ("rounded_polygon", "polygon"):
        return RoundedPolygon(vertices=[tuple(v) for v in kw["vertices"]],
                              corner_radius=float(kw.get("corner_radius", 0.1)),
                              smoothness_samples=int(kw.get("smoothness_samples", 256)))
    raise ValueError(f"unknown curve kind '{kind}'")
