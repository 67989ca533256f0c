"""Spatial setup: outer domain, inclusion, wave speeds, and the damping bump.

The domain is an annular region between two smooth closed curves: `outer`
bounds the whole domain and `inner` bounds the inclusion where the second
medium lives. The damping coefficient b is a smooth compactly supported bump
living in the annulus; its support must keep a positive distance from the
interface (relaxed only for boundary-operator diagnostics).
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .curves import Curve, make_curve
from .damping import DampingField, make_damping, zero_damping
from .errors import (
    InnerNotContained,
    NonPositiveSpeeds,
    PointOutsideDomain,
    SupportTouchesInterface,
)

BOUNDARY_TOL = 1e-9


class Region(enum.Enum):
    OMEGA1 = "omega1"
    OMEGA2 = "omega2"
    ON_INTERFACE = "on_interface"
    ON_OUTER = "on_outer"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class ConvexityReport:
    outer_convex: bool
    inner_convex: bool
    min_curvature_outer: float
    min_curvature_inner: float

    @property
    def strictly_convex(self):
        return self.min_curvature_outer > 1e-10 and self.min_curvature_inner > 1e-10


@dataclass(frozen=True)
class Geometry:
    outer: Curve
    inner: Curve
    k1: float
    k2: float
    damping: DampingField
    separation: float = field(default=math.inf)   # dist(supp b, interface)

    # -- bulk queries -------------------------------------------------------
    def classify(self, x):
        """Locate a point with a 1e-9 distance tolerance on both boundaries."""
        d_out = self.outer.signed_distance(x)
        if abs(d_out) <= BOUNDARY_TOL:
            return Region.ON_OUTER
        if d_out > 0:
            return Region.OUTSIDE
        d_in = self.inner.signed_distance(x)
        if abs(d_in) <= BOUNDARY_TOL:
            return Region.ON_INTERFACE
        return Region.OMEGA2 if d_in < 0 else Region.OMEGA1

    def eval_b(self, x):
        """(value, gradient) of the damping bump at a point of closure(Omega1)."""
        region = self.classify(x)
        if region in (Region.OUTSIDE, Region.OMEGA2):
            raise PointOutsideDomain(f"{tuple(x)} not in closure of the annulus")
        v, gx, gy = self.damping.value_and_gradient(x[0], x[1])
        return v, np.array([gx, gy])

    def normal_at(self, which, s):
        """Outward unit normal of 'outer' or 'inner' at parameter s."""
        curve = self.outer if which == "outer" else self.inner
        return curve.normal(s)

    def convexity_report(self, n=None):
        rep = {}
        for name, curve in (("outer", self.outer), ("inner", self.inner)):
            m = n or 4 * curve.smoothness_samples
            kmin = min(curve.curvature(s) for s in curve.params(m))
            rep[name] = (kmin >= -1e-10, kmin)
        return ConvexityReport(rep["outer"][0], rep["inner"][0],
                               rep["outer"][1], rep["inner"][1])

    # -- derived scalars --------------------------------------------------------
    @property
    def speeds_ordered(self):
        """The two-speed ordering k2 > k1 assumed by the decay analysis."""
        return self.k2 > self.k1

    @functools.cached_property
    def diameter(self):
        lo, hi = self.outer.bounding_box()
        return float(np.linalg.norm(np.asarray(hi) - np.asarray(lo)))

    def bounding_box(self):
        return self.outer.bounding_box()

    def b_max_on_interface(self, n=512):
        pts = np.array([self.inner.point(s) for s in self.inner.params(n)])
        return float(np.max(self.damping.value_grid(pts[:, 0], pts[:, 1])))


def build_geometry(spec, *, relaxed_interface_separation=False):
    """Construct and validate a Geometry from a nested descriptor mapping.

    Descriptor layout (all lengths dimensionless)::

        outer   = {kind="circle", center=[0,0], radius=1.0}
        inner   = {kind="circle", center=[0,0], radius=0.3}
        k1, k2  = positive floats
        damping = {kind="radial", plateau=1.0, r0=0.45, r1=0.55, ...}

    Raises the specific validation error for each broken invariant. The
    ordering of the two speeds (k2 > k1) is a decay hypothesis, reported by
    the geometric checker rather than enforced here, so that equal-speed and
    reversed-speed control experiments remain constructible.
    """
    outer = _as_curve(spec["outer"]).validate()
    inner = _as_curve(spec["inner"]).validate()

    k1 = float(spec.get("k1", 1.0))
    k2 = float(spec.get("k2", 1.0))
    if k1 <= 0 or k2 <= 0:
        raise NonPositiveSpeeds(f"k1={k1}, k2={k2}")

    damping = _as_damping(spec.get("damping"))

    # inner curve strictly inside the outer region
    for s in inner.params(inner.smoothness_samples):
        p = inner.point(s)
        if outer.signed_distance(p) >= -BOUNDARY_TOL:
            raise InnerNotContained(f"inner point {tuple(p)} not strictly inside outer")

    # interface separation of the damping support
    if damping.is_zero:
        separation = math.inf
    else:
        pts = np.array([inner.point(s) for s in inner.params(512)])
        separation = float(np.min(damping.distance_to_support(pts)))
        if separation <= BOUNDARY_TOL and not relaxed_interface_separation:
            raise SupportTouchesInterface(
                f"dist(supp b, interface) = {separation:.3e}")

    return Geometry(outer=outer, inner=inner, k1=k1, k2=k2,
                    damping=damping, separation=separation)


def _as_curve(section):
    if isinstance(section, Curve):
        return section
    kw = dict(section)
    kind = kw.pop("kind")
    return make_curve(kind, **kw)


def _as_damping(section):
    if section is None:
        return zero_damping()
    if isinstance(section, DampingField):
        return section
    kw = dict(section)
    kind = kw.pop("kind", "radial")
    return make_damping(kind, **kw)
