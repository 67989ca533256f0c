"""Smooth compactly supported damping coefficients b(x) with exact gradients.

Every field is a radially layered bump about a center point, optionally cut to
an angular sector by a smooth window:

    b(x) = plateau * ramp_rad(|x - c|) * ramp_ang(angle(x - c))

The radial ramp is zero up to ``r0``, rises smoothly on [r0, r1], holds 1 on
[r1, r2] and falls back to zero on [r2, r3]. ``r2 = r3 = None`` lets the
plateau extend outward indefinitely (a shell hugging the outer boundary).
Profiles: quintic smoothstep (C^2, polynomial) or a C-infinity mollifier ramp.
Both give closed-form gradients, so the ray Hamiltonian and the solver see the
same exact field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_TWO_PI = 2.0 * math.pi


def _smoothstep(u):
    return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))


def _smoothstep_d(u):
    return 30.0 * u * u * (1.0 - u) ** 2


def _moll(u):
    return math.exp(-1.0 / u) if u > 0.0 else 0.0


def _moll_ramp(u):
    a = _moll(u)
    b = _moll(1.0 - u)
    return a / (a + b)


def _moll_ramp_d(u):
    if u <= 0.0 or u >= 1.0:
        return 0.0
    a = _moll(u)
    b = _moll(1.0 - u)
    da = a / (u * u)
    db = -b / ((1.0 - u) ** 2)
    s = a + b
    return (da * s - a * (da + db)) / (s * s)


def _ramp(u, profile):
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    return _smoothstep(u) if profile == "quintic" else _moll_ramp(u)


def _ramp_d(u, profile):
    if u <= 0.0 or u >= 1.0:
        return 0.0
    return _smoothstep_d(u) if profile == "quintic" else _moll_ramp_d(u)


@dataclass(frozen=True)
class DampingField:
    """Radial (optionally sector) bump with declared plateau maximum."""

    center: tuple[float, float] = (0.0, 0.0)
    plateau: float = 1.0
    r0: float = 0.0            # support starts here (0 for a disk bump)
    r1: float = 0.0            # plateau starts here
    r2: float | None = None    # plateau ends here (None: extends outward)
    r3: float | None = None    # support ends here (None: extends outward)
    # angular sector window, in radians about `angle_center`; None = full shell
    angle_center: float = 0.0
    angle_plateau_half: float | None = None
    angle_support_half: float | None = None
    profile: str = "quintic"

    def __post_init__(self):
        if self.plateau < 0:
            raise ValueError("plateau must be nonnegative")
        if (self.r2 is None) != (self.r3 is None):
            raise ValueError("r2 and r3 must both be set or both be None")
        if (self.angle_plateau_half is None) != (self.angle_support_half is None):
            raise ValueError("angular plateau/support must both be set or unset")
        if self.r1 < self.r0:
            raise ValueError("need r1 >= r0")
        if self.r2 is not None and not (self.r0 <= self.r1 <= self.r2 <= self.r3):
            raise ValueError("need r0 <= r1 <= r2 <= r3")

    # -- structure ---------------------------------------------------------
    @property
    def is_zero(self):
        return self.plateau == 0.0

    @property
    def max_value(self):
        """Declared sup of b (exact, from the plateau)."""
        return self.plateau

    @property
    def support_outer_radius(self):
        return math.inf if self.r3 is None else self.r3

    @property
    def is_sector(self):
        return self.angle_support_half is not None

    def _rad_ramp(self, r):
        if self.r1 > self.r0 and r < self.r1:
            if r <= self.r0:
                return 0.0, 0.0
            w = self.r1 - self.r0
            u = (r - self.r0) / w
            return _ramp(u, self.profile), _ramp_d(u, self.profile) / w
        if self.r3 is not None and r > self.r2:
            if r >= self.r3:
                return 0.0, 0.0
            w = self.r3 - self.r2
            u = (self.r3 - r) / w
            return _ramp(u, self.profile), -_ramp_d(u, self.profile) / w
        return 1.0, 0.0

    def _ang_ramp(self, psi):
        """Window in the wrapped angle offset psi (|psi| <= pi)."""
        if self.angle_support_half is None:
            return 1.0, 0.0
        apl, asup = self.angle_plateau_half, self.angle_support_half
        a = abs(psi)
        if a <= apl:
            return 1.0, 0.0
        if a >= asup:
            return 0.0, 0.0
        w = asup - apl
        u = (asup - a) / w
        val = _ramp(u, self.profile)
        dval = -_ramp_d(u, self.profile) / w * math.copysign(1.0, psi)
        return val, dval

    # -- evaluation ----------------------------------------------------------
    def value_and_gradient(self, x, y):
        """Scalar fast path: returns (b, db/dx, db/dy)."""
        if self.plateau == 0.0:
            return 0.0, 0.0, 0.0
        dx = x - self.center[0]
        dy = y - self.center[1]
        r = math.hypot(dx, dy)
        fr, dfr = self._rad_ramp(r)
        if fr == 0.0 and dfr == 0.0:
            return 0.0, 0.0, 0.0
        if self.angle_support_half is None:
            if r < 1e-300:
                return self.plateau * fr, 0.0, 0.0
            g = self.plateau * dfr / r
            return self.plateau * fr, g * dx, g * dy
        psi = math.atan2(dy, dx) - self.angle_center
        psi = (psi + math.pi) % _TWO_PI - math.pi
        fa, dfa = self._ang_ramp(psi)
        if fa == 0.0 and dfa == 0.0:
            return 0.0, 0.0, 0.0
        val = self.plateau * fr * fa
        if r < 1e-300:
            return val, 0.0, 0.0
        # grad = plateau * (dfr * fa * rhat + fr * dfa / r * phihat)
        cr = self.plateau * dfr * fa / r
        cp = self.plateau * fr * dfa / (r * r)
        gx = cr * dx + cp * (-dy)
        gy = cr * dy + cp * dx
        return val, gx, gy

    def __call__(self, x, y):
        return self.value_and_gradient(x, y)[0]

    def value_grid(self, X, Y):
        """Vectorized b over coordinate arrays."""
        if self.plateau == 0.0:
            return np.zeros_like(np.asarray(X, dtype=float))
        dx = np.asarray(X, dtype=float) - self.center[0]
        dy = np.asarray(Y, dtype=float) - self.center[1]
        r = np.hypot(dx, dy)
        fr = self._rad_ramp_vec(r)
        if self.angle_support_half is None:
            return self.plateau * fr
        psi = np.arctan2(dy, dx) - self.angle_center
        psi = (psi + math.pi) % _TWO_PI - math.pi
        fa = self._ang_ramp_vec(psi)
        return self.plateau * fr * fa

    def _rad_ramp_vec(self, r):
        out = np.ones_like(r)
        if self.r1 > self.r0:
            w = self.r1 - self.r0
            u = np.clip((r - self.r0) / w, 0.0, 1.0)
            rising = self._ramp_vec(u)
            out = np.where(r < self.r1, rising, out)
        else:
            out = np.where(r < self.r0, 0.0, out)
        if self.r3 is not None:
            w = self.r3 - self.r2
            u = np.clip((self.r3 - r) / w, 0.0, 1.0)
            falling = self._ramp_vec(u)
            out = np.where(r > self.r2, falling, out)
        return out

    def _ang_ramp_vec(self, psi):
        apl, asup = self.angle_plateau_half, self.angle_support_half
        a = np.abs(psi)
        w = asup - apl
        u = np.clip((asup - a) / w, 0.0, 1.0)
        out = self._ramp_vec(u)
        return np.where(a <= apl, 1.0, out)

    def _ramp_vec(self, u):
        if self.profile == "quintic":
            return u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
        with np.errstate(divide="ignore", over="ignore"):
            fa = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
            fb = np.where(u < 1, np.exp(-1.0 / np.maximum(1.0 - u, 1e-300)), 0.0)
        return fa / (fa + fb)

    # -- support geometry ------------------------------------------------------
    def support_boundary_points(self, n=512):
        """Sampled boundary of the support set, for separation checks."""
        if self.is_zero:
            return np.zeros((0, 2))
        cx, cy = self.center
        pts = []
        if self.angle_support_half is None:
            angs = np.linspace(0.0, _TWO_PI, n, endpoint=False)
        else:
            angs = self.angle_center + np.linspace(
                -self.angle_support_half, self.angle_support_half, n)
        if self.r0 > 0:
            pts.append(np.c_[cx + self.r0 * np.cos(angs), cy + self.r0 * np.sin(angs)])
        if self.r3 is not None:
            pts.append(np.c_[cx + self.r3 * np.cos(angs), cy + self.r3 * np.sin(angs)])
        if self.angle_support_half is not None:
            rmax = self.r3 if self.r3 is not None else 10.0 * max(1.0, self.r1)
            rr = np.linspace(self.r0, rmax, n // 4)
            for side in (-1.0, 1.0):
                a = self.angle_center + side * self.angle_support_half
                pts.append(np.c_[cx + rr * np.cos(a), cy + rr * np.sin(a)])
        if not pts:
            return np.zeros((0, 2))
        return np.vstack(pts)

    def distance_to_support(self, points):
        """Distance from each query point to the support set (0 if inside)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.is_zero:
            return np.full(len(points), np.inf)
        bnd = self.support_boundary_points()
        d_bnd = np.min(
            np.hypot(points[:, 0, None] - bnd[None, :, 0],
                     points[:, 1, None] - bnd[None, :, 1]), axis=1)
        inside = self.value_grid(points[:, 0], points[:, 1]) > 0.0
        # points strictly inside the open support have distance zero; for points
        # in the closed-support shell where b == 0 the boundary distance is ~0
        d = np.where(inside, 0.0, d_bnd)
        return d


def zero_damping():
    return DampingField(plateau=0.0, r0=0.0, r1=0.0, r2=0.0, r3=0.0)


def make_damping(kind="radial", **kw):
    kind = kind.lower()
    if kind in ("zero", "none"):
        return zero_damping()
    if kind in ("radial", "shell", "disk", "sector"):
        deg = math.pi / 180.0
        ang_pl = kw.get("angle_plateau_half_deg")
        ang_sup = kw.get("angle_support_half_deg")
        return DampingField(
            center=tuple(kw.get("center", (0.0, 0.0))),
            plateau=float(kw.get("plateau", 1.0)),
            r0=float(kw.get("r0", 0.0)),
            r1=float(kw.get("r1", 0.0)),
            r2=(None if kw.get("r2") is None else float(kw["r2"])),
            r3=(None if kw.get("r3") is None else float(kw["r3"])),
            angle_center=float(kw.get("angle_center_deg", 0.0)) * deg,
            angle_plateau_half=(None if ang_pl is None else float(ang_pl) * deg),
            angle_support_half=(None if ang_sup is None else float(ang_sup) * deg),
            profile=str(kw.get("profile", "quintic")),
        )
    raise ValueError(f"unknown damping kind '{kind}'")
