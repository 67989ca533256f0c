"""Prony relaxation kernels and the boundary memory operator.

The kernel g(s) = sum_j a_j exp(-s / tau_j) with a_j >= 0, tau_j > 0 is
positive and nonincreasing by construction, its mass k0 = int_0^inf g equals
sum_j a_j tau_j in closed form, and the damping-rate comparison
g(s) <= -c g'(s) holds term-wise with c = max_j tau_j. Restricting to finite
Prony sums therefore removes all quadrature error from the kernel constants.

The boundary operator G convolves a trace on the interface against g in time,
scaled by b at the boundary point. Under the standing separation assumption b
vanishes on the interface and G is identically zero; the operator is exposed
for diagnostics on relaxed geometries where the support touches the interface,
in which case I - G is inverted by its Neumann series (the operator norm is
bounded by ||g||_L1 * ||b||_inf < 1, which is exactly the contraction that
makes the series converge).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyKernel,
    NegativeAmplitude,
    NonpositiveRelaxationTime,
    NonuniformTimeGrid,
    NotAContraction,
)


@dataclass(frozen=True)
class MemoryKernel:
    amplitudes: tuple[float, ...]
    relaxation_times: tuple[float, ...]

    @property
    def k0(self):
        """Total kernel mass: int_0^inf g(s) ds, exact."""
        return float(sum(a * t for a, t in zip(self.amplitudes, self.relaxation_times)))

    @property
    def c_bound(self):
        """Smallest c with g <= -c g' for all s (max relaxation time)."""
        return float(max(self.relaxation_times))

    def g(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for a, t in zip(self.amplitudes, self.relaxation_times):
            out = out + a * np.exp(-s / t)
        return out if out.ndim else float(out)

    def g_prime(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for a, t in zip(self.amplitudes, self.relaxation_times):
            out = out - (a / t) * np.exp(-s / t)
        return out if out.ndim else float(out)

    @property
    def terms(self):
        return list(zip(self.amplitudes, self.relaxation_times))


def build_kernel(terms):
    """Validate (amplitude, relaxation time) pairs into a MemoryKernel."""
    terms = [(float(a), float(t)) for a, t in terms]
    if not terms:
        raise EmptyKernel("no Prony terms")
    for a, t in terms:
        if a < 0:
            raise NegativeAmplitude(f"amplitude {a} < 0")
        if t <= 0:
            raise NonpositiveRelaxationTime(f"relaxation time {t} <= 0")
    if all(a == 0.0 for a, _ in terms):
        raise EmptyKernel("all amplitudes vanish; kernel must be positive")
    return MemoryKernel(tuple(a for a, _ in terms), tuple(t for _, t in terms))


@dataclass(frozen=True)
class KernelGeometryCompat:
    l: float                    # 1 - k0 * ||b||_inf
    contraction_bound: float    # k0 * ||b||_{L^inf(interface)}
    speed_bound_ok: bool        # k1 (1 - k0 b) <= k2 everywhere
    valid: bool
    notes: str = ""


def check_compat(kernel, geom):
    """Positivity of the effective stiffness and the interface contraction bound.

    ||b||_inf is the declared bump plateau (exact); the interface restriction
    is sampled on the inner curve and is zero whenever the support separation
    holds.
    """
    k0 = kernel.k0
    bmax = geom.damping.max_value
    l = 1.0 - k0 * bmax
    contraction = k0 * geom.b_max_on_interface()
    # with 1 - k0 b <= 1 the standing bound k1(1 - k0 b) <= k2 reduces to k1 <= k2
    speed_ok = geom.k1 <= geom.k2
    valid = l > 0.0
    notes = "" if valid else f"effective stiffness 1 - k0*max(b) = {l:.6g} <= 0"
    return KernelGeometryCompat(l=l, contraction_bound=contraction,
                                speed_bound_ok=speed_ok, valid=valid, notes=notes)


# ---------------------------------------------------------------------------
# Boundary traces and the memory operator G
# ---------------------------------------------------------------------------

@dataclass
class BoundaryTrace:
    """Samples on a uniform time grid at fixed interface parameters.

    values[i, j] is the trace at time times[i] and interface parameter
    params[j].
    """

    times: np.ndarray
    params: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.params = np.asarray(self.params, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.times), len(self.params)):
            raise ValueError("values must have shape (n_times, n_params)")

    @property
    def dt(self):
        d = np.diff(self.times)
        if len(d) == 0:
            raise NonuniformTimeGrid("need at least two time samples")
        dt = float(d[0])
        if np.max(np.abs(d - dt)) > 1e-9 * max(dt, 1.0):
            raise NonuniformTimeGrid("time grid is not uniform")
        return dt

    def norm(self):
        return float(math.sqrt(self.dt) * np.linalg.norm(self.values))

    def to_csv(self, path):
        with open(path, "w") as f:
            f.write("t,param,value\n")
            for i, t in enumerate(self.times):
                for j, p in enumerate(self.params):
                    f.write(f"{float(t)!r},{float(p)!r},"
                            f"{float(self.values[i, j])!r}\n")


def _interface_b(geom, params):
    pts = np.array([geom.inner.point(s) for s in params])
    return geom.damping.value_grid(pts[:, 0], pts[:, 1])


def apply_G(kernel, geom, trace):
    """Causal time-convolution against g, scaled by b at each boundary point.

    Trapezoidal quadrature on the time grid; g is extended by zero to negative
    arguments. With b = 0 on the interface the output vanishes identically.
    """
    dt = trace.dt
    nt = len(trace.times)
    gv = kernel.g(np.arange(nt) * dt)
    out = np.empty_like(trace.values)
    for j in range(trace.values.shape[1]):
        full = np.convolve(gv, trace.values[:, j])[:nt]
        # trapezoid endpoint correction on [t_0, t_n]
        full -= 0.5 * gv[0] * trace.values[:, j]
        full -= 0.5 * gv * trace.values[0, j]
        out[:, j] = dt * full
    b = _interface_b(geom, trace.params)
    out *= b[None, :]
    return BoundaryTrace(trace.times.copy(), trace.params.copy(), out)


def _apply_G_adjoint(kernel, geom, trace):
    """Adjoint in the dt-weighted l2 inner product (anticausal correlation)."""
    dt = trace.dt
    nt = len(trace.times)
    gv = kernel.g(np.arange(nt) * dt)
    b = _interface_b(geom, trace.params)
    vals = trace.values * b[None, :]
    out = np.empty_like(vals)
    for j in range(vals.shape[1]):
        v = vals[:, j]
        full = np.convolve(gv, v[::-1])[:nt][::-1]
        full -= 0.5 * gv[0] * v
        full -= 0.5 * np.flip(gv) * v[-1]
        out[:, j] = dt * full
    return BoundaryTrace(trace.times.copy(), trace.params.copy(), out)


def contraction_bound(kernel, geom):
    """The Young-inequality bound ||G|| <= k0 * ||b||_{L^inf(interface)}."""
    return kernel.k0 * geom.b_max_on_interface()


def invert_I_minus_G(kernel, geom, trace, rel_tol=1e-11, max_terms=20000):
    """Neumann-series solve of (I - G) x = y; returns (x, n_terms).

    Requires the contraction bound to be < 1 (raises NotAContraction
    otherwise). Terms are accumulated until the latest one falls below
    rel_tol * ||y||, which bounds the residual ||(I-G)x - y|| by the same
    quantity times the bound.
    """
    q = contraction_bound(kernel, geom)
    if q >= 1.0:
        raise NotAContraction(f"k0 * ||b||_interface = {q:.6g} >= 1")
    y_norm = trace.norm()
    x = trace.values.copy()
    term = trace
    n_terms = 1
    if y_norm == 0.0:
        return BoundaryTrace(trace.times.copy(), trace.params.copy(), x), n_terms
    while n_terms < max_terms:
        term = apply_G(kernel, geom, term)
        tn = term.norm()
        x += term.values
        n_terms += 1
        if tn <= rel_tol * y_norm:
            break
    return BoundaryTrace(trace.times.copy(), trace.params.copy(), x), n_terms


def estimate_G_norm(kernel, geom, n_times, n_params, t_span, n_iter=30, seed=0):
    """Power iteration on G*G over random traces: discrete operator norm."""
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, t_span, n_times)
    params = np.arange(n_params) / n_params
    v = BoundaryTrace(times, params, rng.standard_normal((n_times, n_params)))
    sigma = 0.0
    for _ in range(n_iter):
        nv = v.norm()
        if nv == 0.0:
            return 0.0
        v.values /= nv
        gv = apply_G(kernel, geom, v)
        sigma = gv.norm()
        v = _apply_G_adjoint(kernel, geom, gv)
    return sigma
