"""Time-domain solver for the autonomous memory system on a Cartesian grid.

One conservative displacement field w lives on grid nodes over the bounding
box of the domain, with piecewise coefficient c(x) = k1 (1 - k0 b(x)) on the
annulus and k2 on the inclusion. The divergence-form 5-point stencil with
harmonic-mean face coefficients enforces the transmission coupling (continuity
of w and of the flux c dw/dn) weakly; homogeneous Dirichlet holds on all nodes
outside the domain (staircase boundary, first order near the rim).

The history field eta(x, t, s) is stored on a uniform s-grid over the damping
patch and advanced by first-order upwind transport in s with inflow
eta(s=0) = 0 and source w_t:

    eta_k^{n+1} = eta_k^n + (w^{n+1} - w^n) - (dt/ds)(eta_k^n - eta_{k-1}^n).

w advances by explicit leapfrog,

    w^{n+2} = 2 w^{n+1} - w^n + dt^2 [ div(c grad w^{n+1}) + k1 div(b Psi) ],

where Psi = sum_k q_k g(s_k) grad eta_k is the s-quadrature of the memory
flux. Startup uses one Taylor half-step with the PDE right side at t = 0.

Energies are recorded at half steps with the staggered quadratic form that
leapfrog conserves exactly in the undamped limit:

    E^{n+1/2} = 1/2 ||(w^{n+1}-w^n)/dt||^2 + 1/2 a_c(w^n, w^{n+1})
              + (k1/2) sum_k q_k g(s_k) a_b(eta_k^n, eta_k^{n+1}),

with a_c, a_b the face-coefficient Dirichlet forms. The damping functional
D(0,T) accumulates k1 * int (-g') a_b(eta, eta) by trapezoid over the recorded
instants, and the identity residual compares increments of E against
(k1/2) int int g' a_b(eta, eta) = -D/2 over each recorded interval.

Note on the energy normalization: the memory term carries the factor k1/2 (not
k1); this is the unique normalization under which the energy identity holds
exactly at the continuous level, and the residual then measures pure
discretization error (first order in dt and ds).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CflViolation,
    GridSpecError,
    InterfaceMismatch,
    NanDetected,
)


@dataclass(frozen=True)
class GridSpec:
    nx: int
    ny: int
    t_end: float
    s_max: float = 10.0
    ns: int = 32
    dt: float | None = None
    cfl_safety: float = 0.5
    record_every: int | None = None   # steps between energy records

    def validated_against(self, kernel):
        if kernel is not None and self.s_max < 10.0 * kernel.c_bound - 1e-12:
            raise GridSpecError(
                f"s_max={self.s_max} < 10 * max relaxation time "
                f"({10 * kernel.c_bound}); kernel tail not negligible")
        return self


class DiscreteModel:
    """Grid geometry, face coefficients and the memory patch for one scenario."""

    def __init__(self):
        self.geom = None
        self.kernel = None
        self.grid = None
        self.periodic_y = False

    # -- construction -----------------------------------------------------
    @classmethod
    def from_geometry(cls, geom, kernel, grid):
        grid.validated_against(kernel)
        m = cls()
        m.geom, m.kernel, m.grid = geom, kernel, grid
        (xmin, ymin), (xmax, ymax) = geom.bounding_box()
        m.x = np.linspace(xmin, xmax, grid.nx + 1)
        m.y = np.linspace(ymin, ymax, grid.ny + 1)
        m.dx = float(m.x[1] - m.x[0])
        m.dy = float(m.y[1] - m.y[0])
        X, Y = np.meshgrid(m.x, m.y, indexing="ij")
        m.X, m.Y = X, Y
        m.mask = _sd_grid(geom.outer, X, Y) < -1e-12
        m.region2 = _sd_grid(geom.inner, X, Y) < 0.0
        m.k1 = geom.k1
        k0 = kernel.k0
        b_node = geom.damping.value_grid(X, Y)
        c_node = np.where(m.region2, geom.k2, geom.k1 * (1.0 - k0 * b_node))
        m.c_node = c_node
        m.cfx = _harmonic(c_node[:-1, :], c_node[1:, :])
        m.cfy = _harmonic(c_node[:, :-1], c_node[:, 1:])
        m._set_dt(max(geom.k1, geom.k2))
        m._build_patch(b_node)
        m._scales()
        return m

    @classmethod
    def make_strip(cls, nx, ny, lx, ly, c_profile, dt=None, cfl_safety=0.5,
                   t_end=1.0):
        """Quasi-1-D strip: Dirichlet ends in x, periodic in y, no memory.

        c_profile maps x to the stiffness coefficient (piecewise constant for
        interface experiments).
        """
        m = cls()
        m.grid = GridSpec(nx=nx, ny=ny, t_end=t_end, ns=1, s_max=10.0, dt=dt,
                          cfl_safety=cfl_safety)
        m.periodic_y = True
        m.x = np.linspace(0.0, lx, nx + 1)
        m.y = np.linspace(0.0, ly, ny, endpoint=False)
        m.dx = float(m.x[1] - m.x[0])
        m.dy = float(ly / ny)
        X, Y = np.meshgrid(m.x, m.y, indexing="ij")
        m.X, m.Y = X, Y
        m.mask = np.ones_like(X, dtype=bool)
        m.mask[0, :] = False
        m.mask[-1, :] = False
        m.region2 = np.zeros_like(m.mask)
        c_node = np.asarray(c_profile(X), dtype=float)
        m.c_node = c_node
        m.k1 = 1.0
        m.cfx = _harmonic(c_node[:-1, :], c_node[1:, :])
        m.cfy = _harmonic(c_node, np.roll(c_node, -1, axis=1))
        m._set_dt(float(c_node.max()))
        m.patch = None
        m._scales()
        return m

    def _set_dt(self, c_ref):
        h = min(self.dx, self.dy)
        limit = self.grid.cfl_safety * h / math.sqrt(c_ref)
        if self.grid.dt is None:
            self.dt = limit
        else:
            if self.grid.dt > limit * (1 + 1e-12):
                raise CflViolation(
                    f"dt={self.grid.dt} exceeds CFL limit {limit:.6g}")
            self.dt = float(self.grid.dt)

    def _build_patch(self, b_node):
        bump = self.geom.damping
        g = self.grid
        if bump.is_zero:
            self.patch = None
            return
        r_out = bump.support_outer_radius
        if math.isinf(r_out):
            i0, i1 = 0, g.nx
            j0, j1 = 0, g.ny
        else:
            cx, cy = bump.center
            i0 = int(np.searchsorted(self.x, cx - r_out)) - 2
            i1 = int(np.searchsorted(self.x, cx + r_out)) + 2
            j0 = int(np.searchsorted(self.y, cy - r_out)) - 2
            j1 = int(np.searchsorted(self.y, cy + r_out)) + 2
            i0, i1 = max(i0, 0), min(i1, g.nx)
            j0, j1 = max(j0, 0), min(j1, g.ny)
        self.patch = (slice(i0, i1 + 1), slice(j0, j1 + 1))
        xf = 0.5 * (self.x[i0:i1] + self.x[i0 + 1:i1 + 1])
        yf = 0.5 * (self.y[j0:j1] + self.y[j0 + 1:j1 + 1])
        Xf, Yf = np.meshgrid(xf, self.y[j0:j1 + 1], indexing="ij")
        self.bfx = bump.value_grid(Xf, Yf)
        Xg, Yg = np.meshgrid(self.x[i0:i1 + 1], yf, indexing="ij")
        self.bfy = bump.value_grid(Xg, Yg)
        # the memory flux must vanish at the interface (support separation)
        ifx = self.region2[:-1, :] ^ self.region2[1:, :]
        ify = self.region2[:, :-1] ^ self.region2[:, 1:]
        bx_full = np.zeros_like(ifx, dtype=float)
        bx_full[i0:i1, j0:j1 + 1] = self.bfx
        by_full = np.zeros_like(ify, dtype=float)
        by_full[i0:i1 + 1, j0:j1] = self.bfy
        worst = max(float(np.max(bx_full * ifx)), float(np.max(by_full * ify)))
        if worst > 1e-12 * max(bump.max_value, 1.0):
            raise GridSpecError(
                f"damping support reaches interface faces (b={worst:.3e}); "
                "the transmission coupling assumes a separated support")
        # s-grid
        ds = g.s_max / g.ns
        if self.dt > ds * (1 + 1e-12):
            raise GridSpecError(
                f"upwind transport needs dt <= ds (dt={self.dt:.3e}, ds={ds:.3e})")
        self.ds = ds
        self.sk = ds * np.arange(1, g.ns + 1)
        self.gk = self.kernel.g(self.sk)
        self.gpk = self.kernel.g_prime(self.sk)
        self.wq = np.full(g.ns, ds)
        self.gw = self.wq * self.gk          # quadrature x kernel weights
        # quadrature of -g' as exact kernel mass per s-cell: these are the
        # weights whose dissipation the upwind transport realizes, so the
        # energy identity residual measures pure scheme error
        self.dw_neg = self.gk - self.kernel.g(self.sk + ds)
        self.dw_neg[-1] = self.gk[-1]

    def _scales(self):
        self.cell = self.dx * self.dy
        self.mxx = self.dy / self.dx   # metric factor for x-face forms
        self.myy = self.dx / self.dy

    # -- operators ----------------------------------------------------------
    def lap(self, w):
        out = np.zeros_like(w)
        fx = self.cfx * (w[1:, :] - w[:-1, :])
        out[1:-1, :] = (fx[1:, :] - fx[:-1, :]) / self.dx ** 2
        if self.periodic_y:
            fy = self.cfy * (np.roll(w, -1, axis=1) - w)
            out += (fy - np.roll(fy, 1, axis=1)) / self.dy ** 2
        else:
            fy = self.cfy * (w[:, 1:] - w[:, :-1])
            out[:, 1:-1] += (fy[:, 1:] - fy[:, :-1]) / self.dy ** 2
        out[~self.mask] = 0.0
        return out

    def mem_div(self, chi):
        """k1 * div(b grad chi) over the patch (zero-flux at the patch rim)."""
        out = np.zeros_like(chi)
        fx = self.bfx * (chi[1:, :] - chi[:-1, :])
        out[1:-1, :] = (fx[1:, :] - fx[:-1, :]) / self.dx ** 2
        fy = self.bfy * (chi[:, 1:] - chi[:, :-1])
        out[:, 1:-1] += (fy[:, 1:] - fy[:, :-1]) / self.dy ** 2
        return self.k1 * out

    def form_c(self, u, v):
        """Dirichlet form sum c |grad .|^2 cross term, cell-integrated."""
        sx = np.sum(self.cfx * (u[1:, :] - u[:-1, :]) * (v[1:, :] - v[:-1, :]))
        if self.periodic_y:
            du = np.roll(u, -1, axis=1) - u
            dv = np.roll(v, -1, axis=1) - v
            sy = np.sum(self.cfy * du * dv)
        else:
            sy = np.sum(self.cfy * (u[:, 1:] - u[:, :-1]) * (v[:, 1:] - v[:, :-1]))
        return float(sx) * self.mxx + float(sy) * self.myy

    def _form_b_per_slice(self, eta_a, eta_b):
        """a_b(eta_a[k], eta_b[k]) for every history slice, one pass."""
        ns = eta_a.shape[0]
        out = np.empty(ns)
        for k in range(ns):
            dxa = eta_a[k, 1:, :] - eta_a[k, :-1, :]
            dxb = eta_b[k, 1:, :] - eta_b[k, :-1, :]
            dxa *= dxb
            dxa *= self.bfx
            sx = float(dxa.sum())
            dya = eta_a[k, :, 1:] - eta_a[k, :, :-1]
            dyb = eta_b[k, :, 1:] - eta_b[k, :, :-1]
            dya *= dyb
            dya *= self.bfy
            out[k] = sx * self.mxx + float(dya.sum()) * self.myy
        return out

    def form_b_weighted(self, eta_a, eta_b, weights):
        """sum_k weights[k] * a_b(eta_a[k], eta_b[k]) over the patch."""
        return float(weights @ self._form_b_per_slice(eta_a, eta_b))

    @property
    def has_memory(self):
        return self.patch is not None


def _harmonic(a, b):
    return 2.0 * a * b / (a + b)


def _sd_grid(curve, X, Y):
    from .curves import Circle, Ellipse
    if isinstance(curve, Circle):
        return np.hypot(X - curve.center[0], Y - curve.center[1]) - curve.radius
    if isinstance(curve, Ellipse):
        u = (X - curve.center[0]) / curve.a
        v = (Y - curve.center[1]) / curve.b
        f = u * u + v * v - 1.0
        g = 2.0 * np.hypot(u / curve.a, v / curve.b)
        return f / np.maximum(g, 1e-300)
    out = np.empty_like(X)
    it = np.nditer(X, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        out[idx] = curve.signed_distance((X[idx], Y[idx]))
    return out


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------

@dataclass
class InitialData:
    """u0/u1 on the annulus, v0/v1 on the inclusion, and the past history.

    Each entry is a vectorized callable f(X, Y) (or a node array, or 0).
    `history(X, Y, s)` prescribes phi_0; None means phi_0 = u0, i.e. the
    system starts with no stored memory (eta_0 = 0). `history_array` may carry
    precomputed eta_0 samples on the patch instead.
    """

    u0: object = 0
    u1: object = 0
    v0: object = 0
    v1: object = 0
    history: object = None
    history_array: np.ndarray | None = None

    @classmethod
    def single_field(cls, w0, wt0=0):
        """Same expression in both media (interface continuity automatic)."""
        return cls(u0=w0, u1=wt0, v0=w0, v1=wt0)


def _sample(f, X, Y):
    if callable(f):
        return np.asarray(f(X, Y), dtype=float)
    arr = np.asarray(f, dtype=float)
    if arr.shape == X.shape:
        return arr.copy()
    return np.full_like(X, float(f))


@dataclass
class FieldState:
    w: np.ndarray          # w^{n+1}
    w_prev: np.ndarray     # w^n
    eta: np.ndarray | None  # eta^n on the patch, shape (ns, pi, pj)
    t: float               # time of w
    step_index: int

    @property
    def w_t(self):
        return (self.w - self.w_prev)


def init_state(model, data):
    """Sample initial data, check interface continuity, take the Taylor start."""
    X, Y = model.X, model.Y
    u0 = _sample(data.u0, X, Y)
    u1 = _sample(data.u1, X, Y)
    if data.v0 is not data.u0 or data.v1 is not data.u1:
        v0 = _sample(data.v0, X, Y)
        v1 = _sample(data.v1, X, Y)
    else:
        v0, v1 = u0, u1
    if model.geom is not None and (callable(data.u0) or callable(data.v0)) \
            and (data.u0 is not data.v0):
        pts = np.array([model.geom.inner.point(s)
                        for s in model.geom.inner.params(256)])
        a = _sample(data.u0, pts[:, 0], pts[:, 1])
        b = _sample(data.v0, pts[:, 0], pts[:, 1])
        gap = float(np.max(np.abs(a - b)))
        if gap > 1e-8:
            raise InterfaceMismatch(f"|u0 - v0| = {gap:.3e} on the interface")
    w0 = np.where(model.region2, v0, u0)
    wt0 = np.where(model.region2, v1, u1)
    w0[~model.mask] = 0.0
    wt0[~model.mask] = 0.0

    eta0 = None
    if model.has_memory:
        ns = model.grid.ns
        P = model.patch
        if data.history_array is not None:
            eta0 = np.array(data.history_array, dtype=float)
        elif data.history is None:
            eta0 = np.zeros((ns, *w0[P].shape))
        else:
            eta0 = np.empty((ns, *w0[P].shape))
            for k, s in enumerate(model.sk):
                eta0[k] = w0[P] - _sample(
                    lambda XX, YY: data.history(XX, YY, s), X[P], Y[P])
        eta0[:, ~model.mask[P]] = 0.0

    rhs = model.lap(w0)
    if model.has_memory:
        chi = np.tensordot(model.gw, eta0, axes=(0, 0))
        rhs[model.patch] += model.mem_div(chi)
        rhs[~model.mask] = 0.0
    dt = model.dt
    w1 = w0 + dt * wt0 + 0.5 * dt * dt * rhs
    w1[~model.mask] = 0.0
    return FieldState(w=w1, w_prev=w0, eta=eta0, t=dt, step_index=0)


# ---------------------------------------------------------------------------
# Stepping
# ---------------------------------------------------------------------------

def _eta_step(model, eta, dw):
    out = eta.copy()
    _eta_step_inplace(model, out, dw)
    return out


def _eta_step_inplace(model, eta, dw):
    """Upwind transport in s, reverse slice order so no buffer is needed."""
    nu = model.dt / model.ds
    ns = eta.shape[0]
    for k in range(ns - 1, 0, -1):
        d = eta[k] - eta[k - 1]
        d *= nu
        eta[k] -= d
        eta[k] += dw
    eta[0] *= (1.0 - nu)               # eta(s=0) = 0 inflow
    eta[0] += dw


def step(state, model):
    """Advance one leapfrog step (and the history field by one upwind step)."""
    A, B = state.w_prev, state.w
    eta = state.eta
    if model.has_memory:
        eta = _eta_step(model, state.eta, (B - A)[model.patch])
        rhs = model.lap(B)
        chi = np.tensordot(model.gw, eta, axes=(0, 0))
        rhs[model.patch] += model.mem_div(chi)
        rhs[~model.mask] = 0.0
    else:
        rhs = model.lap(B)
    C = 2.0 * B - A + model.dt ** 2 * rhs
    C[~model.mask] = 0.0
    return FieldState(w=C, w_prev=B, eta=eta, t=state.t + model.dt,
                      step_index=state.step_index + 1)


def energy(state, model):
    """Instantaneous (E, damping_rate) from a state snapshot.

    E uses the staggered velocity (w - w_prev)/dt and the face-coefficient
    quadrature of the elastic and memory terms; damping_rate is the integrand
    k1 int (-g') int b |grad eta|^2 of the observability functional.
    """
    dt = model.dt
    vel = (state.w - state.w_prev) / dt
    kin = 0.5 * model.cell * float(np.sum(vel * vel))
    ela = 0.5 * model.form_c(state.w_prev, state.w)
    mem = 0.0
    rate = 0.0
    if model.has_memory and state.eta is not None:
        mem = 0.5 * model.k1 * model.form_b_weighted(state.eta, state.eta, model.gw)
        rate = model.k1 * model.form_b_weighted(state.eta, state.eta, model.dw_neg)
    return kin + ela + mem, rate


# ---------------------------------------------------------------------------
# Full runs
# ---------------------------------------------------------------------------

@dataclass
class EnergyTrace:
    times: np.ndarray
    E: np.ndarray
    D: np.ndarray                    # cumulative damping functional
    identity_residual: np.ndarray    # per recorded interval; [0] = 0

    def to_csv(self, path):
        with open(path, "w") as f:
            f.write("t,E,D,identity_residual\n")
            for row in zip(self.times, self.E, self.D, self.identity_residual):
                f.write(",".join(repr(float(v)) for v in row) + "\n")

    @property
    def residual_per_unit_time(self):
        dts = np.diff(self.times)
        return self.identity_residual[1:] / dts

    def max_residual_rate(self):
        r = self.residual_per_unit_time
        return float(np.max(r)) if len(r) else 0.0


@dataclass
class RunResult:
    trace: EnergyTrace
    state: FieldState
    snapshots: list
    prony_residual: float | None = None
    tail_bound: float | None = None


def run(model, data=None, state=None, snapshot_times=(), prony_check=False):
    """March to t_end recording the staggered energy and damping integral."""
    if state is None:
        state = init_state(model, data)
    g = model.grid
    dt = model.dt
    n_steps = max(0, int(math.ceil((g.t_end - state.t) / dt)))
    every = g.record_every or max(1, int(round(n_steps / 400)) or 1)

    times, Es, Ds, res = [], [], [], []
    q_prev = None
    D_acc = 0.0
    snap_keys = {int(round(t / dt)) for t in snapshot_times}
    snapshots = []
    tail_sup = 0.0

    prony = _PronyCheck(model) if (prony_check and model.has_memory) else None

    def record(A, B, eta_old, eta_new, t_half):
        nonlocal q_prev, D_acc, tail_sup
        vel = (B - A) / dt
        kin = 0.5 * model.cell * float(np.sum(vel * vel))
        ela = 0.5 * model.form_c(A, B)
        mem = 0.0
        q = 0.0
        if model.has_memory:
            slices = model._form_b_per_slice(eta_old, eta_new)
            mem = 0.5 * model.k1 * float(model.gw @ slices)
            q = model.k1 * float(model.dw_neg @ slices)
            last = eta_new[-1:]
            tail_sup = max(tail_sup, model.form_b_weighted(last, last, np.ones(1)))
        E = kin + ela + mem
        if times:
            dtr = t_half - times[-1]
            D_new = D_acc + 0.5 * dtr * (q_prev + q)
            dE = E - Es[-1]
            dQ = -0.5 * (D_new - D_acc)
            res.append(abs(dE - dQ))
            D_acc = D_new
        else:
            res.append(0.0)
        times.append(t_half)
        Es.append(E)
        Ds.append(D_acc)
        q_prev = q

    # state after init_state: A = w^0, B = w^1, eta = eta^0
    A = state.w_prev.copy()
    B = state.w.copy()
    eta = None if state.eta is None else state.eta.copy()
    t_of_B = state.t
    eta_buf = None
    for n in range(n_steps + 1):
        recording = (n % every == 0 or n == n_steps)
        last = (n == n_steps)
        if model.has_memory and not last:
            if recording:
                eta_buf = eta.copy()
            _eta_step_inplace(model, eta, (B - A)[model.patch])
            eta_pair = (eta_buf, eta)
        elif model.has_memory:
            # final record: the state keeps eta at the w_prev level, so the
            # staggered partner is computed without committing it
            eta_pair = (eta, _eta_step(model, eta, (B - A)[model.patch]))
        else:
            eta_pair = (None, None)
        if recording:
            record(A, B, eta_pair[0], eta_pair[1], t_of_B - 0.5 * dt)
            if not np.isfinite(Es[-1]):
                raise NanDetected(f"energy not finite at t={t_of_B:.4g}")
        if prony is not None and not last:
            prony.update(A, B, eta)
        key = int(round(t_of_B / dt))
        if key in snap_keys:
            snapshots.append((t_of_B, B.copy()))
            snap_keys.discard(key)
        if last:
            break
        rhs = model.lap(B)
        if model.has_memory:
            chi = np.tensordot(model.gw, eta, axes=(0, 0))
            rhs[model.patch] += model.mem_div(chi)
            rhs[~model.mask] = 0.0
        C = 2.0 * B - A + dt * dt * rhs
        C[~model.mask] = 0.0
        A, B = B, C
        t_of_B += dt

    trace = EnergyTrace(np.asarray(times), np.asarray(Es), np.asarray(Ds),
                        np.asarray(res))
    final = FieldState(w=B, w_prev=A, eta=eta, t=t_of_B, step_index=n_steps)
    tail = None
    if model.has_memory:
        tail_mass = sum(a * t * math.exp(-g.s_max / t)
                        for a, t in model.kernel.terms)
        tail = model.k1 * tail_mass * tail_sup
    return RunResult(trace=trace, state=final, snapshots=snapshots,
                     prony_residual=(prony.max_rel if prony else None),
                     tail_bound=tail)


class _PronyCheck:
    """Exact auxiliary-field ODE for int g_j grad eta ds, cross-checked
    against the s-grid quadrature of the same quantity every step."""

    def __init__(self, model):
        self.model = model
        self.terms = model.kernel.terms
        P = model.patch
        shape_x = model.bfx.shape
        shape_y = model.bfy.shape
        self.psix = [np.zeros(shape_x) for _ in self.terms]
        self.psiy = [np.zeros(shape_y) for _ in self.terms]
        self.max_rel = 0.0
        # assumes eta_0 = 0 history; runs with prescribed history should seed
        # the auxiliary fields separately

    def update(self, A, B, eta_new):
        m = self.model
        P = m.patch
        dwx = ((B - A)[P][1:, :] - (B - A)[P][:-1, :]) / m.dx
        dwy = ((B - A)[P][:, 1:] - (B - A)[P][:, :-1]) / m.dy
        dt = m.dt
        for j, (a, tau) in enumerate(self.terms):
            decay = math.exp(-dt / tau)
            gain = a * tau * tau * (1.0 - decay) / dt
            self.psix[j] = decay * self.psix[j] + gain * dwx
            self.psiy[j] = decay * self.psiy[j] + gain * dwy
        grid_x = np.tensordot(m.gw, (eta_new[:, 1:, :] - eta_new[:, :-1, :]),
                              axes=(0, 0)) / m.dx
        grid_y = np.tensordot(m.gw, (eta_new[:, :, 1:] - eta_new[:, :, :-1]),
                              axes=(0, 0)) / m.dy
        ode_x = sum(self.psix)
        ode_y = sum(self.psiy)
        scale = max(float(np.max(np.abs(ode_x))), float(np.max(np.abs(ode_y))),
                    1e-300)
        rel = max(float(np.max(np.abs(grid_x - ode_x))),
                  float(np.max(np.abs(grid_y - ode_y)))) / scale
        self.max_rel = max(self.max_rel, rel)


def cross_check_prony(model, data, t_end=None):
    """Run with the auxiliary-field cross-check enabled; returns the residual."""
    result = run(model, data, prony_check=True)
    return result.prony_residual
