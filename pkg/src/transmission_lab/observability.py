"""Quantitative decay and observability harness on top of the field solver.

Connects simulation output to the stability statements: least-squares decay
rates on log E(t), observability-constant estimates E(0)/D(0,T) over random
band-limited ensembles, and the invisible-solution probe that feeds discrete
eigenmodes of the undamped divergence-form operator through the damped
evolution and checks that none of them hides from the damping functional.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import EigensolverFailure, NonpositiveEnergy
from .solver import DiscreteModel, InitialData, _sd_grid, energy, init_state, run


@dataclass(frozen=True)
class DecayFit:
    lam: float          # decay rate, 1/time
    C: float            # prefactor, normalized by the trace's initial energy
    r_squared: float
    window: tuple

    def to_dict(self):
        return {"lambda": self.lam, "C": self.C,
                "r_squared": self.r_squared, "window": list(self.window)}


def fit_decay(trace, window):
    """Least-squares line on (t, log E) over the window.

    Returns lam = -slope, C = exp(intercept) / E0 with E0 the first recorded
    energy (so the fit is invariant under scaling of the initial data), and
    the r^2 of the fit.
    """
    t_lo, t_hi = window
    sel = (trace.times >= t_lo) & (trace.times <= t_hi)
    if not np.any(sel):
        raise ValueError("empty fit window")
    E = trace.E[sel]
    if np.any(E <= 0.0):
        raise NonpositiveEnergy("energy must be positive on the fit window")
    t = trace.times[sel]
    y = np.log(E)
    slope, intercept = np.polyfit(t, y, 1)
    pred = slope * t + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    e0 = float(trace.E[0])
    return DecayFit(lam=float(-slope), C=float(math.exp(intercept) / e0),
                    r_squared=float(r2), window=(float(t_lo), float(t_hi)))


# ---------------------------------------------------------------------------
# Random band-limited fields and beams
# ---------------------------------------------------------------------------

def _boundary_window(model, margin_frac=0.08):
    sd = _sd_grid(model.geom.outer, model.X, model.Y)
    margin = margin_frac * model.geom.diameter
    u = np.clip(-sd / margin, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def bandlimited_field(model, rng, points_per_wavelength=8.0):
    """Isotropic low-pass filtered white noise, windowed to vanish at the rim.

    The frequency cap scales with the grid (lambda_min = ppw * h) so a refined
    run draws from a consistently refined ensemble.
    """
    n1, n2 = model.X.shape
    noise = rng.standard_normal((n1, n2))
    kx = np.fft.fftfreq(n1, d=model.dx) * 2.0 * math.pi
    ky = np.fft.fftfreq(n2, d=model.dy) * 2.0 * math.pi
    kk = np.hypot(kx[:, None], ky[None, :])
    k_cap = 2.0 * math.pi / (points_per_wavelength * max(model.dx, model.dy))
    filt = np.exp(-((kk / k_cap) ** 8))
    f = np.real(np.fft.ifft2(np.fft.fft2(noise) * filt))
    f *= _boundary_window(model)
    f[~model.mask] = 0.0
    # normalize to unit rms over the active nodes
    rms = math.sqrt(float(np.mean(f[model.mask] ** 2))) or 1.0
    return f / rms


def random_data(model, seed, points_per_wavelength=8.0):
    rng = np.random.default_rng(seed)
    u0 = bandlimited_field(model, rng, points_per_wavelength)
    u1 = bandlimited_field(model, rng, points_per_wavelength)
    return InitialData.single_field(u0, u1)


def gaussian_beam_data(center, direction, width, wavelength, speed):
    """Traveling Gaussian beam: u(x, t) = f(x - v t d), sampled at t = 0."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    kw = 2.0 * math.pi / wavelength

    def envelope(X, Y):
        return np.exp(-((X - center[0]) ** 2 + (Y - center[1]) ** 2)
                      / (2.0 * width * width))

    def u0(X, Y):
        phase = kw * (d[0] * (X - center[0]) + d[1] * (Y - center[1]))
        return envelope(X, Y) * np.cos(phase)

    def u1(X, Y):
        phase = kw * (d[0] * (X - center[0]) + d[1] * (Y - center[1]))
        env = envelope(X, Y)
        denv_d = env * (-((X - center[0]) * d[0] + (Y - center[1]) * d[1])
                        / (width * width))
        grad_along = denv_d * np.cos(phase) - env * kw * np.sin(phase)
        return -speed * grad_along

    return InitialData.single_field(u0, u1)


def normalized_state(model, data):
    """Initial state rescaled to unit staggered energy."""
    state = init_state(model, data)
    E0, _ = energy(state, model)
    if E0 <= 0.0:
        raise NonpositiveEnergy("initial data carries no energy")
    scale = 1.0 / math.sqrt(E0)
    state.w *= scale
    state.w_prev *= scale
    if state.eta is not None:
        state.eta *= scale
    return state


# ---------------------------------------------------------------------------
# Observability-constant estimation
# ---------------------------------------------------------------------------

@dataclass
class ObsEstimate:
    T: float
    ratios: list
    c_obs: float
    ensemble_size: int
    near_invisible: list
    seed: int

    def to_dict(self):
        return {"T": self.T, "ratios": self.ratios, "c_obs": self.c_obs,
                "ensemble_size": self.ensemble_size,
                "near_invisible": self.near_invisible, "seed": self.seed}


def worker_cap():
    try:
        return max(1, int(os.environ.get("TRANSMISSION_LAB_WORKERS", "1")))
    except ValueError:
        return 1


_WORKER_MODEL = None


def _member_ratio(args):
    global _WORKER_MODEL
    geom, kernel, grid, seed, ppw = args
    if _WORKER_MODEL is None or _WORKER_MODEL[0] != grid:
        _WORKER_MODEL = (grid, DiscreteModel.from_geometry(geom, kernel, grid))
    model = _WORKER_MODEL[1]
    state = normalized_state(model, random_data(model, seed, ppw))
    result = run(model, state=state)
    E0 = float(result.trace.E[0])
    DT = float(result.trace.D[-1])
    return E0, DT


def estimate_observability(geom, kernel, grid, T=None, n_members=6, seed=0,
                           points_per_wavelength=8.0, model=None):
    """Ratios E(0)/D(0,T) over a random band-limited ensemble.

    A bounded maximum across refinements is the numerical signature of
    observability; members whose damping output is below 1e-14 * E(0) are set
    aside as near-invisible rather than polluting the maximum.
    """
    if T is not None and (grid.t_end != T):
        from dataclasses import replace
        grid = replace(grid, t_end=T)
    n_workers = worker_cap()
    args = [(geom, kernel, grid, seed * 100003 + m, points_per_wavelength)
            for m in range(n_members)]
    if n_workers > 1:
        import concurrent.futures as cf
        with cf.ProcessPoolExecutor(max_workers=n_workers) as ex:
            pairs = list(ex.map(_member_ratio, args))
    else:
        if model is None:
            model = DiscreteModel.from_geometry(geom, kernel, grid)
        pairs = []
        for a in args:
            state = normalized_state(model, random_data(model, a[3],
                                                        points_per_wavelength))
            result = run(model, state=state)
            pairs.append((float(result.trace.E[0]), float(result.trace.D[-1])))
    ratios = []
    near_invisible = []
    for m, (E0, DT) in enumerate(pairs):
        if E0 <= 0.0:
            continue
        if DT < 1e-14 * E0:
            near_invisible.append(m)
            continue
        ratios.append(E0 / DT)
    c_obs = max(ratios) if ratios else math.inf
    return ObsEstimate(T=float(grid.t_end), ratios=ratios, c_obs=float(c_obs),
                       ensemble_size=n_members, near_invisible=near_invisible,
                       seed=seed)


# ---------------------------------------------------------------------------
# Invisible-solution probe
# ---------------------------------------------------------------------------

def discrete_modes(model, n_modes=10):
    """Lowest Dirichlet eigenpairs of -div(c grad .) on the masked grid.

    Shift-invert Lanczos around zero (inverse-power subspace iteration on the
    factorized operator). Returns (eigenvalues, modes as full-grid arrays).
    """
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    mask = model.mask
    idx = -np.ones(mask.shape, dtype=np.int64)
    active = np.argwhere(mask)
    idx[mask] = np.arange(len(active))
    n = len(active)
    rows, cols, vals = [], [], []
    dx2, dy2 = model.dx ** 2, model.dy ** 2

    def add(i, j, v):
        rows.append(i)
        cols.append(j)
        vals.append(v)

    for a, (i, j) in enumerate(active):
        diag = 0.0
        if i + 1 < mask.shape[0]:
            c = model.cfx[i, j] / dx2
            diag += c
            if mask[i + 1, j]:
                add(a, idx[i + 1, j], -c)
        if i - 1 >= 0:
            c = model.cfx[i - 1, j] / dx2
            diag += c
            if mask[i - 1, j]:
                add(a, idx[i - 1, j], -c)
        if j + 1 < mask.shape[1]:
            c = model.cfy[i, j] / dy2
            diag += c
            if mask[i, j + 1]:
                add(a, idx[i, j + 1], -c)
        if j - 1 >= 0:
            c = model.cfy[i, j - 1] / dy2
            diag += c
            if mask[i, j - 1]:
                add(a, idx[i, j - 1], -c)
        add(a, a, diag)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    try:
        evals, evecs = spla.eigsh(A, k=n_modes, sigma=0.0, which="LM")
    except Exception as exc:   # factorization or convergence failure
        raise EigensolverFailure(str(exc)) from exc
    order = np.argsort(evals)
    evals = evals[order]
    evecs = evecs[:, order]
    modes = []
    for m in range(n_modes):
        full = np.zeros(mask.shape)
        full[mask] = evecs[:, m]
        modes.append(full)
    return evals, modes


@dataclass
class ProbeReport:
    eigenvalues: list
    ratios: list            # D(0,T) / E(0) per mode
    T: float
    eps_vis: float

    @property
    def all_visible(self):
        return all(r >= self.eps_vis for r in self.ratios)

    def to_dict(self):
        return {"eigenvalues": self.eigenvalues, "ratios": self.ratios,
                "T": self.T, "eps_vis": self.eps_vis,
                "all_visible": self.all_visible}


def invisible_probe(geom, kernel, grid, n_modes=10, eps_vis=1e-6, model=None):
    """Feed the lowest discrete modes through the damped evolution and report
    the damping output D(0,T)/E(0) of each; nonzero modes should all be seen."""
    if model is None:
        model = DiscreteModel.from_geometry(geom, kernel, grid)
    evals, modes = discrete_modes(model, n_modes)
    ratios = []
    for mode in modes:
        state = normalized_state(model, InitialData.single_field(mode))
        result = run(model, state=state)
        E0 = float(result.trace.E[0])
        ratios.append(float(result.trace.D[-1]) / E0)
    return ProbeReport(eigenvalues=[float(v) for v in evals], ratios=ratios,
                       T=float(grid.t_end), eps_vis=eps_vis)
