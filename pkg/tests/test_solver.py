import math

import numpy as np
import pytest

from transmission_lab import errors
from transmission_lab.solver import (
    DiscreteModel,
    GridSpec,
    InitialData,
    energy,
    init_state,
    run,
    step,
)

from conftest import contained_pulse


def small_model(geom, kernel, n=48, ns=12, t_end=1.0, **kw):
    grid = GridSpec(nx=n, ny=n, t_end=t_end, s_max=1.0, ns=ns, **kw)
    return DiscreteModel.from_geometry(geom, kernel, grid)


class TestInit:
    def test_zero_data_zero_state(self, golden_geom, kernel_std):
        m = small_model(golden_geom, kernel_std)
        st = init_state(m, InitialData())
        assert not np.any(st.w) and not np.any(st.w_prev)
        E, rate = energy(st, m)
        assert E == 0.0 and rate == 0.0
        st2 = step(st, m)
        assert not np.any(st2.w)

    def test_matching_history_zeroes_eta(self, golden_geom, kernel_std):
        m = small_model(golden_geom, kernel_std)
        pulse = contained_pulse()
        data = InitialData(u0=pulse, v0=pulse,
                           history=lambda X, Y, s: pulse(X, Y))
        st = init_state(m, data)
        assert np.all(st.eta == 0.0)

    def test_default_history_is_no_stored_memory(self, golden_geom,
                                                 kernel_std):
        m = small_model(golden_geom, kernel_std)
        st = init_state(m, InitialData.single_field(contained_pulse()))
        assert np.all(st.eta == 0.0)

    def test_initial_energy_matches_fine_quadrature(self, nodamp_geom,
                                                    kernel_std):
        # oracle: the energy integral of the analytic pulse on a much finer
        # grid; the coarse discrete energy must approach it
        pulse = contained_pulse(width=0.2)
        ref_model = small_model(nodamp_geom, kernel_std, n=512, ns=1)
        ref_state = init_state(ref_model, InitialData.single_field(pulse))
        E_ref, _ = energy(ref_state, ref_model)
        errs = []
        for n in (64, 128):
            m = small_model(nodamp_geom, kernel_std, n=n, ns=1)
            st = init_state(m, InitialData.single_field(pulse))
            E, _ = energy(st, m)
            errs.append(abs(E - E_ref))
        assert errs[1] < errs[0] / 3.0   # better than first order here

    def test_interface_mismatch_detected(self, golden_geom, kernel_std):
        m = small_model(golden_geom, kernel_std)
        data = InitialData(u0=lambda X, Y: np.ones_like(X),
                           v0=lambda X, Y: np.zeros_like(X))
        with pytest.raises(errors.InterfaceMismatch):
            init_state(m, data)

    def test_cfl_violation(self, golden_geom, kernel_std):
        with pytest.raises(errors.CflViolation):
            small_model(golden_geom, kernel_std, dt=1.0)

    def test_s_grid_guards(self, golden_geom, kernel_std):
        with pytest.raises(errors.GridSpecError):
            # s_max below ten relaxation times: kernel tail not negligible
            DiscreteModel.from_geometry(
                golden_geom, kernel_std,
                GridSpec(nx=32, ny=32, t_end=1.0, s_max=0.5, ns=8))
        with pytest.raises(errors.GridSpecError):
            # upwind transport requires dt <= ds
            DiscreteModel.from_geometry(
                golden_geom, kernel_std,
                GridSpec(nx=48, ny=48, t_end=1.0, s_max=1.0, ns=800))


class TestStrip:
    def test_dalembert_speed(self):
        # right-moving pulse travels at sqrt(k1) within 1% (phase/centroid)
        k1 = 1.0
        m = DiscreteModel.make_strip(256, 8, 4.0, 0.125,
                                     lambda X: np.full_like(X, k1),
                                     t_end=1.2)
        x0, sig = 1.0, 0.08

        def f(x):
            return np.exp(-((x - x0) / sig) ** 2)

        def fp(x):
            return -2.0 * (x - x0) / sig ** 2 * f(x)

        data = InitialData.single_field(
            lambda X, Y: f(X), lambda X, Y: -math.sqrt(k1) * fp(X))
        st = init_state(m, data)
        n_steps = int(round(1.0 / m.dt))
        for _ in range(n_steps):
            st = step(st, m)
        t_elapsed = st.t - m.dt  # centroid measured on w at time of w_prev+dt
        prof = np.mean(st.w ** 2, axis=1)
        centroid = float(np.sum(m.x * prof) / np.sum(prof))
        expected = x0 + math.sqrt(k1) * st.t
        assert abs(centroid - expected) <= 0.01 * math.sqrt(k1) * st.t

    def test_two_speed_interface_energy_split(self):
        # analytic reflection/transmission of the flux-conservative interface
        k1, k2 = 1.0, 2.0
        c1, c2 = math.sqrt(k1), math.sqrt(k2)
        R = (c1 - c2) / (c1 + c2)
        refl_expected = R * R
        trans_expected = 4 * c1 * c2 / (c1 + c2) ** 2
        m = DiscreteModel.make_strip(
            256, 8, 2.0, 0.0625,
            lambda X: np.where(X < 1.0, k1, k2), t_end=1.0)
        x0, sig = 0.55, 0.05

        def f(x):
            return np.exp(-((x - x0) / sig) ** 2)

        def fp(x):
            return -2.0 * (x - x0) / sig ** 2 * f(x)

        data = InitialData.single_field(
            lambda X, Y: f(X), lambda X, Y: -c1 * fp(X))
        st = init_state(m, data)
        for _ in range(int(round(0.75 / m.dt))):
            st = step(st, m)

        # localized staggered energies on each side of the interface
        def side_energy(mask_nodes):
            vel = (st.w - st.w_prev) / m.dt
            kin = 0.5 * m.cell * np.sum((vel ** 2) * mask_nodes)
            fx = m.cfx * (st.w[1:, :] - st.w[:-1, :]) \
                * (st.w_prev[1:, :] - st.w_prev[:-1, :])
            mask_fx = mask_nodes[1:, :] & mask_nodes[:-1, :]
            du = np.roll(st.w, -1, axis=1) - st.w
            dv = np.roll(st.w_prev, -1, axis=1) - st.w_prev
            fy = m.cfy * du * dv
            ela = 0.5 * (np.sum(fx * mask_fx) * m.mxx
                         + np.sum(fy * mask_nodes) * m.myy)
            return float(kin + ela)

        left = m.X < 0.98
        right = m.X > 1.02
        E_left = side_energy(left)
        E_right = side_energy(right)
        E_tot = E_left + E_right
        assert abs(E_left / E_tot - refl_expected) <= 0.02
        assert abs(E_right / E_tot - trans_expected) <= 0.02


class TestEnergyBehavior:
    def test_zero_damping_equal_speeds_conserves(self, kernel_std):
        from transmission_lab.geometry import build_geometry
        from conftest import GOLDEN_SPEC
        spec = dict(GOLDEN_SPEC)
        spec["k2"] = 1.0
        spec["damping"] = {"kind": "zero"}
        geom = build_geometry(spec)
        m = small_model(geom, kernel_std, n=96, ns=1, t_end=4.0)
        res = run(m, InitialData.single_field(contained_pulse()))
        E = res.trace.E
        assert np.max(np.abs(E - E[0])) / E[0] <= 1e-12

    def test_energy_nonincreasing_with_damping(self, golden_geom, kernel_std):
        m = small_model(golden_geom, kernel_std, n=64, ns=16, t_end=2.0,
                        record_every=6)
        res = run(m, InitialData.single_field(contained_pulse()))
        tr = res.trace
        dE = np.diff(tr.E)
        assert np.all(dE <= tr.identity_residual[1:] + 1e-12 * tr.E[0])
        assert np.all(np.diff(tr.D) >= -1e-14)   # cumulative damping grows

    def test_identity_residual_decreases_under_refinement(self, golden_geom,
                                                          kernel_std):
        rates = []
        for n, ns in ((48, 12), (96, 24)):
            m = small_model(golden_geom, kernel_std, n=n, ns=ns, t_end=0.8,
                            record_every=8)
            res = run(m, InitialData.single_field(contained_pulse(width=0.22)))
            rates.append(res.trace.max_residual_rate())
        assert rates[1] < 0.75 * rates[0]

    def test_linearity_of_the_flow(self, golden_geom, kernel_std):
        m = small_model(golden_geom, kernel_std, n=48, ns=12, t_end=0.6)
        pulse = contained_pulse()
        r1 = run(m, InitialData.single_field(pulse))
        alpha = 3.0
        r2 = run(m, InitialData.single_field(
            lambda X, Y: alpha * pulse(X, Y)))
        assert np.allclose(r2.trace.E, alpha ** 2 * r1.trace.E, rtol=1e-12)
        assert np.allclose(r2.state.w, alpha * r1.state.w, atol=1e-12)

    def test_restart_continuation_matches_single_run(self, golden_geom,
                                                     kernel_std):
        m_full = small_model(golden_geom, kernel_std, n=48, ns=12, t_end=1.0,
                             record_every=5)
        data = InitialData.single_field(contained_pulse())
        full = run(m_full, data)
        m_half = small_model(golden_geom, kernel_std, n=48, ns=12, t_end=0.5,
                             record_every=5)
        first = run(m_half, data)
        resumed = run(m_full, state=first.state)
        assert resumed.state.t == pytest.approx(full.state.t, abs=1e-12)
        assert np.allclose(resumed.state.w, full.state.w, atol=1e-12)

    def test_nan_guard(self, golden_geom, kernel_std):
        m = small_model(golden_geom, kernel_std, n=32, ns=8, t_end=60.0)
        m.dt = m.dt * 4.0   # force instability past the CFL limit
        with np.errstate(all="ignore"):
            with pytest.raises(errors.NanDetected):
                run(m, InitialData.single_field(contained_pulse()))

    def test_snapshots_written(self, golden_geom, kernel_std):
        m = small_model(golden_geom, kernel_std, n=48, ns=12, t_end=0.5)
        res = run(m, InitialData.single_field(contained_pulse()),
                  snapshot_times=(0.25,))
        assert len(res.snapshots) == 1
        t, arr = res.snapshots[0]
        assert abs(t - 0.25) < 2 * m.dt
        assert arr.shape == m.X.shape


class TestEnergyOp:
    def test_static_profile_quadratic_scaling(self, golden_geom, kernel_std):
        m = small_model(golden_geom, kernel_std, n=48, ns=12)
        pulse = contained_pulse()
        st1 = init_state(m, InitialData.single_field(pulse))
        st2 = init_state(m, InitialData.single_field(
            lambda X, Y: 2.0 * pulse(X, Y)))
        E1, _ = energy(st1, m)
        E2, _ = energy(st2, m)
        assert E2 == pytest.approx(4.0 * E1, rel=1e-12)

    def test_single_slice_damping_rate_closed_form(self, golden_geom,
                                                   kernel_std):
        # history concentrated at one s-sample: the damping rate equals the
        # kernel mass of that s-cell times the weighted gradient form
        m = small_model(golden_geom, kernel_std, n=48, ns=12)
        st = init_state(m, InitialData())
        k_idx = 4
        prof = np.sin(3.0 * m.X[m.patch]) * np.cos(2.0 * m.Y[m.patch])
        prof[~m.mask[m.patch]] = 0.0
        st.eta[k_idx] = prof
        _E, rate = energy(st, m)
        one = np.zeros((1, *prof.shape))
        one[0] = prof
        form = m.form_b_weighted(one, one, np.ones(1))
        expected = m.k1 * (kernel_std.g(m.sk[k_idx])
                           - kernel_std.g(m.sk[k_idx] + m.ds)) * form
        assert rate == pytest.approx(expected, rel=1e-12)


class TestProny:
    def test_zero_state_zero_residual(self, golden_geom, kernel_std):
        m = small_model(golden_geom, kernel_std, n=40, ns=10, t_end=0.4)
        res = run(m, InitialData(), prony_check=True)
        assert res.prony_residual == 0.0

    def test_wrapper_returns_residual(self, golden_geom, kernel_std):
        from transmission_lab.solver import cross_check_prony
        m = small_model(golden_geom, kernel_std, n=40, ns=10, t_end=0.4)
        resid = cross_check_prony(m, InitialData.single_field(contained_pulse()))
        assert 0.0 < resid < 1.0

    def test_residual_halves_with_ns(self, golden_geom, kernel_std):
        vals = []
        for ns in (12, 24):
            m = small_model(golden_geom, kernel_std, n=48, ns=ns, t_end=0.8)
            res = run(m, InitialData.single_field(contained_pulse()),
                      prony_check=True)
            vals.append(res.prony_residual)
        ratio = vals[0] / vals[1]
        assert 1.5 <= ratio <= 3.0   # first-order upwind in s

    def test_manufactured_oscillation_matches_closed_form(self, golden_geom,
                                                          kernel_std):
        # u(x, t) = sin(w t) P(x): the memory gradient is the closed-form
        # convolution  grad P * [k0 sin(wt) - a tau (sin wt - w tau cos wt)
        #                        / (1 + w^2 tau^2)]
        (a, tau), = kernel_std.terms
        omega = 3.0

        def profile(X, Y):
            r = np.sqrt(X ** 2 + Y ** 2)
            u = np.clip((0.95 - r) / 0.1, 0.0, 1.0)
            v = np.clip((r - 0.35) / 0.1, 0.0, 1.0)
            return (u * u * (3 - 2 * u)) * (v * v * (3 - 2 * v)) \
                * np.sin(2.0 * X)

        errs = []
        for ns in (64, 128):
            m = small_model(golden_geom, kernel_std, n=48, ns=ns, t_end=0.75,
                            dt=0.004)
            P = m.X[m.patch] * 0.0 + profile(m.X[m.patch], m.Y[m.patch])
            eta0 = np.array([np.sin(omega * s) * P for s in m.sk])
            eta0[:, ~m.mask[m.patch]] = 0.0
            eta = eta0
            t = 0.0
            n_steps = int(round(0.75 / m.dt))
            from transmission_lab.solver import _eta_step
            for _ in range(n_steps):
                dw = (math.sin(omega * (t + m.dt)) - math.sin(omega * t)) * P
                dw[~m.mask[m.patch]] = 0.0
                eta = _eta_step(m, eta, dw)
                t += m.dt
            grid_x = np.tensordot(m.gw, (eta[:, 1:, :] - eta[:, :-1, :]),
                                  axes=(0, 0)) / m.dx
            coef = (kernel_std.k0 * math.sin(omega * t)
                    - a * tau * (math.sin(omega * t)
                                 - omega * tau * math.cos(omega * t))
                    / (1.0 + omega ** 2 * tau ** 2))
            Pmask = P.copy()
            Pmask[~m.mask[m.patch]] = 0.0
            exact_x = coef * (Pmask[1:, :] - Pmask[:-1, :]) / m.dx
            scale = np.max(np.abs(exact_x))
            errs.append(np.max(np.abs(grid_x - exact_x)) / scale)
        assert errs[0] < 0.08                  # quadrature tolerance
        assert errs[1] < 0.62 * errs[0]        # first order in ds
