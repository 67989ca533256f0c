"""Scenario runner: `transmission-lab <task> --config <file> [--out] [--seed]`.

Exit codes: 0 on success, 2 when the scenario computed cleanly but the
geometric hypotheses are violated (so batch sweeps can triage), 1 on errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import observability as obslib
from .config import TASKS, load_scenario
from .errors import TransmissionLabError
from .gcc import full_report
from .reports import (
    gcc_arcs_from_report_json,
    write_json,
    write_log_energy_csv,
    write_region_arcs_csv,
    write_snapshot,
)
from .solver import DiscreteModel, InitialData, run


def _decay_task(scenario, geom, kernel, out_dir):
    sim = scenario.simulate
    grid = scenario.grid
    model = DiscreteModel.from_geometry(geom, kernel, grid)
    initial = sim.get("initial", "bandlimited")
    if initial == "bandlimited":
        ppw = float(sim.get("points_per_wavelength", 12.0))
        data = obslib.random_data(model, scenario.seed, ppw)
        state = obslib.normalized_state(model, data)
    elif initial == "mode":
        idx = int(sim.get("mode_index", 0))
        _evals, modes = obslib.discrete_modes(model, idx + 1)
        state = obslib.normalized_state(model, InitialData.single_field(modes[idx]))
    elif initial == "beam":
        beam = sim.get("beam", {})
        data = obslib.gaussian_beam_data(
            center=tuple(beam.get("center", (0.0, 0.8))),
            direction=tuple(beam.get("direction", (1.0, 0.0))),
            width=float(beam.get("width", 0.06)),
            wavelength=float(beam.get("wavelength", 0.12)),
            speed=float(beam.get("speed", 1.0)))
        state = obslib.normalized_state(model, data)
    else:
        raise TransmissionLabError(f"unknown initial data kind '{initial}'")
    snaps = [float(t) for t in sim.get("snapshot_times", [])]
    result = run(model, state=state, snapshot_times=snaps)
    trace_path = os.path.join(out_dir, "energy_trace.csv")
    result.trace.to_csv(trace_path)
    write_log_energy_csv(trace_path, os.path.join(out_dir, "log_energy.csv"))
    for i, (t, arr) in enumerate(result.snapshots):
        write_snapshot(os.path.join(out_dir, f"snapshot_{i:03d}"), t, arr,
                       model.dx, model.dy)
    frac = sim.get("fit_window", (0.5, 1.0))
    window = (frac[0] * grid.t_end, frac[1] * grid.t_end)
    fit = obslib.fit_decay(result.trace, window)
    return {
        "initial": initial,
        "fit": fit.to_dict(),
        "energy_final": float(result.trace.E[-1]),
        "damping_total": float(result.trace.D[-1]),
        "max_identity_residual_rate": result.trace.max_residual_rate(),
        "tail_bound": result.tail_bound,
        "trace_csv": os.path.basename(trace_path),
    }


def run_scenario(path, out_dir=None, seed=None, task=None):
    """Execute one scenario file; returns the process exit code."""
    scenario = load_scenario(path, out_dir=out_dir, seed=seed, task=task)
    out = scenario.out_dir
    os.makedirs(out, exist_ok=True)
    geom = scenario.build_geometry()
    kernel = scenario.build_kernel()
    payload = {"version": scenario.version, "task": scenario.task,
               "seed": scenario.seed, "config": os.path.abspath(path)}
    exit_code = 0

    if scenario.task in ("gcc-check", "full-pipeline"):
        rep = full_report(geom, kernel, scenario.sampling)
        payload["gcc"] = rep.to_dict()
        write_region_arcs_csv(
            os.path.join(out, "gcc_arcs.csv"), geom,
            [("gamma1", rep.gamma1), ("gamma2", rep.gamma2),
             ("omega1f_outer", rep.omega1f.outer_arcs if rep.omega1f else None),
             ("omega1f_interface",
              rep.omega1f.interface_arcs if rep.omega1f else None)])
        if not rep.hypotheses_satisfied:
            exit_code = 2

    if scenario.task in ("simulate", "full-pipeline"):
        payload["simulate"] = _decay_task(scenario, geom, kernel, out)

    if scenario.task in ("observability", "full-pipeline"):
        osec = scenario.observability
        T = float(osec.get("horizon", scenario.grid.t_end))
        est = obslib.estimate_observability(
            geom, kernel, scenario.grid, T=T,
            n_members=int(osec.get("ensemble", 6)),
            seed=scenario.seed,
            points_per_wavelength=float(osec.get("points_per_wavelength", 8.0)))
        payload["observability"] = est.to_dict()
        n_probe = int(osec.get("probe_modes", 0))
        if n_probe > 0:
            probe = obslib.invisible_probe(geom, kernel, scenario.grid,
                                           n_modes=n_probe)
            payload["invisible_probe"] = probe.to_dict()

    write_json(os.path.join(out, "report.json"), payload)
    return exit_code


def emit_plots(report=None, trace=None, out_dir="plots", config=None):
    """Derive plot-ready CSVs from existing artifacts."""
    os.makedirs(out_dir, exist_ok=True)
    wrote = []
    if trace is not None:
        dst = os.path.join(out_dir, "log_energy.csv")
        write_log_energy_csv(trace, dst)
        wrote.append(dst)
    if report is not None:
        if config is None:
            raise TransmissionLabError(
                "emit-plots needs --config to rebuild geometry for arc output")
        scenario = load_scenario(config, task="gcc-check")
        geom = scenario.build_geometry()
        dst = os.path.join(out_dir, "gcc_arcs.csv")
        gcc_arcs_from_report_json(report, geom, dst)
        wrote.append(dst)
    return wrote


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="transmission-lab",
        description="numerical lab for the two-medium viscoelastic "
                    "transmission system")
    sub = parser.add_subparsers(dest="command", required=True)
    for task in TASKS:
        p = sub.add_parser(task, help=f"run the {task} task")
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
    pp = sub.add_parser("emit-plots", help="plot-ready CSVs from artifacts")
    pp.add_argument("--report", default=None)
    pp.add_argument("--trace", default=None)
    pp.add_argument("--config", default=None)
    pp.add_argument("--out", default="plots")
    args = parser.parse_args(argv)

    try:
        if args.command == "emit-plots":
            wrote = emit_plots(report=args.report, trace=args.trace,
                               out_dir=args.out, config=args.config)
            for w in wrote:
                print(w)
            return 0
        return run_scenario(args.config, out_dir=args.out, seed=args.seed,
                            task=args.command)
    except TransmissionLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
