#!/usr/bin/env python3
"""Self-convergence study of the discrete energy identity.

Refines (h, ds, dt) together and tabulates the worst per-unit-time residual
of E(t2) - E(t1) against the damping quadrature, which should drop at first
order once the history oscillations are resolved on the s-grid.
"""

import argparse
import math
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import numpy as np

from transmission_lab.geometry import build_geometry
from transmission_lab.kernel import build_kernel
from transmission_lab.solver import DiscreteModel, GridSpec, InitialData, run

GOLDEN = {
    "outer": {"kind": "circle", "radius": 1.0},
    "inner": {"kind": "circle", "radius": 0.3},
    "k1": 1.0, "k2": 2.0,
    "damping": {"kind": "radial", "plateau": 1.0, "r0": 0.45, "r1": 0.55},
}


def pulse(X, Y):
    r = np.sqrt(X ** 2 + Y ** 2)
    core = np.exp(-((r - 0.58) / 0.24) ** 2)
    u = np.clip((0.93 - r) / 0.18, 0.0, 1.0)
    return core * (u * u * (3.0 - 2.0 * u))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=int, default=3)
    ap.add_argument("--base-n", type=int, default=64)
    ap.add_argument("--base-ns", type=int, default=48)
    ap.add_argument("--t-end", type=float, default=1.0)
    args = ap.parse_args()

    geom = build_geometry(GOLDEN)
    kernel = build_kernel([(5.0, 0.1)])
    print(f"{'grid':>6}{'ns':>6}{'dt':>12}{'max res/t':>14}{'order':>8}"
          f"{'seconds':>10}")
    prev = None
    for lv in range(args.levels):
        n = args.base_n * 2 ** lv
        ns = args.base_ns * 2 ** lv
        grid = GridSpec(nx=n, ny=n, t_end=args.t_end, s_max=1.0, ns=ns,
                        record_every=8)
        model = DiscreteModel.from_geometry(geom, kernel, grid)
        t0 = time.time()
        res = run(model, InitialData.single_field(pulse))
        rate = res.trace.max_residual_rate()
        order = "" if prev is None else f"{math.log2(prev / rate):.2f}"
        prev = rate
        print(f"{n:>6}{ns:>6}{model.dt:>12.5f}{rate:>14.3e}{order:>8}"
              f"{time.time() - t0:>10.1f}")


if __name__ == "__main__":
    main()
