#!/usr/bin/env python3
"""Run the golden-annulus full pipeline and print a one-screen summary."""

import json
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from transmission_lab.cli import run_scenario

ROOT = pathlib.Path(__file__).resolve().parents[1]


def main():
    cfg = ROOT / "scenarios" / "golden_annulus.toml"
    out = ROOT / "out" / "golden"
    t0 = time.time()
    code = run_scenario(str(cfg), out_dir=str(out))
    report = json.loads((out / "report.json").read_text())
    gcc = report["gcc"]
    sim = report["simulate"]
    obs = report["observability"]
    print(f"exit code              : {code}")
    print(f"hypotheses satisfied   : {gcc['hypotheses_satisfied']}")
    print(f"gamma1 measure         : {gcc['gamma1']['measure']:.3f}")
    print(f"gamma2 measure         : {gcc['gamma2']['measure']:.3f}")
    print(f"escape verdict         : {gcc['ueg']['status']}")
    print(f"fitted decay rate      : {sim['fit']['lambda']:.4f} "
          f"(r^2 = {sim['fit']['r_squared']:.4f})")
    print(f"observability constant : {obs['c_obs']:.3f} "
          f"over {obs['ensemble_size']} members")
    print(f"wall time              : {time.time() - t0:.1f}s")
    print(f"artifacts              : {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
