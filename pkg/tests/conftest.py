import numpy as np
import pytest

from transmission_lab.geometry import build_geometry
from transmission_lab.kernel import build_kernel

GOLDEN_SPEC = {
    "outer": {"kind": "circle", "radius": 1.0},
    "inner": {"kind": "circle", "radius": 0.3},
    "k1": 1.0,
    "k2": 2.0,
    "damping": {"kind": "radial", "plateau": 1.0, "r0": 0.45, "r1": 0.55},
}

# damping confined to a thin annular sector strictly inside the annulus:
# whispering chords near the outer wall never meet it
TRAPPED_SPEC = {
    "outer": {"kind": "circle", "radius": 1.0},
    "inner": {"kind": "circle", "radius": 0.3},
    "k1": 1.0,
    "k2": 2.0,
    "damping": {"kind": "radial", "plateau": 1.0, "r0": 0.45, "r1": 0.5,
                "r2": 0.65, "r3": 0.7, "angle_center_deg": 180.0,
                "angle_plateau_half_deg": 20.0,
                "angle_support_half_deg": 30.0},
}

# compact radial shell, no boundary contact: free flight on both sides
COMPACT_BUMP_SPEC = {
    "outer": {"kind": "circle", "radius": 1.0},
    "inner": {"kind": "circle", "radius": 0.3},
    "k1": 1.0,
    "k2": 2.0,
    "damping": {"kind": "radial", "plateau": 1.0, "r0": 0.45, "r1": 0.55,
                "r2": 0.7, "r3": 0.8},
}


@pytest.fixture(scope="session")
def golden_geom():
    return build_geometry(GOLDEN_SPEC)


@pytest.fixture(scope="session")
def trapped_geom():
    return build_geometry(TRAPPED_SPEC)


@pytest.fixture(scope="session")
def compact_bump_geom():
    return build_geometry(COMPACT_BUMP_SPEC)


@pytest.fixture(scope="session")
def kernel_std():
    # mass k0 = 0.5, relaxation time 0.1
    return build_kernel([(5.0, 0.1)])


@pytest.fixture(scope="session")
def nodamp_geom():
    spec = dict(GOLDEN_SPEC)
    spec["damping"] = {"kind": "zero"}
    return build_geometry(spec)


def contained_pulse(center_r=0.6, width=0.16, edge=0.97, margin=0.12):
    """Radial Gaussian ring vanishing smoothly before the outer wall."""
    def f(X, Y):
        r = np.sqrt(X ** 2 + Y ** 2)
        core = np.exp(-((r - center_r) / width) ** 2)
        u = np.clip((edge - r) / margin, 0.0, 1.0)
        return core * (u * u * (3.0 - 2.0 * u))
    return f
