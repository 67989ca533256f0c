"""Scenario configuration: one TOML file drives every task.

Schema (version 1)::

    version = 1
    task = "full-pipeline"        # gcc-check | simulate | observability | full-pipeline
    seed = 1234                   # optional, default 0
    out_dir = "out"               # optional, default "out"

    [geometry]
    k1 = 1.0
    k2 = 2.0
    [geometry.outer]              # kind = circle | ellipse | rounded_polygon
    kind = "circle"
    radius = 1.0
    [geometry.inner]
    kind = "circle"
    radius = 0.3
    [geometry.damping]            # kind = radial | zero; radii r0..r3, plateau,
    kind = "radial"               # optional angular sector (degrees)
    plateau = 1.0
    r0 = 0.45
    r1 = 0.55

    [kernel]
    terms = [[5.0, 0.1]]          # (amplitude, relaxation time) pairs

    [grid]                        # needed by simulate/observability/full-pipeline
    nx = 128
    ny = 128
    t_end = 10.0
    s_max = 1.0
    ns = 32

    [sampling]                    # optional gcc sampling overrides
    n_gamma1 = 256

    [simulate]                    # optional
    initial = "bandlimited"       # bandlimited | mode | beam
    points_per_wavelength = 12.0
    mode_index = 4
    fit_window = [0.5, 1.0]       # fractions of t_end
    snapshot_times = []
    beam = {center=[0.0,0.88], direction=[1.0,0.0], width=0.06, wavelength=0.12}

    [observability]               # optional
    horizon = 8.0
    ensemble = 6
    points_per_wavelength = 8.0
    probe_modes = 10

All lengths are dimensionless; seeds are 64-bit integers recorded in reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:      # python < 3.11
    import tomli as tomllib

from .errors import ConfigParseError
from .gcc import GccSampling
from .geometry import build_geometry
from .kernel import build_kernel
from .solver import GridSpec

TASKS = ("gcc-check", "simulate", "observability", "full-pipeline")


@dataclass
class Scenario:
    task: str
    seed: int
    out_dir: str
    geometry_spec: dict
    kernel_terms: list
    grid: GridSpec | None
    sampling: GccSampling
    simulate: dict = field(default_factory=dict)
    observability: dict = field(default_factory=dict)
    version: int = 1

    def build_geometry(self):
        return build_geometry(self.geometry_spec)

    def build_kernel(self):
        return build_kernel(self.kernel_terms)


def _require(mapping, key, context):
    if key not in mapping:
        raise ConfigParseError(f"missing '{key}' in {context}")
    return mapping[key]


def load_scenario(path, out_dir=None, seed=None, task=None):
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except FileNotFoundError as exc:
        raise ConfigParseError(f"cannot read config: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigParseError(f"invalid TOML: {exc}") from exc

    version = int(raw.get("version", 1))
    if version != 1:
        raise ConfigParseError(f"unsupported config version {version}")
    task = task or raw.get("task")
    if task not in TASKS:
        raise ConfigParseError(f"task must be one of {TASKS}, got {task!r}")

    geometry = dict(_require(raw, "geometry", "config"))
    for key in ("outer", "inner"):
        if key not in geometry:
            raise ConfigParseError(f"missing geometry.{key}")

    kernel_sec = raw.get("kernel")
    if kernel_sec is None:
        raise ConfigParseError("missing [kernel] section")
    terms = _require(kernel_sec, "terms", "[kernel]")

    grid = None
    if task in ("simulate", "observability", "full-pipeline"):
        gsec = raw.get("grid")
        if gsec is None:
            raise ConfigParseError(f"task '{task}' needs a [grid] section")
        try:
            grid = GridSpec(
                nx=int(_require(gsec, "nx", "[grid]")),
                ny=int(_require(gsec, "ny", "[grid]")),
                t_end=float(_require(gsec, "t_end", "[grid]")),
                s_max=float(gsec.get("s_max", 10.0)),
                ns=int(gsec.get("ns", 32)),
                dt=(None if gsec.get("dt") is None else float(gsec["dt"])),
                cfl_safety=float(gsec.get("cfl_safety", 0.5)),
                record_every=(None if gsec.get("record_every") is None
                              else int(gsec["record_every"])),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigParseError(f"bad [grid] value: {exc}") from exc

    samp_kw = dict(raw.get("sampling", {}))
    try:
        sampling = GccSampling(**samp_kw)
    except TypeError as exc:
        raise ConfigParseError(f"bad [sampling] key: {exc}") from exc

    return Scenario(
        task=task,
        seed=int(seed if seed is not None else raw.get("seed", 0)),
        out_dir=str(out_dir if out_dir is not None else raw.get("out_dir", "out")),
        geometry_spec=geometry,
        kernel_terms=[tuple(t) for t in terms],
        grid=grid,
        sampling=sampling,
        simulate=dict(raw.get("simulate", {})),
        observability=dict(raw.get("observability", {})),
        version=version,
    )
