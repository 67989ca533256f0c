"""Artifact writers: deterministic JSON reports, CSV traces, plot-ready data.

Every figure-like output is derivable from the emitted CSVs alone; JSON files
are written with sorted keys and repr floats so identical runs produce
byte-identical reports.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import MissingArtifact


def write_json(path, payload):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        json.dump(payload, f, sort_keys=True, indent=1, default=_coerce)
        f.write("\n")


def _coerce(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    raise TypeError(f"cannot serialize {type(obj)}")


# ---------------------------------------------------------------------------
# Ray traces
# ---------------------------------------------------------------------------

def ray_trace_records(trace, ray_id=0):
    """Line-delimited JSON records for one trace: segments, events, verdict."""
    recs = []
    for i, seg in enumerate(trace.segments):
        recs.append({
            "type": "segment", "ray": ray_id, "index": i,
            "medium": seg.start.medium.name.lower(),
            "t0": seg.start.t, "t1": seg.end.t,
            "points": [[float(p[0]), float(p[1])] for p in seg.points],
        })
    for i, ev in enumerate(trace.events):
        recs.append({
            "type": "event", "ray": ray_id, "index": i,
            "curve": ev.curve_id, "s": ev.s,
            "point": [float(ev.point[0]), float(ev.point[1])], "t": ev.t,
            "incidence_angle": ev.incidence_angle,
            "classification": (ev.classification.value
                               if hasattr(ev.classification, "value")
                               else ev.classification),
            "glancing": ev.glancing,
            "outcomes": [tag for tag, _ in ev.outcomes],
        })
    recs.append({"type": "verdict", "ray": ray_id,
                 "terminated": trace.terminated.value,
                 "supp_entry": (list(trace.supp_entry[0])
                                if trace.supp_entry else None)})
    return recs


def write_ray_jsonl(path, traces):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        for rid, tr in enumerate(traces):
            for rec in ray_trace_records(tr, rid):
                f.write(json.dumps(rec, sort_keys=True, default=_coerce))
                f.write("\n")


def write_ray_polylines_csv(path, traces):
    """Flat polyline CSV: ray, vertex position, time flag for event rows."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        f.write("ray,segment,x,y,is_event\n")
        for rid, tr in enumerate(traces):
            for i, seg in enumerate(tr.segments):
                for p in seg.points:
                    f.write(f"{rid},{i},{float(p[0])!r},{float(p[1])!r},0\n")
            for ev in tr.events:
                f.write(f"{rid},-1,{float(ev.point[0])!r},{float(ev.point[1])!r},1\n")


# ---------------------------------------------------------------------------
# GCC report arcs and energy traces
# ---------------------------------------------------------------------------

def write_region_arcs_csv(path, geom, regions):
    """Plot-ready arcs: curve id, interval in parameter and endpoints in
    Cartesian coordinates."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        f.write("name,curve,s0,s1,x0,y0,x1,y1\n")
        for name, region in regions:
            if region is None:
                continue
            curve = geom.outer if region.curve_id == "outer" else geom.inner
            for a, b in region.intervals:
                p0 = curve.point(a % 1.0)
                p1 = curve.point(b % 1.0)
                f.write(f"{name},{region.curve_id},{float(a)!r},{float(b)!r},"
                        f"{float(p0[0])!r},{float(p0[1])!r},"
                        f"{float(p1[0])!r},{float(p1[1])!r}\n")


def write_log_energy_csv(in_trace_csv, out_csv):
    """(t, log E) pairs from an energy-trace CSV (plot-ready)."""
    if not os.path.exists(in_trace_csv):
        raise MissingArtifact(in_trace_csv)
    rows = np.genfromtxt(in_trace_csv, delimiter=",", names=True)
    os.makedirs(os.path.dirname(os.path.abspath(out_csv)), exist_ok=True)
    with open(out_csv, "w") as f:
        f.write("t,logE\n")
        for t, e in zip(np.atleast_1d(rows["t"]), np.atleast_1d(rows["E"])):
            if e > 0:
                f.write(f"{float(t)!r},{float(np.log(e))!r}\n")


def write_snapshot(path_prefix, t, array, dx, dy):
    """Flat binary array plus a JSON header with dimensions and spacing."""
    os.makedirs(os.path.dirname(os.path.abspath(path_prefix)), exist_ok=True)
    array.astype(np.float64).tofile(path_prefix + ".bin")
    write_json(path_prefix + ".json", {
        "shape": list(array.shape), "dtype": "float64",
        "dx": dx, "dy": dy, "t": t, "order": "C",
    })


def gcc_arcs_from_report_json(report_path, geom, out_csv):
    if not os.path.exists(report_path):
        raise MissingArtifact(report_path)
    with open(report_path) as f:
        rep = json.load(f)
    gcc_part = rep.get("gcc", rep)

    class _R:
        def __init__(self, d):
            self.curve_id = d["curve"]
            self.intervals = [tuple(iv) for iv in d["intervals"]]

    regions = []
    for name in ("gamma1", "gamma2"):
        if gcc_part.get(name):
            regions.append((name, _R(gcc_part[name])))
    om = gcc_part.get("omega1f")
    if om:
        regions.append(("omega1f_outer", _R(om["outer_arcs"])))
        regions.append(("omega1f_interface", _R(om["interface_arcs"])))
    write_region_arcs_csv(out_csv, geom, regions)
