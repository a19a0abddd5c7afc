"""Artifact serialization for the planning toolkit.

Scenario files are YAML; everything else (SDF grids, search paths,
trajectories, run reports, benchmark tables) is line-oriented structured
text with a versioned magic line.  All formats are documented in
FORMATS.md at the repository root.  Floats are written with %.17g so dumps
round-trip bit-exactly, and byte-identical inputs produce byte-identical
dumps.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import yaml

from .envmap import ObstacleSet, Sdf, make_target
from .errors import ParseError
from .kinematics import RobotState
from .scenario import Scenario
from .spline import FlatTrajectory, QuinticSpline, compose_flat

GRID_MAGIC = "# trailerplan sdf-grid v1"
PATH_MAGIC = "# trailerplan path v1"
TRAJ_MAGIC = "# trailerplan trajectory v1"
REPORT_MAGIC = "# trailerplan report v1"


def _fmt(x):
    return "%.17g" % float(x)


def _fmt_row(vals):
    return " ".join(_fmt(v) for v in vals)


class _Reader:
    """Line reader that reports 1-based line numbers in parse errors."""

    def __init__(self, text, path="<string>"):
        self.lines = text.splitlines()
        self.path = path
        self.pos = 0

    def next(self):
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            self.pos += 1
            if line.strip():
                return line.strip()
        raise ParseError("%s: unexpected end of file" % self.path)

    def fail(self, msg):
        raise ParseError("%s:%d: %s" % (self.path, self.pos, msg))

    def expect(self, key):
        line = self.next()
        parts = line.split()
        if parts[0] != key:
            self.fail("expected '%s', got '%s'" % (key, parts[0]))
        return parts[1:]

    def floats(self, count):
        line = self.next()
        parts = line.split()
        if len(parts) != count:
            self.fail("expected %d values, got %d" % (count, len(parts)))
        try:
            return [float(p) for p in parts]
        except ValueError:
            self.fail("non-numeric value")


# ----------------------------------------------------------------------
# scenario files (YAML)

def scenario_to_text(sc):
    d = {
        "seed": sc.seed,
        "bounds": [float(v) for v in sc.bounds],
        "counts": [int(c) for c in sc.counts],
        "band": [float(v) for v in sc.band],
        "resolution": float(sc.resolution),
        "start": {
            "x": float(sc.start.x), "y": float(sc.start.y),
            "theta0": float(sc.start.theta0), "v0": float(sc.start.v0),
            "thetas": [float(t) for t in sc.start.thetas],
        },
        "target_vertices": [[float(x), float(y)]
                            for x, y in sc.region.vertices],
        "obstacles": [[[float(x), float(y)] for x, y in poly]
                      for poly in sc.obstacles.polygons],
    }
    return yaml.safe_dump(d, sort_keys=True)


def save_scenario(sc, path):
    with open(path, "w") as f:
        f.write(scenario_to_text(sc))


def load_scenario(path):
    with open(path) as f:
        raw = yaml.safe_load(f)
    try:
        start = RobotState(x=float(raw["start"]["x"]),
                           y=float(raw["start"]["y"]),
                           theta0=float(raw["start"]["theta0"]),
                           v0=float(raw["start"]["v0"]),
                           thetas=tuple(float(t)
                                        for t in raw["start"]["thetas"]))
        polys = [np.array(p, dtype=float) for p in raw["obstacles"]]
        bounds = tuple(float(v) for v in raw["bounds"])
        return Scenario(
            seed=int(raw.get("seed", 0)),
            bounds=bounds,
            counts=tuple(int(c) for c in raw.get("counts", (0, 0, 0))),
            band=tuple(float(v) for v in raw.get("band", (0.0, math.inf))),
            resolution=float(raw["resolution"]),
            obstacles=ObstacleSet(polys, bounds),
            start=start,
            region=make_target(np.array(raw["target_vertices"], dtype=float)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError("%s: bad scenario file (%s)" % (path, exc)) from exc


# ----------------------------------------------------------------------
# SDF grid dump

def save_grid(sdf, path):
    with open(path, "w") as f:
        f.write(GRID_MAGIC + "\n")
        f.write("width %d\n" % sdf.nx)
        f.write("height %d\n" % sdf.ny)
        f.write("resolution %s\n" % _fmt(sdf.resolution))
        f.write("origin %s %s\n" % (_fmt(sdf.origin[0]), _fmt(sdf.origin[1])))
        f.write("ceiling %s\n" % _fmt(sdf.ceiling))
        for row in sdf.values:
            f.write(_fmt_row(row) + "\n")


def load_grid(path):
    with open(path) as f:
        rd = _Reader(f.read(), path)
    if rd.next() != GRID_MAGIC:
        rd.fail("bad magic line")
    nx = int(rd.expect("width")[0])
    ny = int(rd.expect("height")[0])
    res = float(rd.expect("resolution")[0])
    origin = tuple(float(v) for v in rd.expect("origin"))
    ceiling = float(rd.expect("ceiling")[0])
    values = np.array([rd.floats(nx) for _ in range(ny)])
    return Sdf(origin=origin, resolution=res, values=values, ceiling=ceiling)


# ----------------------------------------------------------------------
# search path dump

PATH_COLUMNS = ("t", "x", "y", "theta0", "v0", "delta")


def save_path(sp, path):
    n = sp.trailer_yaws.shape[1]
    cols = PATH_COLUMNS + tuple("theta_%d" % (i + 1) for i in range(n))
    with open(path, "w") as f:
        f.write(PATH_MAGIC + "\n")
        f.write("n_trailers %d\n" % n)
        f.write("length %s\n" % _fmt(sp.length))
        f.write("columns %s\n" % " ".join(cols))
        f.write("rows %d\n" % len(sp.t))
        data = np.column_stack([sp.t, sp.x, sp.y, sp.theta0, sp.v0,
                                sp.delta, sp.trailer_yaws])
        for row in data:
            f.write(_fmt_row(row) + "\n")


def load_path(path):
    with open(path) as f:
        rd = _Reader(f.read(), path)
    if rd.next() != PATH_MAGIC:
        rd.fail("bad magic line")
    n = int(rd.expect("n_trailers")[0])
    length = float(rd.expect("length")[0])
    cols = rd.expect("columns")
    rows = int(rd.expect("rows")[0])
    data = np.array([rd.floats(len(cols)) for _ in range(rows)])
    return {"n_trailers": n, "length": length, "columns": cols, "data": data}


# ----------------------------------------------------------------------
# trajectory dump

def _write_coeff_block(f, name, spline):
    f.write("%s pieces %d dims %d\n" % (name, spline.n_pieces,
                                        spline.n_dims))
    for j in range(spline.n_pieces):
        for row in spline.coeffs[j]:
            f.write(_fmt_row(row) + "\n")


def _read_coeff_block(rd, name):
    parts = rd.expect(name)
    if parts[0] != "pieces" or parts[2] != "dims":
        rd.fail("bad %s header" % name)
    m, d = int(parts[1]), int(parts[3])
    coeffs = np.array([rd.floats(d) for _ in range(6 * m)])
    return coeffs.reshape(m, 6, d)


def sample_columns(n_trailers):
    base = ("t", "s", "x", "y", "theta0", "v0", "acc", "kappa", "a_lat")
    return base + tuple("theta_%d" % (i + 1) for i in range(n_trailers))


def trajectory_samples(traj, dt):
    """Dense row samples (see sample_columns) at spacing <= dt."""
    tf = traj.t_final
    count = max(2, int(math.ceil(tf / dt)) + 1)
    ts = np.linspace(0.0, tf, count)
    arr = traj.flat_arrays(ts)
    phys = compose_flat(arr)
    cols = [ts, arr["s0"], arr["x0"], arr["y0"], phys["theta0"],
            phys["v0"], phys["a"], phys["kappa"], phys["a_lat"]]
    for i in range(traj.n_trailers):
        cols.append(arr["th"][:, i])
    return np.column_stack(cols)


def save_trajectory(traj, params, path, dt=0.02):
    n = traj.n_trailers
    samples = trajectory_samples(traj, dt)
    with open(path, "w") as f:
        f.write(TRAJ_MAGIC + "\n")
        f.write("n_trailers %d\n" % n)
        f.write("t_final %s\n" % _fmt(traj.t_final))
        f.write("v_mlon %s\n" % _fmt(params.v_mlon))
        f.write("kappa_max %s\n" % _fmt(params.kappa_max))
        f.write("s_lengths %s\n" % _fmt_row(traj.xy.lengths))
        _write_coeff_block(f, "xy_coeffs", traj.xy)
        _write_coeff_block(f, "s_coeffs", traj.s_of_t)
        if n:
            _write_coeff_block(f, "theta_coeffs", traj.thetas)
        f.write("columns %s\n" % " ".join(sample_columns(n)))
        f.write("samples %d\n" % len(samples))
        for row in samples:
            f.write(_fmt_row(row) + "\n")


def load_trajectory(path):
    """Rebuild the FlatTrajectory and return (trajectory, meta dict)."""
    with open(path) as f:
        rd = _Reader(f.read(), path)
    if rd.next() != TRAJ_MAGIC:
        rd.fail("bad magic line")
    n = int(rd.expect("n_trailers")[0])
    tf = float(rd.expect("t_final")[0])
    v_mlon = float(rd.expect("v_mlon")[0])
    kappa_max = float(rd.expect("kappa_max")[0])
    s_lengths = np.array([float(v) for v in rd.expect("s_lengths")])
    cxy = _read_coeff_block(rd, "xy_coeffs")
    cs = _read_coeff_block(rd, "s_coeffs")
    cth = _read_coeff_block(rd, "theta_coeffs") if n else None
    cols = rd.expect("columns")
    rows = int(rd.expect("samples")[0])
    data = np.array([rd.floats(len(cols)) for _ in range(rows)])
    m = cs.shape[0]
    xy = QuinticSpline(coeffs=cxy, lengths=s_lengths)
    s_of_t = QuinticSpline(coeffs=cs, lengths=np.full(m, tf / m))
    thetas = None
    if n:
        om = cth.shape[0]
        thetas = QuinticSpline(coeffs=cth, lengths=np.full(om, tf / om))
    traj = FlatTrajectory(xy=xy, s_of_t=s_of_t, thetas=thetas)
    meta = {"n_trailers": n, "t_final": tf, "v_mlon": v_mlon,
            "kappa_max": kappa_max, "columns": cols, "samples": data}
    return traj, meta


# ----------------------------------------------------------------------
# run report

def report_to_text(report):
    d = dataclasses.asdict(report)
    lines = [REPORT_MAGIC]
    for key in sorted(d):
        val = d[key]
        if val is None:
            lines.append("%s none" % key)
        elif isinstance(val, bool):
            lines.append("%s %s" % (key, "true" if val else "false"))
        elif isinstance(val, (int, np.integer)):
            lines.append("%s %d" % (key, val))
        elif isinstance(val, float):
            lines.append("%s %s" % (key, _fmt(val)))
        else:
            lines.append("%s %s" % (key, val))
    return "\n".join(lines) + "\n"


def save_report(report, path):
    with open(path, "w") as f:
        f.write(report_to_text(report))


def load_report(path):
    with open(path) as f:
        rd = _Reader(f.read(), path)
    if rd.next() != REPORT_MAGIC:
        rd.fail("bad magic line")
    out = {}
    while True:
        try:
            line = rd.next()
        except ParseError:
            return out
        key, raw = line.split(None, 1)
        if raw == "none":
            out[key] = None
        elif raw in ("true", "false"):
            out[key] = raw == "true"
        else:
            try:
                out[key] = int(raw)
            except ValueError:
                try:
                    out[key] = float(raw)
                except ValueError:
                    out[key] = raw
