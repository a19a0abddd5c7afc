"""Parsers for the planner's documented dump formats.

Everything here reads the text formats as documented; the planner package
itself is never imported. Errors always carry the offending 1-based line
number.
"""

import csv

import numpy as np
import yaml

TRAJ_MAGIC = "# trailerplan trajectory v1"

BENCH_COLUMNS = ("n_trailers", "seed", "n_tri", "n_quad", "n_pent",
                 "band_lo", "band_hi", "success", "stage", "l_traj",
                 "t_d", "mean_kappa", "n_expanded", "n_evals")

SAMPLE_COLUMNS = ("t", "s", "x", "y", "theta0", "v0", "acc", "kappa",
                  "a_lat")


class ParseError(Exception):
    """Input file rejected; includes the 1-based offending line."""

    def __init__(self, path, line, msg):
        super().__init__("%s:%d: %s" % (path, line, msg))
        self.path = path
        self.line = line


class _Lines:
    def __init__(self, path):
        with open(path) as f:
            self.lines = f.read().splitlines()
        self.path = path
        self.pos = 0

    def fail(self, msg, line=None):
        raise ParseError(self.path, self.pos if line is None else line, msg)

    def next(self):
        if self.pos >= len(self.lines):
            self.pos = len(self.lines) + 1
            self.fail("unexpected end of file")
        self.pos += 1
        return self.lines[self.pos - 1]

    def keyed(self, key, count=None):
        parts = self.next().split()
        if not parts or parts[0] != key:
            self.fail("expected '%s' line" % key)
        if count is not None and len(parts) != count + 1:
            self.fail("'%s' needs %d values" % (key, count))
        return parts[1:]

    def floats(self, count):
        parts = self.next().split()
        if len(parts) != count:
            self.fail("expected %d values, got %d" % (count, len(parts)))
        try:
            return [float(p) for p in parts]
        except ValueError:
            self.fail("bad float")

    def int_of(self, text):
        try:
            return int(text)
        except ValueError:
            self.fail("bad integer %r" % text)

    def float_of(self, text):
        try:
            return float(text)
        except ValueError:
            self.fail("bad float %r" % text)


def _coeff_block(r, key, want_dims=None):
    parts = r.next().split()
    if len(parts) != 5 or parts[0] != key or parts[1] != "pieces" \
            or parts[3] != "dims":
        r.fail("expected '%s pieces <n> dims <d>' header" % key)
    pieces = r.int_of(parts[2])
    dims = r.int_of(parts[4])
    if pieces < 1:
        r.fail("need at least one piece")
    if want_dims is not None and dims != want_dims:
        r.fail("expected dims %d" % want_dims)
    rows = [r.floats(dims) for _ in range(6 * pieces)]
    return np.array(rows).reshape(pieces, 6, dims)


def parse_trajectory(path):
    """Trajectory dump -> dict of meta, spline blocks, and dense samples."""
    r = _Lines(path)
    if r.next() != TRAJ_MAGIC:
        r.fail("bad magic")
    n = r.int_of(r.keyed("n_trailers", 1)[0])
    if n < 0:
        r.fail("negative trailer count")
    t_final = r.float_of(r.keyed("t_final", 1)[0])
    v_mlon = r.float_of(r.keyed("v_mlon", 1)[0])
    kappa_max = r.float_of(r.keyed("kappa_max", 1)[0])
    s_lengths = np.array([r.float_of(p) for p in r.keyed("s_lengths")])
    if len(s_lengths) < 1:
        r.fail("empty s_lengths")
    xy = _coeff_block(r, "xy_coeffs", 2)
    if xy.shape[0] != len(s_lengths):
        r.fail("xy_coeffs piece count differs from s_lengths")
    s_of_t = _coeff_block(r, "s_coeffs", 1)
    theta = None
    if n > 0:
        theta = _coeff_block(r, "theta_coeffs", n)
    columns = tuple(r.keyed("columns"))
    want = SAMPLE_COLUMNS + tuple("theta_%d" % (i + 1) for i in range(n))
    if columns != want:
        r.fail("columns must be %s" % " ".join(want))
    count = r.int_of(r.keyed("samples", 1)[0])
    if count < 2:
        r.fail("need at least 2 samples")
    samples = np.array([r.floats(len(columns)) for _ in range(count)])
    return {
        "n_trailers": n, "t_final": t_final, "v_mlon": v_mlon,
        "kappa_max": kappa_max, "s_lengths": s_lengths,
        "xy_coeffs": xy, "s_coeffs": s_of_t, "theta_coeffs": theta,
        "columns": columns, "samples": samples,
    }


def _yaml_line(err):
    mark = getattr(err, "problem_mark", None)
    return mark.line + 1 if mark is not None else 1


def parse_scenario(path):
    """Scenario YAML -> dict with bounds, start, target, obstacle arrays."""
    with open(path) as f:
        text = f.read()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ParseError(path, _yaml_line(e), "invalid YAML: %s"
                         % getattr(e, "problem", e)) from e
    if not isinstance(data, dict):
        raise ParseError(path, 1, "scenario must be a mapping")
    for key in ("bounds", "start", "target_vertices", "obstacles"):
        if key not in data:
            raise ParseError(path, 1, "missing key '%s'" % key)
    bounds = [float(v) for v in data["bounds"]]
    if len(bounds) != 4:
        raise ParseError(path, 1, "bounds needs 4 values")
    start = data["start"]
    for key in ("x", "y", "theta0"):
        if key not in start:
            raise ParseError(path, 1, "start missing '%s'" % key)
    target = np.array(data["target_vertices"], dtype=float)
    if target.ndim != 2 or target.shape[0] < 3 or target.shape[1] != 2:
        raise ParseError(path, 1, "target_vertices needs >= 3 [x, y] pairs")
    polys = []
    for k, poly in enumerate(data["obstacles"]):
        arr = np.array(poly, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 3 or arr.shape[1] != 2:
            raise ParseError(path, 1,
                             "obstacle %d needs >= 3 [x, y] pairs" % k)
        polys.append(arr)
    return {"bounds": bounds, "start": start, "target": target,
            "obstacles": polys}


def parse_bench_csv(path):
    """Benchmark CSV -> list of row dicts with native numeric types."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, "empty file") from None
        if tuple(header) != BENCH_COLUMNS:
            raise ParseError(path, 1, "header must be %s"
                             % ",".join(BENCH_COLUMNS))
        rows = []
        for k, rec in enumerate(reader):
            line = k + 2
            if len(rec) != len(BENCH_COLUMNS):
                raise ParseError(path, line, "expected %d fields, got %d"
                                 % (len(BENCH_COLUMNS), len(rec)))
            row = dict(zip(BENCH_COLUMNS, rec))
            try:
                for key in ("n_trailers", "seed", "n_tri", "n_quad",
                            "n_pent"):
                    row[key] = int(row[key])
                row["band_lo"] = float(row["band_lo"])
                row["band_hi"] = float(row["band_hi"])
                if row["success"] not in ("0", "1"):
                    raise ValueError(row["success"])
                row["success"] = row["success"] == "1"
                for key in ("l_traj", "t_d", "mean_kappa"):
                    row[key] = float(row[key]) if row[key] else None
                for key in ("n_expanded", "n_evals"):
                    row[key] = int(row[key]) if row[key] else None
            except ValueError as e:
                raise ParseError(path, line, "bad value: %s" % e) from None
            rows.append(row)
    if not rows:
        raise ParseError(path, 1, "no data rows")
    return rows
