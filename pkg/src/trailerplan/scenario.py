"""Random benchmark world generation.

A scenario is a rectangular world populated with random convex obstacles
(triangles, quadrilaterals, pentagons), a start state for the chain and a
rectangular target region, with the start-to-target distance inside a
requested band.  Generation is deterministic in the seed: obstacles are
drawn first, then start pose, target pose and trailer yaw offsets, so one
seed reproduces the same world for every trailer count.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .envmap import ObstacleSet, TargetRegion, make_target
from .errors import GenerationFailed
from .kinematics import RobotState, pose_chain

# obstacle vertex radii (m); shapes are convex hulls of star-shaped samples
RADIUS_LO = 0.5
RADIUS_HI = 2.0
START_MARGIN = 0.1
REGION_SLACK = 1.2
REGION_WIDTH = 1.6
YAW_JITTER = 0.2


@dataclasses.dataclass
class Scenario:
    """One generated planning task."""

    seed: int
    bounds: tuple
    counts: tuple
    band: tuple
    resolution: float
    obstacles: ObstacleSet
    start: RobotState
    region: TargetRegion


def chain_extents(params):
    """Forward / backward reach (m) of the straight chain from p0."""
    front = params.rear_offset + params.body_sizes[0][0] / 2.0
    if params.n_trailers:
        back = sum(params.hitch_lengths) + params.body_sizes[-1][0] / 2.0
    else:
        back = params.body_sizes[0][0] / 2.0 - params.rear_offset
    return front, back


def region_rectangle(cx, cy, yaw, params):
    """Corners (CCW) of a target rectangle sized to hold the straight chain."""
    front, back = chain_extents(params)
    half_l = (front + back + REGION_SLACK) / 2.0
    half_w = REGION_WIDTH / 2.0
    local = np.array([[-half_l, -half_w], [half_l, -half_w],
                      [half_l, half_w], [-half_l, half_w]])
    c, s = math.cos(yaw), math.sin(yaw)
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([cx, cy])


def _sample_polygon(rng, center, n_verts):
    """Convex hull of n_verts points star-sampled around center."""
    for _ in range(20):
        ang = np.sort(rng.uniform(0.0, 2.0 * math.pi, n_verts))
        rad = rng.uniform(RADIUS_LO, RADIUS_HI, n_verts)
        pts = center + rad[:, None] * np.stack([np.cos(ang), np.sin(ang)],
                                               axis=-1)
        try:
            hull = ConvexHull(pts)
        except QhullError:
            continue
        return pts[hull.vertices]
    raise GenerationFailed("could not sample a non-degenerate polygon")


def poly_distance(p, poly):
    """Unsigned distance from a point to a convex polygon, 0 if inside."""
    p = np.asarray(p, dtype=float)
    a = poly
    b = np.roll(poly, -1, axis=0)
    ab = b - a
    # inside iff left of every CCW edge
    cross = ab[:, 0] * (p[1] - a[:, 1]) - ab[:, 1] * (p[0] - a[:, 0])
    if np.all(cross >= 0.0):
        return 0.0
    t = np.einsum("ij,ij->i", p - a, ab) / np.einsum("ij,ij->i", ab, ab)
    closest = a + np.clip(t, 0.0, 1.0)[:, None] * ab
    return float(np.sqrt(((closest - p) ** 2).sum(axis=1)).min())


def polys_distance(pa, pb):
    """Distance between two convex CCW polygons, 0 if they intersect."""
    separated = False
    for poly, other in ((pa, pb), (pb, pa)):
        edges = np.roll(poly, -1, axis=0) - poly
        normals = np.stack([edges[:, 1], -edges[:, 0]], axis=-1)
        for k in range(len(poly)):
            if np.all((other - poly[k]) @ normals[k] > 0.0):
                separated = True
                break
        if separated:
            break
    if not separated:
        return 0.0
    return min(min(poly_distance(v, pb) for v in pa),
               min(poly_distance(v, pa) for v in pb))


def gen_scenario(params, seed, counts=(20, 20, 20), bounds=(0.0, 0.0, 40.0, 40.0),
                 band=(10.0, 20.0), resolution=0.1, retries=400):
    """Generate one random scenario, deterministic in the seed.

    Rejection-samples start pose, target pose and trailer yaw offsets until
    the chain and the target rectangle clear every obstacle by wrap radius
    plus START_MARGIN and the rear-axle-to-region-center distance lies in
    the band.  Raises GenerationFailed when the retry budget runs out.
    """
    if any(c < 0 for c in counts) or len(counts) != 3:
        raise ValueError("counts must be three non-negative integers")
    xmin, ymin, xmax, ymax = bounds
    rng = np.random.default_rng(seed)

    inset = RADIUS_HI
    if xmax - xmin <= 2 * inset or ymax - ymin <= 2 * inset:
        raise GenerationFailed("bounds too small for obstacle placement")
    polys = []
    for n_verts, count in zip((3, 4, 5), counts):
        for _ in range(count):
            center = rng.uniform((xmin + inset, ymin + inset),
                                 (xmax - inset, ymax - inset))
            polys.append(_sample_polygon(rng, center, n_verts))
    obstacles = ObstacleSet(polys, bounds)

    r_max = max(params.wrap_radii)
    front, back = chain_extents(params)
    reach = max(front, back) + r_max
    pose_inset = reach + START_MARGIN
    region_half_diag = math.hypot((front + back + REGION_SLACK) / 2.0,
                                  REGION_WIDTH / 2.0)
    if (xmax - xmin <= 2 * pose_inset or ymax - ymin <= 2 * pose_inset
            or xmax - xmin <= 2 * region_half_diag):
        raise GenerationFailed("bounds too small for the chain")

    for _ in range(retries):
        sx = rng.uniform(xmin + pose_inset, xmax - pose_inset)
        sy = rng.uniform(ymin + pose_inset, ymax - pose_inset)
        syaw = rng.uniform(-math.pi, math.pi)
        gx = rng.uniform(xmin + region_half_diag, xmax - region_half_diag)
        gy = rng.uniform(ymin + region_half_diag, ymax - region_half_diag)
        gyaw = rng.uniform(-math.pi, math.pi)
        offs = rng.uniform(-YAW_JITTER, YAW_JITTER, params.n_trailers)

        dist = math.hypot(gx - sx, gy - sy)
        if not band[0] <= dist <= band[1]:
            continue

        yaws = syaw + np.concatenate([[0.0], np.cumsum(offs)])
        _, centers = pose_chain(np.array([sx, sy]), yaws, params)
        ok = True
        for i in range(params.n_trailers + 1):
            margin = params.wrap_radii[i] + START_MARGIN
            c = centers[i]
            if (c[0] < xmin + margin or c[0] > xmax - margin
                    or c[1] < ymin + margin or c[1] > ymax - margin):
                ok = False
                break
            for poly in polys:
                if poly_distance(c, poly) < margin:
                    ok = False
                    break
            if not ok:
                break
        if not ok:
            continue

        corners = region_rectangle(gx, gy, gyaw, params)
        if (corners[:, 0].min() < xmin + START_MARGIN
                or corners[:, 0].max() > xmax - START_MARGIN
                or corners[:, 1].min() < ymin + START_MARGIN
                or corners[:, 1].max() > ymax - START_MARGIN):
            continue
        clear = r_max + START_MARGIN
        if any(polys_distance(corners, poly) < clear for poly in polys):
            continue

        start = RobotState(x=float(sx), y=float(sy), theta0=float(syaw),
                           v0=0.0, thetas=tuple(float(v) for v in yaws[1:]))
        region = make_target(corners)
        return Scenario(seed=int(seed), bounds=tuple(float(v) for v in bounds),
                        counts=tuple(int(c) for c in counts),
                        band=tuple(float(v) for v in band),
                        resolution=float(resolution), obstacles=obstacles,
                        start=start, region=region)

    raise GenerationFailed("no valid start/target after %d attempts" % retries)
