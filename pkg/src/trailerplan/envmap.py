"""Obstacle maps: rasterization, exact signed distance field, target regions.

The world is an axis-aligned rectangle holding simple polygon obstacles.  A
cell is occupied when its center lies inside (or exactly on the boundary of)
any polygon.  The signed distance field stores, at every cell center, the
Euclidean distance to the nearest cell center of the opposite occupancy:
positive on free cells, negative on occupied ones, clamped to the map
diagonal.  Queries bilinearly interpolate between cell centers and return an
analytic gradient.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import DegeneratePolygon, EmptyBounds, NotConvex


@dataclasses.dataclass
class ObstacleSet:
    """Polygon obstacles inside rectangular bounds (xmin, ymin, xmax, ymax)."""

    polygons: list
    bounds: tuple

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.bounds
        if xmax <= xmin or ymax <= ymin:
            raise EmptyBounds("bounds %r enclose no area" % (self.bounds,))
        self.polygons = [np.asarray(p, dtype=float) for p in self.polygons]
        for p in self.polygons:
            if p.ndim != 2 or p.shape[0] < 3 or p.shape[1] != 2:
                raise DegeneratePolygon("polygon needs >= 3 planar vertices")


@dataclasses.dataclass
class OccupancyGrid:
    """Boolean grid over the bounds; occ[iy, ix], cell centers at
    origin + (i + 0.5) * resolution."""

    origin: tuple
    resolution: float
    occ: np.ndarray

    @property
    def ny(self):
        return self.occ.shape[0]

    @property
    def nx(self):
        return self.occ.shape[1]

    def cell_centers(self):
        ox, oy = self.origin
        xs = ox + (np.arange(self.nx) + 0.5) * self.resolution
        ys = oy + (np.arange(self.ny) + 0.5) * self.resolution
        return xs, ys


def _points_in_polygon(px, py, poly, eps=1e-9):
    """Vectorized even-odd test; points exactly on an edge count as inside."""
    inside = np.zeros(px.shape, dtype=bool)
    on_edge = np.zeros(px.shape, dtype=bool)
    n = len(poly)
    for k in range(n):
        x1, y1 = poly[k]
        x2, y2 = poly[(k + 1) % n]
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        seg = ((np.abs(cross) <= eps)
               & (px >= min(x1, x2) - eps) & (px <= max(x1, x2) + eps)
               & (py >= min(y1, y2) - eps) & (py <= max(y1, y2) + eps))
        on_edge |= seg
        hits = (y1 > py) != (y2 > py)
        if np.any(hits):
            xi = x1 + (x2 - x1) * (py - y1) / np.where(y2 == y1, 1.0, y2 - y1)
            inside ^= hits & (px < xi)
    return inside | on_edge


def rasterize(obstacles, resolution):
    """Occupancy grid over the obstacle bounds at the given cell size."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    xmin, ymin, xmax, ymax = obstacles.bounds
    nx = max(1, int(math.ceil((xmax - xmin) / resolution - 1e-9)))
    ny = max(1, int(math.ceil((ymax - ymin) / resolution - 1e-9)))
    occ = np.zeros((ny, nx), dtype=bool)
    xs = xmin + (np.arange(nx) + 0.5) * resolution
    ys = ymin + (np.arange(ny) + 0.5) * resolution
    for poly in obstacles.polygons:
        # only test centers inside the polygon bbox
        bx0, by0 = poly.min(axis=0)
        bx1, by1 = poly.max(axis=0)
        ix = np.nonzero((xs >= bx0 - resolution) & (xs <= bx1 + resolution))[0]
        iy = np.nonzero((ys >= by0 - resolution) & (ys <= by1 + resolution))[0]
        if len(ix) == 0 or len(iy) == 0:
            continue
        gx, gy = np.meshgrid(xs[ix], ys[iy])
        hit = _points_in_polygon(gx, gy, poly)
        occ[np.ix_(iy, ix)] |= hit
    return OccupancyGrid(origin=(xmin, ymin), resolution=resolution, occ=occ)


@dataclasses.dataclass
class Sdf:
    """Signed distance samples at cell centers plus bilinear interpolation."""

    origin: tuple
    resolution: float
    values: np.ndarray
    ceiling: float

    @property
    def ny(self):
        return self.values.shape[0]

    @property
    def nx(self):
        return self.values.shape[1]

    @property
    def bounds(self):
        ox, oy = self.origin
        return (ox, oy, ox + self.nx * self.resolution,
                oy + self.ny * self.resolution)

    def query(self, p):
        """Interpolated (value, gradient) at one point."""
        vals, grads = self.query_batch(np.asarray(p, dtype=float)[None, :])
        return float(vals[0]), grads[0]

    def query_batch(self, pts):
        """Interpolated values and gradients at (Q, 2) points.

        Points outside the map rectangle get the clamp ceiling with zero
        gradient; points in the half-cell margin inside the map edge are
        clamped onto the interpolation hull.
        """
        pts = np.asarray(pts, dtype=float)
        ox, oy = self.origin
        res = self.resolution
        xmin, ymin, xmax, ymax = self.bounds
        out = ((pts[:, 0] < xmin) | (pts[:, 0] > xmax)
               | (pts[:, 1] < ymin) | (pts[:, 1] > ymax))

        u = (pts[:, 0] - ox) / res - 0.5
        v = (pts[:, 1] - oy) / res - 0.5
        ucl = np.clip(u, 0.0, self.nx - 1.0)
        vcl = np.clip(v, 0.0, self.ny - 1.0)
        free_u = ucl == u
        free_v = vcl == v
        i0 = np.clip(np.floor(ucl).astype(int), 0, max(self.nx - 2, 0))
        j0 = np.clip(np.floor(vcl).astype(int), 0, max(self.ny - 2, 0))
        i1 = np.minimum(i0 + 1, self.nx - 1)
        j1 = np.minimum(j0 + 1, self.ny - 1)
        fu = ucl - i0
        fv = vcl - j0
        v00 = self.values[j0, i0]
        v10 = self.values[j0, i1]
        v01 = self.values[j1, i0]
        v11 = self.values[j1, i1]
        vals = ((1 - fu) * (1 - fv) * v00 + fu * (1 - fv) * v10
                + (1 - fu) * fv * v01 + fu * fv * v11)
        gx = ((1 - fv) * (v10 - v00) + fv * (v11 - v01)) / res
        gy = ((1 - fu) * (v01 - v00) + fu * (v11 - v10)) / res
        gx = np.where(free_u, gx, 0.0)
        gy = np.where(free_v, gy, 0.0)
        vals = np.where(out, self.ceiling, vals)
        grads = np.stack([np.where(out, 0.0, gx), np.where(out, 0.0, gy)],
                         axis=1)
        return vals, grads


def _col_dist(src):
    """Per-cell vertical distance (in cells) to the nearest source row.

    Columns without any source keep a sentinel larger than every in-map
    distance, so they can never win the row pass.
    """
    ny, nx = src.shape
    big = ny + nx
    g = np.where(src, 0, big).astype(np.int64)
    for y in range(1, ny):
        np.minimum(g[y], g[y - 1] + 1, out=g[y])
    for y in range(ny - 2, -1, -1):
        np.minimum(g[y], g[y + 1] + 1, out=g[y])
    return g


def _row_envelope(h):
    """Exact per-row min over u of (x - u)^2 + h[:, u].

    Lower envelope of integer parabolas; every row keeps its own stack of
    (site, first winning column) pairs and the scan advances all rows at
    once.  Pure integer arithmetic, so ties resolve exactly.
    """
    ny, nx = h.shape
    rows = np.arange(ny)
    site = np.zeros((ny, nx), dtype=np.int64)
    start = np.zeros((ny, nx), dtype=np.int64)
    q = np.zeros(ny, dtype=np.int64)
    for u in range(1, nx):
        hu = h[:, u]
        while True:
            qc = np.maximum(q, 0)
            sq = site[rows, qc]
            tq = start[rows, qc]
            pop = (q >= 0) & ((tq - sq) ** 2 + h[rows, sq]
                              > (tq - u) ** 2 + hu)
            if not pop.any():
                break
            q[pop] -= 1
        fresh = q < 0
        q[fresh] = 0
        site[fresh, 0] = u
        sq = site[rows, q]
        den = 2 * (u - sq)
        den[fresh] = 1
        w = (u * u - sq * sq + hu - h[rows, sq]) // den + 1
        push = ~fresh & (w < nx)
        if push.any():
            q[push] += 1
            site[rows[push], q[push]] = u
            start[rows[push], q[push]] = w[push]
    out = np.empty((ny, nx), dtype=np.int64)
    for u in range(nx - 1, -1, -1):
        sq = site[rows, q]
        out[:, u] = (u - sq) ** 2 + h[rows, sq]
        q[start[rows, q] == u] -= 1
    return out


def _sq_edt(src):
    """Exact squared cell distance to the nearest source cell center."""
    g = _col_dist(src)
    return _row_envelope(g * g)


def build_sdf(grid):
    """Exact signed Euclidean distance field of an occupancy grid.

    Separable exact transform: squared distances along columns, then an
    integer lower-envelope pass along rows, keeping the cost linear in the
    cell count.
    """
    occ = grid.occ
    res = grid.resolution
    diag = math.hypot(grid.nx * res, grid.ny * res)
    if not occ.any():
        values = np.full(occ.shape, diag)
    elif occ.all():
        values = np.full(occ.shape, -diag)
    else:
        d_free = np.sqrt(_sq_edt(occ)) * res
        d_occ = np.sqrt(_sq_edt(~occ)) * res
        values = np.where(occ, -np.minimum(d_occ, diag),
                          np.minimum(d_free, diag))
    return Sdf(origin=grid.origin, resolution=res, values=values,
               ceiling=diag)


@dataclasses.dataclass
class TargetRegion:
    """Convex CCW polygon with outward unit edge normals."""

    vertices: np.ndarray
    normals: np.ndarray
    center: np.ndarray

    @property
    def n_edges(self):
        return len(self.vertices)

    def contains(self, p, tol=1e-9):
        d = p[None, :] - self.vertices
        return bool(np.all(np.einsum("ij,ij->i", self.normals, d) <= tol))

    def distance(self, p):
        """Euclidean distance from p to the region (0 inside)."""
        if self.contains(p):
            return 0.0
        best = math.inf
        n = len(self.vertices)
        for k in range(n):
            a = self.vertices[k]
            b = self.vertices[(k + 1) % n]
            ab = b - a
            t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
            best = min(best, float(np.linalg.norm(a + t * ab - p)))
        return best


def make_target(vertices):
    """Validate and orient a convex target polygon, computing edge normals.

    Accepts CW or CCW input; raises DegeneratePolygon on repeated/collinear
    vertices and NotConvex on reflex corners.
    """
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[0] < 3 or verts.shape[1] != 2:
        raise DegeneratePolygon("need at least 3 planar vertices")
    n = len(verts)
    area2 = 0.0
    for k in range(n):
        x1, y1 = verts[k]
        x2, y2 = verts[(k + 1) % n]
        area2 += x1 * y2 - x2 * y1
    if abs(area2) < 1e-12:
        raise DegeneratePolygon("polygon has zero area")
    if area2 < 0.0:
        verts = verts[::-1].copy()
    crosses = []
    for k in range(n):
        a = verts[k]
        b = verts[(k + 1) % n]
        c = verts[(k + 2) % n]
        e1 = b - a
        e2 = c - b
        if np.linalg.norm(e1) < 1e-12:
            raise DegeneratePolygon("repeated vertex")
        crosses.append(e1[0] * e2[1] - e1[1] * e2[0])
    crosses = np.array(crosses)
    if np.any(np.abs(crosses) < 1e-12):
        raise DegeneratePolygon("collinear vertices")
    if np.any(crosses < 0.0):
        raise NotConvex("polygon has a reflex corner")
    normals = np.empty((n, 2))
    for k in range(n):
        e = verts[(k + 1) % n] - verts[k]
        normals[k] = np.array([e[1], -e[0]]) / np.linalg.norm(e)
    return TargetRegion(vertices=verts, normals=normals,
                        center=verts.mean(axis=0))
