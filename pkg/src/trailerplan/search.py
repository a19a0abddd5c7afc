"""Multi-terminal lattice search over tractor poses.

The front end searches SE(2) with a handful of constant-steer motion
primitives, shooting analytic arc-line connections toward candidate
terminal poses on the target region boundary.  Trailers are ignored
during expansion (they stay inside the swept tractor corridor for the
clearance radii used here) and only enter through the final scoring,
which propagates the hitch chain along each candidate and penalizes
trailer distance to the region.
"""

import dataclasses
import heapq
import math
import time

import numpy as np

from .dubins import dubins_connect
from .kinematics import wrap_angle


@dataclasses.dataclass
class SearchConfig:
    xy_resolution: float = 0.3
    yaw_bins: int = 24
    speed_frac: float = 0.6
    steer_fracs: tuple = (0.0, 0.5, -0.5, 1.0, -1.0)
    w_length: float = 1.0
    w_dtheta: float = 0.3
    w_ctrl: float = 0.05
    w_score_length: float = 1.0
    w_score_end: float = 1.0
    h_inflation: float = 1.8
    shoot_dist: float = 5.0
    collision_step: float = 0.1
    time_budget: float = 5.0


@dataclasses.dataclass
class SearchPath:
    """Time-stamped tractor trace plus propagated trailer yaws."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta0: np.ndarray
    v0: np.ndarray
    delta: np.ndarray
    trailer_yaws: np.ndarray
    length: float
    score: float
    terminal_index: int
    n_expanded: int = 0
    elapsed: float = 0.0


def get_ends(region, params):
    """Terminal poses, one per region edge.

    Each pose faces along the outward edge normal, pulled inside far
    enough that the tractor body midpoint sits on the edge midpoint.
    """
    offset = params.rear_offset + 0.5 * params.tractor_length
    ends = []
    verts = region.vertices
    n = len(verts)
    for k in range(n):
        mid = 0.5 * (verts[k] + verts[(k + 1) % n])
        nx, ny = region.normals[k]
        ends.append((mid[0] - offset * nx, mid[1] - offset * ny,
                     math.atan2(ny, nx)))
    return ends


def propagate_trailers(t, x, y, theta0, thetas_init, params, dt_sub=0.02):
    """Integrate the hitch chain along a tractor trace.

    The tractor speed over each interval comes from the position
    increments; yaws are interpolated linearly between samples.  Returns
    an (n, N) array of trailer yaws.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    n = len(t)
    links = np.asarray(params.hitch_lengths, dtype=float)
    nt = params.n_trailers
    out = np.empty((n, nt))
    cur = np.array(thetas_init, dtype=float)
    out[0] = cur
    for k in range(n - 1):
        dt = t[k + 1] - t[k]
        if dt <= 0.0:
            out[k + 1] = cur
            continue
        v0 = math.hypot(x[k + 1] - x[k], y[k + 1] - y[k]) / dt
        dth = theta0[k + 1] - theta0[k]
        m = max(1, int(math.ceil(dt / dt_sub)))
        h = dt / m
        for j in range(m):
            th_prev = theta0[k] + (j / m) * dth
            v_prev = v0
            rates = np.empty(nt)
            for i in range(nt):
                phi = th_prev - cur[i]
                rates[i] = v_prev * math.sin(phi) / links[i]
                v_prev = v_prev * math.cos(phi)
                th_prev = cur[i]
            cur = cur + h * rates
        out[k + 1] = cur
    return out


def _in_bounds(sdf, pts):
    xmin, ymin, xmax, ymax = sdf.bounds
    return ((pts[:, 0] >= xmin) & (pts[:, 0] <= xmax)
            & (pts[:, 1] >= ymin) & (pts[:, 1] <= ymax))


def _tractor_clear(sdf, xs, ys, ths, params):
    """All tractor wrap circles along the samples stay collision free."""
    centers = np.stack(
        [xs + params.rear_offset * np.cos(ths),
         ys + params.rear_offset * np.sin(ths)], axis=1)
    if not np.all(_in_bounds(sdf, centers)):
        return False
    vals, _ = sdf.query_batch(centers)
    return bool(vals.min() > params.wrap_radii[0])


def _primitive_table(v, params, config):
    """Body-frame arc samples per steer value, excluding the start pose.

    Each primitive holds a constant steer for one lattice step of arc
    length 2 * xy_resolution; offsets are rotated into place at
    expansion time.
    """
    arc = 2.0 * config.xy_resolution
    tau = arc / v
    n_sub = max(2, int(math.ceil(arc / config.collision_step)) + 1)
    taus = np.linspace(0.0, tau, n_sub)[1:]
    rows = []
    for frac in config.steer_fracs:
        delta = frac * params.delta_max
        om = v * math.tan(delta) / params.wheelbase
        if abs(om) < 1e-9:
            rx = v * taus
            ry = np.zeros_like(taus)
            dth = np.zeros_like(taus)
        else:
            dth = om * taus
            r = v / om
            rx = r * np.sin(dth)
            ry = r * (1.0 - np.cos(dth))
        rows.append((delta, rx, ry, dth, om * tau))
    dts = np.diff(taus, prepend=0.0)
    return arc, tau, dts, rows


@dataclasses.dataclass
class _Node:
    x: float
    y: float
    th: float
    g: float
    parent: tuple
    edge: tuple


def _backtrack(nodes, key):
    xs, ys, ths, vs, ds, dts = [], [], [], [], [], []
    chain = []
    while key is not None:
        chain.append(nodes[key].edge)
        key = nodes[key].parent
    for edge in reversed(chain):
        xs.append(edge[0])
        ys.append(edge[1])
        ths.append(edge[2])
        vs.append(edge[3])
        ds.append(edge[4])
        dts.append(edge[5])
    return (np.concatenate(xs), np.concatenate(ys), np.concatenate(ths),
            np.concatenate(vs), np.concatenate(ds), np.concatenate(dts))


def search(start, region, sdf, params, config=None):
    """Find a collision-free tractor path into the target region.

    Runs best-first over a discretized (x, y, yaw) lattice; whenever a
    popped node is within shooting range of a terminal that has no path
    yet, an analytic arc-line connection is attempted.  Stops once every
    reachable terminal has a candidate or the time budget runs out, and
    returns the best-scoring candidate (None if there is none).
    """
    if config is None:
        config = SearchConfig()
    t_start = time.perf_counter()
    ends = get_ends(region, params)
    v = config.speed_frac * params.v_mlon
    r_min = 1.0 / params.kappa_max

    # drop terminals whose own pose already collides; they are unreachable
    pending = []
    for e, (ex, ey, eth) in enumerate(ends):
        if _tractor_clear(sdf, np.array([ex]), np.array([ey]),
                          np.array([eth]), params):
            pending.append(e)
    if not pending:
        return None

    if not _tractor_clear(sdf, np.array([start.x]), np.array([start.y]),
                          np.array([start.theta0]), params):
        return None

    xmin, ymin, _, _ = sdf.bounds
    res = config.xy_resolution
    yaw_res = 2.0 * math.pi / config.yaw_bins

    def key_of(x, y, th):
        return (int(math.floor((x - xmin) / res)),
                int(math.floor((y - ymin) / res)),
                int(math.floor((wrap_angle(th) + math.pi) / yaw_res))
                % config.yaw_bins)

    def heuristic(x, y):
        return config.h_inflation * config.w_length * math.hypot(
            x - region.center[0], y - region.center[1])

    start_edge = (np.array([start.x]), np.array([start.y]),
                  np.array([start.theta0]), np.array([start.v0]),
                  np.array([0.0]), np.array([0.0]))
    k0 = key_of(start.x, start.y, start.theta0)
    nodes = {k0: _Node(start.x, start.y, start.theta0, 0.0, None, start_edge)}
    openh = [(heuristic(start.x, start.y), 0.0, 0, k0)]
    closed = set()
    counter = 1
    n_expanded = 0
    candidates = {}
    has_path = {e: False for e in pending}

    def try_shoot(key, node):
        for e in pending:
            if has_path[e]:
                continue
            ex, ey, eth = ends[e]
            if math.hypot(node.x - ex, node.y - ey) > config.shoot_dist:
                continue
            tail = dubins_connect((node.x, node.y, node.th), (ex, ey, eth),
                                  r_min)
            poses, kappas = tail.sample(config.collision_step)
            if not _tractor_clear(sdf, poses[:, 0], poses[:, 1],
                                  poses[:, 2], params):
                continue
            xs, ys, ths, vs, ds, dts = _backtrack(nodes, key)
            if len(poses) > 1:
                ds_tail = tail.length / (len(poses) - 1)
                xs = np.concatenate([xs, poses[1:, 0]])
                ys = np.concatenate([ys, poses[1:, 1]])
                ths = np.concatenate([ths, poses[1:, 2]])
                vs = np.concatenate([vs, np.full(len(poses) - 1, v)])
                ds = np.concatenate(
                    [ds, np.arctan(params.wheelbase * kappas[1:])])
                dts = np.concatenate(
                    [dts, np.full(len(poses) - 1, ds_tail / v)])
            ts = np.cumsum(dts)
            ts -= ts[0]
            yaws = propagate_trailers(ts, xs, ys, ths,
                                      np.array(start.thetas), params)
            length = float(np.hypot(np.diff(xs), np.diff(ys)).sum())
            score = config.w_score_length * length
            # trailer axle positions at the end of the candidate
            px, py = xs[-1], ys[-1]
            for i in range(params.n_trailers):
                li = params.hitch_lengths[i]
                px = px - li * math.cos(yaws[-1, i])
                py = py - li * math.sin(yaws[-1, i])
                score += config.w_score_end * region.distance(
                    np.array([px, py]))
            has_path[e] = True
            candidates[e] = SearchPath(
                t=ts, x=xs, y=ys, theta0=ths, v0=vs, delta=ds,
                trailer_yaws=yaws, length=length, score=score,
                terminal_index=e)
        return all(has_path.values())

    arc, tau, prim_dts, prim_rows = _primitive_table(v, params, config)
    n_prims = len(prim_rows)
    n_per = len(prim_dts)
    rear = params.rear_offset
    r0 = params.wrap_radii[0]
    bxmin, bymin, bxmax, bymax = sdf.bounds
    seg_x = np.empty((n_prims, n_per))
    seg_y = np.empty((n_prims, n_per))
    seg_th = np.empty((n_prims, n_per))
    base_cost = np.array([
        config.w_length * arc + config.w_dtheta * abs(row[4])
        + config.w_ctrl * tau * (v * v + row[0] * row[0])
        for row in prim_rows])

    done = False
    while openh and not done:
        if time.perf_counter() - t_start > config.time_budget:
            break
        f, g, _, key = heapq.heappop(openh)
        if key in closed:
            continue
        node = nodes[key]
        if g > node.g + 1e-12:
            continue
        closed.add(key)
        n_expanded += 1
        if try_shoot(key, node):
            done = True
            break
        c = math.cos(node.th)
        s = math.sin(node.th)
        for idx, (_, rx, ry, dth, _) in enumerate(prim_rows):
            seg_x[idx] = node.x + c * rx - s * ry
            seg_y[idx] = node.y + s * rx + c * ry
            seg_th[idx] = node.th + dth
        cx = seg_x + rear * np.cos(seg_th)
        cy = seg_y + rear * np.sin(seg_th)
        vals, _ = sdf.query_batch(
            np.stack([cx.ravel(), cy.ravel()], axis=1))
        ok = ((cx.ravel() >= bxmin) & (cx.ravel() <= bxmax)
              & (cy.ravel() >= bymin) & (cy.ravel() <= bymax)
              & (vals > r0)).reshape(n_prims, n_per).all(axis=1)
        for idx in range(n_prims):
            if not ok[idx]:
                continue
            gc = node.g + base_cost[idx]
            kc = key_of(seg_x[idx, -1], seg_y[idx, -1], seg_th[idx, -1])
            if kc in closed:
                continue
            known = nodes.get(kc)
            if known is not None and known.g <= gc + 1e-12:
                continue
            edge = (seg_x[idx].copy(), seg_y[idx].copy(),
                    seg_th[idx].copy(), np.full(n_per, v),
                    np.full(n_per, prim_rows[idx][0]), prim_dts)
            nodes[kc] = _Node(seg_x[idx, -1], seg_y[idx, -1],
                              seg_th[idx, -1], gc, key, edge)
            heapq.heappush(openh, (gc + heuristic(seg_x[idx, -1],
                                                  seg_y[idx, -1]),
                                   gc, counter, kc))
            counter += 1

    if not candidates:
        return None
    best = min(candidates.values(), key=lambda c: c.score)
    best.n_expanded = n_expanded
    best.elapsed = time.perf_counter() - t_start
    return best
