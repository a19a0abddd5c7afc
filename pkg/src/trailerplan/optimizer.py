"""Time-optimal trajectory refinement for a tractor with passive trailers.

The trajectory is represented by three quintic splines: a planar curve
(x0, y0)(s) over a progress parameter split into M pieces of free length,
a progress profile s(t) over M uniform time pieces, and one yaw spline per
trailer over a finer uniform time grid.  Speeds, accelerations, curvature
and the hitch coupling all come out of the flat maps in kinematics, with
the tangent norm kept near one instead of collapsing at v0 = 0.

All shape constraints (actuation limits, jackknife bounds, signed-distance
clearance, mutual clearance, the hitch consistency equalities and the
terminal containment of every body in the target region) are relaxed into
an augmented Lagrangian sampled at fixed fractions of the time pieces.
The inner smooth problem is solved with L-BFGS over an unconstrained
decision vector; positive quantities (piece lengths, horizon) and bounded
hitch offsets pass through the smooth bijections in transforms.  Gradients
are exact: every chain, including the dependence of the spline
coefficients on waypoints, boundary data and piece lengths, is
backpropagated by hand and pulled through the banded systems adjointly.
"""

from __future__ import annotations

import dataclasses
import math
import time

import numpy as np

from .errors import PathTooShort
from .kinematics import wrap_angle
from .lbfgs import lbfgs_minimize
from .spline import (
    FlatTrajectory,
    SplineSystem,
    basis_many,
    jerk_energy,
    propagate_grad,
    propagate_uniform_grad,
    solve_uniform,
)
from .transforms import decode_hitch, dlc2_inv, encode_hitch, lc2, lc2_inv

_POW6 = np.arange(6.0)


@dataclasses.dataclass
class OptimizerConfig:
    n_pieces: int = 8
    theta_factor: int = 2
    n_stamps: int = 12
    w_jerk_xy: float = 1.0
    w_jerk_s: float = 1.0
    w_jerk_theta: float = 1.0
    rho_time: float = 3.0
    rho_init: float = 10.0
    rho_growth: float = 3.0
    rho_max: float = 1e6
    viol_tol: float = 2e-3
    viol_shrink: float = 0.5
    max_outer: int = 50
    hinge_eps: float = 1e-3
    lbfgs_memory: int = 16
    lbfgs_iters: int = 250
    lbfgs_gtol: float = 1e-4
    gtol_frac: float = 0.05
    safety_margin: float = 0.03
    den_margin: float = 0.02
    limit_margin: float = 0.01
    kappa_margin: float = 0.02
    sdot_margin: float = 4e-3
    end_margin: float = 4e-3
    seed_speed_frac: float = 0.6
    hitch_seed_clamp: float = 0.95


@dataclasses.dataclass
class OptResult:
    success: bool
    trajectory: FlatTrajectory | None
    objective: float
    violation: float
    n_outer: int
    n_evals: int
    elapsed: float
    status: str


def _hinge(v, eps):
    """C^2 one-sided penalty and its derivative, zero for v <= 0.

    Cubic v^3/(3 eps) on (0, eps), quadratic v^2 - eps v + eps^2/3 beyond;
    written branch-free: a carries the cubic cap, b the quadratic excess.
    """
    a = np.clip(v, 0.0, eps)
    b = np.maximum(v, eps)
    phi = a * a * a / (3.0 * eps) + b * (b - eps)
    dphi = a * a / eps + 2.0 * (b - eps)
    return phi, dphi


class TrajectoryProblem:
    """One planning instance: fixed start, target region, map and robot."""

    def __init__(self, start, region, sdf, params, config=None):
        self.config = config or OptimizerConfig()
        cfg = self.config
        self.start = start
        self.region = region
        self.sdf = sdf
        self.params = params
        self.n = params.n_trailers
        self.m = cfg.n_pieces
        self.omega = cfg.theta_factor * cfg.n_pieces
        self.k = cfg.n_stamps
        self.q = self.m * self.k

        q_idx = np.arange(self.q)
        self.jp = q_idx // self.k
        pfrac = (q_idx % self.k) / self.k
        self.beta_s = pfrac / self.m
        self.alpha = (self.jp + pfrac) / self.m
        self.kq = (q_idx * cfg.theta_factor) // self.k
        self.beta_th = self.alpha - self.kq / self.omega

        self.p0i = np.array([start.x, start.y])
        self.th0i = start.theta0
        self.v0i = start.v0
        self.th_init = np.array(start.thetas, dtype=float)
        rates = []
        v = start.v0
        prev = start.theta0
        for i in range(self.n):
            phi = prev - self.th_init[i]
            rates.append(v * math.sin(phi) / params.hitch_lengths[i])
            v = v * math.cos(phi)
            prev = self.th_init[i]
        self.thdot_init = np.array(rates)

        self.links = np.array(params.hitch_lengths, dtype=float)
        # the margin keeps the continuous path clear between stamps
        self.radii = np.array(params.wrap_radii, dtype=float) \
            + cfg.safety_margin
        self.pairs = params.nonadjacent_pairs()

        # every limit is tightened slightly inside the solver so the
        # stamped solution stays inside the bounds on a dense grid too
        lm = 1.0 - cfg.limit_margin
        self.cap_v = (params.v_mlon * lm) ** 2
        self.cap_a = (params.a_mlon * lm) ** 2
        self.cap_lat = (params.a_mlat * lm) ** 2
        self.cap_kap = (params.kappa_max * (1.0 - cfg.kappa_margin)) ** 2
        self.cap_phi = (params.dtheta_max * lm) ** 2
        # the first stamp sits at t = 0 where sdot = 0 is a boundary
        # condition, so it keeps a zero floor
        self.sdot_floor = np.full(self.q, cfg.sdot_margin)
        self.sdot_floor[0] = 0.0

        # body-frame corner points per vehicle for terminal containment
        verts = []
        l0, w0 = params.body_sizes[0]
        cx = params.rear_offset
        verts.append([[cx - l0 / 2, -w0 / 2], [cx + l0 / 2, -w0 / 2],
                      [cx + l0 / 2, w0 / 2], [cx - l0 / 2, w0 / 2]])
        for i in range(1, self.n + 1):
            li, wi = params.body_sizes[i]
            verts.append([[-li / 2, -wi / 2], [li / 2, -wi / 2],
                          [li / 2, wi / 2], [-li / 2, wi / 2]])
        self.body_verts = np.array(verts)

        # unit-length systems serve the uniform s and theta splines for
        # every horizon value
        self.usys_s = SplineSystem(np.ones(self.m))
        self.usys_th = SplineSystem(np.ones(self.omega)) if self.n else None

        # stamp positions inside a piece never move, so their basis rows are
        # cached at unit piece length and rescaled by duration powers
        self._ubs = [basis_many(self.beta_s[:self.k] * self.m, o)
                     for o in range(4)]
        self._ubt = [basis_many(self.beta_th * self.omega, o)
                     for o in range(3)] if self.n else None

        q, n = self.q, self.n
        n_e = region.n_edges
        sizes = (("sdot", q), ("den", q), ("speed", q), ("acc", q),
                 ("lat", q), ("curv", q), ("phi", q * n),
                 ("sdf", q * (n + 1)), ("pair", q * len(self.pairs)),
                 ("end", (n + 1) * 4 * n_e))
        self.g_slices = {}
        off = 0
        for name, size in sizes:
            self.g_slices[name] = slice(off, off + size)
            off += size
        self.n_ineq = off

        m, n, om = self.m, self.n, self.omega
        self.i_p = slice(0, 2 * (m - 1))
        self.i_s = slice(2 * (m - 1), 2 * (m - 1) + m)
        base = 2 * (m - 1) + m
        self.i_th = slice(base, base + n * (om - 1))
        base += n * (om - 1)
        self.i_xf = base
        self.i_yf = base + 1
        self.i_thf = base + 2
        self.i_vd = slice(base + 3, base + 3 + n)
        self.nz = base + 3 + n + 1
        self.i_tau = self.nz - 1

    # ------------------------------------------------------------------
    def mult_init(self):
        """Zeroed multipliers: equality (Q, N) and packed inequality."""
        return np.zeros((self.q, self.n)), np.zeros(self.n_ineq)

    def decode(self, z):
        """Split and transform the decision vector, solving all splines."""
        m, n, om = self.m, self.n, self.omega
        p = z[self.i_p].reshape(m - 1, 2)
        s_enc = z[self.i_s]
        svec = lc2_inv(s_enc)
        ds = dlc2_inv(s_enc)
        tf = lc2_inv(z[self.i_tau])
        dtf = dlc2_inv(z[self.i_tau])
        x0f, y0f, th0f = z[self.i_xf], z[self.i_yf], z[self.i_thf]
        if n:
            theta_d, dtheta_d = decode_hitch(z[self.i_vd],
                                             self.params.dtheta_max)
            th_f = th0f - np.cumsum(theta_d)
        else:
            theta_d = np.zeros(0)
            dtheta_d = np.zeros(0)
            th_f = np.zeros(0)

        sys_xy = SplineSystem(svec)
        spl_xy = sys_xy.solve(
            p, self.p0i, [math.cos(self.th0i), math.sin(self.th0i)],
            [x0f, y0f], [math.cos(th0f), math.sin(th0f)])
        wp_s = np.cumsum(svec)[:-1].reshape(m - 1, 1)
        spl_s = solve_uniform(self.usys_s, tf / m, wp_s, [0.0], [self.v0i],
                              [svec.sum()], [0.0])
        if n:
            wp_th = z[self.i_th].reshape(om - 1, n)
            spl_th = solve_uniform(self.usys_th, tf / om, wp_th,
                                   self.th_init, self.thdot_init, th_f,
                                   np.zeros(n))
        else:
            spl_th = None
        return {
            "p": p, "svec": svec, "ds": ds, "tf": tf, "dtf": dtf,
            "x0f": x0f, "y0f": y0f, "th0f": th0f,
            "theta_d": theta_d, "dtheta_d": dtheta_d, "th_f": th_f,
            "sys_xy": sys_xy, "spl_xy": spl_xy,
            "spl_s": spl_s, "spl_th": spl_th,
        }

    # ------------------------------------------------------------------
    def forward(self, z):
        """Decode plus every stamped quantity and raw constraint array."""
        d = self.decode(z)
        n, m, k, q = self.n, self.m, self.k, self.q
        par = self.params
        tf = d["tf"]

        pow_s = (tf / m) ** _POW6
        bs = [self._ubs[o] * (pow_s / pow_s[o]) for o in range(4)]
        cs = d["spl_s"].coeffs[:, :, 0]
        sv = [(cs @ b.T).ravel() for b in bs]

        u = sv[0]
        jx, xi = d["spl_xy"].locate_many(u, extrapolate=True)
        bx = [basis_many(xi, o) for o in range(4)]
        cxy = d["spl_xy"].coeffs
        pv = [np.einsum("qc,qcd->qd", b, cxy[jx]) for b in bx]

        if n:
            pow_t = (tf / self.omega) ** _POW6
            bt = [self._ubt[o] * (pow_t / pow_t[o]) for o in range(3)]
            cth = d["spl_th"].coeffs
            tv = [np.einsum("qc,qcd->qd", b, cth[self.kq]) for b in bt]
            th = tv[0]
            th1 = tv[1]
        else:
            bt = None
            tv = None
            th = np.zeros((q, 0))
            th1 = np.zeros((q, 0))

        x0, y0 = pv[0][:, 0], pv[0][:, 1]
        x1, y1 = pv[1][:, 0], pv[1][:, 1]
        x2, y2 = pv[2][:, 0], pv[2][:, 1]
        s1, s2 = sv[1], sv[2]
        den = x1 * x1 + y1 * y1
        sq = np.sqrt(np.maximum(den, 1e-12))
        dot = x1 * x2 + y1 * y2
        cross = x1 * y2 - y1 * x2
        theta0 = np.arctan2(y1, x1)
        v0 = s1 * sq
        acc = s2 * sq + s1 * s1 * dot / sq
        kappa = cross / (den * sq)
        alat = s1 * s1 * cross / sq

        prev = np.concatenate([theta0[:, None], th[:, :-1]], axis=1)
        phi = prev - th
        phiw = wrap_angle(phi)
        vch = np.empty((q, n + 1))
        vch[:, 0] = v0
        for i in range(1, n + 1):
            vch[:, i] = vch[:, i - 1] * np.cos(phi[:, i - 1])
        hitch = th1 * self.links[None, :] - vch[:, :-1] * np.sin(phi)

        pos = np.empty((n + 1, q, 2))
        pos[0] = pv[0]
        for i in range(1, n + 1):
            pos[i, :, 0] = pos[i - 1, :, 0] - self.links[i - 1] \
                * np.cos(th[:, i - 1])
            pos[i, :, 1] = pos[i - 1, :, 1] - self.links[i - 1] \
                * np.sin(th[:, i - 1])
        cen = pos.copy()
        cen[0, :, 0] += par.rear_offset * np.cos(theta0)
        cen[0, :, 1] += par.rear_offset * np.sin(theta0)

        sdf_v, sdf_g = self.sdf.query_batch(cen.reshape(-1, 2))
        sdf_v = sdf_v.reshape(n + 1, q)
        sdf_g = sdf_g.reshape(n + 1, q, 2)

        if self.pairs:
            diffs = np.stack([cen[i] - cen[j] for i, j in self.pairs])
            dist2 = np.einsum("pqd,pqd->pq", diffs, diffs)
            g_pair = par.veh_clearance ** 2 - dist2
        else:
            diffs = np.zeros((0, q, 2))
            g_pair = np.zeros((0, q))

        # terminal containment of every body rectangle in the region
        pf = np.empty((n + 1, 2))
        pf[0] = (d["x0f"], d["y0f"])
        th_f = d["th_f"]
        for i in range(1, n + 1):
            pf[i, 0] = pf[i - 1, 0] - self.links[i - 1] * math.cos(th_f[i - 1])
            pf[i, 1] = pf[i - 1, 1] - self.links[i - 1] * math.sin(th_f[i - 1])
        psi = np.concatenate([[d["th0f"]], th_f])
        cos_p, sin_p = np.cos(psi), np.sin(psi)
        rot = np.stack([np.stack([cos_p, -sin_p], axis=-1),
                        np.stack([sin_p, cos_p], axis=-1)], axis=-2)
        wv = np.einsum("iab,ivb->iva", rot, self.body_verts) \
            + pf[:, None, :]
        rel = wv[:, :, None, :] - self.region.vertices[None, None, :, :]
        g_end = np.einsum("ivea,ea->ive", rel, self.region.normals) \
            + self.config.end_margin

        g_flat = np.concatenate([
            self.sdot_floor - s1,
            par.slack_floor + self.config.den_margin - den,
            v0 * v0 - self.cap_v,
            acc * acc - self.cap_a,
            alat * alat - self.cap_lat,
            kappa * kappa - self.cap_kap,
            (phiw * phiw - self.cap_phi).ravel(),
            (self.radii[:, None] - sdf_v).ravel(),
            g_pair.ravel(),
            g_end.ravel(),
        ])

        fw = dict(d)
        fw.update({
            "sv": sv, "bs": bs, "pv": pv, "bx": bx, "jx": jx,
            "tv": tv, "bt": bt, "th": th, "th1": th1,
            "x1": x1, "y1": y1, "x2": x2, "y2": y2, "s1": s1, "s2": s2,
            "den": den, "sq": sq, "dot": dot, "cross": cross,
            "theta0": theta0, "v0": v0, "acc": acc, "kappa": kappa,
            "alat": alat, "phi": phi, "phiw": phiw, "vch": vch,
            "hitch": hitch, "pos": pos, "cen": cen,
            "sdf_g": sdf_g, "diffs": diffs, "g_flat": g_flat,
            "pf": pf, "psi": psi, "rot": rot, "wv": wv,
        })
        return fw

    def violation(self, fw):
        """Worst equality residual / inequality excess of a forward pass."""
        worst = float(np.abs(fw["hitch"]).max()) if self.n else 0.0
        if fw["g_flat"].size:
            worst = max(worst, float(fw["g_flat"].max()))
        return max(worst, 0.0)

    def objective(self, fw):
        """Smoothness-plus-time objective, no penalty terms."""
        cfg = self.config
        val = cfg.rho_time * fw["tf"]
        val += jerk_energy(fw["spl_xy"].coeffs, fw["svec"],
                           [cfg.w_jerk_xy, cfg.w_jerk_xy])[0]
        val += jerk_energy(fw["spl_s"].coeffs,
                           np.full(self.m, fw["tf"] / self.m),
                           [cfg.w_jerk_s])[0]
        if self.n:
            val += jerk_energy(fw["spl_th"].coeffs,
                               np.full(self.omega, fw["tf"] / self.omega),
                               [cfg.w_jerk_theta] * self.n)[0]
        return val

    # ------------------------------------------------------------------
    def alm_value_grad(self, z, lam, mu, rho):
        """Augmented Lagrangian value and its exact gradient."""
        cfg = self.config
        n, m, k, q = self.n, self.m, self.k, self.q
        fw = self.forward(z)
        tf = fw["tf"]
        svec = fw["svec"]
        eps = cfg.hinge_eps

        val = cfg.rho_time * tf
        tf_b = cfg.rho_time

        jxy, dcxy, dlxy = jerk_energy(
            fw["spl_xy"].coeffs, svec, [cfg.w_jerk_xy, cfg.w_jerk_xy])
        js, dcs, dls = jerk_energy(
            fw["spl_s"].coeffs, np.full(m, tf / m), [cfg.w_jerk_s])
        val += jxy + js
        if n:
            jth, dcth, dlth = jerk_energy(
                fw["spl_th"].coeffs, np.full(self.omega, tf / self.omega),
                [cfg.w_jerk_theta] * n)
            val += jth
        else:
            dcth, dlth = None, None

        # penalty weights: w = d(term)/d(raw constraint), one hinge call
        v = fw["g_flat"] + mu / rho
        phi_v, dphi_v = _hinge(v, eps)
        val += 0.5 * rho * float(phi_v.sum())
        w_flat = 0.5 * rho * dphi_v
        sl = self.g_slices
        w_phi = w_flat[sl["phi"]].reshape(q, n)
        w_sdf = w_flat[sl["sdf"]].reshape(n + 1, q)
        w_pair = w_flat[sl["pair"]].reshape(len(self.pairs), q)
        w_end = w_flat[sl["end"]].reshape(n + 1, 4, -1)
        h = fw["hitch"]
        val += float((lam * h).sum()) + 0.5 * rho * float((h * h).sum())
        wh = lam + rho * h

        # stamp-level adjoints
        x1, y1, x2, y2 = fw["x1"], fw["y1"], fw["x2"], fw["y2"]
        s1, s2 = fw["s1"], fw["s2"]
        den, sq, dot, cross = fw["den"], fw["sq"], fw["dot"], fw["cross"]
        th, th1, phi = fw["th"], fw["th1"], fw["phi"]
        vch, theta0 = fw["vch"], fw["theta0"]

        s1b = -w_flat[sl["sdot"]]
        denb = -w_flat[sl["den"]]
        v0b = 2.0 * fw["v0"] * w_flat[sl["speed"]]
        accb = 2.0 * fw["acc"] * w_flat[sl["acc"]]
        alatb = 2.0 * fw["alat"] * w_flat[sl["lat"]]
        kapb = 2.0 * fw["kappa"] * w_flat[sl["curv"]]
        phib = 2.0 * fw["phiw"] * w_phi
        thb = np.zeros((q, n))
        th1b = wh * self.links[None, :] if n else np.zeros((q, 0))
        th0b = np.zeros(q)
        s2b = np.zeros(q)
        sqb = np.zeros(q)
        dotb = np.zeros(q)
        crossb = np.zeros(q)
        x1b = np.zeros(q)
        y1b = np.zeros(q)
        x2b = np.zeros(q)
        y2b = np.zeros(q)

        # hitch equalities and the speed chain
        if n:
            vb = np.zeros((q, n + 1))
            sinp, cosp = np.sin(phi), np.cos(phi)
            vb[:, :-1] += -wh * sinp
            phib += -wh * vch[:, :-1] * cosp
            for i in range(n, 0, -1):
                vb[:, i - 1] += vb[:, i] * cosp[:, i - 1]
                phib[:, i - 1] += -vb[:, i] * vch[:, i - 1] * sinp[:, i - 1]
            v0b = v0b + vb[:, 0]
            # phi = prev - th, prev = (theta0, th[:, :-1])
            thb -= phib
            thb[:, :-1] += phib[:, 1:]
            th0b += phib[:, 0]

        # clearance terms through circle centres
        cenb = np.zeros((n + 1, q, 2))
        cenb += -w_sdf[:, :, None] * fw["sdf_g"]
        if self.pairs:
            wp = w_pair
            for idx, (i, j) in enumerate(self.pairs):
                contrib = -2.0 * wp[idx][:, None] * fw["diffs"][idx]
                cenb[i] += contrib
                cenb[j] -= contrib
        posb = cenb.copy()
        th0b += self.params.rear_offset * (
            -np.sin(theta0) * cenb[0, :, 0] + np.cos(theta0) * cenb[0, :, 1])
        for i in range(n, 0, -1):
            posb[i - 1] += posb[i]
            thb[:, i - 1] += self.links[i - 1] * (
                np.sin(th[:, i - 1]) * posb[i, :, 0]
                - np.cos(th[:, i - 1]) * posb[i, :, 1])
        x0b = posb[0, :, 0]
        y0b = posb[0, :, 1]

        # flat-map adjoints
        s2b += accb * sq
        sqb += accb * (s2 - s1 * s1 * dot / den)
        s1b += accb * 2.0 * s1 * dot / sq
        dotb += accb * s1 * s1 / sq
        s1b += alatb * 2.0 * s1 * cross / sq
        crossb += alatb * s1 * s1 / sq
        sqb += -alatb * s1 * s1 * cross / den
        crossb += kapb / (den * sq)
        denb += -1.5 * kapb * cross / (den * den * sq)
        s1b += v0b * sq
        sqb += v0b * s1
        x1b += th0b * (-y1 / den)
        y1b += th0b * (x1 / den)
        denb += 0.5 * sqb / sq
        x1b += 2.0 * x1 * denb + dotb * x2 + crossb * y2
        y1b += 2.0 * y1 * denb + dotb * y2 - crossb * x2
        x2b += dotb * x1 - crossb * y1
        y2b += dotb * y1 + crossb * x1

        # progress-parameter chain: xi shifts with u = s(t) and piece starts
        pv, bx, jx = fw["pv"], fw["bx"], fw["jx"]
        pb = [np.stack([x0b, y0b], axis=1), np.stack([x1b, y1b], axis=1),
              np.stack([x2b, y2b], axis=1)]
        ub = np.zeros(q)
        for o in range(3):
            ub += np.einsum("qd,qd->q", pb[o], pv[o + 1])
        s0b = ub.copy()
        per_piece = np.bincount(jx, weights=ub, minlength=m)
        suff = np.cumsum(per_piece[::-1])[::-1]
        s_direct = np.zeros(m)
        s_direct[:-1] -= suff[1:]

        # scatter onto spline coefficient gradients
        for o in range(3):
            contrib = bx[o][:, :, None] * pb[o][:, None, :]
            np.add.at(dcxy, jx, contrib)
        sb = [s0b, s1b, s2b]
        for o in range(3):
            dcs[:, :, 0] += np.einsum(
                "jp,pc->jc", sb[o].reshape(m, k), fw["bs"][o][: k])
        taus_b = np.zeros(q)
        sv = fw["sv"]
        for o in range(3):
            taus_b += sb[o] * sv[o + 1]
        tf_b += float((taus_b * self.beta_s).sum())
        if n:
            tb = [thb, th1b]
            tv, bt = fw["tv"], fw["bt"]
            for o in range(2):
                contrib = bt[o][:, :, None] * tb[o][:, None, :]
                np.add.at(dcth, self.kq, contrib)
            tauth_b = np.zeros(q)
            for o in range(2):
                tauth_b += np.einsum("qd,qd->q", tb[o], tv[o + 1])
            tf_b += float((tauth_b * self.beta_th).sum())

        # terminal containment
        x0fb = 0.0
        y0fb = 0.0
        psib = np.zeros(n + 1)
        pfb = np.zeros((n + 1, 2))
        wend = w_end
        nrm = self.region.normals
        pfb += np.einsum("ive,ea->ia", wend, nrm)
        dverts = np.einsum("iab,ivb->iva",
                           np.stack([np.stack([-np.sin(fw["psi"]),
                                               -np.cos(fw["psi"])], axis=-1),
                                     np.stack([np.cos(fw["psi"]),
                                               -np.sin(fw["psi"])], axis=-1)],
                                    axis=-2), self.body_verts)
        psib += np.einsum("ive,ea,iva->i", wend, nrm, dverts)
        th_fb = np.zeros(n)
        for i in range(n, 0, -1):
            pfb[i - 1] += pfb[i]
            th_fb[i - 1] += self.links[i - 1] * (
                math.sin(fw["th_f"][i - 1]) * pfb[i, 0]
                - math.cos(fw["th_f"][i - 1]) * pfb[i, 1])
        x0fb += pfb[0, 0]
        y0fb += pfb[0, 1]
        th0fb = psib[0]
        th_fb += psib[1:]

        # pull back through the three spline systems
        gxy = propagate_grad(fw["sys_xy"], fw["spl_xy"], dcxy, dlxy)
        gs = propagate_uniform_grad(
            self.usys_s, fw["spl_s"], tf / m, dcs, float(dls.sum()),
            np.array([self.v0i]), np.array([0.0]))
        s_total = gxy.lengths + s_direct
        swp = gs.waypoints[:, 0]
        if m > 1:
            ssuf = np.cumsum(swp[::-1])[::-1]
            s_total[:-1] += ssuf
        s_total += gs.end_val[0]
        tf_b += gs.dh / m
        if n:
            gth = propagate_uniform_grad(
                self.usys_th, fw["spl_th"], tf / self.omega, dcth,
                float(dlth.sum()), self.thdot_init, np.zeros(n))
            tf_b += gth.dh / self.omega
            th_total = gth.end_val + th_fb
        else:
            gth = None
            th_total = th_fb

        gz = np.zeros(self.nz)
        gz[self.i_p] = gxy.waypoints.ravel()
        gz[self.i_s] = s_total * fw["ds"]
        if n:
            gz[self.i_th] = gth.waypoints.ravel()
        gz[self.i_xf] = gxy.end_val[0] + x0fb
        gz[self.i_yf] = gxy.end_val[1] + y0fb
        th0f = fw["th0f"]
        gz[self.i_thf] = (-math.sin(th0f) * gxy.end_deriv[0]
                          + math.cos(th0f) * gxy.end_deriv[1]
                          + th0fb + th_total.sum())
        if n:
            tsuf = np.cumsum(th_total[::-1])[::-1]
            gz[self.i_vd] = -tsuf * fw["dtheta_d"]
        gz[self.i_tau] = tf_b * fw["dtf"]
        return val, gz

    # ------------------------------------------------------------------
    def initial_guess(self, path):
        """Seed the decision vector from a search path."""
        cfg = self.config
        m, n, om = self.m, self.n, self.omega
        if len(path.x) < 2:
            raise PathTooShort("need at least two path states")
        seg = np.hypot(np.diff(path.x), np.diff(path.y))
        cl = np.concatenate([[0.0], np.cumsum(seg)])
        total = float(cl[-1])
        if total < 1e-6:
            raise PathTooShort("search path has no length")
        stations = total * np.arange(1, m) / m
        px = np.interp(stations, cl, path.x)
        py = np.interp(stations, cl, path.y)
        z = np.zeros(self.nz)
        z[self.i_p] = np.stack([px, py], axis=1).ravel()
        z[self.i_s] = lc2(np.full(m, total / m))
        tf0 = total / (cfg.seed_speed_frac * self.params.v_mlon)
        z[self.i_tau] = lc2(tf0)
        z[self.i_xf] = path.x[-1]
        z[self.i_yf] = path.y[-1]
        th0f = float(path.theta0[-1])
        z[self.i_thf] = th0f
        if n:
            t_end = path.t[-1]
            tq = t_end * np.arange(1, om) / om
            wp = np.empty((om - 1, n))
            for i in range(n):
                wp[:, i] = np.interp(tq, path.t, path.trailer_yaws[:, i])
            z[self.i_th] = wp.ravel()
            yaw_end = np.concatenate([[th0f], path.trailer_yaws[-1]])
            offs = np.diff(yaw_end) * -1.0
            z[self.i_vd] = encode_hitch(offs, self.params.dtheta_max,
                                        clamp=cfg.hitch_seed_clamp)
        return z


def solve_trajectory(start, region, sdf, params, seed, config=None):
    """Refine a search path (or a raw decision vector) into a trajectory.

    Runs the multiplier loop until the worst constraint violation falls
    under viol_tol; each inner problem is smooth and solved by L-BFGS.
    """
    config = config or OptimizerConfig()
    t0 = time.perf_counter()
    prob = TrajectoryProblem(start, region, sdf, params, config)
    z = seed if isinstance(seed, np.ndarray) else prob.initial_guess(seed)
    lam, mu = prob.mult_init()
    rho = config.rho_init
    viol_prev = math.inf
    n_evals = 0
    status = "max_outer"
    success = False
    fw = None
    for outer in range(config.max_outer):
        # keep the inner tolerance proportional to the current violation
        # so multipliers are only updated at near-stationary points
        gtol = max(config.lbfgs_gtol,
                   config.gtol_frac * min(viol_prev, 1.0))
        res = lbfgs_minimize(
            lambda zz: prob.alm_value_grad(zz, lam, mu, rho), z,
            memory=config.lbfgs_memory, gtol=gtol,
            max_iters=config.lbfgs_iters)
        z = res.x
        n_evals += res.n_evals
        fw = prob.forward(z)
        viol = prob.violation(fw)
        if viol <= config.viol_tol:
            success = True
            status = "converged"
            break
        lam = lam + rho * fw["hitch"]
        mu = np.maximum(0.0, mu + rho * fw["g_flat"])
        if viol > config.viol_shrink * viol_prev:
            rho = min(rho * config.rho_growth, config.rho_max)
        viol_prev = min(viol_prev, viol)
    else:
        outer = config.max_outer - 1
        viol = prob.violation(fw) if fw is not None else math.inf

    traj = FlatTrajectory(xy=fw["spl_xy"], s_of_t=fw["spl_s"],
                          thetas=fw["spl_th"]) if fw is not None else None
    obj = prob.objective(fw) if fw is not None else math.inf
    return OptResult(success=success, trajectory=traj, objective=obj,
                     violation=viol, n_outer=outer + 1, n_evals=n_evals,
                     elapsed=time.perf_counter() - t0, status=status)


@dataclasses.dataclass
class FeasibilityReport:
    """Worst-case excesses of a dense constraint re-sampling
    (positive entries mean the named bound is exceeded)."""

    ok: bool
    excess: dict


def check_feasibility(traj, region, sdf, params, samples_per_piece=120,
                      eq_tol=0.05, limit_tol=1e-2, sdf_tol=0.01,
                      sdot_tol=1e-6, den_tol=1e-3, end_tol=1e-3):
    """Re-sample a trajectory densely and check every constraint."""
    n = params.n_trailers
    m = traj.xy.n_pieces
    ts = np.linspace(0.0, traj.t_final, m * samples_per_piece + 1)
    arr = traj.flat_arrays(ts)
    x1, y1 = arr["x1"], arr["y1"]
    s1, s2 = arr["s1"], arr["s2"]
    den = x1 * x1 + y1 * y1
    sq = np.sqrt(np.maximum(den, 1e-12))
    cross = x1 * arr["y2"] - y1 * arr["x2"]
    dot = x1 * arr["x2"] + y1 * arr["y2"]
    theta0 = np.arctan2(y1, x1)
    v0 = s1 * sq
    acc = s2 * sq + s1 * s1 * dot / sq
    kappa = cross / (den * sq)
    alat = s1 * s1 * cross / sq
    th = arr["th"]
    th1 = arr["th1"]
    links = np.asarray(params.hitch_lengths)

    excess = {}
    if n:
        prev = np.concatenate([theta0[:, None], th[:, :-1]], axis=1)
        phi = prev - th
        vch = np.empty((len(ts), n + 1))
        vch[:, 0] = v0
        for i in range(1, n + 1):
            vch[:, i] = vch[:, i - 1] * np.cos(phi[:, i - 1])
        resid = th1 * links[None, :] - vch[:, :-1] * np.sin(phi)
        excess["equality"] = float(np.abs(resid).max()) - eq_tol
        excess["hitch_angle"] = float(
            np.abs(wrap_angle(phi)).max()) - params.dtheta_max - limit_tol
    excess["speed"] = float(v0.max()) - params.v_mlon - limit_tol
    excess["acc"] = float(np.abs(acc).max()) - params.a_mlon - limit_tol
    excess["lat"] = float(np.abs(alat).max()) - params.a_mlat - limit_tol
    excess["curv"] = float(np.abs(kappa).max()) - params.kappa_max - limit_tol
    excess["sdot"] = float(-s1.min()) - sdot_tol
    excess["den"] = params.slack_floor - float(den.min()) - den_tol

    pos = np.empty((n + 1, len(ts), 2))
    pos[0] = np.stack([arr["x0"], arr["y0"]], axis=1)
    for i in range(1, n + 1):
        pos[i, :, 0] = pos[i - 1, :, 0] - links[i - 1] * np.cos(th[:, i - 1])
        pos[i, :, 1] = pos[i - 1, :, 1] - links[i - 1] * np.sin(th[:, i - 1])
    cen = pos.copy()
    cen[0, :, 0] += params.rear_offset * np.cos(theta0)
    cen[0, :, 1] += params.rear_offset * np.sin(theta0)
    worst_sdf = -math.inf
    for i in range(n + 1):
        vals, _ = sdf.query_batch(cen[i])
        worst_sdf = max(worst_sdf,
                        float((params.wrap_radii[i] - vals).max()))
    excess["clearance"] = worst_sdf - sdf_tol
    pairs = params.nonadjacent_pairs()
    if pairs:
        worst_pair = -math.inf
        for i, j in pairs:
            dist = np.hypot(cen[i, :, 0] - cen[j, :, 0],
                            cen[i, :, 1] - cen[j, :, 1])
            worst_pair = max(worst_pair,
                             params.veh_clearance - float(dist.min()))
        excess["mutual"] = worst_pair - sdf_tol

    # terminal containment of all body rectangles
    yaw_f = np.concatenate([[theta0[-1]], th[-1]])
    worst_end = -math.inf
    for i in range(n + 1):
        li, wi = params.body_sizes[i]
        cx = params.rear_offset if i == 0 else 0.0
        bv = np.array([[cx - li / 2, -wi / 2], [cx + li / 2, -wi / 2],
                       [cx + li / 2, wi / 2], [cx - li / 2, wi / 2]])
        c, s = math.cos(yaw_f[i]), math.sin(yaw_f[i])
        rot = np.array([[c, -s], [s, c]])
        wv = bv @ rot.T + pos[i, -1]
        rel = wv[:, None, :] - region.vertices[None, :, :]
        worst_end = max(worst_end, float(
            np.einsum("vea,ea->ve", rel, region.normals).max()))
    excess["end_region"] = worst_end - end_tol

    ok = all(v <= 0.0 for v in excess.values())
    return FeasibilityReport(ok=ok, excess=excess)
