"""Piecewise quintic splines pinned at waypoints, solved as a banded system.

A spline with M pieces and D dims has 6M coefficients per dim, fixed by
value + first derivative + zero second derivative at both ends, interior
waypoint values, and C^4 continuity at the M-1 interior knots.  That system
is square, banded (lower width 8, upper width 7 in the row layout below) and
invertible for positive piece lengths; it is solved with an LAPACK banded LU
and falls back to a dense solve if the banded path fails.

Gradients of any cost w.r.t. the coefficients are pulled back onto the
waypoints, boundary data and piece lengths through one adjoint solve with
the transposed system (propagate_grad).
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.linalg import lapack as _lapack

from .errors import OutOfDomain, SingularSystem

_gbtrf = _lapack.dgbtrf
_gbtrs = _lapack.dgbtrs

# FALL[k, m] = m! / (m-k)!: coefficient of tau^(m-k) in d^k/dtau^k tau^m
FALL = np.zeros((6, 6))
for _k in range(6):
    for _m in range(_k, 6):
        f = 1.0
        for _i in range(_m, _m - _k, -1):
            f *= _i
        FALL[_k, _m] = f

_BAND_L, _BAND_U = 8, 7


def basis(tau, order):
    """gamma^(order)(tau) as a length-6 row."""
    out = np.zeros(6)
    for m in range(order, 6):
        out[m] = FALL[order, m] * tau ** (m - order)
    return out


def basis_many(tau, order):
    """Rows gamma^(order)(tau_q) for an array of parameters, shape (Q, 6)."""
    tau = np.asarray(tau, dtype=float)
    out = np.zeros(tau.shape + (6,))
    for m in range(order, 6):
        out[..., m] = FALL[order, m] * tau ** (m - order)
    return out


@dataclasses.dataclass
class QuinticSpline:
    """Evaluated representation: coeffs (M, 6, D), piece lengths (M,)."""

    coeffs: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        self.knots = np.concatenate([[0.0], np.cumsum(self.lengths)])

    @property
    def n_pieces(self):
        return self.coeffs.shape[0]

    @property
    def n_dims(self):
        return self.coeffs.shape[2]

    @property
    def total(self):
        return float(self.knots[-1])

    def locate(self, t, tol=1e-9):
        """Piece index and local parameter; left-closed pieces, the final
        knot belongs to the last piece."""
        if t < -tol or t > self.total + tol:
            raise OutOfDomain("t=%r outside [0, %r]" % (t, self.total))
        t = min(max(t, 0.0), self.total)
        j = int(np.searchsorted(self.knots, t, side="right")) - 1
        j = min(max(j, 0), self.n_pieces - 1)
        return j, t - self.knots[j]

    def locate_many(self, ts, extrapolate=False):
        """Vectorized locate; out-of-domain values extend the end pieces
        when extrapolate is set, otherwise raise OutOfDomain."""
        ts = np.asarray(ts, dtype=float)
        if not extrapolate:
            if np.any(ts < -1e-9) or np.any(ts > self.total + 1e-9):
                raise OutOfDomain("query outside [0, %r]" % self.total)
        idx = np.searchsorted(self.knots, ts, side="right") - 1
        idx = np.clip(idx, 0, self.n_pieces - 1)
        return idx, ts - self.knots[idx]

    def eval_piece(self, j, tau, order):
        return basis(tau, order) @ self.coeffs[j]

    def eval(self, t, order=0):
        j, tau = self.locate(t)
        return self.eval_piece(j, tau, order)

    def eval_many(self, ts, max_order=0, extrapolate=False):
        """Values and derivatives, shape (max_order+1, Q, D)."""
        idx, tau = self.locate_many(ts, extrapolate=extrapolate)
        out = np.empty((max_order + 1, len(np.atleast_1d(idx)),
                        self.n_dims))
        pieces = self.coeffs[idx]
        for k in range(max_order + 1):
            rows = basis_many(tau, k)
            out[k] = np.einsum("qc,qcd->qd", rows, pieces)
        return out


_ZB = None


def _zero_basis():
    global _ZB
    if _ZB is None:
        _ZB = np.stack([basis(0.0, k) for k in range(6)])
    return _ZB


class SplineSystem:
    """The 6M x 6M waypoint system for a fixed set of piece lengths."""

    def __init__(self, lengths):
        lengths = np.asarray(lengths, dtype=float)
        if np.any(lengths <= 0.0) or not np.all(np.isfinite(lengths)):
            raise SingularSystem("piece lengths must be positive and finite")
        self.lengths = lengths
        self.m = len(lengths)
        n = 6 * self.m
        a = np.zeros((n, n))
        zb = _zero_basis()
        bl = np.stack([basis_many(lengths, k) for k in range(6)])
        self._bl = bl
        a[0, 0:6] = zb[0]
        a[1, 0:6] = zb[1]
        a[2, 0:6] = zb[2]
        for j in range(self.m - 1):
            base = 3 + 6 * j
            col = 6 * j
            a[base, col:col + 6] = bl[0, j]
            for k in range(5):
                a[base + 1 + k, col:col + 6] = bl[k, j]
                a[base + 1 + k, col + 6:col + 12] = -zb[k]
        a[n - 3, n - 6:n] = bl[0, -1]
        a[n - 2, n - 6:n] = bl[1, -1]
        a[n - 1, n - 6:n] = bl[2, -1]
        self.matrix = a
        self.n = n
        self._l = min(_BAND_L, n - 1)
        self._u = min(_BAND_U, n - 1)
        self._ab = self._to_band(a, self._l, self._u)
        # one LU factorization serves solve (trans=0) and adjoint (trans=1)
        afact = np.zeros((2 * self._l + self._u + 1, n))
        afact[self._l:] = self._ab
        lu, piv, info = _gbtrf(afact, self._l, self._u, overwrite_ab=1)
        if info == 0:
            self._lu, self._piv = lu, piv
        else:
            self._lu, self._piv = None, None

    @staticmethod
    def _to_band(a, l, u):
        n = a.shape[0]
        ab = np.zeros((l + u + 1, n))
        for d in range(-l, u + 1):
            row = np.diagonal(a, offset=d)
            ab[u - d, max(d, 0):max(d, 0) + len(row)] = row
        return ab

    def _rhs(self, waypoints, start_val, start_deriv, end_val, end_deriv, d):
        b = np.zeros((self.n, d))
        b[0] = start_val
        b[1] = start_deriv
        for j in range(self.m - 1):
            b[3 + 6 * j] = waypoints[j]
        b[self.n - 3] = end_val
        b[self.n - 2] = end_deriv
        return b

    def solve(self, waypoints, start_val, start_deriv, end_val, end_deriv,
              dense=False):
        """Solve for coefficients; second derivatives at both ends are 0."""
        waypoints = np.atleast_2d(np.asarray(waypoints, dtype=float))
        if waypoints.size == 0:
            waypoints = waypoints.reshape(0, len(np.atleast_1d(start_val)))
        d = waypoints.shape[1]
        if len(waypoints) != self.m - 1:
            raise ValueError("need %d interior waypoints" % (self.m - 1))
        b = self._rhs(waypoints, start_val, start_deriv, end_val, end_deriv,
                      d)
        c = self._solve_system(b, dense, trans=0)
        return QuinticSpline(coeffs=c.reshape(self.m, 6, d),
                             lengths=self.lengths)

    def _solve_system(self, b, dense, trans):
        if not dense and self._lu is not None:
            c, info = _gbtrs(self._lu, self._l, self._u, b, self._piv,
                             trans=trans)
            if info == 0 and np.all(np.isfinite(c)):
                return c
        mat = self.matrix.T if trans else self.matrix
        c = np.linalg.solve(mat, b)
        if not np.all(np.isfinite(c)):
            raise SingularSystem("spline system produced non-finite "
                                 "coefficients")
        return c

    def adjoint(self, grad_coeffs, dense=False):
        """Solve A^T lam = df/dc; lam rows carry waypoint/boundary grads."""
        g = np.asarray(grad_coeffs, dtype=float).reshape(self.n, -1)
        return self._solve_system(g, dense, trans=1)

    def length_grad(self, lam, coeffs):
        """Implicit part -lam^T (dA/dL_j) c of the length gradient."""
        m = self.m
        c = coeffs.reshape(m, 6, -1)
        dvals = np.einsum("kjc,jcd->jkd", self._bl, c)
        out = np.zeros(m)
        for j in range(m):
            if j < m - 1:
                rows = [3 + 6 * j] + [4 + 6 * j + k for k in range(5)]
                orders = [1, 1, 2, 3, 4, 5]
            else:
                rows = [self.n - 3, self.n - 2, self.n - 1]
                orders = [1, 2, 3]
            acc = 0.0
            for r, k in zip(rows, orders):
                acc += float(np.dot(lam[r], dvals[j, k]))
            out[j] = -acc
        return out


@dataclasses.dataclass
class SplineGrads:
    """Cost gradients pulled back onto the solve inputs."""

    waypoints: np.ndarray
    lengths: np.ndarray
    start_val: np.ndarray
    start_deriv: np.ndarray
    end_val: np.ndarray
    end_deriv: np.ndarray


def propagate_grad(system, spline, grad_coeffs, grad_lengths):
    """Pull df/dcoeffs (M,6,D) and the explicit df/dlengths (M,) back onto
    waypoints, boundary conditions and total length gradients."""
    lam = system.adjoint(grad_coeffs)
    m = system.m
    wp_rows = [3 + 6 * j for j in range(m - 1)]
    waypoints = lam[wp_rows] if wp_rows else np.zeros((0, lam.shape[1]))
    lengths = np.asarray(grad_lengths, dtype=float) \
        + system.length_grad(lam, spline.coeffs)
    return SplineGrads(
        waypoints=waypoints,
        lengths=lengths,
        start_val=lam[0].copy(),
        start_deriv=lam[1].copy(),
        end_val=lam[system.n - 3].copy(),
        end_deriv=lam[system.n - 2].copy(),
    )


_MEXP = np.arange(6.0)


def solve_uniform(unit_system, h, waypoints, start_val, start_deriv,
                  end_val, end_deriv):
    """Solve a uniform spline of piece length h through a unit system.

    For equal piece lengths the system matrix over the scaled coefficients
    c_m * h^m is the unit-length matrix with derivative boundary rows
    scaled by h, so one SplineSystem built with ones can serve every h.
    """
    sd = np.asarray(start_deriv, dtype=float) * h
    ed = np.asarray(end_deriv, dtype=float) * h
    hat = unit_system.solve(waypoints, start_val, sd, end_val, ed)
    scale = h ** _MEXP
    return QuinticSpline(coeffs=hat.coeffs / scale[None, :, None],
                         lengths=np.full(unit_system.m, h))


@dataclasses.dataclass
class UniformGrads:
    """Pullbacks for a uniform spline; dh collects the whole piece-length
    gradient (explicit plus implicit)."""

    waypoints: np.ndarray
    dh: float
    start_val: np.ndarray
    start_deriv: np.ndarray
    end_val: np.ndarray
    end_deriv: np.ndarray


def propagate_uniform_grad(unit_system, spline, h, grad_coeffs, grad_h,
                           start_deriv, end_deriv):
    """propagate_grad for splines produced by solve_uniform.

    grad_h is the explicit dF/dh part; start_deriv / end_deriv are the
    unscaled boundary derivatives the spline was solved with.
    """
    m = unit_system.m
    scale = h ** _MEXP
    ghat = np.asarray(grad_coeffs, dtype=float) / scale[None, :, None]
    lam = unit_system.adjoint(ghat)
    wp_rows = [3 + 6 * j for j in range(m - 1)]
    waypoints = lam[wp_rows] if wp_rows else np.zeros((0, lam.shape[1]))
    dh = float(grad_h)
    dh -= float((np.asarray(grad_coeffs) * spline.coeffs
                 * _MEXP[None, :, None]).sum()) / h
    dh += float(lam[1] @ np.asarray(start_deriv, dtype=float))
    dh += float(lam[unit_system.n - 2] @ np.asarray(end_deriv, dtype=float))
    return UniformGrads(
        waypoints=waypoints,
        dh=dh,
        start_val=lam[0].copy(),
        start_deriv=lam[1] * h,
        end_val=lam[unit_system.n - 3].copy(),
        end_deriv=lam[unit_system.n - 2] * h,
    )


def jerk_energy(coeffs, lengths, weights):
    """Integral of the squared third derivative, weighted per dim.

    Returns (value, d/dcoeffs, d/dlengths); the length gradient is the
    squared jerk evaluated at the piece end (Leibniz).
    """
    c3 = coeffs[:, 3, :]
    c4 = coeffs[:, 4, :]
    c5 = coeffs[:, 5, :]
    le = np.asarray(lengths, dtype=float)[:, None]
    l2, l3, l4, l5 = le * le, le ** 3, le ** 4, le ** 5
    w = np.asarray(weights, dtype=float)[None, :]
    per = (36.0 * c3 * c3 * le + 144.0 * c3 * c4 * l2
           + (192.0 * c4 * c4 + 240.0 * c3 * c5) * l3
           + 720.0 * c4 * c5 * l4 + 720.0 * c5 * c5 * l5)
    value = float((w * per).sum())
    dc = np.zeros_like(coeffs)
    dc[:, 3, :] = w * (72.0 * c3 * le + 144.0 * c4 * l2 + 240.0 * c5 * l3)
    dc[:, 4, :] = w * (144.0 * c3 * l2 + 384.0 * c4 * l3 + 720.0 * c5 * l4)
    dc[:, 5, :] = w * (240.0 * c3 * l3 + 720.0 * c4 * l4 + 1440.0 * c5 * l5)
    jerk_end = 6.0 * c3 + 24.0 * c4 * le + 60.0 * c5 * l2
    dl = (w * jerk_end * jerk_end).sum(axis=1)
    return value, dc, dl


@dataclasses.dataclass
class FlatTrajectory:
    """Planar curve over progress s, progress profile s(t), trailer yaws.

    xy has M pieces over arc lengths S; s_of_t has M uniform time pieces
    covering T_f; thetas has Omega > M uniform time pieces (None when the
    chain has no trailers).
    """

    xy: QuinticSpline
    s_of_t: QuinticSpline
    thetas: QuinticSpline

    @property
    def t_final(self):
        return self.s_of_t.total

    @property
    def s_final(self):
        return self.xy.total

    @property
    def n_trailers(self):
        return 0 if self.thetas is None else self.thetas.n_dims

    def flat_arrays(self, ts):
        """Raw spline samples used to compose physical quantities.

        Returns a dict of arrays over ts: progress s0,s1,s2; curve
        derivatives x0..x2, y0..y2 (w.r.t. s, evaluated at s0 clamped to
        the curve domain); trailer yaw th (Q, N) and rate th1 (Q, N).
        """
        ts = np.asarray(ts, dtype=float)
        sv = self.s_of_t.eval_many(ts, max_order=2)
        s0 = np.clip(sv[0][:, 0], 0.0, self.s_final)
        pv = self.xy.eval_many(s0, max_order=2, extrapolate=True)
        out = {
            "s0": sv[0][:, 0], "s1": sv[1][:, 0], "s2": sv[2][:, 0],
            "x0": pv[0][:, 0], "y0": pv[0][:, 1],
            "x1": pv[1][:, 0], "y1": pv[1][:, 1],
            "x2": pv[2][:, 0], "y2": pv[2][:, 1],
        }
        if self.thetas is not None:
            tv = self.thetas.eval_many(ts, max_order=1)
            out["th"] = tv[0]
            out["th1"] = tv[1]
        else:
            out["th"] = np.zeros((len(ts), 0))
            out["th1"] = np.zeros((len(ts), 0))
        return out

    def composed_state(self, t, params):
        """(RobotState, FlatSample) at time t."""
        from .kinematics import FlatSample, RobotState, flat_eval

        arr = self.flat_arrays(np.array([t]))
        flat = flat_eval(arr["x1"][0], arr["y1"][0], arr["x2"][0],
                         arr["y2"][0], arr["s1"][0], arr["s2"][0], params,
                         floor=params.slack_floor * 0.5)
        state = RobotState(x=float(arr["x0"][0]), y=float(arr["y0"][0]),
                           theta0=flat.theta0, v0=flat.v0,
                           thetas=tuple(arr["th"][0]))
        return state, flat


def compose_flat(arr):
    """Physical arrays (theta0, v0, a, kappa, a_lat, den) from flat_arrays
    output; no floor checks, callers validate den themselves."""
    x1, y1, x2, y2 = arr["x1"], arr["y1"], arr["x2"], arr["y2"]
    s1, s2 = arr["s1"], arr["s2"]
    den = x1 * x1 + y1 * y1
    sq = np.sqrt(den)
    cross = x1 * y2 - y1 * x2
    theta0 = np.arctan2(y1, x1)
    v0 = s1 * sq
    a = s2 * sq + s1 * s1 * (x1 * x2 + y1 * y2) / sq
    kappa = cross / (den * sq)
    a_lat = s1 * s1 * cross / sq
    return {"theta0": theta0, "v0": v0, "a": a, "kappa": kappa,
            "a_lat": a_lat, "den": den}
