"""Tractor-trailer kinematics, flat-output maps and a reference integrator.

The chain model: the tractor rear axle p0 moves with speed v0 along heading
theta0, steered by delta; each trailer yaw follows

    theta_i_dot = v_{i-1} * sin(theta_{i-1} - theta_i) / L_i,
    v_i        = v_{i-1} * cos(theta_{i-1} - theta_i).

Trajectories are represented by a planar curve (x0(s), y0(s)) and a progress
profile s(t); the flat maps below recover heading, speed, acceleration and
curvature from derivatives of those two, and stay well-defined when v0 = 0
because the tangent norm is kept near 1 instead of collapsing with the speed.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import DegenerateTangent, JackknifeDetected


def wrap_angle(a):
    """Wrap to (-pi, pi]; works on scalars and arrays."""
    return np.pi - np.mod(np.pi - np.asarray(a), 2.0 * np.pi)


@dataclasses.dataclass
class RobotState:
    """Tractor SE(2) pose + speed and one yaw per trailer."""

    x: float
    y: float
    theta0: float
    v0: float
    thetas: tuple

    def validate(self, params):
        if len(self.thetas) != params.n_trailers:
            raise ValueError("state has wrong trailer count")
        if self.v0 < 0.0:
            raise ValueError("v0 must be >= 0")
        yaws = self.yaw_chain()
        for i in range(1, len(yaws)):
            if abs(wrap_angle(yaws[i - 1] - yaws[i])) >= params.dtheta_max:
                raise ValueError("hitch angle %d violates jackknife bound" % i)

    def yaw_chain(self):
        return np.array([self.theta0, *self.thetas])

    @property
    def xy(self):
        return np.array([self.x, self.y])


@dataclasses.dataclass
class FlatSample:
    """Differential quantities recovered from the flat representation."""

    theta0: float
    v0: float
    a: float
    kappa: float
    a_lat: float
    delta: float


def trailer_rates(state, delta, params):
    """Yaw rates and link speeds of every vehicle at the given state.

    Returns (rates, speeds), each length N+1; rates[0] is the tractor yaw
    rate v0*tan(delta)/L0, speeds[i] the longitudinal speed of vehicle i.
    """
    n = params.n_trailers
    rates = np.zeros(n + 1)
    speeds = np.zeros(n + 1)
    rates[0] = state.v0 * math.tan(delta) / params.wheelbase
    speeds[0] = state.v0
    yaws = state.yaw_chain()
    for i in range(1, n + 1):
        phi = yaws[i - 1] - yaws[i]
        rates[i] = speeds[i - 1] * math.sin(phi) / params.hitch_lengths[i - 1]
        speeds[i] = speeds[i - 1] * math.cos(phi)
    return rates, speeds


def flat_eval(x1, y1, x2, y2, sdot, sddot, params, floor=None):
    """Flat maps at one sample of the progress-parameterized curve.

    x1, y1, x2, y2 are first and second derivatives of the curve with
    respect to the progress parameter s; sdot, sddot are time derivatives
    of s(t).  Raises DegenerateTangent when the tangent norm squared falls
    below the slack floor.
    """
    if floor is None:
        floor = params.slack_floor
    den = x1 * x1 + y1 * y1
    if den < floor:
        raise DegenerateTangent("tangent norm^2 %.3g below floor %.3g"
                                % (den, floor))
    sq = math.sqrt(den)
    theta0 = math.atan2(y1, x1)
    v0 = sdot * sq
    a = sddot * sq + sdot * sdot * (x1 * x2 + y1 * y2) / sq
    cross = x1 * y2 - y1 * x2
    kappa = cross / (den * sq)
    a_lat = sdot * sdot * cross / sq
    delta = math.atan(params.wheelbase * kappa)
    return FlatSample(theta0=theta0, v0=v0, a=a, kappa=kappa, a_lat=a_lat,
                      delta=delta)


def pose_chain(xy0, yaws, params):
    """Axle positions and wrap-circle centres of the whole chain.

    xy0: (..., 2) tractor position(s); yaws: (..., N+1) yaw(s) per vehicle.
    Returns (positions, centers), each (N+1, ..., 2).  The tractor circle
    centre sits rear_offset ahead of p0; trailer centres coincide with p_i.
    """
    xy0 = np.asarray(xy0, dtype=float)
    yaws = np.asarray(yaws, dtype=float)
    n = params.n_trailers
    pos = np.empty((n + 1,) + xy0.shape)
    pos[0] = xy0
    for i in range(1, n + 1):
        li = params.hitch_lengths[i - 1]
        head = np.stack([np.cos(yaws[..., i]), np.sin(yaws[..., i])], axis=-1)
        pos[i] = pos[i - 1] - li * head
    centers = pos.copy()
    head0 = np.stack([np.cos(yaws[..., 0]), np.sin(yaws[..., 0])], axis=-1)
    centers[0] = pos[0] + params.rear_offset * head0
    return pos, centers


@dataclasses.dataclass
class StateTrace:
    """Dense rollout record: times, positions, yaw chain and controls."""

    t: np.ndarray
    xy: np.ndarray
    yaws: np.ndarray
    v0: np.ndarray
    delta: np.ndarray


def _chain_derivative(state, v0, delta, params):
    x, y = state[0], state[1]
    yaws = state[2:]
    d = np.empty_like(state)
    d[0] = v0 * math.cos(yaws[0])
    d[1] = v0 * math.sin(yaws[0])
    d[2] = v0 * math.tan(delta) / params.wheelbase
    v = v0
    for i in range(1, params.n_trailers + 1):
        phi = yaws[i - 1] - yaws[i]
        d[2 + i] = v * math.sin(phi) / params.hitch_lengths[i - 1]
        v = v * math.cos(phi)
    return d


def rollout(start, controls, t_final, dt, params):
    """RK4 integration of the chain under open-loop controls.

    controls: callable t -> (v0, delta).  Raises JackknifeDetected when a
    hitch angle reaches pi/2.  Used as the ground-truth integrator that
    planned trajectories are replayed against.
    """
    steps = max(1, int(round(t_final / dt)))
    n = params.n_trailers
    state = np.array([start.x, start.y, start.theta0, *start.thetas])
    t_arr = np.empty(steps + 1)
    xy = np.empty((steps + 1, 2))
    yaws = np.empty((steps + 1, n + 1))
    v_arr = np.empty(steps + 1)
    d_arr = np.empty(steps + 1)

    def record(k, t, st):
        t_arr[k] = t
        xy[k] = st[:2]
        yaws[k] = st[2:]
        v_arr[k], d_arr[k] = controls(t)
        phis = st[2:-1] - st[3:]
        if n and np.any(np.abs(wrap_angle(phis)) >= math.pi / 2.0):
            raise JackknifeDetected("hitch angle reached pi/2 at t=%.3f" % t)

    record(0, 0.0, state)
    t = 0.0
    for k in range(steps):
        h = min(dt, t_final - t)
        v1, de1 = controls(t)
        v2, de2 = controls(t + 0.5 * h)
        v3, de3 = controls(t + h)
        k1 = _chain_derivative(state, v1, de1, params)
        k2 = _chain_derivative(state + 0.5 * h * k1, v2, de2, params)
        k3 = _chain_derivative(state + 0.5 * h * k2, v2, de2, params)
        k4 = _chain_derivative(state + h * k3, v3, de3, params)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += h
        record(k + 1, t, state)
    return StateTrace(t=t_arr, xy=xy, yaws=yaws, v0=v_arr, delta=d_arr)
