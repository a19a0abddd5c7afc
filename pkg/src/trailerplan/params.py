"""Robot geometry and actuation limits for a tractor with N passive trailers.

Vehicle 0 is the tractor; its reference point p0 is the rear-axle midpoint,
which is also the hitch point for trailer 1.  Trailer i (i >= 1) has its
reference point p_i at its own axle midpoint and hitches at p_{i-1}, a rigid
link of length hitch_lengths[i-1].  The tractor body is centred rear_offset
ahead of p0 along its heading; trailer bodies are centred on p_i.
"""

from __future__ import annotations

import dataclasses
import math

import yaml


@dataclasses.dataclass
class RobotParams:
    """Geometry, wrap circles and limits of the tractor-trailer chain.

    Attributes
    ----------
    n_trailers : number of passive trailers N (>= 0).
    wheelbase : tractor wheelbase L0 (m).
    hitch_lengths : link lengths L1..LN (m), one per trailer.
    rear_offset : distance from p0 to the tractor body centre (m).
    tractor_length : tractor body length (m), used for terminal placement.
    body_sizes : (length, width) per vehicle, N+1 entries (m).
    wrap_radii : radius of the covering circle per vehicle, N+1 entries (m).
    v_mlon : longitudinal speed bound (m/s).
    a_mlon : longitudinal acceleration bound (m/s^2).
    a_mlat : lateral acceleration bound (m/s^2).
    kappa_max : curvature bound (1/m); must not exceed tan(delta_max)/L0.
    dtheta_max : jackknife bound on |theta_{i-1} - theta_i| (rad), in (0, pi/2].
    delta_max : steering angle bound (rad).
    veh_clearance : minimum distance between circle centres of non-adjacent
        vehicles (m).  0 picks min over such pairs of (r_i + r_j) - 0.02.
    slack_floor : lower bound delta_+ on x'^2 + y'^2 along the path parameter.
    """

    n_trailers: int = 1
    wheelbase: float = 0.5
    hitch_lengths: tuple = (0.6,)
    rear_offset: float = 0.25
    tractor_length: float = 0.6
    body_sizes: tuple = ((0.6, 0.4), (0.4, 0.4))
    wrap_radii: tuple = ()
    v_mlon: float = 2.0
    a_mlon: float = 2.0
    a_mlat: float = 2.0
    kappa_max: float = 0.0
    dtheta_max: float = 1.47
    delta_max: float = 0.7
    veh_clearance: float = 0.0
    slack_floor: float = 0.9

    def __post_init__(self):
        if self.n_trailers < 0:
            raise ValueError("n_trailers must be >= 0")
        if len(self.hitch_lengths) != self.n_trailers:
            raise ValueError("need one hitch length per trailer")
        if len(self.body_sizes) != self.n_trailers + 1:
            raise ValueError("need one body size per vehicle")
        if self.wheelbase <= 0 or self.rear_offset < 0 or self.tractor_length <= 0:
            raise ValueError("tractor geometry must be positive")
        if any(h <= 0 for h in self.hitch_lengths):
            raise ValueError("hitch lengths must be positive")
        if any(l <= 0 or w <= 0 for l, w in self.body_sizes):
            raise ValueError("body sizes must be positive")
        if not self.wrap_radii:
            self.wrap_radii = tuple(
                math.hypot(l / 2.0, w / 2.0) for l, w in self.body_sizes)
        if len(self.wrap_radii) != self.n_trailers + 1:
            raise ValueError("need one wrap radius per vehicle")
        if any(r <= 0 for r in self.wrap_radii):
            raise ValueError("wrap radii must be positive")
        if self.kappa_max == 0.0:
            self.kappa_max = math.tan(self.delta_max) / self.wheelbase
        if self.kappa_max > math.tan(self.delta_max) / self.wheelbase + 1e-12:
            raise ValueError("kappa_max exceeds tan(delta_max)/wheelbase")
        if not 0.0 < self.dtheta_max <= math.pi / 2.0:
            raise ValueError("dtheta_max must lie in (0, pi/2]")
        if not 0.0 < self.slack_floor <= 1.0:
            raise ValueError("slack_floor must lie in (0, 1]")
        if min(self.v_mlon, self.a_mlon, self.a_mlat, self.delta_max) <= 0:
            raise ValueError("limits must be positive")
        if self.veh_clearance == 0.0:
            self.veh_clearance = self._default_clearance()
        self.hitch_lengths = tuple(float(h) for h in self.hitch_lengths)
        self.body_sizes = tuple((float(l), float(w)) for l, w in self.body_sizes)
        self.wrap_radii = tuple(float(r) for r in self.wrap_radii)

    def _default_clearance(self):
        n = self.n_trailers + 1
        pairs = [(i, j) for i in range(n) for j in range(i + 2, n)]
        if not pairs:
            return 0.0
        return min(self.wrap_radii[i] + self.wrap_radii[j] for i, j in pairs) - 0.02

    @property
    def n_vehicles(self):
        return self.n_trailers + 1

    def nonadjacent_pairs(self):
        """Vehicle index pairs (i, j), j >= i+2, subject to mutual clearance."""
        n = self.n_vehicles
        return [(i, j) for i in range(n) for j in range(i + 2, n)]


def benchmark_params(n_trailers=1):
    """Desk-scale benchmark robot: 0.6x0.4 tractor towing 0.4x0.4 trailers."""
    return RobotParams(
        n_trailers=n_trailers,
        wheelbase=0.5,
        hitch_lengths=(0.6,) * n_trailers,
        rear_offset=0.25,
        tractor_length=0.6,
        body_sizes=((0.6, 0.4),) + ((0.4, 0.4),) * n_trailers,
        v_mlon=2.0,
        a_mlon=2.0,
        a_mlat=2.0,
        dtheta_max=1.47,
        delta_max=0.7,
    )


def load_params(path):
    """Read RobotParams from a YAML mapping; keys mirror the field names."""
    with open(path) as f:
        raw = yaml.safe_load(f)
    if not isinstance(raw, dict):
        raise ValueError("params file must hold a mapping")
    kwargs = dict(raw)
    if "hitch_lengths" in kwargs:
        kwargs["hitch_lengths"] = tuple(kwargs["hitch_lengths"])
    if "body_sizes" in kwargs:
        kwargs["body_sizes"] = tuple(tuple(b) for b in kwargs["body_sizes"])
    if "wrap_radii" in kwargs:
        kwargs["wrap_radii"] = tuple(kwargs["wrap_radii"])
    return RobotParams(**kwargs)


def save_params(params, path):
    d = dataclasses.asdict(params)
    d["hitch_lengths"] = list(params.hitch_lengths)
    d["body_sizes"] = [list(b) for b in params.body_sizes]
    d["wrap_radii"] = list(params.wrap_radii)
    with open(path, "w") as f:
        yaml.safe_dump(d, f, sort_keys=True)
