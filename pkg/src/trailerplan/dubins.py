"""Shortest bounded-curvature curves between oriented planar poses.

All six candidate words (LSL, RSR, LSR, RSL, RLR, LRL) are solved in the
normalized frame where the start is the origin with zero heading and the
turning radius is 1; the cheapest feasible word wins.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np


def _mod2pi(a):
    return a % (2.0 * math.pi)


def _lsl(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), \
        math.cos(beta)
    p_sq = 2.0 + d * d - 2.0 * math.cos(alpha - beta) + 2.0 * d * (sa - sb)
    if p_sq < 0.0:
        if p_sq < -1e-9:
            return None
        p_sq = 0.0
    tmp = math.atan2(cb - ca, d + sa - sb)
    return _mod2pi(-alpha + tmp), math.sqrt(p_sq), _mod2pi(beta - tmp), "LSL"


def _rsr(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), \
        math.cos(beta)
    p_sq = 2.0 + d * d - 2.0 * math.cos(alpha - beta) + 2.0 * d * (sb - sa)
    if p_sq < 0.0:
        if p_sq < -1e-9:
            return None
        p_sq = 0.0
    tmp = math.atan2(ca - cb, d - sa + sb)
    return _mod2pi(alpha - tmp), math.sqrt(p_sq), _mod2pi(-beta + tmp), "RSR"


def _lsr(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), \
        math.cos(beta)
    p_sq = -2.0 + d * d + 2.0 * math.cos(alpha - beta) + 2.0 * d * (sa + sb)
    if p_sq < 0.0:
        if p_sq < -1e-9:
            return None
        p_sq = 0.0
    p = math.sqrt(p_sq)
    tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
    return _mod2pi(-alpha + tmp), p, _mod2pi(-_mod2pi(beta) + tmp), "LSR"


def _rsl(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), \
        math.cos(beta)
    p_sq = d * d - 2.0 + 2.0 * math.cos(alpha - beta) - 2.0 * d * (sa + sb)
    if p_sq < 0.0:
        if p_sq < -1e-9:
            return None
        p_sq = 0.0
    p = math.sqrt(p_sq)
    tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
    return _mod2pi(alpha - tmp), p, _mod2pi(beta - tmp), "RSL"


def _rlr(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), \
        math.cos(beta)
    tmp = (6.0 - d * d + 2.0 * math.cos(alpha - beta)
           + 2.0 * d * (sa - sb)) / 8.0
    if abs(tmp) > 1.0:
        return None
    p = _mod2pi(2.0 * math.pi - math.acos(tmp))
    t = _mod2pi(alpha - math.atan2(ca - cb, d - sa + sb) + _mod2pi(p / 2.0))
    return t, p, _mod2pi(alpha - beta - t + _mod2pi(p)), "RLR"


def _lrl(alpha, beta, d):
    sa, sb, ca, cb = math.sin(alpha), math.sin(beta), math.cos(alpha), \
        math.cos(beta)
    tmp = (6.0 - d * d + 2.0 * math.cos(alpha - beta)
           + 2.0 * d * (sb - sa)) / 8.0
    if abs(tmp) > 1.0:
        return None
    p = _mod2pi(2.0 * math.pi - math.acos(tmp))
    t = _mod2pi(-alpha - math.atan2(ca - cb, d + sa - sb) + p / 2.0)
    return t, p, _mod2pi(_mod2pi(beta) - alpha - t + _mod2pi(p)), "LRL"


_WORDS = (_lsl, _rsr, _lsr, _rsl, _rlr, _lrl)


@dataclasses.dataclass
class DubinsPath:
    word: str
    segments: tuple  # real-unit lengths of the three segments
    radius: float
    length: float

    def sample(self, step):
        """Poses (K, 3) spaced <= step along the curve, plus curvature per
        sample; the endpoint is always included."""
        poses = [np.array([0.0, 0.0, 0.0])]
        kappas = [0.0]
        x, y, th = self._q0
        poses[0] = np.array([x, y, th])
        for mode, seg in zip(self.word, self.segments):
            if seg < 1e-12:
                continue
            kappa = 0.0 if mode == "S" else \
                (1.0 if mode == "L" else -1.0) / self.radius
            n = max(1, int(math.ceil(seg / step)))
            for i in range(1, n + 1):
                ds = seg * i / n
                if mode == "S":
                    xi = x + ds * math.cos(th)
                    yi = y + ds * math.sin(th)
                    ti = th
                else:
                    ti = th + ds * kappa
                    xi = x + (math.sin(ti) - math.sin(th)) / kappa
                    yi = y - (math.cos(ti) - math.cos(th)) / kappa
                poses.append(np.array([xi, yi, ti]))
                kappas.append(kappa)
            x, y, th = poses[-1]
        return np.array(poses), np.array(kappas)


def dubins_connect(q0, q1, radius):
    """Shortest curvature-bounded connection; None if no word closes.

    With all six words evaluated a solution always exists, but callers
    treat None defensively.
    """
    dx = q1[0] - q0[0]
    dy = q1[1] - q0[1]
    dist = math.hypot(dx, dy)
    d = dist / radius
    ref = math.atan2(dy, dx)
    alpha = _mod2pi(q0[2] - ref)
    beta = _mod2pi(q1[2] - ref)
    best = None
    for word in _WORDS:
        res = word(alpha, beta, d)
        if res is None:
            continue
        t, p, q, name = res
        total = (t + p + q) * radius
        if best is None or total < best.length:
            segs = (t * radius, p * radius, q * radius)
            best = DubinsPath(word=name, segments=segs, radius=radius,
                              length=total)
    if best is not None:
        best._q0 = (float(q0[0]), float(q0[1]), float(q0[2]))
    return best
