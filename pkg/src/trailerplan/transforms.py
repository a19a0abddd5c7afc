"""Smooth bijections mapping constrained decision variables to all of R.

lc2 maps (0, inf) onto R with two continuous derivatives at the seam x=1:

    lc2(x) = 1 - sqrt(2/x - 1)   for 0 < x <= 1
           = sqrt(2x - 1) - 1    for x > 1

Piece lengths and the horizon live through lc2; bounded hitch angles at the
end state go through a rational squash built on top of it.
"""

from __future__ import annotations

import numpy as np

from .errors import NonPositiveInput


def lc2(x):
    """Forward map (0, inf) -> R; scalar or array."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise NonPositiveInput("lc2 requires strictly positive input")
    lo = 1.0 - np.sqrt(np.maximum(2.0 / np.where(x > 0, x, 1.0) - 1.0, 0.0))
    hi = np.sqrt(np.maximum(2.0 * x - 1.0, 0.0)) - 1.0
    out = np.where(x <= 1.0, lo, hi)
    return float(out) if out.ndim == 0 else out


def lc2_inv(y):
    """Inverse map R -> (0, inf)."""
    y = np.asarray(y, dtype=float)
    lo = 2.0 / ((1.0 - y) ** 2 + 1.0)
    hi = ((y + 1.0) ** 2 + 1.0) / 2.0
    out = np.where(y <= 0.0, lo, hi)
    return float(out) if out.ndim == 0 else out


def dlc2_inv(y):
    """Derivative of lc2_inv."""
    y = np.asarray(y, dtype=float)
    den = (1.0 - y) ** 2 + 1.0
    lo = 4.0 * (1.0 - y) / (den * den)
    hi = y + 1.0
    out = np.where(y <= 0.0, lo, hi)
    return float(out) if out.ndim == 0 else out


def encode_hitch(theta_d, bound, clamp=0.95):
    """Map a hitch offset in (-bound, bound) to an unconstrained value.

    Offsets outside clamp*bound are clamped first so search-derived seeds
    never hit the singular ratio.
    """
    theta_d = np.clip(theta_d, -clamp * bound, clamp * bound)
    ratio = (bound + theta_d) / (bound - theta_d)
    return lc2(ratio)


def decode_hitch(vartheta, bound):
    """Inverse of encode_hitch; returns (theta_d, dtheta_d/dvartheta)."""
    sigma = lc2_inv(vartheta)
    theta_d = bound * (sigma - 1.0) / (sigma + 1.0)
    dtheta = bound * 2.0 / (sigma + 1.0) ** 2 * dlc2_inv(vartheta)
    return theta_d, dtheta
