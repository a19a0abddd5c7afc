"""Limited-memory BFGS with a weak Wolfe line search.

Minimizes a smooth unconstrained function given a callback returning value
and gradient together.  The weak Wolfe conditions (sufficient decrease plus
a directional-derivative increase) are bracketed by bisection, which keeps
the search robust on objectives that are only piecewise C^2, such as
penalty terms built from clamped distance fields.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import NonFiniteObjective


@dataclasses.dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    n_iters: int
    n_evals: int
    status: str


def lbfgs_minimize(fun, x0, memory=8, gtol=1e-5, ftol=0.0, max_iters=500,
                   c1=1e-4, c2=0.9, max_ls=30):
    """Minimize fun(x) -> (f, grad); returns the best iterate seen.

    Parameters
    ----------
    fun : callback returning (float, ndarray) for a point x.
    x0 : start point.
    memory : number of curvature pairs kept.
    gtol : stop when the gradient infinity norm drops below this.
    ftol : stop when the relative decrease over an iteration falls below
        this (0 disables).
    max_iters : outer iteration cap.

    Returns LbfgsResult with status one of "gtol", "ftol", "max_iters",
    "line_search_failed".
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g = fun(x)
    g = np.asarray(g, dtype=float)
    if not (np.isfinite(f) and np.all(np.isfinite(g))):
        raise NonFiniteObjective("objective not finite at the start point")
    n_evals = 1
    best_x, best_f, best_g = x.copy(), f, g.copy()
    s_list, y_list, rho_list = [], [], []
    status = "max_iters"
    it = 0
    for it in range(max_iters):
        if np.abs(g).max() <= gtol:
            status = "gtol"
            break
        d = _two_loop(g, s_list, y_list, rho_list)
        dg = float(np.dot(d, g))
        if dg >= 0.0:
            # fall back to steepest descent if the model direction is bad
            d = -g
            dg = -float(np.dot(g, g))
            s_list, y_list, rho_list = [], [], []
        alpha0 = 1.0 if s_list else min(1.0, 1.0 / max(np.abs(g).sum(),
                                                       1e-12))
        ok, alpha, f_new, g_new, evals = _weak_wolfe(fun, x, f, g, d, dg,
                                                     alpha0, c1, c2, max_ls)
        n_evals += evals
        if not ok:
            status = "line_search_failed"
            break
        x_new = x + alpha * d
        s = x_new - x
        y = g_new - g
        sy = float(np.dot(s, y))
        if sy > 1e-12 * float(np.linalg.norm(s) * np.linalg.norm(y)):
            s_list.append(s)
            y_list.append(y)
            rho_list.append(1.0 / sy)
            if len(s_list) > memory:
                s_list.pop(0)
                y_list.pop(0)
                rho_list.pop(0)
        drop = f - f_new
        x, f, g = x_new, f_new, g_new
        if f < best_f:
            best_x, best_f, best_g = x.copy(), f, g.copy()
        if ftol > 0.0 and drop <= ftol * max(1.0, abs(f)):
            status = "ftol"
            break
    if np.abs(best_g).max() <= gtol:
        status = "gtol"
    return LbfgsResult(x=best_x, f=best_f, g=best_g, n_iters=it + 1,
                       n_evals=n_evals, status=status)


def _two_loop(g, s_list, y_list, rho_list):
    q = -g.copy()
    alphas = []
    for s, y, rho in zip(reversed(s_list), reversed(y_list),
                         reversed(rho_list)):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    if s_list:
        gamma = np.dot(s_list[-1], y_list[-1]) / np.dot(y_list[-1],
                                                        y_list[-1])
        q *= gamma
    for (s, y, rho), a in zip(zip(s_list, y_list, rho_list),
                              reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return q


def _weak_wolfe(fun, x, f, g, d, dg, alpha0, c1, c2, max_ls):
    """Bisection bracket for Armijo + weak curvature; returns
    (ok, alpha, f_new, g_new, evals)."""
    lo, hi = 0.0, np.inf
    alpha = alpha0
    evals = 0
    fallback = None  # best strict-decrease trial seen
    for _ in range(max_ls):
        xt = x + alpha * d
        f_new, g_new = fun(xt)
        evals += 1
        finite = np.isfinite(f_new) and np.all(np.isfinite(g_new))
        if finite and f_new < f and (fallback is None
                                     or f_new < fallback[1]):
            fallback = (alpha, f_new, np.asarray(g_new, dtype=float))
        if not finite or f_new > f + c1 * alpha * dg:
            hi = alpha
        elif float(np.dot(g_new, d)) < c2 * dg:
            lo = alpha
        else:
            return True, alpha, f_new, np.asarray(g_new, dtype=float), evals
        alpha = 0.5 * (lo + hi) if np.isfinite(hi) else 2.0 * lo
        if alpha <= 1e-16:
            break
    # accept any strict decrease rather than give up entirely
    if fallback is not None:
        return True, fallback[0], fallback[1], fallback[2], evals
    return False, 0.0, f, g, evals
