"""Figure construction and rendering.

Three kinds: `map` (trajectory over the obstacle map), `curves` (speed and
curvature against time with dashed constraint bounds), `bench` (per-cell
benchmark bars). Rendering is a pure function of the input files, so
identical inputs produce identical images.
"""

import dataclasses

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .formats import (
    TRAJ_MAGIC,
    ParseError,
    parse_bench_csv,
    parse_scenario,
    parse_trajectory,
)

KINDS = ("map", "curves", "bench")


@dataclasses.dataclass
class FigureSpec:
    """One render request: inputs, figure kind, output image, overrides."""

    kind: str
    inputs: tuple
    out: str
    xlim: tuple = None
    ylim: tuple = None
    dpi: int = 120


def _is_trajectory(path):
    with open(path) as f:
        return f.readline().rstrip("\n") == TRAJ_MAGIC


def _apply_limits(ax, spec):
    if spec.xlim is not None:
        ax.set_xlim(*spec.xlim)
    if spec.ylim is not None:
        ax.set_ylim(*spec.ylim)


def _map_figure(spec):
    if len(spec.inputs) != 2:
        raise ParseError(spec.inputs[0], 1,
                         "map needs a scenario file and a trajectory file")
    a, b = spec.inputs
    tr_path, sc_path = (a, b) if _is_trajectory(a) else (b, a)
    if not _is_trajectory(tr_path):
        raise ParseError(tr_path, 1, "no trajectory dump among inputs")
    traj = parse_trajectory(tr_path)
    sc = parse_scenario(sc_path)

    fig, ax = plt.subplots(figsize=(7.0, 7.0))
    for poly in sc["obstacles"]:
        ax.fill(poly[:, 0], poly[:, 1], color="0.45", zorder=2)
    target = np.vstack([sc["target"], sc["target"][:1]])
    ax.plot(target[:, 0], target[:, 1], color="tab:green", lw=1.5,
            label="target", zorder=3)
    cols = traj["columns"]
    xs = traj["samples"][:, cols.index("x")]
    ys = traj["samples"][:, cols.index("y")]
    ax.plot(xs, ys, color="tab:blue", lw=1.6, label="trajectory", zorder=4)
    start = sc["start"]
    ax.plot([start["x"]], [start["y"]], "o", color="tab:orange",
            label="start", zorder=5)
    ax.annotate("", xytext=(start["x"], start["y"]),
                xy=(start["x"] + 1.2 * np.cos(start["theta0"]),
                    start["y"] + 1.2 * np.sin(start["theta0"])),
                arrowprops={"arrowstyle": "->", "color": "tab:orange"})
    x0, y0, x1, y1 = sc["bounds"]
    ax.set_xlim(x0, x1)
    ax.set_ylim(y0, y1)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.legend(loc="upper right")
    _apply_limits(ax, spec)
    return fig


def _curves_figure(spec):
    if len(spec.inputs) != 1:
        raise ParseError(spec.inputs[0], 1,
                         "curves needs exactly one trajectory file")
    traj = parse_trajectory(spec.inputs[0])
    cols = traj["columns"]
    t = traj["samples"][:, cols.index("t")]
    v = traj["samples"][:, cols.index("v0")]
    kap = traj["samples"][:, cols.index("kappa")]

    fig, (ax_v, ax_k) = plt.subplots(2, 1, sharex=True, figsize=(7.0, 5.0))
    ax_v.plot(t, v, color="tab:blue", label="v0")
    for bound in (traj["v_mlon"], -traj["v_mlon"]):
        ax_v.axhline(bound, color="tab:red", ls="--", lw=1.0)
    ax_v.set_ylabel("speed (m/s)")
    ax_v.legend(loc="upper right")
    ax_k.plot(t, kap, color="tab:blue", label="kappa")
    for bound in (traj["kappa_max"], -traj["kappa_max"]):
        ax_k.axhline(bound, color="tab:red", ls="--", lw=1.0)
    ax_k.set_ylabel("curvature (1/m)")
    ax_k.set_xlabel("t (s)")
    ax_k.legend(loc="upper right")
    for ax in (ax_v, ax_k):
        _apply_limits(ax, spec)
    return fig


def _bench_figure(spec):
    if len(spec.inputs) != 1:
        raise ParseError(spec.inputs[0], 1,
                         "bench needs exactly one CSV file")
    rows = parse_bench_csv(spec.inputs[0])
    cells = sorted({r["n_trailers"] for r in rows})
    rates, lens = [], []
    for n in cells:
        sub = [r for r in rows if r["n_trailers"] == n]
        ok = [r for r in sub if r["success"]]
        rates.append(100.0 * len(ok) / len(sub))
        lens.append(np.mean([r["l_traj"] for r in ok]) if ok else 0.0)

    fig, (ax_s, ax_l) = plt.subplots(1, 2, figsize=(8.0, 4.0))
    x = np.arange(len(cells))
    ax_s.bar(x, rates, color="tab:blue", width=0.6)
    ax_s.set_ylabel("success (%)")
    ax_s.set_ylim(0.0, 105.0)
    ax_l.bar(x, lens, color="tab:orange", width=0.6)
    ax_l.set_ylabel("l_traj (m)")
    for ax in (ax_s, ax_l):
        ax.set_xticks(x)
        ax.set_xticklabels([str(n) for n in cells])
        ax.set_xlabel("n_trailers")
        _apply_limits(ax, spec)
    fig.tight_layout()
    return fig


_BUILDERS = {"map": _map_figure, "curves": _curves_figure,
             "bench": _bench_figure}


def build_figure(spec):
    """Build the matplotlib figure for a spec without saving it."""
    if spec.kind not in _BUILDERS:
        raise ValueError("unknown figure kind %r" % spec.kind)
    return _BUILDERS[spec.kind](spec)


def render(spec):
    """Render a figure spec to its output image; returns the path."""
    fig = build_figure(spec)
    try:
        fig.savefig(spec.out, dpi=spec.dpi)
    finally:
        plt.close(fig)
    return spec.out
