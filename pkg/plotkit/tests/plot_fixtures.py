import numpy as np


def straight_trajectory_text(n_trailers=0, dt=0.5):
    """Consistent straight-line dump: unit speed along +x, kappa = 0."""
    n = n_trailers
    t_final = 8.0
    lines = [
        "# trailerplan trajectory v1",
        "n_trailers %d" % n,
        "t_final %.17g" % t_final,
        "v_mlon %.17g" % 2.0,
        "kappa_max %.17g" % 0.5,
        "s_lengths %.17g %.17g" % (4.0, 4.0),
        "xy_coeffs pieces 2 dims 2",
    ]
    for j in range(2):
        lines.append("%.17g %.17g" % (2.0 + 4.0 * j, 5.0))
        lines.append("1 0")
        lines.extend(["0 0"] * 4)
    lines.append("s_coeffs pieces 2 dims 1")
    for j in range(2):
        lines.extend(["%.17g" % (4.0 * j), "1", "0", "0", "0", "0"])
    if n > 0:
        lines.append("theta_coeffs pieces 4 dims %d" % n)
        lines.extend([" ".join(["0"] * n)] * 24)
    cols = "t s x y theta0 v0 acc kappa a_lat"
    cols += "".join(" theta_%d" % (i + 1) for i in range(n))
    lines.append("columns " + cols)
    ts = np.arange(0.0, t_final + dt / 2, dt)
    lines.append("samples %d" % len(ts))
    for t in ts:
        row = [t, t, 2.0 + t, 5.0, 0.0, 1.0, 0.0, 0.0, 0.0] + [0.0] * n
        lines.append(" ".join("%.17g" % v for v in row))
    return "\n".join(lines) + "\n"


def scenario_text():
    return """\
band: [10.0, 20.0]
bounds: [0.0, 0.0, 30.0, 30.0]
counts: [1, 1, 0]
obstacles:
- [[10.0, 10.0], [12.0, 10.0], [12.0, 12.0], [10.0, 12.0]]
- [[16.0, 20.0], [18.0, 21.0], [17.0, 23.0]]
resolution: 0.1
seed: 0
start:
  theta0: 0.0
  thetas: [0.0]
  v0: 0.0
  x: 4.0
  y: 15.0
target_vertices:
- [20.0, 13.0]
- [24.0, 13.0]
- [24.0, 17.0]
- [20.0, 17.0]
"""


def bench_csv_text():
    hdr = ("n_trailers,seed,n_tri,n_quad,n_pent,band_lo,band_hi,success,"
           "stage,l_traj,t_d,mean_kappa,n_expanded,n_evals")
    rows = [
        "1,0,20,20,20,10.0,20.0,1,ok,16.5,11.2,0.15,1200,5000",
        "1,1,20,20,20,10.0,20.0,0,optimize,,,,1500,30000",
        "2,0,20,20,20,10.0,20.0,1,ok,17.0,12.0,0.2,1400,8000",
        "2,1,20,20,20,10.0,20.0,1,ok,18.0,13.0,0.18,1500,9000",
    ]
    return hdr + "\n" + "\n".join(rows) + "\n"
