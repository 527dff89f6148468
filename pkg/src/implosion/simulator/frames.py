"""Cross-frame comparison of matched Eulerian and self-similar runs."""

from dataclasses import dataclass
import math

import numpy as np

from ..transforms import field_scale
from .solver import run
from .state import RadialState, SimConfig, uniform_grid


def lagrange_sample(r, f, x, parity, order=8):
    """Interpolate a uniformly sampled field with a parity-extended stencil."""
    h = r[1] - r[0]
    n = len(r)
    x = np.asarray(x, dtype=float)
    half = order // 2
    base = np.floor(x / h).astype(int) - half + 1
    base = np.minimum(base, n - order)
    idx = base[:, None] + np.arange(order)[None, :]
    nodes = idx * h
    vals = f[np.abs(idx)] * np.where(idx < 0, parity, 1.0)
    out = np.zeros(len(x))
    for j in range(order):
        w = np.ones(len(x))
        for k in range(order):
            if k != j:
                w *= (x - nodes[:, k]) / (nodes[:, j] - nodes[:, k])
        out += w * vals[:, j]
    return out


def selfsim_to_eulerian(state, frame, x):
    """Self-similar state expressed as ``(c, u)`` at Eulerian radii ``x``."""
    # from tau directly: T - t recomputed from t loses digits near t = 0
    rem = math.exp(-frame.lam * state.time)
    y = np.asarray(x) * rem ** (-1.0 / frame.lam)
    s = rem ** (1.0 / frame.lam - 1.0) / frame.lam
    return (s * lagrange_sample(state.r, state.a, y, 1.0),
            s * lagrange_sample(state.r, state.b, y, -1.0))


def matched_states(profile, frame, n_cells, y_max, perturbation=None):
    """Identical data in both frames at ``t = 0``, ``tau = tau0``."""
    y = uniform_grid(n_cells, y_max)
    q, u, _, _ = profile.interpolate(y)
    u[0] = 0.0
    if perturbation is not None:
        dq, du = perturbation(y)
        q, u = q + dq, u + du
    ss = RadialState("selfsim", frame.tau0, y, q, u)
    s = field_scale(frame, 0.0)
    x = y * frame.blowup_time ** (1.0 / frame.lam)
    eu = RadialState("eulerian", 0.0, x, s * q, s * u)
    return eu, ss


@dataclass(frozen=True)
class FrameComparison:
    difference: float
    discretization: float
    x_limit: float

    @property
    def ratio(self):
        return self.difference / self.discretization

    def as_dict(self):
        return {"difference": self.difference, "discretization": self.discretization,
                "x_limit": self.x_limit, "ratio": self.ratio}


def _pair(profile, frame, model, n, y_max, dtau, viscous, perturbation, cfl):
    eu, ss = matched_states(profile, frame, n, y_max, perturbation)
    t1 = float(frame.time_of(frame.tau0 + dtau))
    ce = SimConfig(model, "eulerian", n, eu.r[-1], cfl=cfl, viscous=viscous, t_end=t1,
                   boundary="hold", output_every=10**9, frame_map=frame)
    cs = SimConfig(model, "selfsim", n, y_max, cfl=cfl, viscous=viscous,
                   t_end=frame.tau0 + dtau, boundary="outflow", output_every=10**9)
    fe = run(ce, eu).final_state
    fs = run(cs, ss).final_state
    fs.time = frame.tau0 + dtau
    return fe, fs


def compare_frames(profile, frame, model, n_cells=256, y_max=4.0, dtau=0.2, viscous=False,
                   perturbation=None, cfl=0.5):
    """Difference between the frames and the discretization error at ``dtau``.

    Both frames run at ``n_cells`` and ``2 n_cells``.  The discretization
    error is the larger change under refinement.  Nodes reachable from
    the held Eulerian boundary within the window are excluded.
    """
    fe, fs = _pair(profile, frame, model, n_cells, y_max, dtau, viscous, perturbation, cfl)
    fe2, fs2 = _pair(profile, frame, model, 2 * n_cells, y_max, dtau, viscous, perturbation,
                     cfl)
    x = fe.r
    t1 = fe.time
    rem = frame.blowup_time - t1
    speed = float(np.max(np.abs(fe.b) + model.alpha * fe.a))
    x_lim = min(x[-1] - 1.5 * speed * t1 - 10 * fe.h, y_max * rem ** (1.0 / frame.lam))
    sel = x <= x_lim
    c_s, u_s = selfsim_to_eulerian(fs, frame, x[sel])
    c_s2, u_s2 = selfsim_to_eulerian(fs2, frame, x[sel])
    diff = max(np.max(np.abs(fe.a[sel] - c_s)), np.max(np.abs(fe.b[sel] - u_s)))
    err_e = max(np.max(np.abs(fe.a[sel] - fe2.a[::2][sel])),
                np.max(np.abs(fe.b[sel] - fe2.b[::2][sel])))
    err_s = max(np.max(np.abs(c_s - c_s2)), np.max(np.abs(u_s - u_s2)))
    return FrameComparison(float(diff), float(max(err_e, err_s)), float(x_lim))
