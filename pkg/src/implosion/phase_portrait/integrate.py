"""Desingularized integration of the Emden system with event detection."""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import RK45, DOP853

from ..errors import IntegrationError
from ..rootfind import bracketed_root
from .emden import EmdenPoint, emden_rhs

EVENT_KINDS = (
    "sonic-crossing",
    "u-hat-hits-minus-one",
    "blow-up",
    "reached-P0-asymptote",
    "reached-Pinf-neighborhood",
    "section",
)


@dataclass
class StopSpec:
    """Which events terminate an integration.

    ``section_q`` adds a crossing of the line ``q_hat = section_q``;
    ``pinf_radius`` and ``p0_q`` set the neighbourhood sizes; ``blowup``
    bounds ``|q_hat| + |u_hat|``.
    """

    kinds: tuple = ("sonic-crossing", "u-hat-hits-minus-one", "blow-up",
                    "reached-Pinf-neighborhood")
    section_q: float | None = None
    pinf_radius: float = 1e-6
    p0_q: float = 1e6
    blowup: float = 1e8
    xi_max: float | None = None


@dataclass
class DenseSegment:
    """Continuous representation of ``(q, u, xi)`` for ``s`` in ``[s0, s1]``."""

    s0: float
    s1: float
    fn: object

    def __call__(self, s):
        return self.fn(s)


@dataclass
class PhaseTrajectory:
    """Sampled orbit of the desingularized flow.

    ``s``, ``xi``, ``q``, ``u`` are the accepted step endpoints; ``events``
    holds ``(kind, index)`` pairs sorted by index.
    """

    s: np.ndarray
    xi: np.ndarray
    q: np.ndarray
    u: np.ndarray
    events: list
    direction: int
    segments: list = field(default_factory=list)

    @property
    def end(self):
        return EmdenPoint(float(self.q[-1]), float(self.u[-1]))

    def kinds(self):
        return [k for k, _ in self.events]

    def dense(self, s):
        """Evaluate ``(q, u, xi)`` at pseudo-times ``s`` (array)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty((3, s.size))
        done = np.zeros(s.size, bool)
        for seg in self.segments:
            lo, hi = min(seg.s0, seg.s1), max(seg.s0, seg.s1)
            sel = (~done) & (s >= lo) & (s <= hi)
            if np.any(sel):
                out[:, sel] = seg(s[sel])
                done |= sel
        if not np.all(done):
            raise IntegrationError("dense output requested outside the trajectory")
        return out

    def at_xi(self, xi_targets, newton_steps=6):
        """Evaluate ``(q, u, dq/dxi, du/dxi)`` at log-radii where ``xi`` is monotone."""
        xt = np.asarray(xi_targets, dtype=float)
        order = np.argsort(self.xi)
        xs, ss = self.xi[order], self.s[order]
        if np.any(np.diff(xs) <= 0):
            raise IntegrationError("xi is not strictly monotone on this trajectory")
        s = np.interp(xt, xs, ss)
        for _ in range(newton_steps):
            q, u, xi = self.dense(s)
            d = self.direction * emden_rhs(q, u, self._model)[2]
            s = s - (xi - xt) / d
            s = np.clip(s, ss.min(), ss.max())
        q, u, _ = self.dense(s)
        n_q, n_u, d = emden_rhs(q, u, self._model)
        return q, u, n_q / d, n_u / d

    _model: object = None


def _field(model, direction):
    def f(_s, y):
        n_q, n_u, d = emden_rhs(y[0], y[1], model)
        return np.array([direction * n_q, direction * n_u, direction * d])
    return f


def _event_values(y, spec, model):
    q, u, xi = y
    vals = {}
    kinds = spec.kinds
    if "sonic-crossing" in kinds:
        vals["sonic-crossing"] = emden_rhs(q, u, model)[2]
    if "u-hat-hits-minus-one" in kinds:
        vals["u-hat-hits-minus-one"] = u + 1.0
    if "blow-up" in kinds:
        vals["blow-up"] = spec.blowup - (abs(q) + abs(u))
    if "reached-P0-asymptote" in kinds:
        vals["reached-P0-asymptote"] = spec.p0_q - q
    if "reached-Pinf-neighborhood" in kinds:
        vals["reached-Pinf-neighborhood"] = math.hypot(q, u) - spec.pinf_radius
    if "section" in kinds and spec.section_q is not None:
        vals["section"] = q - spec.section_q
    if spec.xi_max is not None:
        vals["xi-limit"] = spec.xi_max - xi
    return vals


def integrate_desingularized(start, xi0, direction, model, stops=None, tol=1e-11,
                             max_steps=200000, method="RK45", first_step=None,
                             s0=0.0):
    """Integrate ``d(q, u, xi)/ds = direction * (N_Q, N_U, D)`` from ``start``.

    Uses an embedded explicit Runge-Kutta pair (``"RK45"``, order 5(4), or
    ``"DOP853"``) at relative tolerance ``tol``.  Stops at the first
    triggered event of ``stops``; the event time is located by bracketed
    root finding on the dense output.  Raises ``IntegrationError`` when
    ``max_steps`` is exhausted or the state becomes non-finite.
    """
    stops = stops or StopSpec()
    solver_cls = {"RK45": RK45, "DOP853": DOP853}[method]
    y0 = np.array([start.q_hat, start.u_hat, xi0], dtype=float)
    solver = solver_cls(_field(model, direction), s0, y0, np.inf, rtol=tol,
                        atol=tol * 1e-3, first_step=first_step)
    ts, ys, interps = [s0], [y0], []
    prev = _event_values(y0, stops, model)
    events = []
    for _ in range(max_steps):
        msg = solver.step()
        if solver.status == "failed":
            raise IntegrationError(f"integrator failed: {msg}")
        t, y = solver.t, solver.y.copy()
        dense = solver.dense_output()
        if not np.all(np.isfinite(y)):
            raise IntegrationError(f"non-finite state at s={t}")
        cur = _event_values(y, stops, model)
        hits = []
        for kind, v in cur.items():
            v0 = prev[kind]
            if v0 != 0 and np.sign(v) != np.sign(v0):
                def g(s, kind=kind):
                    return _event_values(dense(s), stops, model)[kind]
                t_hit, _ = bracketed_root(g, ts[-1], t, xtol=1e-15 * max(1.0, abs(t)))
                hits.append((t_hit, kind))
        if hits:
            t_hit, kind = min(hits, key=lambda h: h[0] * np.sign(t - ts[-1]))
            ts.append(t_hit)
            ys.append(dense(t_hit))
            interps.append(dense)
            if kind != "xi-limit":
                events.append((kind, len(ts) - 1))
            break
        ts.append(t)
        ys.append(y)
        interps.append(dense)
        prev = cur
    else:
        raise IntegrationError(f"step budget of {max_steps} exceeded")
    ys = np.array(ys)
    ts = np.array(ts)
    segments = [DenseSegment(ts[i], ts[i + 1], interps[i]) for i in range(len(interps))]
    traj = PhaseTrajectory(ts, ys[:, 2], ys[:, 0], ys[:, 1], events, direction, segments)
    traj._model = model
    return traj
