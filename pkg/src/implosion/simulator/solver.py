"""SSP-RK3 time stepping and the run loop."""

import math

import numpy as np

from ..errors import CFLViolation, NonPositiveDensity, SimulationError
from ..transforms import density_from_c
from .diagnostics import DiagnosticsSeries, perturbation_diagnostics, weighted_energy
from .operators import (advective_speed, rhs_eulerian, rhs_selfsim, viscous_coefficient)


class Stepper:
    """Method-of-lines integrator bound to a model and boundary rule."""

    def __init__(self, model, frame, boundary="outflow", viscous=True, dissipation=0.0,
                 cfl=0.5, boundary_values=None):
        self.model = model
        self.frame = frame
        self.boundary = boundary
        self.viscous = viscous
        self.dissipation = dissipation
        self.cfl = cfl
        self.boundary_values = boundary_values
        self.tau_ref = None

    def rhs(self, state, return_dissipative=False):
        fn = rhs_eulerian if state.frame == "eulerian" else rhs_selfsim
        return fn(state, self.model, viscous=self.viscous, boundary=self.boundary,
                  dissipation=self.dissipation, return_dissipative=return_dissipative)

    def stable_dt(self, state):
        """Largest step allowed by the advective and viscous bounds."""
        h = state.h
        dt = self.cfl * h / advective_speed(state, self.model)
        if self.viscous:
            nu = viscous_coefficient(state, self.model)
            if nu > 0:
                dt = min(dt, self.cfl * h * h / (2.0 * nu))
        return dt

    def _apply_boundary(self, state):
        state.b[0] = 0.0
        if self.boundary == "reflect":
            state.b[-1] = 0.0
        elif self.boundary in ("hold", "farfield"):
            a_inf, b_inf = self.boundary_values
            if self.boundary == "farfield" and state.frame == "selfsim":
                decay = math.exp(-(self.model.lam - 1) * (state.time - self.tau_ref))
                a_inf, b_inf = a_inf * decay, b_inf * decay
            state.a[-1], state.b[-1] = a_inf, b_inf

    def bind(self, state):
        """Record boundary data from the initial state when needed."""
        if self.boundary in ("hold", "farfield") and self.boundary_values is None:
            self.boundary_values = (float(state.a[-1]), float(state.b[-1]))
        self.tau_ref = state.time

    def step(self, state, dt, check=True):
        if check:
            limit = self.stable_dt(state)
            if dt > limit * (1 + 1e-12):
                raise CFLViolation(f"dt={dt:.3g} exceeds stable bound {limit:.3g}", state.time)
        s0 = state
        k = self.rhs(s0)
        s1 = s0.copy()
        s1.a += dt * k[0]
        s1.b += dt * k[1]
        s1.time = s0.time + dt
        self._apply_boundary(s1)
        k = self.rhs(s1)
        s2 = s0.copy()
        s2.a = 0.75 * s0.a + 0.25 * (s1.a + dt * k[0])
        s2.b = 0.75 * s0.b + 0.25 * (s1.b + dt * k[1])
        s2.time = s0.time + 0.5 * dt
        self._apply_boundary(s2)
        k = self.rhs(s2)
        out = s0.copy()
        out.a = s0.a / 3.0 + 2.0 / 3.0 * (s2.a + dt * k[0])
        out.b = s0.b / 3.0 + 2.0 / 3.0 * (s2.b + dt * k[1])
        out.time = s0.time + dt
        self._apply_boundary(out)
        if not (np.all(np.isfinite(out.a)) and np.all(np.isfinite(out.b))):
            raise SimulationError("non-finite value detected", out.time)
        if np.any(out.a <= 0):
            raise NonPositiveDensity("density lost positivity", out.time)
        return out


def step(state, dt, model, boundary=None, viscous=True, dissipation=0.0, cfl=1.0):
    """One SSP-RK3 step; the far boundary defaults to the frame's natural rule."""
    if boundary is None:
        boundary = "outflow" if state.frame == "selfsim" else "hold"
    st = Stepper(model, state.frame, boundary, viscous, dissipation, cfl)
    st.bind(state)
    return st.step(state, dt)


def _stepper_for(config):
    return Stepper(config.model, config.frame, config.boundary, config.viscous,
                   config.dissipation, config.cfl)


def rho_origin(state, model):
    if state.frame == "eulerian":
        return float(density_from_c(state.a[0], model.alpha))
    return math.nan


def record(state, config, stepper):
    """Diagnostic record for one state."""
    model = config.model
    rec = {"time": state.time, "rho_origin": rho_origin(state, model)}
    _, _, fdis = stepper.rhs(state, return_dissipative=True) if config.viscous else (0, 0, None)
    if fdis is not None:
        if state.frame == "eulerian" and config.frame_map is None:
            rec["fdis_sup"] = math.nan
        elif state.frame == "eulerian":
            fm = config.frame_map
            rem = fm.blowup_time - state.time
            # to self-similar units: divide by s(t) dtau/dt
            scale = rem ** (1.0 / fm.lam - 1.0) / fm.lam / (fm.lam * rem)
            rec["fdis_sup"] = float(np.max(np.abs(fdis))) / scale
        else:
            rec["fdis_sup"] = float(np.max(np.abs(fdis)))
    if config.profile is not None and config.cutoffs is not None:
        if state.frame == "selfsim" or config.frame_map is not None:
            pd = perturbation_diagnostics(state, config.profile, config.cutoffs,
                                          frame_map=config.frame_map)
            rec.update(pd)
            rec["e_k"] = weighted_energy(state, config.cutoffs, config.k_surrogate,
                                         config.frame_map)
    return rec


def run(config, initial, callback=None):
    """Integrate to the end condition and return the diagnostics.

    Eulerian runs stop at ``t_end``, when ``rho(t, 0)`` exceeds
    ``max_density`` or when the stable step falls below ``min_dt``.
    Errors are re-raised as :class:`SimulationError` carrying the
    partial series in ``.series``.
    """
    if initial.frame != config.frame:
        raise SimulationError("initial state frame differs from the configuration")
    stepper = _stepper_for(config)
    stepper.bind(initial)
    series = DiagnosticsSeries(meta=dict(config.meta))
    series.meta.update(gamma=config.model.gamma, delta=config.model.delta,
                       **{"lambda": config.model.lam}, frame=config.frame,
                       n_cells=config.n_cells, cfl=config.cfl)
    state = initial
    series.append(record(state, config, stepper))
    n = 0
    reason = "final-time"
    try:
        while True:
            if state.time >= config.t_end * (1 - 1e-14):
                break
            dt = stepper.stable_dt(state)
            if dt < config.min_dt:
                reason = "min-dt"
                break
            dt = min(dt, config.t_end - state.time)
            state = stepper.step(state, dt, check=False)
            n += 1
            if callback is not None:
                callback(state)
            dens = rho_origin(state, config.model)
            done = dens >= config.max_density
            if n % config.output_every == 0 or done or state.time >= config.t_end * (1 - 1e-14):
                series.append(record(state, config, stepper))
            if done:
                reason = "max-density"
                break
            if n >= config.max_steps:
                reason = "max-steps"
                break
    except SimulationError as exc:
        series.reason = f"error: {exc}"
        exc.series = series
        exc.state = state
        raise
    except Exception as exc:
        series.reason = f"error: {exc}"
        err = SimulationError(str(exc), state.time)
        err.series = series
        err.state = state
        raise err from exc
    if series.records[-1]["time"] < state.time:
        series.append(record(state, config, stepper))
    series.reason = reason
    series.final_state = state
    series.steps = n
    return series
