"""End-to-end helpers: profile computation, simulation setup and sweep cases."""

from dataclasses import dataclass, replace
import math

import numpy as np

from .errors import DomainError
from .phase_portrait import default_bracket, ratio_index_for_regime, shoot_lambda
from .profile import reconstruct, verify_properties
from .regimes import GAMMA_UPPER, check_regime
from .simulator import (SimConfig, fit_exponents, run, state_from_initial_data,
                        state_from_profile, uniform_grid)
from .transforms import (CutoffSet, SelfSimFrame, build_initial_data, density_from_c,
                         rescaled_observables)


def resolve_ratio_index(gamma, delta, spec="auto"):
    """Ratio index from a config value: an odd integer or ``"auto"``.

    ``"auto"`` targets (P1) when ``delta > 0`` makes it reachable and
    falls back to the default index otherwise.
    """
    if str(spec).strip().lower() != "auto":
        m = int(spec)
        if m < 1 or m % 2 == 0:
            raise DomainError("ratio_index must be a positive odd integer")
        return m
    if delta and delta > 0:
        try:
            return ratio_index_for_regime(gamma, delta)
        except Exception:
            pass
    return 5


@dataclass
class ProfileRun:
    shoot: object
    profile: object
    report: object


def compute_profile(gamma, ratio_index=5, match_order=4, bracket=None, n=4096):
    """Shoot, reconstruct and verify; the property report never raises."""
    if not 1 < gamma < GAMMA_UPPER:
        raise DomainError(f"gamma={gamma!r} outside (1, 1+2/sqrt(3))")
    if bracket is None:
        bracket = default_bracket(gamma, ratio_index)
    res = shoot_lambda(gamma, bracket, match_order=match_order)
    prof = reconstruct(res, n=n)
    rep = verify_properties(prof, raise_on_failure=False)
    prof.eta_tilde = rep.eta_tilde
    prof.meta["ratio_index"] = ratio_index
    prof.meta["match_order"] = match_order
    prof.meta["shoot_tol"] = 1e-10
    prof.meta["integrator_rtol"] = 1e-11
    return ProfileRun(res, prof, rep)


def gaussian_perturbation(amplitude, center, width):
    if amplitude == 0:
        return None

    def pert(y):
        return amplitude * np.exp(-((y - center) / width) ** 2), np.zeros_like(y)
    return pert


def setup_simulation(cfg, profile):
    """Build ``(SimConfig, initial state, frame, cutoffs)`` from a parsed config."""
    mcfg, grid, runc, init = cfg["model"], cfg["grid"], cfg["run"], cfg["initial"]
    model = replace(profile.model, delta=mcfg["delta"], a1=mcfg["a1"], a2=mcfg["a2"])
    profile.model = model
    frame = runc["frame"]
    fm = SelfSimFrame(init["blowup_time"], model.lam)
    cutoffs = CutoffSet(init["c0"], init["r0"], init["eta"])
    pert = gaussian_perturbation(init["perturbation_amplitude"], init["perturbation_center"],
                                 init["perturbation_width"])
    n, r_max = grid["n_cells"], grid["r_max"]
    if frame == "selfsim":
        state = state_from_profile(profile, n, r_max, fm.tau0)
        if pert is not None:
            dq, du = pert(state.r)
            state.a += dq
            state.b += du
        t_end = fm.tau0 + runc["duration"]
        boundary = runc["boundary"] or "outflow"
        max_density = math.inf
    elif frame == "eulerian":
        if runc["duration"] >= fm.blowup_time:
            raise DomainError("Eulerian duration must be shorter than the blow-up time")
        data = build_initial_data(profile, fm, cutoffs, init["nu1"], uniform_grid(n, r_max),
                                  perturbation=pert)
        state = state_from_initial_data(data)
        t_end = runc["duration"]
        boundary = runc["boundary"] or "hold"
        max_density = runc["max_density_factor"] * float(density_from_c(state.a[0],
                                                                          model.alpha))
    else:
        raise DomainError(f"unknown frame {frame!r}")
    surrogates = {"nu1": init["nu1"], "c0": cutoffs.c0, "r0": cutoffs.r0, "eta": cutoffs.eta,
                  "blowup_time": fm.blowup_time, "k_surrogate": cfg["diagnostics"]["k_surrogate"],
                  "a1": model.a1, "a2": model.a2}
    sim = SimConfig(model, frame, n, r_max, cfl=runc["cfl"], viscous=runc["viscous"],
                    t_end=t_end, max_density=max_density, min_dt=runc["min_dt"],
                    boundary=boundary, dissipation=runc["dissipation"],
                    output_every=runc["output_every"],
                    k_surrogate=cfg["diagnostics"]["k_surrogate"],
                    probes=cfg["diagnostics"]["probes"], profile=profile, cutoffs=cutoffs,
                    frame_map=fm, meta=surrogates)
    return sim, state, fm, cutoffs


def sup_drift(a, b):
    return float(max(np.max(np.abs(a.a - b.a)), np.max(np.abs(a.b - b.b))))


def run_simulation(sim, state, fm):
    """Run and fit; returns ``(series, report dict)``."""
    series = run(sim, state)
    out = {"reason": series.reason, "steps": series.steps,
           "final_time": series.final_state.time}
    if sim.frame == "selfsim":
        out["drift"] = sup_drift(series.final_state, state)
    try:
        fit = fit_exponents(series, sim.model, sim.frame, fm)
        out["fit"] = fit.as_dict()
    except Exception as exc:
        out["fit_error"] = str(exc)
    if sim.probes and sim.frame == "eulerian":
        lq, lu = rescaled_observables(fm, series.final_state, np.array(sim.probes),
                                      sim.model.alpha)
        q, u, _, _ = sim.profile.interpolate(np.array(sim.probes))
        out["probes"] = {"y": list(sim.probes), "lhs_q": lq.tolist(), "lhs_u": lu.tolist(),
                         "target_q": (q ** (1 / sim.model.alpha)).tolist(),
                         "target_u": u.tolist()}
    return series, out


SWEEP_COLUMNS = ("index", "gamma", "delta", "lambda", "lambda_star", "delta_star",
                 "delta_dis", "p1", "p2", "eta_tilde", "achieved_order", "drift",
                 "fdis_rate", "status")


def run_sweep_case(case):
    """One sweep case; failures become a status string, never an exception."""
    idx, gamma, delta, opts = case
    row = {k: "" for k in SWEEP_COLUMNS}
    row.update(index=idx, gamma=gamma, delta=delta)
    try:
        if not 1 < gamma < GAMMA_UPPER:
            raise DomainError(f"gamma={gamma!r} outside (1, 1+2/sqrt(3))")
        lam = opts["lambda"]
        if math.isnan(lam):
            m = resolve_ratio_index(gamma, delta, opts["ratio_index"])
            pr = compute_profile(gamma, m)
            lam = pr.shoot.lam
        else:
            pr = None
        rep = check_regime(gamma, delta, lam)
        row.update({"lambda": lam, "lambda_star": rep.lambda_star,
                    "delta_star": rep.delta_star, "delta_dis": rep.delta_dis,
                    "p1": int(rep.condition_p1), "p2": int(rep.condition_p2)})
        if pr is not None:
            prof = pr.profile
            prof.model = replace(prof.model, delta=delta, a1=opts["a1"])
            row.update(eta_tilde=pr.report.eta_tilde,
                       achieved_order=pr.shoot.achieved_order)
            fm = SelfSimFrame(opts["blowup_time"], lam)
            state = state_from_profile(prof, opts["n_cells"], opts["r_max"], fm.tau0)
            sim = SimConfig(prof.model, "selfsim", opts["n_cells"], opts["r_max"],
                            t_end=fm.tau0 + opts["duration"], output_every=10**9)
            series = run(sim, state)
            f = series.column("fdis_sup")
            row.update(drift=sup_drift(series.final_state, state),
                       fdis_rate=-math.log(f[-1] / f[0]) / opts["duration"])
        row["status"] = "ok"
    except Exception as exc:
        row["status"] = f"failed: {type(exc).__name__}: {exc}".replace(",", ";")
    return row
