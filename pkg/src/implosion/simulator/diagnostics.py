"""Run diagnostics: perturbation norms, weighted energy and exponent fits."""

from dataclasses import dataclass, field
import hashlib
import math

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import ImplosionError
from ..transforms import bump, field_scale
from .operators import d1, pad

COLUMNS = ("time", "sup_ptb_q", "sup_ptb_u", "e_k", "min_q_env", "max_q", "fdis_sup",
           "rho_origin")


class InsufficientData(ImplosionError):
    """Series too short for a meaningful fit."""


def selfsim_view(state, frame_map):
    """``(tau, y, Q, U)`` of a state, mapping Eulerian data if needed."""
    if state.frame == "selfsim":
        return state.time, state.r, state.a, state.b
    s = field_scale(frame_map, state.time)
    rem = frame_map.blowup_time - state.time
    tau = -math.log(rem) / frame_map.lam
    return tau, state.r * rem ** (-1.0 / frame_map.lam), state.a / s, state.b / s


def perturbation_diagnostics(state, profile, cutoffs, tau=None, frame_map=None):
    """Sup norms of ``Q - X Q_bar`` and ``U - X U_bar`` and the envelope checks.

    ``X`` is the cutoff evaluated at ``e^(-tau) y``.  Envelopes use the
    weight ``<r/R0>^(lam-1)``.
    """
    tau_s, y, q, u = selfsim_view(state, frame_map)
    tau = tau_s if tau is None else tau
    q_bar, u_bar, _, _ = profile.interpolate(y)
    x_hat = bump(math.exp(-tau) * y)
    q_t = q - x_hat * q_bar
    u_t = u - x_hat * u_bar
    lam = profile.model.lam
    bracket = np.sqrt(1.0 + (y / cutoffs.r0) ** 2)
    env = q * bracket ** (lam - 1)
    h = y[1] - y[0]
    dq = d1(pad(q, 1.0, "outflow"), h)
    dqt = d1(pad(q_t, 1.0, "outflow"), h)
    grad = bracket ** lam * (np.abs(dqt) + np.abs(dq))
    return {
        "sup_ptb_q": float(np.max(np.abs(q_t))),
        "sup_ptb_u": float(np.max(np.abs(u_t))),
        "weighted_gradient": float(np.max(grad)),
        "min_q_env": float(np.min(env)),
        "max_q": float(np.max(env)),
    }


def _repeated_d1(f, h, k, parity):
    for _ in range(k):
        f = d1(pad(f, parity, "outflow"), h)
        parity = -parity
    return f


def weighted_energy(state, cutoffs, k_surrogate=1, frame_map=None):
    """Trapezoidal ``int (|d^K Q|^2 + |d^K U|^2) phi^K 4 pi r^2 dr``."""
    if k_surrogate not in (1, 2, 3):
        raise ValueError("k_surrogate must be 1, 2 or 3")
    _, y, q, u = selfsim_view(state, frame_map)
    h = y[1] - y[0]
    dq = _repeated_d1(q, h, k_surrogate, 1.0)
    du = _repeated_d1(u, h, k_surrogate, -1.0)
    phi, _ = cutoffs.weight(y)
    integrand = (dq**2 + du**2) * phi**k_surrogate * 4.0 * math.pi * y**2
    return float(np.trapezoid(integrand, y))


def config_hash(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


@dataclass
class DiagnosticsSeries:
    """Diagnostics recorded at the output cadence."""

    records: list = field(default_factory=list)
    reason: str = ""
    meta: dict = field(default_factory=dict)

    def append(self, record):
        if self.records and not record["time"] > self.records[-1]["time"]:
            raise ValueError("diagnostic times must increase")
        self.records.append({k: float(record.get(k, math.nan)) for k in COLUMNS})

    def column(self, name):
        return np.array([rec[name] for rec in self.records])

    def __len__(self):
        return len(self.records)

    def to_csv(self, path=None):
        m = self.meta
        head = ("# config-hash, gamma, delta, lambda, frame, n_cells, cfl\n"
                f"# {m.get('config_hash', '')}, {_f(m.get('gamma'))}, {_f(m.get('delta'))}, "
                f"{_f(m.get('lambda'))}, {m.get('frame', '')}, {m.get('n_cells', '')}, "
                f"{_f(m.get('cfl'))}\n")
        extra = "".join(f"# {k}={_f(v)}\n" for k, v in sorted(m.items())
                        if k not in ("config_hash", "gamma", "delta", "lambda", "frame",
                                     "n_cells", "cfl"))
        body = ",".join(COLUMNS) + "\n" + "".join(
            ",".join(_f(rec[c]) for c in COLUMNS) + "\n" for rec in self.records)
        text = head + extra + body + f"# reason={self.reason}\n"
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _f(v):
    return f"{v:.17g}" if isinstance(v, float) else ("" if v is None else str(v))


@dataclass(frozen=True)
class FitReport:
    rho_slope: float = math.nan
    rho_target: float = math.nan
    t_eff: float = math.nan
    rho_decades: float = math.nan
    fdis_rate: float = math.nan
    fdis_target: float = math.nan
    fdis_span: float = math.nan
    ptb_rate: float = math.nan

    @property
    def rho_error(self):
        return abs(self.rho_slope / self.rho_target - 1)

    @property
    def fdis_error(self):
        return abs(self.fdis_rate / self.fdis_target - 1)

    def as_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["rho_error"] = self.rho_error
        d["fdis_error"] = self.fdis_error
        return d


def fit_power_law(t, rho):
    """Fit ``log rho = A + p log(T_eff - t)`` jointly in ``p`` and ``T_eff``.

    Returns ``(p, T_eff, residual)``.  ``T_eff`` is searched above the
    last sample time.
    """
    t = np.asarray(t, float)
    y = np.log(np.asarray(rho, float))
    if len(t) < 4:
        raise InsufficientData("need at least four samples")
    t_last = t[-1]
    span = t[-1] - t[0]

    def sse(log_gap):
        x = np.log(t_eff_of(log_gap) - t)
        coef, res, *_ = np.polyfit(x, y, 1, full=True)
        return float(res[0]) if len(res) else 0.0

    def t_eff_of(log_gap):
        return t_last + math.exp(log_gap)

    lo, hi = math.log(span * 1e-6), math.log(span * 10)
    grid = np.linspace(lo, hi, 121)
    vals = [sse(g) for g in grid]
    k = int(np.argmin(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    best = minimize_scalar(sse, bounds=(a, b), method="bounded",
                           options={"xatol": 1e-12})
    t_eff = t_eff_of(best.x)
    p = np.polyfit(np.log(t_eff - t), y, 1)[0]
    return float(p), float(t_eff), float(best.fun)


def fit_rate(tau, values):
    """Decay rate ``k`` of ``values ~ exp(-k tau)`` by least squares."""
    tau = np.asarray(tau, float)
    v = np.asarray(values, float)
    ok = np.isfinite(v) & (v > 0)
    if ok.sum() < 3:
        raise InsufficientData("need at least three positive samples")
    return float(-np.polyfit(tau[ok], np.log(v[ok]), 1)[0])


def fit_exponents(series, model, frame="selfsim", frame_map=None, window=None):
    """Fit blow-up and dissipative-term exponents from a diagnostics series.

    ``window`` optionally restricts the fit to ``(start, stop)`` in the
    series' own time variable.
    """
    t = series.column("time")
    sel = np.ones(len(t), bool)
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
    t = t[sel]
    if len(t) < 3:
        raise InsufficientData("fewer than three samples in the fit window")
    lam, al = model.lam, model.alpha
    out = {"rho_target": -(1 - 1 / lam) / al, "fdis_target": model.delta_dis}
    if frame == "eulerian":
        if frame_map is None:
            raise ValueError("Eulerian fits need the self-similar frame")
        rho = series.column("rho_origin")[sel]
        p, t_eff, _ = fit_power_law(t, rho)
        decades = math.log10((t_eff - t[0]) / (t_eff - t[-1]))
        tau = -np.log(np.maximum(frame_map.blowup_time - t, 1e-300)) / lam
        out.update(rho_slope=p, t_eff=t_eff, rho_decades=decades)
        if decades < 1.0 and tau[-1] - tau[0] < 2.0 - 1e-9:
            raise InsufficientData(f"only {decades:.2f} decades of T-t")
    else:
        tau = t
        if tau[-1] - tau[0] < 2.0 - 1e-9:
            raise InsufficientData(f"only {tau[-1] - tau[0]:.3g} units of tau")
    fdis = series.column("fdis_sup")[sel]
    if np.all(np.isfinite(fdis) & (fdis > 0)):
        out["fdis_rate"] = fit_rate(tau, fdis)
        out["fdis_span"] = float(tau[-1] - tau[0])
    ptb = series.column("sup_ptb_q")[sel]
    if np.sum(np.isfinite(ptb) & (ptb > 0)) >= 3:
        out["ptb_rate"] = fit_rate(tau, ptb)
    return FitReport(**out)
