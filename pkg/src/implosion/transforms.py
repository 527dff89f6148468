"""Self-similar coordinates, cutoff functions, weight and initial data."""

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy.interpolate import CubicSpline

from . import __version__
from .errors import DomainError, ParseError
from .profile import read_table


class FloorWarning(UserWarning):
    """The density floor binds inside the profile core."""


@dataclass(frozen=True)
class SelfSimFrame:
    """Blow-up time ``T`` and exponent ``lam`` defining ``(tau, y)``."""

    blowup_time: float
    lam: float

    def __post_init__(self):
        if not self.blowup_time > 0:
            raise DomainError("blow-up time must be positive")
        if not self.lam > 1:
            raise DomainError("lambda must exceed 1")

    @property
    def tau0(self):
        return -math.log(self.blowup_time) / self.lam

    def remaining(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t >= self.blowup_time) or np.any(t < 0):
            raise DomainError("time must satisfy 0 <= t < T")
        return self.blowup_time - t

    def time_of(self, tau):
        """Eulerian time at self-similar time ``tau``."""
        return self.blowup_time - np.exp(-self.lam * np.asarray(tau, dtype=float))


def to_selfsim(frame, t, x_radius):
    """``tau = -log(T - t)/lam`` and ``y = x (T - t)^(-1/lam)``."""
    rem = frame.remaining(t)
    return -np.log(rem) / frame.lam, np.asarray(x_radius) * rem ** (-1.0 / frame.lam)


def from_selfsim(frame, tau, y_radius):
    rem = np.exp(-frame.lam * np.asarray(tau, dtype=float))
    return frame.blowup_time - rem, np.asarray(y_radius) * rem ** (1.0 / frame.lam)


def field_scale(frame, t):
    """Factor ``(T - t)^(1/lam - 1) / lam`` linking ``(c, u)`` to ``(Q, U)``."""
    rem = frame.remaining(t)
    return rem ** (1.0 / frame.lam - 1.0) / frame.lam


def rescale_fields(frame, direction, t, a, b):
    """Map ``(Q, U) -> (c, u)`` (``"to_eulerian"``) or back (``"to_selfsim"``).

    The values must already be sampled at matched coordinates.
    """
    s = field_scale(frame, t)
    if direction == "to_eulerian":
        return s * np.asarray(a), s * np.asarray(b)
    if direction == "to_selfsim":
        return np.asarray(a) / s, np.asarray(b) / s
    raise ValueError(f"unknown direction {direction!r}")


def density_from_c(c, alpha):
    return (alpha * np.asarray(c)) ** (1.0 / alpha)


def c_from_density(rho, alpha):
    return np.asarray(rho) ** alpha / alpha


# --- cutoffs -----------------------------------------------------------------

def _smoothstep(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1."""
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
        g = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
    return f / (f + g)


def _smoothstep_deriv(s):
    s = np.asarray(s, dtype=float)
    inside = (s > 0) & (s < 1)
    si = np.where(inside, s, 0.5)
    f = np.exp(-1.0 / si)
    g = np.exp(-1.0 / (1.0 - si))
    df = f / si**2
    dg = -g / (1.0 - si) ** 2
    return np.where(inside, (df * g - f * dg) / (f + g) ** 2, 0.0)


def bump(x):
    """Radial cutoff: 1 on ``|x| <= 1/2``, 0 on ``|x| >= 1``, ``|grad| <= 4``."""
    return _smoothstep(2.0 - 2.0 * np.abs(x))


def bump_deriv(x):
    x = np.asarray(x, dtype=float)
    return -2.0 * np.sign(x) * _smoothstep_deriv(2.0 - 2.0 * np.abs(x))


def _quintic(s):
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (10 - 15 * s + 6 * s * s), 30 * s * s * (1 - s) ** 2


@dataclass(frozen=True)
class CutoffSet:
    """Truncation scale ``c0``, weight scale ``r0`` and weight exponent ``eta``."""

    c0: float = 10.0
    r0: float = 1.0
    eta: float = 0.5

    def __post_init__(self):
        if not self.c0 > 1:
            raise DomainError("c0 must exceed 1")
        if not self.r0 > 0:
            raise DomainError("r0 must be positive")
        if not 0 < self.eta < 1:
            raise DomainError("eta must lie in (0, 1)")

    def chi1(self, s):
        return _smoothstep((1.5 * self.c0 - np.abs(s)) / (0.5 * self.c0))

    def chi2(self, s):
        return _smoothstep((2.5 * self.c0 - np.abs(s)) / (0.5 * self.c0))

    def weight(self, radius):
        """``phi`` and its radial derivative."""
        r = np.abs(np.asarray(radius, dtype=float))
        p = 2.0 * (1.0 - self.eta)
        rs = np.maximum(r, 1e-300)
        far = (rs / self.r0) ** p / 2.0
        dfar = p * far / rs
        s = np.log(np.maximum(rs, self.r0) / self.r0) / math.log(4.0)
        w, dw = _quintic(s)
        ds = np.where((r > self.r0) & (r < 4 * self.r0), 1.0 / (rs * math.log(4.0)), 0.0)
        phi = (1.0 - w) + w * far
        dphi = dw * ds * (far - 1.0) + w * dfar
        return phi, dphi


def eval_cutoffs(cutoffs, tau, radius):
    """Return ``(chi_x, x_hat, chi1, chi2, phi, dphi)`` at the given radius."""
    radius = np.asarray(radius, dtype=float)
    phi, dphi = cutoffs.weight(radius)
    return (bump(radius), bump(np.exp(-tau) * radius), cutoffs.chi1(radius),
            cutoffs.chi2(radius), phi, dphi)


# --- initial data ------------------------------------------------------------

def smooth_max(a, b, width):
    """C-infinity upper bound of ``max(a, b)`` within ``width * log 2``."""
    z = (np.asarray(a) - np.asarray(b)) / width
    return b + width * np.logaddexp(0.0, z)


@dataclass
class RadialInitialData:
    r: np.ndarray
    rho0: np.ndarray
    u0: np.ndarray
    c0: np.ndarray
    provenance: dict = field(default_factory=dict)

    def floor_bound(self):
        p = self.provenance
        return density_from_c(p["nu1"] / 2 * p["scale"], p["alpha"])


def build_initial_data(profile, frame, cutoffs, floor_nu1, r, perturbation=None):
    """Cut-off profile with a density floor, in Eulerian variables at ``t = 0``.

    ``perturbation``, if given, maps self-similar radii to ``(q_tilde,
    u_tilde)`` and should vanish where the floor binds.
    """
    if not floor_nu1 > 0:
        raise DomainError("floor_nu1 must be positive")
    model = profile.model
    lam, alpha = model.lam, model.alpha
    if abs(lam - frame.lam) > 1e-12 * lam:
        raise DomainError("frame and profile disagree on lambda")
    x = np.asarray(r, dtype=float)
    T = frame.blowup_time
    y = x * T ** (-1.0 / lam)
    q_bar, u_cal, _, _ = profile.interpolate(y)
    cut = bump(x)
    core_q = cut * q_bar
    core_u = cut * u_cal
    if perturbation is not None:
        dq, du = perturbation(y)
        core_q = core_q + dq
        core_u = core_u + du
    floor = 0.5 * floor_nu1 * (1.0 + (y / cutoffs.r0) ** 2) ** ((1.0 - lam) / 2)
    blended = smooth_max(core_q, floor, 0.1 * floor)
    binding = (np.abs(x) <= 0.5) & (floor >= core_q)
    if np.any(binding):
        warnings.warn("density floor binds inside |x| <= 1/2", FloorWarning, stacklevel=2)
    scale = 1.0 / (lam * T ** (1.0 - 1.0 / lam))
    c0 = scale * blended
    u0 = scale * core_u
    prov = {
        "T": T, "lambda": lam, "gamma": model.gamma, "alpha": alpha, "delta": model.delta,
        "nu1": floor_nu1, "scale": scale, "c0_cutoff": cutoffs.c0, "r0": cutoffs.r0,
        "eta": cutoffs.eta, "perturbation": "none" if perturbation is None else "custom",
    }
    return RadialInitialData(x, density_from_c(c0, alpha), u0, c0, prov)


def rescaled_observables(frame, state, y_probe, alpha):
    """Left-hand sides of the implosion limits at a fixed self-similar radius.

    Returns ``((lam/alpha) (T-t)^(1-1/lam))^(1/alpha) rho`` and
    ``lam (T-t)^(1-1/lam) u`` at ``x = (T-t)^(1/lam) y``.
    """
    t = state.time
    rem = frame.remaining(t)
    x = rem ** (1.0 / frame.lam) * np.asarray(y_probe, dtype=float)
    r = state.r
    if np.any(x > r[-1]) or np.any(x < 0):
        raise DomainError("probe lies outside the grid")
    rho = density_from_c(state.a, alpha)
    pre = frame.lam * rem ** (1.0 - 1.0 / frame.lam)
    lhs_q = (pre / alpha) ** (1.0 / alpha) * CubicSpline(r, rho)(x)
    lhs_u = pre * CubicSpline(r, state.b)(x)
    return lhs_q, lhs_u


_ID_COLUMNS = ("r", "rho0", "u0")


def save_initial_data(data, path):
    p = data.provenance
    lines = ["# format=implosion-initial-1", f"# version={__version__}"]
    for k in ("T", "lambda", "gamma", "alpha", "delta", "nu1", "scale", "c0_cutoff",
              "r0", "eta", "perturbation"):
        v = p[k]
        lines.append(f"# {k}={v:.17g}" if isinstance(v, float) else f"# {k}={v}")
    lines.append(",".join(_ID_COLUMNS))
    for row in zip(data.r, data.rho0, data.u0):
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_initial_data(path):
    header, arr = read_table(path, _ID_COLUMNS)
    prov = {}
    for k, v in header.items():
        try:
            prov[k] = float(v)
        except ValueError:
            prov[k] = v
    for k in ("T", "lambda", "gamma", "alpha"):
        if k not in prov:
            raise ParseError(f"missing header key {k}")
    if abs(prov["alpha"] - (prov["gamma"] - 1) / 2) > 1e-15:
        raise ParseError("header alpha contradicts gamma")
    if np.any(arr[:, 1] <= 0):
        raise ParseError("non-positive density in initial data")
    r, rho, u = arr.T.copy()
    return RadialInitialData(r, rho, u, c_from_density(rho, prov["alpha"]), prov)
