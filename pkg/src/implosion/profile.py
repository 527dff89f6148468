"""Physical-space self-similar profile: reconstruction, checks and file I/O."""

from dataclasses import dataclass, field
import math

import numpy as np

from . import __version__
from .errors import GapError, ParseError, PropertyViolation
from .phase_portrait.series import OriginSeries, p0_expansion
from .regimes import GasModel

COLUMNS = ("r", "q_bar", "u_cal", "dq_bar", "du_cal")


@dataclass
class ProfileTable:
    """Profile ``Q(r)``, radial velocity ``U(r)`` and their first derivatives.

    The velocity field is ``U(r) y/r``.  ``meta`` carries the sonic
    radius, the gauge and generator settings.
    """

    model: GasModel
    r: np.ndarray
    q_bar: np.ndarray
    u_cal: np.ndarray
    dq_bar: np.ndarray
    du_cal: np.ndarray
    origin_coeffs: np.ndarray
    eta_tilde: float = math.nan
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.r)
        for name in COLUMNS[1:]:
            if len(getattr(self, name)) != n:
                raise ValueError(f"column {name} has the wrong length")
        if np.any(np.diff(self.r) <= 0):
            raise ValueError("radii must be strictly increasing")

    @property
    def r_sonic(self):
        return self.meta.get("r_sonic", math.nan)

    def sonic_index(self):
        rs = self.r_sonic
        if not math.isfinite(rs):
            return None
        return int(np.argmin(np.abs(self.r - rs)))

    def interpolate(self, radius):
        """Values ``(Q, U, dQ, dU)`` at arbitrary radii.

        Cubic Hermite interpolation in ``log r`` using the stored
        derivatives, the origin series below the first node and the
        power-law tails beyond the last.
        """
        radius = np.asarray(radius, dtype=float)
        out = [np.empty_like(radius) for _ in range(4)]
        inner = radius < self.r[0]
        outer = radius > self.r[-1]
        mid = ~(inner | outer)
        if np.any(inner):
            ser = _origin_from_coeffs(self.origin_coeffs)
            vals = ser.evaluate(radius[inner])
            for o, v in zip(out, vals):
                o[inner] = v
        if np.any(mid):
            vals = _hermite_log(self, radius[mid])
            for o, v in zip(out, vals):
                o[mid] = v
        if np.any(outer):
            lam = self.model.lam
            ratio = (radius[outer] / self.r[-1]) ** (1 - lam)
            out[0][outer] = self.q_bar[-1] * ratio
            out[1][outer] = self.u_cal[-1] * ratio
            out[2][outer] = self.dq_bar[-1] * ratio * self.r[-1] / radius[outer]
            out[3][outer] = self.du_cal[-1] * ratio * self.r[-1] / radius[outer]
        return tuple(out)


def _origin_from_coeffs(coeffs):
    coeffs = np.asarray(coeffs, dtype=float)
    return OriginSeries(coeffs[0::2].copy(), coeffs[1::2].copy())


def _hermite_log(profile, radius):
    """Cubic Hermite interpolation of all columns in ``log r``."""
    x = np.log(profile.r)
    t = np.log(radius)
    i = np.clip(np.searchsorted(x, t) - 1, 0, len(x) - 2)
    h = x[i + 1] - x[i]
    s = (t - x[i]) / h
    h00 = (1 + 2 * s) * (1 - s) ** 2
    h10 = s * (1 - s) ** 2
    h01 = s * s * (3 - 2 * s)
    h11 = s * s * (s - 1)
    dh00 = 6 * s * s - 6 * s
    dh10 = 3 * s * s - 4 * s + 1
    dh01 = -6 * s * s + 6 * s
    dh11 = 3 * s * s - 2 * s
    out = []
    for f, df in ((profile.q_bar, profile.dq_bar), (profile.u_cal, profile.du_cal)):
        g0, g1 = f[i] * 1.0, f[i + 1]
        d0, d1 = df[i] * profile.r[i], df[i + 1] * profile.r[i + 1]  # d/dlog r
        val = h00 * g0 + h10 * h * d0 + h01 * g1 + h11 * h * d1
        dval = (dh00 * g0 + dh10 * h * d0 + dh01 * g1 + dh11 * h * d1) / h / radius
        out.append((val, dval))
    return out[0][0], out[1][0], out[0][1], out[1][1]


def default_grid(r_min=1e-4, r_max=1e4, n=4096, r_sonic=None, refine=8, band=(0.5, 2.0)):
    """Log-spaced radii, ``refine`` times denser on ``band * r_sonic``.

    The sonic radius itself is always a node.
    """
    r = np.geomspace(r_min, r_max, n)
    if r_sonic is None or not r_min < r_sonic < r_max:
        return r
    lo, hi = max(band[0] * r_sonic, r_min), min(band[1] * r_sonic, r_max)
    step = math.log(r_max / r_min) / (n - 1) / refine
    m = max(int(math.ceil(math.log(hi / lo) / step)), 1)
    fine = np.geomspace(lo, hi, m + 1)
    r = np.concatenate([r[r < lo], fine, r[r > hi]])
    # snap the nearest node onto the sonic radius
    i = int(np.argmin(np.abs(np.log(r / r_sonic))))
    r[i] = r_sonic
    return r


def sample_profile(result, radii, r_switch=0.02, origin_order=12):
    """``(Q, U, dQ/dr, dU/dr)`` of a shooting result at arbitrary radii.

    Below ``r_switch`` (including ``r = 0``) the origin series is used;
    between the incoming section and the outgoing seed the sonic branch
    series; elsewhere the dense output of the two trajectories.
    Derivatives follow from the ODE: ``dQ/dr = q_hat + N_Q/D``.
    """
    model = result.model
    series = result.series
    xi_s = result.xi_sonic
    r = np.asarray(radii, dtype=float)
    with np.errstate(divide="ignore"):
        xi = np.log(r)
    t_in, t_out = result.trajectory_in, result.trajectory_out
    xi_in_end = t_in.xi[-1]
    xi_out_start = t_out.xi[0]
    if t_out.xi[-1] < xi.max():
        raise GapError(f"outgoing orbit ends at r={math.exp(t_out.xi[-1]):.3g} < r_max")
    if r_switch > math.exp(xi_in_end):
        raise GapError("switchover radius lies beyond the incoming orbit")

    zone0 = r <= r_switch
    zone1 = (~zone0) & (xi <= xi_in_end)
    zone3 = (~zone0) & (xi >= xi_out_start)
    zone2 = ~(zone0 | zone1 | zone3)
    qh, uh, dqh, duh = (np.zeros_like(r) for _ in range(4))
    if np.any(zone1):
        qh[zone1], uh[zone1], dqh[zone1], duh[zone1] = t_in.at_xi(xi[zone1])
    if np.any(zone3):
        qh[zone3], uh[zone3], dqh[zone3], duh[zone3] = t_out.at_xi(xi[zone3])
    if np.any(zone2):
        x = _invert_series_xi(series, xi[zone2] - xi_s,
                              t_in.q[-1] - series.q_s, t_out.q[0] - series.q_s)
        gx = series.dxi(x)
        qh[zone2] = series.q_s + x
        uh[zone2] = series.u(x)
        dqh[zone2] = 1.0 / gx
        duh[zone2] = series.du(x) / gx
    out = [r * qh, r * uh, qh + dqh, uh + duh]
    if np.any(zone0):
        vals = p0_expansion(model, 1.0, origin_order).evaluate(r[zone0])
        for o, v in zip(out, vals):
            o[zone0] = v
    return tuple(out)


def reconstruct(result, r_min=1e-4, r_max=1e4, n=4096, r_switch=0.02, origin_order=12):
    """Map a shooting result to physical space on a log grid.

    ``Q(r) = r q_hat(log r)`` and ``U(r) = r u_hat(log r)`` sampled by
    :func:`sample_profile` on ``n`` log-spaced radii plus the sonic radius.
    """
    r_sonic = math.exp(result.xi_sonic)
    r = default_grid(r_min, r_max, n, r_sonic)
    q_bar, u_cal, dq_bar, du_cal = sample_profile(result, r, r_switch, origin_order)
    series = result.series
    meta = {
        "q0_gauge": 1.0,
        "r_sonic": r_sonic,
        "q_hat_sonic": series.q_s,
        "u_hat_sonic": series.u_s,
        "eigen_ratio": result.sonic.eigen_ratio,
        "r_switch": r_switch,
        "mismatch": result.mismatch,
        "achieved_order": result.achieved_order,
        "working_digits": result.digits,
    }
    origin = p0_expansion(result.model, 1.0, origin_order)
    return ProfileTable(result.model, r, q_bar, u_cal, dq_bar, du_cal, origin.coefficients,
                        meta=meta)


def _invert_series_xi(series, dxi, x_hi, x_lo, iters=60):
    """Solve ``xi_offset(x) = dxi`` for ``x`` in ``[x_lo, x_hi]`` (decreasing map)."""
    lo = np.full_like(dxi, x_lo)
    hi = np.full_like(dxi, x_hi)
    x = 0.5 * (lo + hi)
    for _ in range(iters):
        f = series.xi_offset(x) - dxi
        # xi decreases with x
        hi = np.where(f < 0, x, hi)
        lo = np.where(f >= 0, x, lo)
        x = 0.5 * (lo + hi)
    for _ in range(3):
        x = x - (series.xi_offset(x) - dxi) / series.dxi(x)
    return x


def steady_residual(profile, exclude_sonic=True):
    """Maximum residuals of the two steady profile equations on the grid."""
    res_q, res_u = residual_arrays(profile)
    mask = np.ones(len(profile.r), bool)
    i = profile.sonic_index() if exclude_sonic else None
    if i is not None:
        mask[max(0, i - 1):i + 2] = False
    return float(np.max(np.abs(res_q[mask]))), float(np.max(np.abs(res_u[mask])))


def residual_arrays(profile):
    a, lam = profile.model.alpha, profile.model.lam
    r, q, u, dq, du = (profile.r, profile.q_bar, profile.u_cal, profile.dq_bar, profile.du_cal)
    res_q = (lam - 1) * q + (r + u) * dq + a * q * (du + 2 * u / r)
    res_u = (lam - 1) * u + (r + u) * du + a * q * dq
    return res_q, res_u


@dataclass(frozen=True)
class PropertyReport:
    min_q: float
    decay_q: float
    decay_u: float
    decay_dq: float
    decay_constant: float
    radial_margin: float
    angular_margin: float
    angular_limit: float
    far_field_margin: float
    eta_tilde: float
    residual_q: float
    residual_u: float
    failures: tuple

    @property
    def passed(self):
        return not self.failures

    def as_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["failures"] = [list(f) for f in self.failures]
        d["passed"] = self.passed
        return d


def _last_decade_slope(r, f):
    sel = r >= r[-1] / 10
    return float(np.polyfit(np.log(r[sel]), np.log(np.abs(f[sel])), 1)[0])


def verify_properties(profile, raise_on_failure=True, residual_tol=1e-7):
    """Check positivity, decay, repulsivity and far-field inequalities.

    Margins: radial ``1 + U' - a|Q'|``, angular ``1 + U/r - a|Q'|`` and
    far-field ``(r + U - a Q)/(r - 1)`` for ``r > 1``.  ``eta_tilde`` is
    their minimum.  On failure raises :class:`PropertyViolation` naming
    the first violated inequality, unless ``raise_on_failure`` is false.
    """
    m = profile.model
    a, lam = m.alpha, m.lam
    r, q, u, dq, du = (profile.r, profile.q_bar, profile.u_cal, profile.dq_bar, profile.du_cal)
    failures = []
    i_min = int(np.argmin(q))
    min_q = float(q[i_min])
    if not min_q > 0:
        failures.append(("positivity", float(r[i_min]), min_q))
    res_q, res_u = steady_residual(profile)
    if not max(res_q, res_u) <= residual_tol:
        rq, ru = residual_arrays(profile)
        j = int(np.argmax(np.abs(rq) + np.abs(ru)))
        failures.append(("steady residual", float(r[j]), max(res_q, res_u)))

    radial = 1 + du - a * np.abs(dq)
    angular = 1 + u / r - a * np.abs(dq)
    far = r > 1
    far_vals = (r[far] + u[far] - a * q[far]) / (r[far] - 1)
    checks = (("radial repulsivity", radial, r), ("angular repulsivity", angular, r),
              ("far-field inequality", far_vals, r[far]))
    margins = []
    for name, vals, rr in checks:
        j = int(np.argmin(vals))
        margins.append(float(vals[j]))
        if not vals[j] > 0:
            failures.append((name, float(rr[j]), float(vals[j])))
    w0 = profile.origin_coeffs[1]
    angular_limit = 1 + w0

    weighted = q * (1 + r * r) ** ((lam - 1) / 2)
    decay_constant = float(max(weighted.max(), 1 / weighted.min()))
    report = PropertyReport(
        min_q=min_q,
        decay_q=_last_decade_slope(r, q),
        decay_u=_last_decade_slope(r, u),
        decay_dq=_last_decade_slope(r, dq),
        decay_constant=decay_constant,
        radial_margin=margins[0],
        angular_margin=margins[1],
        angular_limit=float(angular_limit),
        far_field_margin=margins[2],
        eta_tilde=float(min(margins)),
        residual_q=res_q,
        residual_u=res_u,
        failures=tuple(failures),
    )
    if failures and raise_on_failure:
        raise PropertyViolation(*failures[0])
    return report


# --- file format -------------------------------------------------------------

def _fmt(x):
    return f"{x:.17g}"


def save_profile(profile, path):
    """Write the profile as a commented header followed by CSV columns."""
    m = profile.model
    header = {
        "format": "implosion-profile-1",
        "version": __version__,
        "gamma": m.gamma,
        "alpha": m.alpha,
        "lambda": m.lam,
        "delta": m.delta,
        "a1": m.a1,
        "a2": m.a2,
        "eta_tilde": profile.eta_tilde,
        "origin_coeffs": " ".join(_fmt(c) for c in profile.origin_coeffs),
    }
    for k, v in profile.meta.items():
        header.setdefault(k, v)
    lines = []
    for k, v in header.items():
        v = _fmt(v) if isinstance(v, float) else v
        lines.append(f"# {k}={v}")
    lines.append(",".join(COLUMNS))
    data = np.column_stack([profile.r, profile.q_bar, profile.u_cal,
                            profile.dq_bar, profile.du_cal])
    lines.extend(",".join(_fmt(x) for x in row) for row in data)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_table(path, columns):
    """Parse a "# key=value" header and a CSV body with the given columns."""
    header = {}
    rows = []
    seen_columns = False
    last_good = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                if seen_columns:
                    raise ParseError("header line after data", lineno)
                body = line[1:].strip()
                if "=" not in body:
                    raise ParseError(f"malformed header {body!r}", lineno)
                k, v = body.split("=", 1)
                header[k.strip()] = v.strip()
            elif not seen_columns:
                if tuple(c.strip() for c in line.split(",")) != tuple(columns):
                    raise ParseError(f"expected columns {','.join(columns)}", lineno)
                seen_columns = True
            else:
                parts = line.split(",")
                if len(parts) != len(columns):
                    raise ParseError(
                        f"expected {len(columns)} fields, got {len(parts)}; "
                        f"last good line {last_good}", lineno)
                try:
                    rows.append([float(p) for p in parts])
                except ValueError as exc:
                    raise ParseError(f"{exc}; last good line {last_good}", lineno) from exc
                last_good = lineno
    if not seen_columns:
        raise ParseError(f"missing column line; last good line {last_good}")
    return header, np.array(rows, dtype=float).reshape(-1, len(columns))


def load_profile(path):
    """Read a profile file written by :func:`save_profile` and check its invariants."""
    header, data = read_table(path, COLUMNS)
    try:
        gamma = float(header["gamma"])
        alpha = float(header["alpha"])
        lam = float(header["lambda"])
        model = GasModel(gamma, lam, float(header.get("delta", 0.0)),
                         float(header.get("a1", 1.0)), float(header.get("a2", 0.0)))
        coeffs = np.array([float(x) for x in header["origin_coeffs"].split()])
        eta = float(header.get("eta_tilde", "nan"))
    except KeyError as exc:
        raise ParseError(f"missing header key {exc.args[0]}") from exc
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    if alpha != model.alpha:
        raise ParseError(f"header alpha={alpha!r} contradicts gamma={gamma!r}")
    if len(data) < 2:
        raise ParseError("profile has fewer than two rows")
    skip = {"format", "version", "gamma", "alpha", "lambda", "delta", "a1", "a2",
            "eta_tilde", "origin_coeffs"}
    meta = {}
    for k, v in header.items():
        if k in skip:
            continue
        try:
            meta[k] = float(v) if "." in v or "e" in v.lower() or v.lstrip("-").isdigit() else v
        except ValueError:
            meta[k] = v
    try:
        return ProfileTable(model, *data.T.copy(), origin_coeffs=coeffs, eta_tilde=eta, meta=meta)
    except ValueError as exc:
        raise ParseError(f"invariant violated: {exc}") from exc
