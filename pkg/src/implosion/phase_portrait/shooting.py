"""Shooting on the self-similar exponent for a smooth origin-to-infinity orbit."""

from dataclasses import dataclass, field
import math

import gmpy2
from gmpy2 import mpfr
import numpy as np

from ..errors import (BracketError, IntegrationError, NoRootError, SmoothnessError,
                      TangencyError)
from ..regimes import GasModel, lambda_star
from ..rootfind import bracketed_root
from .emden import EmdenPoint, sonic_point
from .hiprec import (_context, branch_seed, hiprec_sonic, origin_seed,
                     taylor_orbit, working_digits)
from .integrate import (PhaseTrajectory, StopSpec, integrate_desingularized)
from .series import SonicSeries, p0_expansion

SECTION_FRACTION = 0.25
SEED_FRACTION = 0.35
ORIGIN_SEED_RADIUS = 0.05
PINF_RADIUS = 1e-7


def ratio_to_lambda(gamma, ratio):
    """Self-similar exponent at which the sonic eigenvalue ratio equals ``ratio``."""
    lstar = lambda_star(gamma)

    def f(lam):
        return sonic_point(GasModel(gamma, lam)).eigen_ratio - ratio

    lo = 1.0 + 1e-9
    if f(lo) > 0:
        raise NoRootError(f"eigenvalue ratio {ratio} is below the smallest attainable value")
    return bracketed_root(f, lo, lstar * (1 - 1e-15), xtol=1e-15)[0]


def default_bracket(gamma, ratio_index=None):
    """Bracket in lambda isolating one smooth exponent.

    The mismatch has one continuous sign change inside each interval of
    eigenvalue ratio ``(m, m+1)``; the bracket covers ``(m + 0.1, m + 0.9)``.
    Only odd ``m`` give a smooth branch that continues to the origin of the
    Emden plane.
    """
    m = DEFAULT_RATIO_INDEX if ratio_index is None else ratio_index
    return ratio_to_lambda(gamma, m + 0.1), ratio_to_lambda(gamma, m + 0.9)


DEFAULT_RATIO_INDEX = 5


def ratio_index_for_regime(gamma, delta, fraction=0.4):
    """Smallest odd ratio index whose exponents satisfy (P1) with margin.

    Requires ``delta_dis >= fraction * delta_dis(lambda_star)`` at the lower
    end of the bracket.
    """
    lstar = lambda_star(gamma)
    target = fraction * GasModel(gamma, lstar, delta).delta_dis
    if target <= 0:
        raise NoRootError(f"delta_dis is not positive near lambda_star for delta={delta!r}")
    m = DEFAULT_RATIO_INDEX
    while GasModel(gamma, ratio_to_lambda(gamma, m + 0.1), delta).delta_dis < target:
        m += 2
    return m


@dataclass
class MismatchEval:
    lam: float
    ratio: float
    digits: int
    mismatch: object  # working-precision value, normalized
    raw: object
    section_q: float
    incoming: object
    sonic_hp: object
    relative: float = math.nan


def mismatch(model, section_fraction=SECTION_FRACTION, digits=None):
    """Signed mismatch between the origin orbit and the smooth sonic branch.

    Both are evaluated on the section ``q_hat = q_s + h`` with
    ``h = section_fraction * radius``.  The raw difference of ``u_hat`` is
    divided by ``section_fraction**ratio`` so that it measures the
    amplitude of the non-analytic term ``C |x|^ratio`` at ``|x| = radius``.
    """
    sp = sonic_point(model)
    ratio = sp.eigen_ratio
    digits = digits or working_digits(ratio)
    order = int(2.2 * digits + 40)
    hs = hiprec_sonic(model, order, digits)
    start = origin_seed(model, ORIGIN_SEED_RADIUS, digits)
    with gmpy2.context(_context(digits)):
        h = mpfr(section_fraction) * mpfr(hs.radius)
        inc = taylor_orbit(model, start, -1, hs.q_s + h, digits)
        if inc.stop != "section":
            raise NoRootError(f"origin orbit did not reach the sonic section ({inc.stop})")
        raw = inc.end[1] - hs.u_at(h)
        scaled = raw / mpfr(section_fraction) ** (hs.lam_fast / hs.lam_slow)
    return MismatchEval(model.lam, ratio, digits, scaled, raw, float(hs.q_s + h), inc, hs)


@dataclass
class ShootResult:
    """Outcome of a successful shoot.

    ``trajectory_in`` runs from the origin asymptote to the sonic section,
    ``trajectory_out`` from the branch seed to the neighbourhood of the
    origin of the Emden plane.  ``series`` represents the orbit between.
    """

    lam: float
    model: GasModel
    trajectory_in: PhaseTrajectory
    trajectory_out: PhaseTrajectory
    sonic: object
    series: SonicSeries
    xi_sonic: float
    mismatch: float
    raw_mismatch: float
    digits: int
    achieved_order: int
    match_detail: dict
    outgoing_slope: float
    tangency_angles: tuple
    evaluations: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.lam, self.trajectory_in, self.trajectory_out, self.sonic))


def _float_series(hs, n):
    c = np.array([float(v) for v in hs.c[:n]])
    g = np.array([float(v) for v in hs.g[:n]])
    return c, g


def _incoming_trajectory(model, mm):
    """Double-precision orbit from ``q_hat = 1e6`` down to the mismatch section."""
    series = p0_expansion(model, 1.0, 10)
    q_hat = 1e6
    r = 1.0 / q_hat
    for _ in range(5):
        r = series.evaluate(r)[0] / q_hat
    qv, uv, _, _ = series.evaluate(r)
    stops = StopSpec(kinds=("section", "u-hat-hits-minus-one", "sonic-crossing"),
                     section_q=mm.section_q)
    return integrate_desingularized(EmdenPoint(qv / r, uv / r), math.log(r), -1, model,
                                    stops, tol=1e-11)


def _outgoing_trajectory(model, hs, q_exit):
    """Extended-precision branch from the seed to ``q_exit``, then double precision."""
    start = branch_seed(hs, SEED_FRACTION)
    hp = taylor_orbit(model, start, +1, q_exit, hs.digits)
    if hp.stop != "section":
        return None, hp
    q, u, xi = (float(v) for v in hp.end)
    tail = integrate_desingularized(
        EmdenPoint(q, u), xi, +1, model,
        StopSpec(kinds=("reached-Pinf-neighborhood", "sonic-crossing",
                        "u-hat-hits-minus-one", "blow-up"), pinf_radius=PINF_RADIUS),
        tol=1e-11, s0=float(hp.s[-1]))
    s = np.concatenate([hp.s, tail.s[1:]])
    traj = PhaseTrajectory(s, np.concatenate([hp.xi, tail.xi[1:]]),
                           np.concatenate([hp.q, tail.q[1:]]),
                           np.concatenate([hp.u, tail.u[1:]]),
                           [(k, i + len(hp.s) - 1) for k, i in tail.events], +1,
                           hp.segments + tail.segments)
    traj._model = model
    return traj, hp


def decay_slope(traj, decades=1.0, n=60):
    """Least-squares slope of ``log q_hat`` against ``xi`` over the final decades of ``q_hat``."""
    q_end = traj.q[-1]
    idx = np.nonzero(traj.q > q_end * 10 ** decades)[0]
    s_lo = traj.s[idx[-1]] if idx.size else traj.s[0]
    s = np.linspace(s_lo, traj.s[-1], n)
    q, _, xi = traj.dense(s)
    sel = q <= q_end * 10 ** decades
    return float(np.polyfit(xi[sel], np.log(q[sel]), 1)[0])


def taylor_match_order(samples_x, samples_u, c, max_order, noise=1e-12):
    """Largest ``k <= max_order`` with ``u - T_k = O(x^(k+1))`` on the samples.

    ``T_k`` is the degree-``k`` Taylor polynomial with coefficients ``c``.
    The scaling exponent is fitted on samples where the remainder exceeds
    ``noise``; a remainder below noise everywhere counts as a match.
    """
    x = np.abs(np.asarray(samples_x))
    detail = {}
    achieved = 0
    for k in range(1, max_order + 1):
        tk = np.polynomial.polynomial.polyval(samples_x, c[:k + 1])
        rem = np.abs(np.asarray(samples_u) - tk)
        sel = rem > noise
        if np.count_nonzero(sel) < 3:
            slope = math.inf
        else:
            slope = float(np.polyfit(np.log(x[sel]), np.log(rem[sel]), 1)[0])
        detail[k] = slope
        if slope < k + 0.5:
            break
        achieved = k
    return achieved, detail


def shoot_lambda(gamma, bracket=None, match_order=4, tol=1e-10, xtol=1e-15,
                 q_exit=None, require_order=2):
    """Find a self-similar exponent with a smooth origin-to-infinity orbit.

    Root-finds the mismatch of :func:`mismatch` on ``bracket`` (by default
    :func:`default_bracket`), normalized by its largest magnitude at the
    bracket ends, until it is at most ``tol`` or the bracket is narrower
    than ``xtol``.  The accepted orbit is then checked for
    tangency to the slow direction, for Taylor agreement with the sonic
    series on both sides up to ``match_order``, and for arrival at the
    origin of the Emden plane.
    """
    lstar = lambda_star(gamma)
    if bracket is None:
        bracket = default_bracket(gamma)
    a, b = sorted(float(v) for v in bracket)
    if not (1.0 < a < b < lstar):
        raise BracketError(f"bracket must lie inside (1, {lstar!r})")
    evals = []

    def m_raw(lam):
        mm = mismatch(GasModel(gamma, lam))
        evals.append(mm)
        return mm.mismatch

    ra, rb = m_raw(a), m_raw(b)
    if ra * rb > 0:
        raise BracketError(f"mismatch has the same sign at both ends of [{a!r}, {b!r}]")
    scale = max(abs(ra), abs(rb))

    def f(lam):
        return m_raw(lam) / scale

    lam, _ = bracketed_root(f, a, b, xtol=xtol, ftol=tol, fa=ra / scale, fb=rb / scale)
    best = next(e for e in reversed(evals) if e.lam == lam)
    best.relative = float(best.mismatch / scale)
    model = GasModel(gamma, lam)
    return _finish(model, best, evals, match_order, require_order, q_exit)


def _finish(model, mm, evals, match_order, require_order, q_exit):
    hs = mm.sonic_hp
    sp = sonic_point(model)
    n = min(len(hs.c), 400)
    c, g = _float_series(hs, n)
    series = SonicSeries(float(hs.q_s), float(hs.u_s), c, g, hs.radius)
    traj_in = _incoming_trajectory(model, mm)
    # the series supplies xi(q) between the two orbits
    h_in = mm.section_q - series.q_s
    xi_sonic = float(mm.incoming.end[2]) - float(series.xi_offset(h_in))
    q_exit = q_exit if q_exit is not None else 0.5 * series.q_s
    traj_out, hp = _outgoing_trajectory(model, hs, q_exit)
    if traj_out is None or "reached-Pinf-neighborhood" not in traj_out.kinds():
        raise IntegrationError(
            f"smooth branch does not reach the origin of the Emden plane at lambda={model.lam!r}")
    traj_out.xi = traj_out.xi + xi_sonic
    for seg in traj_out.segments:
        seg.fn = _shift_xi(seg.fn, xi_sonic)

    # tangency: direction of approach of the incoming orbit
    tail = np.array([traj_in.q[-1] - series.q_s, traj_in.u[-1] - series.u_s])
    tail /= np.linalg.norm(tail)
    ang = tuple(float(np.degrees(np.arccos(min(1.0, abs(tail @ v)))))
                for v in (sp.nu_minus, sp.nu_plus))
    if ang[1] < ang[0]:
        raise TangencyError("incoming orbit approaches the sonic point along the fast direction")

    # Taylor agreement: continue the incoming orbit towards the sonic point
    lo, hi = 0.01 * series.radius, 0.2 * series.radius
    with gmpy2.context(_context(hs.digits)):
        closer = taylor_orbit(model, mm.incoming.end, -1, hs.q_s + mpfr(lo) * 0.99, hs.digits)
    xin, uin = _dense_branch(_join(mm.incoming, closer), series.q_s, lo, hi)
    achieved, det_in = taylor_match_order(xin, uin, c, match_order)
    # the outgoing orbit starts on the series; check it stays on it
    xout, uout = _dense_branch(hp, series.q_s, SEED_FRACTION * series.radius, 0.8 * series.radius)
    out_dev = float(np.max(np.abs(uout - series.u(xout)))) if xout.size else 0.0
    if achieved < require_order:
        raise SmoothnessError(f"Taylor agreement only to order {achieved}")
    slope = decay_slope(traj_out)
    return ShootResult(
        lam=model.lam, model=model, trajectory_in=traj_in, trajectory_out=traj_out,
        sonic=sp, series=series, xi_sonic=xi_sonic, mismatch=mm.relative,
        raw_mismatch=float(mm.raw), digits=mm.digits, achieved_order=achieved,
        match_detail={"incoming_slopes": det_in, "outgoing_series_deviation": out_dev},
        outgoing_slope=slope, tangency_angles=ang, evaluations=evals)


def _join(first, second):
    """Concatenate two extended-precision orbits that share an endpoint."""
    shift = first.s[-1]
    segs = list(first.segments)
    for seg in second.segments:
        segs.append(type(seg)(seg.s0 + shift, seg.s1 + shift, _shift_s(seg.fn, shift)))
    return type(first)(np.concatenate([first.s, second.s[1:] + shift]),
                       np.concatenate([first.q, second.q[1:]]),
                       np.concatenate([first.u, second.u[1:]]),
                       np.concatenate([first.xi, second.xi[1:]]),
                       segs, second.end, second.stop, second.digits)


def _shift_s(fn, shift):
    return lambda s: fn(np.asarray(s) - shift)


def _shift_xi(fn, dxi):
    def shifted(s):
        out = fn(s)
        out[2] = out[2] + dxi
        return out
    return shifted


def _dense_branch(orbit, q_s, lo, hi, n=40):
    """Sample ``u`` at ``|q - q_s|`` log-spaced in ``[lo, hi]`` from orbit segments."""
    xs = np.geomspace(lo, hi, n)
    sign = 1.0 if orbit.q[0] > q_s else -1.0
    targets = q_s + sign * xs
    out_x, out_u = [], []
    for seg in orbit.segments:
        q0 = seg(np.array([seg.s0]))[0][0]
        q1 = seg(np.array([seg.s1]))[0][0]
        qlo, qhi = min(q0, q1), max(q0, q1)
        for t in targets[(targets >= qlo) & (targets <= qhi)]:
            def g(s, t=t):
                return seg(np.array([s]))[0][0] - t
            s_hit, _ = bracketed_root(g, seg.s0, seg.s1, xtol=1e-15)
            out_x.append(t - q_s)
            out_u.append(seg(np.array([s_hit]))[1][0])
    return np.array(out_x), np.array(out_u)
