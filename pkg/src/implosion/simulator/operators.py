"""Finite-difference operators and the right-hand sides of both frames."""

import math

import numpy as np

from ..errors import NonPositiveDensity

NG = 3
# Lagrange weights extrapolating from the last five nodes to ghosts 1..3
_EXTRAP = np.array([
    [1.0, -5.0, 10.0, -10.0, 5.0],
    [5.0, -24.0, 45.0, -40.0, 15.0],
    [15.0, -70.0, 126.0, -105.0, 35.0],
])


def pad(f, parity, boundary):
    """Add ghost nodes: parity (+1 even, -1 odd) at ``r=0`` and the far rule."""
    n = len(f)
    g = np.empty(n + 2 * NG)
    g[NG:NG + n] = f
    g[:NG] = parity * f[NG:0:-1]
    if boundary == "reflect":
        g[NG + n:] = parity * f[-2:-2 - NG:-1]
    else:
        g[NG + n:] = _EXTRAP @ f[-5:]
    return g


def d1(g, h):
    return (g[NG - 2:-NG - 2] - 8 * g[NG - 1:-NG - 1]
            + 8 * g[NG + 1:len(g) - NG + 1] - g[NG + 2:len(g) - NG + 2]) / (12 * h)


def d2(g, h):
    return (-g[NG - 2:-NG - 2] + 16 * g[NG - 1:-NG - 1] - 30 * g[NG:-NG]
            + 16 * g[NG + 1:len(g) - NG + 1] - g[NG + 2:len(g) - NG + 2]) / (12 * h * h)


def d6(g):
    """Undivided sixth difference (symbol ``-(2 sin(k/2))^6``)."""
    n = len(g) - 2 * NG
    c = (1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0)
    return sum(w * g[i:i + n] for i, w in enumerate(c))


def radial_derivatives(r, a, b, boundary):
    """Ghosted fields, first and second derivatives, ``b/r`` and ``div b``.

    The divergence uses the flux form ``(r^2 b)'/r^2`` with the limit
    ``3 b'(0)``; the plain form ``b' + 2b/r`` is unstable at the origin.
    """
    h = r[1] - r[0]
    ga = pad(a, 1.0, boundary)
    gb = pad(b, -1.0, boundary)
    da, db = d1(ga, h), d1(gb, h)
    da[0] = 0.0
    ddb = d2(gb, h)
    b_r = np.empty_like(b)
    b_r[1:] = b[1:] / r[1:]
    b_r[0] = db[0]
    div = np.empty_like(b)
    flux = d1(pad(r * r * b, -1.0, boundary), h)
    div[1:] = flux[1:] / r[1:] ** 2
    div[0] = 3.0 * db[0]
    return ga, gb, da, db, ddb, b_r, div


def viscous_bracket(model, r, a, da, db, ddb, b_r, div):
    """Degenerate Lame term divided by its prefactor.

    ``a^((delta-1)/alpha) (2a1+a2) grad div U
    + (delta/alpha) a^((delta-1-alpha)/alpha) a' (2 a1 U' + a2 div U)``.
    """
    al, de = model.alpha, model.delta
    if np.any(a <= 0):
        i = int(np.argmin(a))
        raise NonPositiveDensity(f"non-positive density at r={r[i]:.6g}")
    lap = np.empty_like(a)
    # grad div of a radial field: b'' + 2 (b' - b/r)/r, zero at the origin
    lap[1:] = ddb[1:] + 2.0 * (db[1:] - b_r[1:]) / r[1:]
    lap[0] = 0.0
    a1, a2 = model.a1, model.a2
    out = a ** ((de - 1) / al) * (2 * a1 + a2) * lap
    if de != 0.0:
        out = out + (de / al) * a ** ((de - 1 - al) / al) * da * (2 * a1 * db + a2 * div)
    return out


def euler_prefactor(model):
    return model.alpha ** ((model.delta - 1) / model.alpha)


def selfsim_prefactor(model, tau):
    return model.c_dis * math.exp(-model.delta_dis * tau)


def _ko(ga, gb, speed, h, sigma):
    return sigma * speed / (64.0 * h) * d6(ga), sigma * speed / (64.0 * h) * d6(gb)


def rhs_eulerian(state, model, viscous=True, boundary="hold", dissipation=0.0,
                 return_dissipative=False):
    """Time derivatives of ``(c, u)`` for the radial viscous system."""
    r, c, u = state.r, state.a, state.b
    if np.any(c <= 0):
        i = int(np.argmin(c))
        raise NonPositiveDensity(f"non-positive density at r={r[i]:.6g}", state.time)
    gc, gu, dc, du, ddu, u_r, div = radial_derivatives(r, c, u, boundary)
    al = model.alpha
    dt_c = -u * dc - al * c * div
    dt_u = -u * du - al * c * dc
    fdis = np.zeros_like(c)
    if viscous:
        fdis = euler_prefactor(model) * viscous_bracket(model, r, c, dc, du, ddu, u_r, div)
        dt_u = dt_u + fdis
    if dissipation > 0:
        speed = float(np.max(np.abs(u) + al * c))
        kc, ku = _ko(gc, gu, speed, r[1] - r[0], dissipation)
        dt_c, dt_u = dt_c + kc, dt_u + ku
    dt_u[0] = 0.0
    if return_dissipative:
        return dt_c, dt_u, fdis
    return dt_c, dt_u


def rhs_selfsim(state, model, tau=None, viscous=True, boundary="outflow", dissipation=0.0,
                return_dissipative=False):
    """Time derivatives of ``(Q, U)`` in self-similar variables."""
    tau = state.time if tau is None else tau
    r, q, u = state.r, state.a, state.b
    if np.any(q <= 0):
        i = int(np.argmin(q))
        raise NonPositiveDensity(f"non-positive density at r={r[i]:.6g}", tau)
    gq, gu, dq, du, ddu, u_r, div = radial_derivatives(r, q, u, boundary)
    al, lam = model.alpha, model.lam
    dt_q = -(lam - 1) * q - (r + u) * dq - al * q * div
    dt_u = -(lam - 1) * u - (r + u) * du - al * q * dq
    fdis = np.zeros_like(q)
    if viscous:
        fdis = selfsim_prefactor(model, tau) * viscous_bracket(model, r, q, dq, du, ddu, u_r, div)
        dt_u = dt_u + fdis
    if dissipation > 0:
        speed = float(np.max(np.abs(r + u) + al * q))
        kq, ku = _ko(gq, gu, speed, r[1] - r[0], dissipation)
        dt_q, dt_u = dt_q + kq, dt_u + ku
    dt_u[0] = 0.0
    if return_dissipative:
        return dt_q, dt_u, fdis
    return dt_q, dt_u


def viscous_coefficient(state, model):
    """Largest coefficient multiplying the second derivative."""
    al, de = model.alpha, model.delta
    a = state.a
    base = (2 * model.a1 + model.a2) * a ** ((de - 1) / al)
    if state.frame == "eulerian":
        return float(np.max(euler_prefactor(model) * base))
    return float(np.max(selfsim_prefactor(model, state.time) * base))


def advective_speed(state, model):
    if state.frame == "eulerian":
        return float(np.max(np.abs(state.b) + model.alpha * state.a))
    return float(np.max(np.abs(state.r + state.b) + model.alpha * state.a))
