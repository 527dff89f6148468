"""Extended-precision evaluation of the orbits through the sonic point.

Near a sonic node with eigenvalue ratio ``m = fast/slow`` an orbit
tangent to the slow direction has the form ``u = (analytic) + C |x|^m``.
Smooth profiles are those with ``C = 0`` on both sides.  With ``m`` in
the tens or hundreds, ``C |x|^m`` is far below double-precision rounding
at any usable distance ``x``, and forward integration away from the node
amplifies rounding by roughly ``(X/h)^m``.  Both the shooting mismatch and
the outgoing continuation are therefore computed here in ``gmpy2``
arithmetic with a working precision proportional to ``m``, using a Taylor
method for the polynomial vector field.
"""

from dataclasses import dataclass
import math

import gmpy2
from gmpy2 import mpfr
import numpy as np

from ..errors import IntegrationError
from .integrate import DenseSegment
from .series import _conv, graph_series, origin_coefficients, radius_estimate, series_divide


def working_digits(ratio):
    """Decimal digits needed to resolve ``|x|^ratio`` terms at a quarter radius."""
    return int(30 + math.ceil(0.8 * ratio))


def _context(digits):
    return gmpy2.context(precision=int(math.ceil(digits * math.log2(10))) + 16)


def _params(model):
    a = (mpfr(model.gamma) - 1) / 2
    return a, mpfr(model.lam)


@dataclass(frozen=True)
class HiPrecSonic:
    """Upper sonic point, eigenvalues and slow-branch series at working precision.

    ``c`` are the coefficients of ``u(q_s + x)`` and ``g`` those of
    ``dxi/dx`` along the branch.
    """

    q_s: object
    u_s: object
    lam_slow: object
    lam_fast: object
    c: list
    g: list
    radius: float
    digits: int

    def u_at(self, x):
        return _horner(self.c, x)

    def xi_at(self, x):
        """``xi(x) - xi(0)`` along the branch."""
        s = self.g[-1] / len(self.g)
        for k in range(len(self.g) - 2, -1, -1):
            s = s * x + self.g[k] / (k + 1)
        return s * x

    @property
    def ratio(self):
        return float(self.lam_fast / self.lam_slow)


def hiprec_sonic(model, order, digits):
    """Closed-form sonic point and its slow-branch series with ``digits`` digits."""
    with gmpy2.context(_context(digits)):
        a, lam = _params(model)
        c2, c1, c0 = 2 * a, lam * (1 - a) + 3 * a - 1, lam - 1
        disc = c1 * c1 - 4 * c2 * c0
        if disc < 0:
            raise IntegrationError("no real sonic point at this lambda")
        u_s = (-c1 + gmpy2.sqrt(disc)) / (2 * c2)
        q_s = (1 + u_s) / a
        beta = 1 + 3 * a
        A, B = a * lam - beta - lam, a - beta
        j11 = -lam + A * u_s + B * u_s * u_s + 3 * a * a * q_s * q_s
        j12 = q_s * (A + 2 * B * u_s)
        j21 = 2 * a * (lam - 1) * q_s + 6 * a * a * q_s * u_s
        j22 = -lam - 2 * (1 + lam) * u_s - 3 * u_s * u_s + 3 * a * a * q_s * q_s
        tr, det = j11 + j22, j11 * j22 - j12 * j21
        root = gmpy2.sqrt(tr * tr - 4 * det)
        l_slow, l_fast = (tr - root) / 2, (tr + root) / 2
        slope = (l_slow - j11) / j12
        c, nq, d = graph_series(q_s, u_s, slope, l_slow, l_fast, a, lam, order, one=mpfr(1))
        g = series_divide(d, nq, order - 1)
        log_mag = [float(gmpy2.log(abs(x))) if x != 0 else -math.inf for x in c]
    return HiPrecSonic(q_s, u_s, l_slow, l_fast, c, g,
                       radius_estimate(None, log_mag), digits)


def origin_seed(model, r_seed, digits, order=None):
    """Point ``(q_hat, u_hat, xi)`` on the orbit leaving the origin asymptote.

    Uses the origin series with ``Q0 = 1`` at radius ``r_seed``.
    """
    order = order or max(8, digits // 2)
    with gmpy2.context(_context(digits)):
        a, lam = _params(model)
        q, w = origin_coefficients(a, lam, 1, order, one=mpfr(1))
        r = mpfr(r_seed)
        z = r * r
        qv = _horner(q, z)
        wv = _horner(w, z)
        return qv / r, wv, gmpy2.log(r)


def _horner(coeffs, x):
    s = coeffs[-1]
    for cf in reversed(coeffs[:-1]):
        s = s * x + cf
    return s


def _taylor_coefficients(q0, u0, a, lam, order):
    """Taylor coefficients in ``s`` of the forward flow ``(N_Q, N_U, D)``."""
    zero = q0 * 0
    a2 = a * a
    beta = 1 + 3 * a
    A, B = a * lam - beta - lam, a - beta
    q, u, xi = [q0], [u0], [zero]
    qq, uu, qu, quu, qqq, uuu, qqu = ([] for _ in range(7))
    for k in range(order):
        qq.append(_conv(q, q, k))
        uu.append(_conv(u, u, k))
        qu.append(_conv(q, u, k))
        quu.append(_conv(q, uu, k))
        qqq.append(_conv(q, qq, k))
        uuu.append(_conv(u, uu, k))
        qqu.append(_conv(qq, u, k))
        nq = -lam * q[k] + A * qu[k] + B * quu[k] + a2 * qqq[k]
        nu = (-lam * u[k] - (1 + lam) * uu[k] - uuu[k]
              + a * (lam - 1) * qq[k] + 3 * a2 * qqu[k])
        d = (1 if k == 0 else 0) + 2 * u[k] + uu[k] - a2 * qq[k]
        q.append(nq / (k + 1))
        u.append(nu / (k + 1))
        xi.append(d / (k + 1))
    return q, u, xi


def _step_size(cq, cu, order, eps):
    """Step length from the last two Taylor coefficients (Jorba-Zou rule)."""
    h = None
    for j in (order - 1, order):
        m = max(abs(cq[j]), abs(cu[j]))
        if m > 0:
            hj = (eps / m) ** (mpfr(1) / j)
            h = hj if h is None else min(h, hj)
    return mpfr(1) if h is None else h * mpfr("0.5")


@dataclass
class HiPrecOrbit:
    """Orbit computed at working precision, returned as floats.

    ``end`` holds the final state in working precision; ``stop`` is
    ``"section"`` or ``"u-hat-hits-minus-one"``.
    """

    s: np.ndarray
    q: np.ndarray
    u: np.ndarray
    xi: np.ndarray
    segments: list
    end: tuple
    stop: str
    digits: int


def taylor_orbit(model, start, direction, q_stop, digits, order=None, max_steps=20000):
    """Follow the desingularized flow from ``start = (q, u, xi)`` until ``q <= q_stop``.

    ``direction`` is +1 for forward pseudo-time and -1 for reverse.  The
    orbit also stops if ``u`` reaches -1.  ``q`` must be decreasing along
    the orbit for the section to be met.
    """
    order = order or max(24, int(0.8 * digits))
    with gmpy2.context(_context(digits)):
        a, lam = _params(model)
        q, u, xi = (mpfr(v) for v in start)
        q_stop = mpfr(q_stop)
        eps = mpfr(10) ** (-digits)
        s = mpfr(0)
        out = [(0.0, float(q), float(u), float(xi))]
        segments = []
        stop = None
        for _ in range(max_steps):
            cq, cu, cx = _taylor_coefficients(q, u, a, lam, order)
            h = _step_size(cq, cu, order, eps) * direction
            qn, un = _horner(cq, h), _horner(cu, h)
            if qn <= q_stop and un > -1:
                stop = "section"
                h = _bisect_step(cq, h, q_stop, order)
            elif un <= -1:
                stop = "u-hat-hits-minus-one"
                h = _bisect_step([v for v in cu], h, mpfr(-1), order)
            qn, un, xn = _horner(cq, h), _horner(cu, h), xi + _horner(cx, h)
            segments.append(_poly_segment(float(s), float(h), cq, cu, cx, float(xi)))
            s, q, u, xi = s + h, qn, un, xn
            if not all(map(gmpy2.is_finite, (q, u, xi))):
                raise IntegrationError("non-finite state in extended-precision orbit")
            out.append((float(s), float(q), float(u), float(xi)))
            if stop:
                break
        else:
            raise IntegrationError("extended-precision orbit exceeded its step budget")
    arr = np.array(out)
    return HiPrecOrbit(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], segments,
                       (q, u, xi), stop, digits)


def _bisect_step(coeffs, h, level, order):
    """Step in ``[0, h]`` where the polynomial falls to ``level``."""
    lo, hi = 0 * h, h
    for _ in range(int(order * 4) + 60):
        mid = (lo + hi) / 2
        if _horner(coeffs, mid) > level:
            lo = mid
        else:
            hi = mid
    return hi


def _poly_segment(s0, h, cq, cu, cx, xi0):
    pq = np.array([float(v) for v in cq])
    pu = np.array([float(v) for v in cu])
    px = np.array([float(v) for v in cx])
    px[0] = xi0

    def fn(s):
        t = np.asarray(s, dtype=float) - s0
        pv = np.polynomial.polynomial.polyval
        return np.array([pv(t, pq), pv(t, pu), pv(t, px)])

    return DenseSegment(s0, s0 + h, fn)


def branch_seed(hs, seed_fraction=0.35):
    """Point on the outgoing analytic branch at ``x = -seed_fraction * radius``."""
    with gmpy2.context(_context(hs.digits)):
        x = -mpfr(seed_fraction) * mpfr(hs.radius)
        return hs.q_s + x, hs.u_at(x), hs.xi_at(x)
