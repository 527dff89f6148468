"""Power series of the profile at the origin and of the smooth branch at the sonic point.

The routines here are written against plain arithmetic so that the same
code runs on floats or on ``gmpy2.mpfr`` numbers.
"""

from dataclasses import dataclass
import math

import numpy as np

from ..errors import DomainError


def _conv(a, b, k, lo=0):
    """Coefficient ``k`` of the product of two series."""
    s = a[lo] * b[k - lo]
    for i in range(lo + 1, k - lo + 1):
        s += a[i] * b[k - i]
    return s


# --- origin --------------------------------------------------------------

@dataclass(frozen=True)
class OriginSeries:
    """Profile series at ``r = 0``.

    ``Q(r) = sum q[j] r^(2j)`` and ``U(r) = r * sum w[j] r^(2j)``, so
    ``q[0] = Q0``, ``w[0] = U1`` and ``q[1] = Q2``.
    """

    q: np.ndarray
    w: np.ndarray

    def evaluate(self, r):
        """Return ``(Q, U, dQ/dr, dU/dr)`` at radii ``r``."""
        r = np.asarray(r, dtype=float)
        z = r * r
        pq = np.polynomial.polynomial
        qv = pq.polyval(z, self.q)
        wv = pq.polyval(z, self.w)
        dq = 2 * r * pq.polyval(z, pq.polyder(self.q))
        dw = pq.polyval(z, pq.polyder(self.w)) if len(self.w) > 1 else 0 * z
        return qv, r * wv, dq, wv + 2 * z * dw

    @property
    def coefficients(self):
        """Interleaved ``(Q0, U1, Q2, U3, ...)``."""
        out = np.empty(len(self.q) + len(self.w))
        out[0::2] = self.q
        out[1::2] = self.w
        return out


def origin_coefficients(alpha, lam, q_star, n, one=1.0):
    """Lists ``(q, w)`` of ``n`` origin-series coefficients in any number type."""
    zero = one * 0
    a = alpha
    q = [zero] * (n + 1)
    w = [zero] * (n + 1)
    q[0] = q_star * one
    w[0] = -(lam - 1) / (3 * a)
    q[1] = -w[0] * (lam + w[0]) / (2 * a * q[0])
    opw = list(w)
    opw[0] = w[0] + 1
    for m in range(1, n):
        # continuity: (L-1)Q + 2z(1+W)Q_z + aQ(3W + 2zW_z) = 0 at order m
        s = (lam - 1) * q[m]
        s += 2 * sum((opw[i] * (m - i) * q[m - i] for i in range(m)), zero)
        s += a * sum((q[i] * (3 + 2 * (m - i)) * w[m - i] for i in range(1, m + 1)), zero)
        w[m] = -s / (a * q[0] * (3 + 2 * m))
        opw[m] = w[m]
        # momentum: (L-1)W + (1+W)(W + 2zW_z) + 2aQQ_z = 0 at order m
        s = (lam - 1) * w[m]
        s += sum((opw[i] * (1 + 2 * (m - i)) * w[m - i] for i in range(m + 1)), zero)
        s += 2 * a * sum((q[i] * (m - i + 1) * q[m - i + 1] for i in range(1, m + 1)), zero)
        q[m + 1] = -s / (2 * a * q[0] * (m + 1))
        if not (abs(q[m + 1]) < 1e250 and abs(w[m]) < 1e250):
            raise DomainError(f"origin series unstable at order {m}; lower the order")
    return q[:n], w[:n]


def p0_expansion(model, q_star=1.0, order=12):
    """Taylor coefficients of the smooth profile at the origin.

    Substitutes ``Q = sum q_j z^j``, ``U = r sum w_j z^j`` (``z = r^2``) into
    the steady equations and solves order by order.  ``order`` is the number
    of terms kept in each of the two series.
    """
    if not q_star > 0:
        raise DomainError("q_star must be positive")
    if order < 2:
        raise DomainError("order must be at least 2")
    q, w = origin_coefficients(model.alpha, model.lam, q_star, order)
    return OriginSeries(np.array(q, dtype=float), np.array(w, dtype=float))


def origin_residual(series, model, r):
    """Residuals of the steady equations for the truncated origin series."""
    qv, uv, dq, du = series.evaluate(r)
    a, lam = model.alpha, model.lam
    res_q = (lam - 1) * qv + (r + uv) * dq + a * qv * (du + 2 * uv / r)
    res_u = (lam - 1) * uv + (r + uv) * du + a * qv * dq
    return res_q, res_u


# --- sonic point -----------------------------------------------------------

def graph_series(q_s, u_s, c1, lam_slow, lam_fast, alpha, lam, order, one=1.0):
    """Coefficients of the branch ``u(q_s + x) = sum c_k x^k`` through a sonic point.

    ``c1`` is the slope of the chosen eigendirection and ``lam_slow`` its
    eigenvalue.  Higher coefficients follow from
    ``c_k = -R_k / (lam_fast - k lam_slow)`` where ``R_k`` is the order-k
    residual of ``N_U - u' N_Q`` with ``c_k`` set to zero.

    Returns ``(c, nq, d)``, the series of ``u``, ``N_Q`` and ``D`` along the
    branch.  ``one`` fixes the number type (float or ``mpfr``).
    """
    zero = one * 0
    K = order
    a2 = alpha * alpha
    beta = one + 3 * alpha
    A = alpha * lam - beta - lam
    B = alpha - beta
    # polynomials in x of q, q^2, q^3
    qp = [q_s, one] + [zero] * K
    qq = [q_s * q_s, 2 * q_s, one] + [zero] * K
    qqq = [q_s ** 3, 3 * q_s * q_s, 3 * q_s, one] + [zero] * K

    c = [u_s, c1] + [zero] * K
    uu = [zero] * (K + 1)
    uuu = [zero] * (K + 1)
    nq = [zero] * (K + 1)
    nu = [zero] * (K + 1)

    def products(k):
        uu[k] = _conv(c, c, k)
        uuu[k] = _conv(c, uu, k)
        qu = q_s * c[k] + c[k - 1] if k else q_s * c[0]
        quu = q_s * uu[k] + uu[k - 1] if k else q_s * uu[0]
        qqu = sum((qq[i] * c[k - i] for i in range(min(k, 2) + 1)), zero)
        nq[k] = -lam * qp[k] + A * qu + B * quu + a2 * qqq[k]
        nu[k] = (-lam * c[k] - (1 + lam) * uu[k] - uuu[k]
                 + alpha * (lam - 1) * qq[k] + 3 * a2 * qqu)

    products(0)
    products(1)
    for k in range(2, K + 1):
        c[k] = zero
        products(k)
        r = nu[k] - sum(((j + 1) * c[j + 1] * nq[k - j] for j in range(k - 1)), zero)
        c[k] = -r / (lam_fast - k * lam_slow)
        products(k)
    c = c[:K + 1]
    d = [(1 if k == 0 else 0) + 2 * c[k] + uu[k] - a2 * qq[k] for k in range(K + 1)]
    return c, nq, d


def series_divide(num, den, n):
    """First ``n`` coefficients of ``num/den`` for series with ``num[0] = den[0] = 0``."""
    num, den = num[1:], den[1:]
    out = []
    for k in range(n):
        s = num[k]
        for j in range(k):
            s -= out[j] * den[k - j]
        out.append(s / den[0])
    return out


@dataclass(frozen=True)
class SonicSeries:
    """Smooth branch through the sonic point as a power series in ``x = q - q_s``.

    ``c`` are the coefficients of ``u(x)``; ``g`` those of
    ``dxi/dx = D/N_Q``; ``radius`` is a conservative estimate of the radius
    of convergence.
    """

    q_s: float
    u_s: float
    c: np.ndarray
    g: np.ndarray
    radius: float

    def u(self, x):
        return np.polynomial.polynomial.polyval(x, self.c)

    def du(self, x):
        return np.polynomial.polynomial.polyval(x, np.polynomial.polynomial.polyder(self.c))

    def xi_offset(self, x):
        """``xi(x) - xi(0)`` along the branch."""
        pq = np.polynomial.polynomial
        return pq.polyval(x, pq.polyint(self.g))

    def dxi(self, x):
        return np.polynomial.polynomial.polyval(x, self.g)


def radius_estimate(c, log_mag=None):
    """Conservative radius of convergence from the tail of a coefficient list.

    ``log_mag`` may supply ``log|c_k|`` directly for coefficients that
    overflow a float.
    """
    if log_mag is None:
        with np.errstate(divide="ignore"):
            log_mag = np.log(np.abs(np.asarray(c, dtype=float)))
    log_mag = np.asarray(log_mag, dtype=float)
    k = np.arange(len(log_mag))
    sel = (k >= max(2, len(log_mag) // 2)) & np.isfinite(log_mag)
    if not np.any(sel):
        return math.inf
    return float(np.exp(np.min(-log_mag[sel] / k[sel])))


def sonic_series(model, sonic, order=40):
    """Double-precision series of the slow branch through ``sonic``."""
    p = sonic.location
    lam1, lam2 = sonic.jac_eigenvalues
    v = sonic.nu_minus
    c, nq, d = graph_series(p.q_hat, p.u_hat, v[1] / v[0], lam1, lam2,
                            model.alpha, model.lam, order)
    g = series_divide(d, nq, order - 1)
    return SonicSeries(p.q_hat, p.u_hat, np.array(c, dtype=float),
                       np.array(g, dtype=float), radius_estimate(c))
