"""Bracketed scalar root finding by bisection with secant acceleration."""

import math

from .errors import NoRootError


def bracketed_root(f, a, b, xtol=1e-14, ftol=0.0, maxiter=200, fa=None, fb=None):
    """Find a root of ``f`` in ``[a, b]``.

    Secant steps on the bracket (false position with the Illinois
    down-weighting of a stale endpoint) alternate with bisection whenever
    a step fails to shrink the bracket by half.  Stops as soon as
    ``|f| <= ftol`` or the bracket is narrower than ``xtol``.  ``f`` may
    return any ordered number type supporting arithmetic.

    Returns ``(x, fx)``.
    """
    fa = f(a) if fa is None else fa
    if abs(fa) <= ftol:
        return a, fa
    fb = f(b) if fb is None else fb
    if abs(fb) <= ftol:
        return b, fb
    if not (math.isfinite(float(fa)) and math.isfinite(float(fb))) or fa * fb > 0:
        raise NoRootError(f"no sign change on [{a!r}, {b!r}]: f={fa!r}, {fb!r}")
    wa, wb = fa, fb  # weighted end values used for the secant
    side = 0
    width = abs(b - a)
    for _ in range(maxiter):
        x = b - float(wb / (wb - wa)) * (b - a)
        lo, hi = min(a, b), max(a, b)
        if not lo < x < hi:
            x = 0.5 * (a + b)
        fx = f(x)
        if abs(fx) <= ftol or fx == 0:
            return x, fx
        if fa * fx < 0:
            b, fb, wb = x, fx, fx
            wa = wa / 2 if side == -1 else fa
            side = -1
        else:
            a, fa, wa = x, fx, fx
            wb = wb / 2 if side == 1 else fb
            side = 1
        new_width = abs(b - a)
        if new_width > 0.5 * width:
            # slow progress: take a bisection step
            x = 0.5 * (a + b)
            fx = f(x)
            if abs(fx) <= ftol or fx == 0:
                return x, fx
            if fa * fx < 0:
                b, fb, wb = x, fx, fx
                wa = fa
            else:
                a, fa, wa = x, fx, fx
                wb = fb
            side = 0
            new_width = abs(b - a)
        width = new_width
        if width <= xtol:
            break
    return (a, fa) if abs(fa) < abs(fb) else (b, fb)
