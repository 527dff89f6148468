"""The Emden autonomous system, its sonic points and linearization."""

from dataclasses import dataclass
import math
import warnings

import numpy as np

from ..errors import NoRootError
from ..rootfind import bracketed_root


@dataclass(frozen=True)
class EmdenPoint:
    q_hat: float
    u_hat: float

    def __post_init__(self):
        if not (math.isfinite(self.q_hat) and math.isfinite(self.u_hat)):
            raise ValueError("EmdenPoint components must be finite")

    def as_array(self):
        return np.array([self.q_hat, self.u_hat])


def _coefficients(model):
    """Monomial coefficients of the expanded numerators.

    ``N_Q = q(-L + A u + B u^2 + a^2 q^2)`` and
    ``N_U = -L u - (1+L) u^2 - u^3 + a(L-1) q^2 + 3a^2 q^2 u``.
    """
    a, lam = model.alpha, model.lam
    beta = 1.0 + 3.0 * a
    return a * lam - beta - lam, a - beta


def emden_rhs(q, u, model):
    """Return ``(N_Q, N_U, D)`` at ``(q, u)``; accepts scalars or arrays."""
    a, lam = model.alpha, model.lam
    beta = 1.0 + 3.0 * a
    w = lam * u + u * u + a * q * q
    v = lam + beta * u
    n_q = -(1.0 + u) * q * v + a * q * w
    n_u = -(1.0 + u) * w + a * q * q * v
    d = (1.0 + u) ** 2 - a * a * q * q
    return n_q, n_u, d


def emden_jacobian(q, u, model):
    """Analytic Jacobian of ``(N_Q, N_U)`` with respect to ``(q, u)``."""
    a, lam = model.alpha, model.lam
    A, B = _coefficients(model)
    return np.array([
        [-lam + A * u + B * u * u + 3 * a * a * q * q, q * (A + 2 * B * u)],
        [2 * a * (lam - 1) * q + 6 * a * a * q * u,
         -lam - 2 * (1 + lam) * u - 3 * u * u + 3 * a * a * q * q],
    ])


def sonic_quadratic(model):
    """Coefficients of the quadratic in ``u`` whose roots are the sonic points.

    On the branch ``1 + u = alpha q`` one has
    ``N_U = (1 + u)/alpha * (c2 u^2 + c1 u + c0)``.
    """
    a, lam = model.alpha, model.lam
    return 2 * a, lam * (1 - a) + 3 * a - 1, lam - 1


@dataclass(frozen=True)
class SonicPointData:
    """A regular singular point of the Emden system on the sonic line.

    ``jac_eigenvalues`` are ``(slow, fast)``.  ``nu_minus`` is the slow
    eigendirection, oriented towards decreasing ``q_hat``; ``nu_plus`` is
    the fast one with the same orientation rule.
    """

    location: EmdenPoint
    jac_eigenvalues: tuple
    nu_minus: np.ndarray
    nu_plus: np.ndarray
    residuals: tuple
    jacobian: np.ndarray
    multiplicity: int
    all_roots: tuple

    @property
    def eigen_ratio(self):
        """Fast over slow eigenvalue; integer values are resonances."""
        return self.jac_eigenvalues[1] / self.jac_eigenvalues[0]


def _orient(v):
    v = v / np.linalg.norm(v)
    return -v if v[0] > 0 else v


def sonic_point(model, n_scan=2000, which="upper"):
    """Locate the sonic point reached by the orbit leaving the origin asymptote.

    Scans ``N_U`` along ``1 + u = alpha q`` for ``u`` in ``(-1, 0]``, refines
    every sign change, and returns the root with the largest ``u``
    (``which="lower"`` selects the smallest).
    """
    a = model.alpha

    def g(u):
        return emden_rhs((1.0 + u) / a, u, model)[1]

    grid = np.linspace(-1.0, 0.0, n_scan + 1)[1:]
    # the two roots merge at lambda_star; include the extremum between them
    c2, c1, _ = sonic_quadratic(model)
    vertex = -c1 / (2 * c2)
    if -1.0 < vertex < 0.0:
        grid = np.unique(np.append(grid, vertex))
    vals = g(grid)
    roots = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(float(grid[i]))
        elif vals[i] * vals[i + 1] < 0:
            roots.append(bracketed_root(g, grid[i], grid[i + 1], xtol=1e-16)[0])
    if vals[-1] == 0.0:
        roots.append(0.0)
    if not roots:
        raise NoRootError(f"no sonic point for gamma={model.gamma}, lambda={model.lam}")
    u_s = roots[-1] if which == "upper" else roots[0]
    q_s = (1.0 + u_s) / a
    n_q, n_u, d = emden_rhs(q_s, u_s, model)
    jac = emden_jacobian(q_s, u_s, model)
    w, v = np.linalg.eig(jac)
    if np.iscomplexobj(w):
        if np.max(np.abs(w.imag)) > 0:
            raise NoRootError("sonic point is a focus, not a node")
        w, v = w.real, v.real
    order = np.argsort(np.abs(w))
    w, v = w[order], v[:, order]
    if abs(w[1] - w[0]) <= 1e-8:
        warnings.warn("degenerate eigenvalues at the sonic point", RuntimeWarning)
    return SonicPointData(
        location=EmdenPoint(float(q_s), float(u_s)),
        jac_eigenvalues=(float(w[0]), float(w[1])),
        nu_minus=_orient(v[:, 0]),
        nu_plus=_orient(v[:, 1]),
        residuals=(abs(d), abs(n_q), abs(n_u)),
        jacobian=jac,
        multiplicity=len(roots),
        all_roots=tuple(roots),
    )
