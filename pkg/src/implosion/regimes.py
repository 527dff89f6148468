"""Closed-form parameter thresholds and admissibility conditions."""

from dataclasses import dataclass, field
import math

from .errors import DomainError, NoRootError
from .rootfind import bracketed_root

SQRT3 = math.sqrt(3.0)
GAMMA_MONATOMIC = 5.0 / 3.0
GAMMA_UPPER = 1.0 + 2.0 / SQRT3


def alpha_of(gamma):
    """Return alpha = (gamma - 1)/2."""
    if not gamma > 1:
        raise DomainError(f"gamma must exceed 1, got {gamma!r}")
    return 0.5 * (gamma - 1.0)


def _lambda_star_low(gamma):
    return 1.0 + 2.0 / (1.0 + math.sqrt(2.0 / (gamma - 1.0))) ** 2


def _lambda_star_high(gamma):
    return (3.0 * gamma - 1.0) / (2.0 + SQRT3 * (gamma - 1.0))


def lambda_star(gamma):
    """Upper end of the admissible range of the self-similar exponent."""
    alpha_of(gamma)
    if gamma < GAMMA_MONATOMIC:
        return _lambda_star_low(gamma)
    return _lambda_star_high(gamma)


def _delta_star_low(gamma):
    return 0.25 * (gamma + 1.0) - 0.5 * math.sqrt(2.0 * (gamma - 1.0))


def _delta_star_high(gamma):
    return (1.0 - (2.0 * SQRT3 - 3.0) * gamma) / (2.0 * (3.0 - SQRT3))


def delta_star(gamma):
    """Largest viscosity exponent allowed by condition (P2)."""
    if not 1.0 < gamma < GAMMA_UPPER:
        raise DomainError(f"gamma must lie in (1, 1+2/sqrt(3)), got {gamma!r}")
    if gamma < GAMMA_MONATOMIC:
        return _delta_star_low(gamma)
    return _delta_star_high(gamma)


def dissipation_constants(gamma, delta, lam):
    """Return ``(c_dis, delta_dis)`` of the self-similar viscous prefactor.

    The viscous term in self-similar variables carries the factor
    ``c_dis * exp(-delta_dis * tau)``.
    """
    alpha = alpha_of(gamma)
    if not lam > 1:
        raise DomainError(f"lambda must exceed 1, got {lam!r}")
    if not 0.0 <= delta <= 1.0:
        raise DomainError(f"delta must lie in [0, 1], got {delta!r}")
    log_c = ((delta - 1.0) * math.log(alpha) + (1.0 - delta + alpha) * math.log(lam)) / alpha
    # near gamma = 1 the prefactor exceeds the float range
    c_dis = math.exp(log_c) if log_c < 709.0 else math.inf
    delta_dis = (1.0 - delta) * (lam - 1.0) / alpha + lam - 2.0
    return c_dis, delta_dis


@dataclass(frozen=True)
class GasModel:
    """Scalar parameters of the viscous gas and the self-similar exponent.

    ``a1`` and ``a2`` multiply ``rho**delta`` in the two viscosity
    coefficients.  ``c_dis`` and ``delta_dis`` are derived on construction.
    """

    gamma: float
    lam: float
    delta: float = 0.0
    a1: float = 1.0
    a2: float = 0.0
    alpha: float = field(init=False)
    c_dis: float = field(init=False)
    delta_dis: float = field(init=False)

    def __post_init__(self):
        alpha = alpha_of(self.gamma)
        if not self.a1 > 0:
            raise DomainError(f"a1 must be positive, got {self.a1!r}")
        if 2.0 * self.a1 + 3.0 * self.a2 < 0:
            raise DomainError("2*a1 + 3*a2 must be non-negative")
        c_dis, delta_dis = dissipation_constants(self.gamma, self.delta, self.lam)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "c_dis", c_dis)
        object.__setattr__(self, "delta_dis", delta_dis)

    def with_lambda(self, lam):
        return GasModel(self.gamma, lam, self.delta, self.a1, self.a2)

    def as_dict(self):
        return {
            "gamma": self.gamma,
            "alpha": self.alpha,
            "delta": self.delta,
            "a1": self.a1,
            "a2": self.a2,
            "lambda": self.lam,
            "c_dis": self.c_dis,
            "delta_dis": self.delta_dis,
        }


@dataclass(frozen=True)
class RegimeReport:
    gamma: float
    lambda_star: float | None
    delta_star: float | None
    delta: float | None
    lam: float | None
    delta_dis: float | None
    condition_p1: bool
    condition_p2: bool
    exceptional_set_membership: str = "unknown"
    notes: tuple = ()

    def as_dict(self):
        return {
            "gamma": self.gamma,
            "delta": self.delta,
            "lambda": self.lam,
            "lambda_star": self.lambda_star,
            "delta_star": self.delta_star,
            "delta_dis": self.delta_dis,
            "condition_p1": self.condition_p1,
            "condition_p2": self.condition_p2,
            "exceptional_set_membership": self.exceptional_set_membership,
            "notes": list(self.notes),
        }


def check_regime(gamma, delta=None, lam=None):
    """Evaluate conditions (P1) and (P2) without raising.

    Out-of-range inputs produce a report with both conditions false and an
    explanatory note.  Whether ``gamma`` lies in the countable exceptional
    set cannot be decided, so it is always reported as ``"unknown"``.
    """
    notes = []
    lstar = dstar = ddis = None
    if not gamma > 1:
        notes.append("gamma must exceed 1")
        return RegimeReport(gamma, None, None, delta, lam, None, False, False,
                            notes=tuple(notes))
    lstar = lambda_star(gamma)
    in_range = gamma < GAMMA_UPPER
    if in_range:
        dstar = delta_star(gamma)
    else:
        notes.append("gamma >= 1+2/sqrt(3): outside the range of the theorem")
    if lam is None and in_range:
        lam = lstar
        notes.append("lambda not given: evaluated at lambda_star")
    if delta is not None and lam is not None:
        if lam > 1 and 0.0 <= delta <= 1.0:
            ddis = dissipation_constants(gamma, delta, lam)[1]
        else:
            notes.append("delta_dis undefined for these delta, lambda")
    p1 = bool(in_range and delta is not None and 0 < delta < 0.5
              and ddis is not None and ddis > 0)
    p2 = bool(in_range and delta is not None and 0 < delta < dstar)
    if in_range:
        notes.append("membership of gamma in the exceptional set is not decidable")
    return RegimeReport(gamma, lstar, dstar, delta, lam, ddis, p1, p2,
                        notes=tuple(notes))


def molecule_model_threshold(b):
    """Largest gamma with ``(1/2 + b)(gamma - 1) < delta_star(gamma)``.

    For inverse power force molecules the viscosity exponent is
    ``delta = (1/2 + b)(gamma - 1)`` with ``b = 2/kappa``; the bound comes
    from requiring ``delta < delta_star(gamma)``.
    """
    if not b >= 0:
        raise DomainError(f"b must be non-negative, got {b!r}")

    def g(gamma):
        return (0.5 + b) * (gamma - 1.0) - delta_star(gamma)

    lo, hi = 1.0 + 1e-14, GAMMA_MONATOMIC - 1e-14
    try:
        root, _ = bracketed_root(g, lo, hi, xtol=1e-15)
    except NoRootError as exc:
        raise NoRootError(f"no admissible gamma for b={b!r}") from exc
    return root
