"""Radial field containers and run configuration."""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from ..errors import DomainError
from ..regimes import GasModel

FRAMES = ("eulerian", "selfsim")
BOUNDARIES = ("outflow", "reflect", "hold", "farfield")


@dataclass
class RadialState:
    """Fields on the uniform grid ``r_i = i h``, ``i = 0..n_cells``.

    ``a`` is the sound-speed variable ``c`` or ``Q``; ``b`` the radial
    velocity ``u`` or ``U``.  ``time`` is ``t`` or ``tau``.
    """

    frame: str
    time: float
    r: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise DomainError(f"unknown frame {self.frame!r}")
        self.r = np.asarray(self.r, dtype=float)
        self.a = np.array(self.a, dtype=float)
        self.b = np.array(self.b, dtype=float)
        if not (self.r.shape == self.a.shape == self.b.shape):
            raise DomainError("grid and fields differ in length")
        if self.r[0] != 0.0:
            raise DomainError("grid must start at r=0")
        d = np.diff(self.r)
        if np.max(np.abs(d - d[0])) > 1e-9 * d[0]:
            raise DomainError("grid must be uniform")

    @property
    def h(self):
        return self.r[1] - self.r[0]

    @property
    def n_cells(self):
        return len(self.r) - 1

    def copy(self):
        return replace(self, a=self.a.copy(), b=self.b.copy())


def uniform_grid(n_cells, r_max):
    if n_cells < 64:
        raise DomainError("n_cells must be at least 64")
    return np.linspace(0.0, r_max, n_cells + 1)


def state_from_profile(profile, n_cells, r_max, tau0=0.0):
    """Self-similar state equal to the profile on a uniform grid."""
    r = uniform_grid(n_cells, r_max)
    q, u, _, _ = profile.interpolate(r)
    u[0] = 0.0
    return RadialState("selfsim", tau0, r, q, u)


def state_from_initial_data(data):
    """Eulerian state at ``t = 0`` from built initial data."""
    return RadialState("eulerian", 0.0, data.r, data.c0, data.u0)


@dataclass
class SimConfig:
    """Everything a run needs besides the initial state.

    ``t_end`` is the final ``t`` or ``tau``.  ``max_density`` and
    ``min_dt`` are the blow-up sentinels.  ``boundary`` selects the
    condition at ``r_max``; ``dissipation`` is the Kreiss-Oliger
    coefficient.  ``profile``, ``cutoffs`` and ``frame_map`` (a
    :class:`SelfSimFrame`) feed the diagnostics.
    """

    model: GasModel
    frame: str = "selfsim"
    n_cells: int = 1024
    r_max: float = 20.0
    cfl: float = 0.5
    viscous: bool = True
    t_end: float = 1.0
    max_density: float = math.inf
    min_dt: float = 1e-12
    max_steps: int = 10_000_000
    boundary: str = "outflow"
    dissipation: float = 0.0
    output_every: int = 10
    k_surrogate: int = 1
    probes: tuple = ()
    profile: object = None
    cutoffs: object = None
    frame_map: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.frame not in FRAMES:
            raise DomainError(f"unknown frame {self.frame!r}")
        if not 0 < self.cfl <= 1:
            raise DomainError("cfl must lie in (0, 1]")
        if self.n_cells < 64:
            raise DomainError("n_cells must be at least 64")
        if self.boundary not in BOUNDARIES:
            raise DomainError(f"unknown boundary {self.boundary!r}")
        if self.k_surrogate not in (1, 2, 3):
            raise DomainError("k_surrogate must be 1, 2 or 3")
        if self.dissipation < 0:
            raise DomainError("dissipation must be non-negative")
        if self.output_every < 1:
            raise DomainError("output_every must be positive")
