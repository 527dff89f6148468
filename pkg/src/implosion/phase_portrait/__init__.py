"""Emden phase plane: field, sonic points, integration, series and shooting."""

from .emden import EmdenPoint, SonicPointData, emden_jacobian, emden_rhs, sonic_point
from .integrate import PhaseTrajectory, StopSpec, integrate_desingularized
from .series import OriginSeries, SonicSeries, p0_expansion, sonic_series
from .shooting import (ShootResult, default_bracket, mismatch, ratio_index_for_regime,
                       ratio_to_lambda, shoot_lambda)

__all__ = [
    "EmdenPoint", "SonicPointData", "emden_jacobian", "emden_rhs", "sonic_point",
    "PhaseTrajectory", "StopSpec", "integrate_desingularized",
    "OriginSeries", "SonicSeries", "p0_expansion", "sonic_series",
    "ShootResult", "default_bracket", "mismatch", "ratio_index_for_regime",
    "ratio_to_lambda", "shoot_lambda",
]
