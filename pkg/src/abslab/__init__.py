"""Deterministic anti-lock braking laboratory: a half-car plant with load
transfer, a joint state and tyre-parameter particle filter, a dual
exploration-exploitation torque controller, and extremum-seeking baselines.
"""

from .baselines import BisectionConfig, BisectionController, CspConfig, CspController
from .dcee import ActionDecision, DceeConfig, select_action
from .estimator import ParticleEnsemble, PriorSpec
from .scenario import (RunMetrics, RunResult, ScenarioConfig, build_config,
                       compare, load_config, run, sweep)
from .tyre import SURFACES, MagicParams, RoadSchedule
from .vehicle import DEFAULT_VEHICLE, VehicleParams

__version__ = "0.1.0"

__all__ = [
    "ActionDecision", "BisectionConfig", "BisectionController", "CspConfig",
    "CspController", "DceeConfig", "DEFAULT_VEHICLE", "MagicParams",
    "ParticleEnsemble", "PriorSpec", "RoadSchedule", "RunMetrics", "RunResult",
    "SURFACES", "ScenarioConfig", "VehicleParams", "build_config", "compare",
    "load_config", "run", "select_action", "sweep",
]
