"""Outpatient network simulation with real-time LOS prediction and diversion."""

from .config import FacilityConfig, ScenarioConfig, parse_config, parse_config_text
from .distributions import (
    ConfigError,
    Exponential,
    RngStream,
    ServiceDistribution,
    TruncatedNormal,
    Uniform,
    parse_distribution,
)
from .diversion import DiversionDecision, decide_none, decide_oracle, decide_predicted
from .facility import SUBSYSTEMS, FacilitySnapshot, Patient, SubsystemState
from .metrics import ScenarioReport, disparity, mape, run_replication, run_scenario, utilization
from .predictor import (
    LosPrediction,
    LosPredictor,
    ResidualTimeEstimator,
    predict_total_los,
    remaining_time_approx,
    remaining_time_exact,
)
from .simulation import Simulation

__version__ = "0.1.0"
