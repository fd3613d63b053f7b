"""tschsim: deterministic TSCH mesh-network simulator with Orchestra and
6TiSCH-minimal scheduling over a lightweight RPL layer."""

from .energy import EnergyLedger
from .experiment import (
    RunReport,
    SteadyCriterion,
    compare,
    detect_steady,
    run_experiment,
)
from .kernel import Kernel, RngStreams, SimLogicError
from .mac import HoppingSequence, channel_for
from .medium import Position, RadioMedium
from .rpl import TrickleConfig, TrickleEvent, TrickleState, trickle_step
from .scenario import ConfigError, Scenario, paper_scenario
from .scheduling import MinimalConfig, OrchestraConfig, RuleKind, slot_of
from .sim import Simulation

__version__ = "0.1.0"

__all__ = [
    "EnergyLedger",
    "RunReport",
    "SteadyCriterion",
    "compare",
    "detect_steady",
    "run_experiment",
    "Kernel",
    "RngStreams",
    "SimLogicError",
    "HoppingSequence",
    "channel_for",
    "Position",
    "RadioMedium",
    "TrickleConfig",
    "TrickleEvent",
    "TrickleState",
    "trickle_step",
    "ConfigError",
    "Scenario",
    "paper_scenario",
    "MinimalConfig",
    "OrchestraConfig",
    "RuleKind",
    "slot_of",
    "Simulation",
    "__version__",
]
