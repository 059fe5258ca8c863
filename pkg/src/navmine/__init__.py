"""Web session reconstruction and maximal navigation pattern mining."""
from .clf import CLFParseError, LogEntry, UserStream, group_by_user, parse_clf_line, read_clf
from .eval import AccuracyReport, evaluate, pattern_accuracy, session_accuracy
from .miner import Pattern, SequentialApriori, is_subsession, sequential_apriori, support
from .reconstruct import (
    NavigationReconstructor,
    SmartSRA,
    TO1Reconstructor,
    TO2Reconstructor,
    make_reconstructor,
)
from .runner import ExperimentConfig, ResultRow, run_pattern_sweep, run_session_sweep
from .session import Session, read_sessions, write_sessions
from .simulator import SimulationParams, simulate, simulate_agent
from .topology import (
    TopologyGenParams,
    WebTopology,
    generate_random_topology,
    load_topology,
    resolve_log_entries,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport", "CLFParseError", "ExperimentConfig", "LogEntry", "NavigationReconstructor",
    "Pattern", "ResultRow", "SequentialApriori", "Session", "SimulationParams", "SmartSRA",
    "TO1Reconstructor", "TO2Reconstructor", "TopologyGenParams", "UserStream", "WebTopology",
    "evaluate", "generate_random_topology", "group_by_user", "is_subsession", "load_topology",
    "make_reconstructor", "parse_clf_line", "pattern_accuracy", "read_clf", "read_sessions",
    "resolve_log_entries", "run_pattern_sweep", "run_session_sweep", "sequential_apriori", "session_accuracy",
    "simulate", "simulate_agent", "support", "write_sessions",
]
