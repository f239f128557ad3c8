"""Multi-objective deep Q-learning: vector-reward environments, a
from-scratch numpy Q-network with one head group per objective,
scalarized action selection (linear and thresholded-lexicographic),
and Pareto-front quality metrics."""

__version__ = "0.1.0"

from .envs import EnvSpec, build_env, dst_layout
from .scalarize import ScalarizationSpec, linear_spec, tlo_spec, scalarize
from .metrics import dominates, nondominated_filter, hypervolume
from .agent import Agent, AgentConfig
from .trainer import TrialSpec, run_trial, run_sequential, run_parallel

__all__ = [
    "EnvSpec",
    "build_env",
    "dst_layout",
    "ScalarizationSpec",
    "linear_spec",
    "tlo_spec",
    "scalarize",
    "dominates",
    "nondominated_filter",
    "hypervolume",
    "Agent",
    "AgentConfig",
    "TrialSpec",
    "run_trial",
    "run_sequential",
    "run_parallel",
]
