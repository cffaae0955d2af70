"""Population-protocol ranking: a non-self-stabilizing protocol, its
self-stabilizing extension, and a seeded simulation harness."""

from .engine import Configuration, is_silent, run_until, step
from .harness import RunRecord, SweepRow, TimeSeriesRow, potential, run_experiment, sweep, write_csv
from .ranking import NonSSParams, NonSSProtocol, OracleLeaderElection, Ranked
from .rng import Rng, derive_replica_seed, draw_pair
from .scenarios import ScenarioSpec, build
from .stable import SSParams, StableProtocol, is_valid_ranking

__all__ = [
    "Configuration",
    "NonSSParams",
    "NonSSProtocol",
    "OracleLeaderElection",
    "Ranked",
    "Rng",
    "RunRecord",
    "SSParams",
    "ScenarioSpec",
    "StableProtocol",
    "SweepRow",
    "TimeSeriesRow",
    "build",
    "derive_replica_seed",
    "draw_pair",
    "is_silent",
    "is_valid_ranking",
    "potential",
    "run_experiment",
    "run_until",
    "step",
    "sweep",
    "write_csv",
]
