"""Security-game toolkit: instance generation, Nash and Stackelberg solvers, random-game checks."""

from .games import BimatrixGame, MixedStrategy, SolveReport, exploitability
from .graph import DirectedGameGraph, GameConfig, InterdictionProtocol, TargetSpec
from .instances import SecurityGame, generate_gsg, generate_isg
from .optim import SolverError
from .regret import regret_matching
from .stackelberg import SSEResult, sse_bruteforce_oracle, sse_multiple_lp, sse_partition, sse_schedule_form, sse_simple_schedules
from .zero_sum import double_oracle_matrix, double_oracle_nfg, double_oracle_sfg, nash_lp, sparse_nash_milp

__version__ = "0.1.0"

__all__ = [
    "BimatrixGame",
    "DirectedGameGraph",
    "GameConfig",
    "InterdictionProtocol",
    "MixedStrategy",
    "SSEResult",
    "SecurityGame",
    "SolveReport",
    "SolverError",
    "TargetSpec",
    "double_oracle_matrix",
    "double_oracle_nfg",
    "double_oracle_sfg",
    "exploitability",
    "generate_gsg",
    "generate_isg",
    "nash_lp",
    "regret_matching",
    "sparse_nash_milp",
    "sse_bruteforce_oracle",
    "sse_multiple_lp",
    "sse_partition",
    "sse_schedule_form",
    "sse_simple_schedules",
]
