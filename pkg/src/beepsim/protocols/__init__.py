from ..program import CongestProgram, NodeProgram
from .localbcast import (
    LocalBroadcastCongest,
    LocalBroadcastTask,
    format_task,
    gen_local_broadcast_task,
    local_broadcast_program,
    parse_task,
)
from .luby import LubyResult, luby_matching_oracle
from .matching import (
    CONFIRM,
    NOOP,
    PROPOSE,
    REPLY,
    MatchCodec,
    MatchingVerdict,
    MatchMessage,
    MaximalMatchingProgram,
    adjacent_join_violations,
    brute_force_maximal_check,
    brute_force_output_check,
    format_matching,
    iterations_used,
    matching_gamma,
    maximal_matching_program,
    output_edges,
    outputs_from_edges,
    parse_matching,
    verify_matching,
    x_collisions,
)

__all__ = [
    "CONFIRM", "CongestProgram", "LocalBroadcastCongest", "LocalBroadcastTask", "LubyResult",
    "MatchCodec", "MatchMessage", "MatchingVerdict", "MaximalMatchingProgram", "NOOP",
    "NodeProgram", "PROPOSE", "REPLY", "adjacent_join_violations", "brute_force_maximal_check",
    "brute_force_output_check", "format_matching", "format_task", "gen_local_broadcast_task",
    "iterations_used", "local_broadcast_program", "luby_matching_oracle", "matching_gamma",
    "maximal_matching_program", "output_edges", "outputs_from_edges", "parse_matching",
    "parse_task", "verify_matching", "x_collisions",
]
