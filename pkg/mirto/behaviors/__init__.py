from mirto.behaviors.explore import ExploreConfig, ExploreResult, pick_random_action, run_explore
from mirto.behaviors.linefollow import (
    SEARCH,
    BangBangConfig,
    PidState,
    SearchOutcome,
    bang_bang_decision,
    clamp_ir,
    pid_step,
    run_line_follower,
    search_maneuver,
)
from mirto.behaviors.monitor import MonitorEvent, log_ir_samples, run_monitor
from mirto.behaviors.trace import TraceRecord, read_trace, write_trace

__all__ = [
    "SEARCH",
    "BangBangConfig",
    "ExploreConfig",
    "ExploreResult",
    "MonitorEvent",
    "PidState",
    "SearchOutcome",
    "TraceRecord",
    "bang_bang_decision",
    "clamp_ir",
    "log_ir_samples",
    "pick_random_action",
    "pid_step",
    "read_trace",
    "run_explore",
    "run_line_follower",
    "run_monitor",
    "search_maneuver",
    "write_trace",
]
