"""Command line: run behaviors, check protocol conformance, analyze traces, serve the simulator.

Exit codes: 0 success, 1 runtime or I/O failure, 2 contract violation, 64 usage error.
"""
import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from mirto.behaviors.analytics import DEFAULT_LAP_RADIUS, trace_count_high, trace_lap_time, trace_sum_ir
from mirto.behaviors.explore import ExploreConfig, run_explore
from mirto.behaviors.linefollow import IR_THRESHOLD, BangBangConfig, PidState, run_line_follower
from mirto.behaviors.monitor import run_monitor
from mirto.behaviors.trace import TraceRecord, read_trace, write_trace
from mirto.client import ClientSession, open_session
from mirto.config import configure_logging, get_endpoint, get_read_timeout_ms
from mirto.contracts import ContractViolation
from mirto.errors import MirtoError, ProtocolError, UsageError
from mirto.protocol import decode, encode
from mirto.sim.emulator import run_emulator
from mirto.sim.harness import SimulatedRobot
from mirto.sim.physics import SimConfig
from mirto.sim.world import load_world
from mirto.transport import TransportEndpoint

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONTRACT = 2
EXIT_USAGE = 64

BEHAVIORS = ("explore", "monitor", "bangbang", "pid")
ANALYSES = ("sum-ir", "count-high", "lap-time")
DEFAULT_COUNT_HIGH_THRESHOLD = 100

# --set KEY=VALUE: flag name -> (PidState/BangBangConfig field, type)
OVERRIDES = {
    "kp": ("kp", float),
    "kd": ("kd", float),
    "ki": ("ki", float),
    "base-speed": ("base_speed", int),
    "threshold": ("threshold", int),
    "setpoint": ("setpoint", float),
}


@dataclass(frozen=True)
class RunSpec:
    behavior: str
    mode: str = "sim"
    world_path: str | None = None
    seed: int = 0
    duration_s: float = 30.0
    trace_path: str = "trace.csv"
    overrides: dict[str, float] = field(default_factory=dict)
    symmetric: bool = False
    endpoint: str | None = None

    def __post_init__(self):
        if self.behavior not in BEHAVIORS:
            raise UsageError(f"unknown behavior {self.behavior!r}")
        if self.mode not in ("sim", "serial"):
            raise UsageError(f"unknown mode {self.mode!r}")
        if self.mode == "sim" and not self.world_path:
            raise UsageError("sim mode needs --world")
        if not self.duration_s > 0:
            raise UsageError(f"duration must be positive, got {self.duration_s}")
        if not 0 <= self.seed < 2**64:
            raise UsageError(f"seed must be a non-negative 64-bit integer, got {self.seed}")


def parse_overrides(items: list[str] | None) -> dict[str, float]:
    overrides = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or key not in OVERRIDES:
            raise UsageError(f"bad override {item!r}; expected one of {', '.join(OVERRIDES)} as KEY=VALUE")
        name, kind = OVERRIDES[key]
        try:
            overrides[name] = kind(raw.strip())
        except ValueError:
            raise UsageError(f"override {key} needs a {kind.__name__}, got {raw!r}") from None
    return overrides


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------
def run_behavior(session: ClientSession, run_spec: RunSpec) -> list[TraceRecord]:
    overrides = dict(run_spec.overrides)
    if run_spec.behavior == "explore":
        return run_explore(session, ExploreConfig(rng_seed=run_spec.seed), run_spec.duration_s).trace
    if run_spec.behavior == "monitor":
        return run_monitor(session, duration_s=run_spec.duration_s).trace
    if run_spec.behavior == "bangbang":
        config = BangBangConfig(threshold=int(overrides.get("threshold", IR_THRESHOLD)))
        return run_line_follower(session, "bangbang", run_spec.duration_s, bang_bang=config).trace
    pid = PidState(**overrides)
    if run_spec.symmetric:
        pid = pid.symmetric()
    return run_line_follower(session, "pid", run_spec.duration_s, pid=pid).trace


def cmd_run(run_spec: RunSpec) -> int:
    if run_spec.mode == "sim":
        world = load_world(run_spec.world_path)
        with SimulatedRobot(world, SimConfig(rng_seed=run_spec.seed)) as robot:
            robot.session.warm_up()
            trace = run_behavior(robot.session, run_spec)
    else:
        address = get_endpoint(run_spec.endpoint)
        if not address:
            raise UsageError("serial mode needs --endpoint or MIRTO_ENDPOINT")
        endpoint = TransportEndpoint.parse(address, read_timeout_ms=get_read_timeout_ms())
        with open_session(endpoint) as session:
            session.warm_up()
            trace = run_behavior(session, run_spec)
    count = write_trace(run_spec.trace_path, trace)
    logger.info("wrote %d trace records to %s", count, run_spec.trace_path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# conformance
# ---------------------------------------------------------------------------
def check_corpus(lines: list[str]) -> list[str]:
    """Decode and re-encode every non-blank line; describe each one that does not survive."""
    problems = []
    for number, line in enumerate(lines, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        try:
            again = encode(decode(line))
        except ProtocolError as e:
            problems.append(f"line {number}: {line!r}: {e}")
            continue
        if again != line:
            problems.append(f"line {number}: {line!r} re-encodes as {again!r}")
    return problems


def cmd_conformance(corpus_path: str) -> int:
    text = Path(corpus_path).read_text(encoding="latin-1")
    lines = text.splitlines()
    if not any(line.strip() for line in lines):
        logger.warning("corpus %s is empty", corpus_path)
        print(f"{corpus_path}: empty corpus, nothing checked")
        return EXIT_OK
    problems = check_corpus(lines)
    for problem in problems:
        print(problem)
    checked = sum(1 for line in lines if line.strip())
    print(f"{corpus_path}: {checked - len(problems)}/{checked} lines round-trip")
    return EXIT_OK if not problems else EXIT_RUNTIME


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------
def analyze(trace_path: str, op: str, threshold: float | None = None, world_path: str | None = None) -> str:
    trace = read_trace(trace_path)
    if op == "sum-ir":
        threshold = IR_THRESHOLD if threshold is None else threshold
        return f"sum-ir (ir1 > {threshold:g}): {trace_sum_ir(trace, threshold)}"
    if op == "count-high":
        threshold = DEFAULT_COUNT_HIGH_THRESHOLD if threshold is None else threshold
        return f"count-high (|corr| > {threshold:g}): {trace_count_high(trace, threshold)}"
    if op == "lap-time":
        radius = 2 * load_world(world_path).track_width if world_path else DEFAULT_LAP_RADIUS
        lap = trace_lap_time(trace, radius)
        return f"lap-time (radius {radius:g} m): " + ("no lap" if lap is None else f"{lap} ms")
    raise UsageError(f"unknown analysis {op!r}")


def cmd_analyze(trace_path: str, op: str, threshold: float | None = None, world_path: str | None = None) -> int:
    print(analyze(trace_path, op, threshold, world_path))
    return EXIT_OK


# ---------------------------------------------------------------------------
# emulate
# ---------------------------------------------------------------------------
def cmd_emulate(world_path: str, endpoint: str | None, seed: int = 0) -> int:
    address = get_endpoint(endpoint)
    if not address:
        raise UsageError("emulate needs --endpoint or MIRTO_ENDPOINT")
    world = load_world(world_path)
    emulator = run_emulator(TransportEndpoint.parse(address), world, SimConfig(rng_seed=seed))
    print(f"served {emulator.step_index} steps ({emulator.now_ms()} ms virtual)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------
class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING ... (default MIRTO_LOG_LEVEL or INFO)")

    parser = _Parser(prog="mirto", description="MIRTO robot toolkit over the ASIP protocol")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = commands.add_parser("run", parents=[common], help="run a behavior and write a trace")
    run.add_argument("--mode", choices=("sim", "serial"), default="sim")
    run.add_argument("--world", dest="world_path")
    run.add_argument("--behavior", choices=BEHAVIORS, required=True)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--duration", dest="duration_s", type=float, default=30.0)
    run.add_argument("--trace", dest="trace_path", default="trace.csv")
    run.add_argument("--endpoint", default=None)
    run.add_argument("--set", dest="overrides", action="append", metavar="KEY=VALUE")
    run.add_argument("--symmetric", action="store_true", help="use the integral offset as PID setpoint")

    conformance = commands.add_parser("conformance", parents=[common], help="round-trip a corpus of ASIP lines")
    conformance.add_argument("corpus")

    analyze_cmd = commands.add_parser("analyze", parents=[common], help="statistics over a trace CSV")
    analyze_cmd.add_argument("trace")
    analyze_cmd.add_argument("--op", choices=ANALYSES, required=True)
    analyze_cmd.add_argument("--threshold", type=float, default=None)
    analyze_cmd.add_argument("--world", dest="world_path", default=None)

    emulate = commands.add_parser("emulate", parents=[common], help="serve the simulator on tcp or serial")
    emulate.add_argument("--world", dest="world_path", required=True)
    emulate.add_argument("--endpoint", default=None)
    emulate.add_argument("--seed", type=int, default=0)
    return parser


def dispatch(args: argparse.Namespace) -> int:
    match args.command:
        case "run":
            run_spec = RunSpec(
                behavior=args.behavior,
                mode=args.mode,
                world_path=args.world_path,
                seed=args.seed,
                duration_s=args.duration_s,
                trace_path=args.trace_path,
                overrides=parse_overrides(args.overrides),
                symmetric=args.symmetric,
                endpoint=args.endpoint,
            )
            return cmd_run(run_spec)
        case "conformance":
            return cmd_conformance(args.corpus)
        case "analyze":
            return cmd_analyze(args.trace, args.op, args.threshold, args.world_path)
        case "emulate":
            return cmd_emulate(args.world_path, args.endpoint, args.seed)
    raise UsageError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level)
        return dispatch(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ContractViolation as e:
        print(e, file=sys.stderr)
        return EXIT_CONTRACT
    except (MirtoError, OSError) as e:
        print(f"Error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
