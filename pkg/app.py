# MIRTO robot lab: Gradio dashboard
# Protocol decoding, simulated behavior runs, trace analysis and the speed contract in one interface
import tempfile
import traceback
from pathlib import Path

import gradio as gr

from mirto.behaviors.analytics import trace_count_high, trace_lap_time, trace_sum_ir
from mirto.behaviors.trace import read_trace, write_trace
from mirto.cli import BEHAVIORS, RunSpec, parse_overrides, run_behavior
from mirto.config import configure_logging
from mirto.contracts import ContractViolation, SpeedAccumulator
from mirto.protocol import decode, encode
from mirto.sim.harness import SimulatedRobot
from mirto.sim.physics import SimConfig
from mirto.sim.world import load_world

configure_logging()

ROOT = Path(__file__).parent
WORLDS_DIR = ROOT / "worlds"
WORLD_CHOICES = sorted(p.stem for p in WORLDS_DIR.glob("*.txt"))


# ---------------------------------------------------------------------------
# Protocol
# ---------------------------------------------------------------------------
def decode_line(line: str):
    try:
        msg = decode(line.strip())
        again = encode(msg)
        verdict = "round-trips byte-identically" if again == line.strip() else f"re-encodes as `{again}`"
        return f"{type(msg).__name__}: {msg!r}", verdict
    except Exception as e:
        return f"Error: {type(e).__name__}: {e}", ""


# ---------------------------------------------------------------------------
# Simulator
# ---------------------------------------------------------------------------
def run_simulation(world_name: str, behavior: str, seed: float, duration: float, overrides: str):
    try:
        world_path = WORLDS_DIR / f"{world_name}.txt"
        run_spec = RunSpec(
            behavior=behavior,
            world_path=str(world_path),
            seed=int(seed),
            duration_s=float(duration),
            overrides=parse_overrides(overrides.split()),
        )
        with SimulatedRobot(load_world(world_path), SimConfig(rng_seed=run_spec.seed)) as robot:
            robot.session.warm_up()
            trace = run_behavior(robot.session, run_spec)

        out = Path(tempfile.mkdtemp(prefix="mirto-")) / f"{world_name}-{behavior}-{run_spec.seed}.csv"
        write_trace(out, trace)
        last = trace[-1] if trace else None
        summary = (
            f"**World:** `{world_name}` | **Behavior:** `{behavior}` | **Seed:** `{run_spec.seed}`\n\n"
            f"**Records:** {len(trace)}\n\n"
        )
        if last is not None and last.x is not None:
            summary += f"**Final pose:** x={last.x:.3f} m, y={last.y:.3f} m, theta={last.theta:.3f} rad\n"
        return summary, str(out)
    except ContractViolation as e:
        return f"Contract violation: {e}", None
    except Exception as e:
        return f"Error: {type(e).__name__}: {e}\n\n{traceback.format_exc()}", None


# ---------------------------------------------------------------------------
# Trace analysis
# ---------------------------------------------------------------------------
def analyze_trace(trace_file, threshold: float, lap_radius: float):
    if trace_file is None:
        return "Upload a trace CSV first."
    try:
        path = trace_file if isinstance(trace_file, str) else trace_file.name
        trace = read_trace(path)
        lap = trace_lap_time(trace, lap_radius)
        rows = [
            ("records", len(trace)),
            (f"sum of ir1 above {threshold:g}", trace_sum_ir(trace, threshold)),
            (f"ticks with |corr| above {threshold:g}", trace_count_high(trace, threshold)),
            (f"lap time (radius {lap_radius:g} m)", "no lap" if lap is None else f"{lap} ms"),
        ]
        table = "".join(f"| {name} | {value} |\n" for name, value in rows)
        return f"| Statistic | Value |\n|-----------|-------|\n{table}"
    except Exception as e:
        return f"Error: {type(e).__name__}: {e}"


# ---------------------------------------------------------------------------
# Speed contract
# ---------------------------------------------------------------------------
def speed_step(delta: str, accumulator: SpeedAccumulator | None):
    accumulator = accumulator or SpeedAccumulator()
    try:
        value = int(delta) if delta.strip().lstrip("+-").isdigit() else float(delta)
        accumulator.added_speed(value)
        return f"Accepted: speed is now {accumulator.current_speed()}", accumulator
    except ContractViolation as e:
        return f"Rejected: {e} (speed stays {accumulator.current_speed()})", accumulator
    except ValueError:
        return f"Error: {delta!r} is not a number", accumulator


def speed_reset():
    return "Speed reset to 0", SpeedAccumulator()


# ---------------------------------------------------------------------------
# Build the Gradio interface
# ---------------------------------------------------------------------------
PURPLE = gr.themes.Soft(primary_hue="purple")

with gr.Blocks(title="MIRTO Robot Lab", theme=PURPLE) as demo:
    gr.Markdown("# MIRTO Robot Lab")
    gr.Markdown(
        "Drive a simulated MIRTO robot over the ASIP protocol. "
        "Every tab works without hardware; the command line runs the same behaviors against a real robot."
    )

    # ── Protocol ────────────────────────────────────────────────────────────
    with gr.Tab("Protocol"):
        gr.Markdown("## ASIP line decoder")
        p_line = gr.Textbox(label="ASIP line", placeholder="e.g., @I,a,3,{0:320,1:340,2:329}", lines=1)
        p_btn = gr.Button("Decode", variant="primary")
        p_message = gr.Textbox(label="Message", interactive=False)
        p_roundtrip = gr.Textbox(label="Round trip", interactive=False)
        gr.Examples(
            examples=[["@I,a,3,{0:320,1:340,2:329}"], ["M,m,-115,115"], ["@R,i,3,{0:0,1:90,2:0}"], ["M,m,x"]],
            inputs=p_line,
        )
        p_btn.click(fn=decode_line, inputs=p_line, outputs=[p_message, p_roundtrip])

    # ── Simulator ───────────────────────────────────────────────────────────
    with gr.Tab("Simulator"):
        gr.Markdown("## Run a behavior in a simulated world")
        with gr.Row():
            s_world = gr.Dropdown(choices=WORLD_CHOICES, value="oval" if "oval" in WORLD_CHOICES else None, label="World")
            s_behavior = gr.Radio(choices=list(BEHAVIORS), value="bangbang", label="Behavior")
        with gr.Row():
            s_seed = gr.Number(label="Seed", value=7, precision=0)
            s_duration = gr.Number(label="Duration (s, virtual)", value=30)
            s_overrides = gr.Textbox(label="Overrides", placeholder="kp=0.05 ki=0.007 base-speed=150")
        s_run = gr.Button("Run", variant="primary")
        s_summary = gr.Markdown()
        s_trace = gr.File(label="Trace CSV")
        s_run.click(
            fn=run_simulation,
            inputs=[s_world, s_behavior, s_seed, s_duration, s_overrides],
            outputs=[s_summary, s_trace],
        )

    # ── Trace analysis ──────────────────────────────────────────────────────
    with gr.Tab("Trace Analysis"):
        gr.Markdown("## Statistics over a recorded trace")
        with gr.Row():
            a_file = gr.File(label="Trace CSV", file_types=[".csv"])
            with gr.Column():
                a_threshold = gr.Number(label="Threshold", value=45)
                a_radius = gr.Number(label="Lap radius (m)", value=0.06)
        a_btn = gr.Button("Analyze", variant="primary")
        a_report = gr.Markdown()
        a_btn.click(fn=analyze_trace, inputs=[a_file, a_threshold, a_radius], outputs=a_report)

    # ── Speed contract ──────────────────────────────────────────────────────
    with gr.Tab("Speed Contract"):
        gr.Markdown("## Guarded speed accumulator")
        gr.Markdown("Speed starts at 0 and must stay an integer within [-255, 255]; a rejected change blames the caller.")
        c_state = gr.State(value=None)
        with gr.Row():
            c_delta = gr.Textbox(label="Change", placeholder="e.g., 100", scale=4)
            c_add = gr.Button("Add", variant="primary", scale=1)
        c_result = gr.Textbox(label="Result", interactive=False)
        c_reset = gr.Button("Reset", variant="secondary")
        c_add.click(fn=speed_step, inputs=[c_delta, c_state], outputs=[c_result, c_state])
        c_reset.click(fn=speed_reset, outputs=[c_result, c_state])

    # ── Setup guide ─────────────────────────────────────────────────────────
    with gr.Tab("Setup Guide"):
        gr.Markdown((ROOT / "instructions.md").read_text(encoding="utf-8"))

if __name__ == "__main__":
    demo.launch()
