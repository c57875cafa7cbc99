"""Command line front end: simulate, replay, stats, and serve.

Exit codes: 0 on success, 1 for bad usage, 2 for domain failures such as a
malformed trace, an incomplete trial, or a group too small to summarize.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
import threading
import time
from typing import IO, NoReturn, Optional, Sequence

from .harness import (
    TrialMetrics,
    TrialSpec,
    aggregate,
    generate_design,
    iqr_filter,
    run_trial,
)
from .kernel import (
    KernelConfig,
    config_from_json,
    config_to_json,
    event_to_json,
    initial_state,
    state_to_json,
    step,
)
from .scene import SceneFormatError, TrialSceneSpec, build_study_scene, scene_to_json
from .trace import (
    SyntheticUserParams,
    TraceFormatError,
    TraceHeader,
    frame_from_json,
    read_trace,
    synth_trace,
)

RESULT_FIELDS = (
    "participant",
    "switch",
    "orient",
    "depth",
    "rotation",
    "rep",
    "switch_in_ms",
    "positioning_ms",
    "orientation_ms",
    "switch_out_ms",
    "task_ms",
    "pos_err_m",
    "ori_err_deg",
    "success",
)


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; the contract here reserves 2 for
    # domain failures, so route usage problems to exit code 1.
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}")
    if value < 0.0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def _positive_float(text: str) -> float:
    value = _nonneg_float(text)
    if value == 0.0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="teleportkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run synthetic participants end to end")
    sim.add_argument("--participants", type=_positive_int, default=18)
    sim.add_argument("--seed", type=int, default=42)
    sim.add_argument("--out", help="write one JSON result row per trial")
    sim.add_argument("--csv", help="write the result table as CSV")
    sim.add_argument("--aim-noise", type=_nonneg_float, default=1.0,
                     help="aim error sd in degrees (default 1.0)")
    sim.add_argument("--gaze-noise", type=_nonneg_float, default=2.68,
                     help="per-sample gaze error sd in degrees (default 2.68)")
    sim.set_defaults(func=_cmd_simulate)

    rep = sub.add_parser("replay", help="replay a recorded trace and print metrics")
    rep.add_argument("--trace", required=True, help="JSONL trace file")
    rep.add_argument("--config", help="kernel config JSON overriding the header")
    rep.add_argument("--events", help="write timestamped kernel events as JSONL")
    rep.set_defaults(func=_cmd_replay)

    st = sub.add_parser("stats", help="summarize simulate results")
    st.add_argument("--results", required=True, help="JSONL rows from simulate --out")
    st.add_argument("--group-by", default="switch,orient",
                    help="comma-separated row fields (default switch,orient)")
    st.add_argument("--metric", default="task_ms")
    st.add_argument("--csv", help="write the summary table as CSV")
    st.set_defaults(func=_cmd_stats)

    srv = sub.add_parser("serve", help="interactive kernel session over TCP NDJSON")
    srv.add_argument("--port", type=int, default=7600,
                     help="TCP port, 0 picks a free one (default 7600)")
    srv.add_argument("--ws-port", type=int, default=None,
                     help="also accept WebSocket clients on this port")
    srv.add_argument("--heartbeat", type=_positive_float, default=5.0,
                     help="seconds of silence before the session resets (default 5)")
    srv.set_defaults(func=_cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TraceFormatError, SceneFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


# -- simulate ----------------------------------------------------------------

def _metric_row(spec: TrialSpec, metrics: TrialMetrics) -> dict:
    return {
        "participant": spec.participant,
        "switch": spec.switch.value,
        "orient": spec.orient.value,
        "depth": spec.depth,
        "rotation": spec.rotation_deg,
        "rep": spec.rep,
        "switch_in_ms": metrics.switch_in_ms,
        "positioning_ms": metrics.positioning_ms,
        "orientation_ms": metrics.orientation_ms,
        "switch_out_ms": metrics.switch_out_ms,
        "task_ms": metrics.task_ms,
        "pos_err_m": metrics.pos_err_m,
        "ori_err_deg": metrics.ori_err_deg,
        "success": metrics.success,
    }


def _csv_cell(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _write_csv(rows: list[dict], fh: IO[str]) -> None:
    fh.write(",".join(RESULT_FIELDS) + "\n")
    for row in rows:
        fh.write(",".join(_csv_cell(row[f]) for f in RESULT_FIELDS) + "\n")


def trial_seed(base: int, participant: int, index: int) -> int:
    """Stable per-trial seed: distinct trials never collide within a run."""
    return base * 100003 + participant * 1009 + index


def _cmd_simulate(args: argparse.Namespace) -> int:
    user = SyntheticUserParams(
        aim_noise_deg=args.aim_noise, gaze_noise_deg=args.gaze_noise
    )
    rows: list[dict] = []
    for participant in range(args.participants):
        for index, spec in enumerate(generate_design(participant)):
            trace = synth_trace(spec, user, trial_seed(args.seed, participant, index))
            _, metrics = run_trial(spec, trace)
            if not metrics.complete:
                raise ValueError(
                    f"trial {index} of participant {participant} did not complete"
                )
            rows.append(_metric_row(spec, metrics))

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row) + "\n")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            _write_csv(rows, fh)

    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["switch"], row["orient"]), []).append(row)
    print(f"{'switch':<8} {'orient':<13} {'n':>5} {'task_ms':>10} "
          f"{'pos_err_m':>10} {'ori_err_deg':>12} {'success':>8}")
    for key in sorted(groups):
        rs = groups[key]
        n = len(rs)
        task = sum(r["task_ms"] for r in rs) / n
        pos = sum(r["pos_err_m"] for r in rs) / n
        ori = sum(r["ori_err_deg"] for r in rs) / n
        ok = sum(1 for r in rs if r["success"]) / n
        print(f"{key[0]:<8} {key[1]:<13} {n:>5} {task:>10.1f} "
              f"{pos:>10.5f} {ori:>12.4f} {ok:>8.3f}")
    return 0


# -- replay ------------------------------------------------------------------

def _cmd_replay(args: argparse.Namespace) -> int:
    trace = read_trace(args.trace)
    config = trace.header.config
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = config_from_json(json.load(fh))
    spec = TrialSpec(
        participant=0,
        switch=config.switch_method,
        orient=config.orientation_method,
        depth=trace.header.depth,
        rotation_deg=trace.header.rotation_deg,
        rep=0,
    )
    log, metrics = run_trial(spec, trace, config)
    if args.events:
        with open(args.events, "w", encoding="utf-8") as fh:
            for t, event in log.events:
                fh.write(json.dumps({"t": t, **event_to_json(event)}) + "\n")
    print(json.dumps({
        "complete": metrics.complete,
        "switch_in_ms": metrics.switch_in_ms,
        "positioning_ms": metrics.positioning_ms,
        "orientation_ms": metrics.orientation_ms,
        "switch_out_ms": metrics.switch_out_ms,
        "task_ms": metrics.task_ms,
        "pos_err_m": metrics.pos_err_m,
        "ori_err_deg": metrics.ori_err_deg,
        "success": metrics.success,
    }, indent=2))
    return 0 if metrics.complete else 2


# -- stats -------------------------------------------------------------------

def _cmd_stats(args: argparse.Namespace) -> int:
    rows: list[dict] = []
    with open(args.results, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{args.results}:{lineno}: invalid JSON: {exc.msg}")
            rows.append(row)
    if not rows:
        raise ValueError(f"{args.results} has no rows")

    fields = [f.strip() for f in args.group_by.split(",") if f.strip()]
    if not fields:
        raise ValueError("--group-by names no fields")
    for f in fields + [args.metric]:
        if f not in RESULT_FIELDS:
            raise ValueError(f"unknown field {f!r}, expected one of {RESULT_FIELDS}")

    values = [row[args.metric] for row in rows]
    if any(v is None for v in values):
        raise ValueError(f"metric {args.metric} has missing values")
    keep = iqr_filter(values)
    kept = [row for row, ok in zip(rows, keep) if ok]
    dropped = len(rows) - len(kept)

    groups: dict[tuple, list[float]] = {}
    for row in kept:
        key = tuple(row[f] for f in fields)
        groups.setdefault(key, []).append(row[args.metric])
    summaries = aggregate(groups)

    print(f"outlier filter: dropped {dropped} of {len(rows)} rows "
          f"({100.0 * dropped / len(rows):.1f}%)")
    label = ",".join(fields)
    print(f"{label:<24} {'n':>5} {'mean':>12} {'sd':>12} {'ci95':>12}")
    for s in summaries:
        name = ",".join(str(k) for k in s.key)
        print(f"{name:<24} {s.n:>5} {s.mean:>12.3f} {s.sd:>12.3f} "
              f"{s.ci_half_width:>12.3f}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(f"{label},n,mean,sd,ci95\n")
            for s in summaries:
                name = ",".join(str(k) for k in s.key)
                fh.write(f"{name},{s.n},{s.mean},{s.sd},{s.ci_half_width}\n")
    return 0


# -- serve -------------------------------------------------------------------

class _Session:
    """One live kernel session shared by at most one client at a time."""

    def __init__(self, heartbeat_s: float):
        self.heartbeat_s = heartbeat_s
        self.slot = threading.Lock()
        self.config = KernelConfig()
        self.scene = build_study_scene(TrialSceneSpec(depth=3.0, rotation_deg=180.0))
        self.state = initial_state(self.scene)
        self.last_seen = time.monotonic()

    def begin(self) -> None:
        self.last_seen = time.monotonic()
        self._reset_state()

    def _reset_state(self) -> None:
        self.state = initial_state(self.scene)

    def _snapshot(self, events: list[dict], full: bool = False) -> dict:
        reply = {"kind": "state", "state": state_to_json(self.state), "events": events}
        if full:
            reply["config"] = config_to_json(self.config)
            reply["scene"] = scene_to_json(self.scene)
        return reply

    def handle_line(self, line: str) -> list[dict]:
        replies: list[dict] = []
        now = time.monotonic()
        if now - self.last_seen > self.heartbeat_s:
            self._reset_state()
            replies.append({"kind": "events", "events": [{"kind": "session_reset"}]})
        self.last_seen = now

        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            replies.append({"kind": "error", "msg": f"invalid JSON: {exc.msg}"})
            return replies
        if not isinstance(data, dict) or "kind" not in data:
            replies.append({"kind": "error", "msg": "expected an object with a kind"})
            return replies

        try:
            kind = data["kind"]
            if kind == "config":
                unknown = set(data) - {"kind", "config", "study"}
                if unknown:
                    raise ValueError(f"unknown field {sorted(unknown)[0]!r}")
                if "config" in data:
                    self.config = config_from_json(data["config"])
                study = data.get("study", {"depth": 3.0, "rotation_deg": 180.0})
                if (
                    not isinstance(study, dict)
                    or set(study) != {"depth", "rotation_deg"}
                ):
                    raise ValueError("study must be {depth, rotation_deg}")
                self.scene = build_study_scene(
                    TrialSceneSpec(
                        depth=float(study["depth"]),
                        rotation_deg=float(study["rotation_deg"]),
                    )
                )
                self._reset_state()
                replies.append(self._snapshot([], full=True))
            elif kind == "frame":
                frame = frame_from_json(
                    {k: v for k, v in data.items() if k != "kind"}
                )
                self.state, events = step(self.state, frame, self.config, self.scene)
                replies.append(self._snapshot([event_to_json(e) for e in events]))
            elif kind == "reset":
                self._reset_state()
                replies.append(self._snapshot([]))
            else:
                replies.append({"kind": "error", "msg": f"unknown kind {kind!r}"})
        except (TraceFormatError, SceneFormatError, ValueError) as exc:
            replies.append({"kind": "error", "msg": str(exc)})
        return replies


def _serve_tcp_client(conn: socket.socket, session: _Session) -> None:
    reader = conn.makefile("r", encoding="utf-8", newline="\n")
    writer = conn.makefile("w", encoding="utf-8", newline="\n")

    def send(obj: dict) -> None:
        writer.write(json.dumps(obj) + "\n")
        writer.flush()

    if not session.slot.acquire(blocking=False):
        try:
            send({"kind": "error", "msg": "busy: another client holds the session"})
        except OSError:
            pass
        conn.close()
        return
    try:
        session.begin()
        for line in reader:
            if not line.strip():
                continue
            for reply in session.handle_line(line):
                send(reply)
    except OSError:
        pass
    finally:
        session.slot.release()
        try:
            conn.close()
        except OSError:
            pass


def _serve_ws_client(conn, session: _Session) -> None:
    if not session.slot.acquire(blocking=False):
        conn.send(json.dumps(
            {"kind": "error", "msg": "busy: another client holds the session"}
        ))
        conn.close()
        return
    try:
        session.begin()
        for message in conn:
            if isinstance(message, bytes):
                message = message.decode("utf-8")
            for reply in session.handle_line(message):
                conn.send(json.dumps(reply))
    except Exception:
        pass
    finally:
        session.slot.release()


def _cmd_serve(args: argparse.Namespace) -> int:
    session = _Session(heartbeat_s=args.heartbeat)
    server = socket.create_server(("127.0.0.1", args.port))
    port = server.getsockname()[1]

    ws_port = None
    if args.ws_port is not None:
        from websockets.sync.server import serve as ws_serve

        ws_server = ws_serve(
            lambda conn: _serve_ws_client(conn, session), "127.0.0.1", args.ws_port
        )
        ws_port = args.ws_port
        threading.Thread(target=ws_server.serve_forever, daemon=True).start()

    print(json.dumps({"kind": "ready", "port": port, "ws_port": ws_port}), flush=True)
    try:
        while True:
            conn, _ = server.accept()
            threading.Thread(
                target=_serve_tcp_client, args=(conn, session), daemon=True
            ).start()
    except KeyboardInterrupt:
        return 0
    finally:
        server.close()


if __name__ == "__main__":
    sys.exit(main())
