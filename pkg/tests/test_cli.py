"""Command line behavior: exit codes, file outputs, and the serve protocol."""

import json
import socket
import subprocess
import sys
import time

import pytest

from teleportkit.cli import RESULT_FIELDS, main, trial_seed
from teleportkit.geom import UNIT_X, UnitQuat, Vec3
from teleportkit.harness import TrialSpec
from teleportkit.kernel import InputFrame, OrientationMethod, Pose, SwitchMethod
from teleportkit.trace import SyntheticUserParams, Trace, frame_to_json, synth_trace, write_trace

NOISELESS = SyntheticUserParams(
    reaction_sd_ms=0.0, aim_noise_deg=0.0, gaze_noise_deg=0.0, hold_sd_ms=0.0
)


def roll_trace(seed=3):
    spec = TrialSpec(
        participant=0,
        switch=SwitchMethod.BUTTON,
        orient=OrientationMethod.ROLL,
        depth=3.0,
        rotation_deg=45.0,
        rep=0,
    )
    return synth_trace(spec, NOISELESS, seed)


class TestUsageErrors:
    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["teleport"],
            ["simulate", "--participants", "0"],
            ["simulate", "--aim-noise", "-1"],
            ["replay"],
            ["serve", "--heartbeat", "0"],
        ],
    )
    def test_exit_code_one(self, argv):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 1


@pytest.fixture(scope="module")
def sim_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    jsonl = str(out / "results.jsonl")
    csv = str(out / "results.csv")
    code = main(
        ["simulate", "--participants", "1", "--seed", "7", "--out", jsonl, "--csv", csv]
    )
    assert code == 0
    return jsonl, csv


class TestSimulate:
    def test_row_count_and_fields(self, sim_run):
        jsonl, _ = sim_run
        rows = [json.loads(line) for line in open(jsonl, encoding="utf-8")]
        assert len(rows) == 120
        for row in rows:
            assert tuple(row) == RESULT_FIELDS
            assert isinstance(row["success"], bool)

    def test_csv_header_and_booleans(self, sim_run):
        _, csv = sim_run
        lines = open(csv, encoding="utf-8").read().splitlines()
        assert lines[0] == ",".join(RESULT_FIELDS)
        assert len(lines) == 121
        assert lines[1].endswith(("true", "false"))

    def test_summary_table(self, sim_run, capsys):
        jsonl, _ = sim_run
        code = main(["simulate", "--participants", "1", "--seed", "7"])
        assert code == 0
        out = capsys.readouterr().out
        table = [line for line in out.splitlines() if line.strip()]
        assert table[0].startswith("switch")
        assert len(table) == 7  # header plus one row per condition pair
        rerun = [json.loads(line) for line in open(jsonl, encoding="utf-8")]
        assert len(rerun) == 120  # rerun did not disturb the fixture output

    def test_trial_seed_is_injective_within_run(self):
        seen = set()
        for p in range(18):
            for i in range(120):
                seen.add(trial_seed(42, p, i))
        assert len(seen) == 18 * 120


class TestReplay:
    def test_round_trip(self, tmp_path, capsys):
        trace_path = str(tmp_path / "trial.jsonl")
        events_path = str(tmp_path / "events.jsonl")
        write_trace(roll_trace(), trace_path)
        code = main(["replay", "--trace", trace_path, "--events", events_path])
        assert code == 0
        metrics = json.loads(capsys.readouterr().out)
        assert metrics["complete"] is True
        assert metrics["success"] is True
        kinds = [json.loads(line)["kind"] for line in open(events_path, encoding="utf-8")]
        assert kinds[0] == "mode_switched"
        assert "teleport_committed" in kinds
        assert "hold_started" in kinds

    def test_config_override_changes_outcome(self, tmp_path, capsys):
        # forcing flip switching onto a button-press trace stalls the trial
        trace_path = str(tmp_path / "trial.jsonl")
        config_path = str(tmp_path / "config.json")
        write_trace(roll_trace(), trace_path)
        with open(config_path, "w", encoding="utf-8") as fh:
            json.dump({"switch_method": "flip"}, fh)
        code = main(["replay", "--trace", trace_path, "--config", config_path])
        assert code == 2
        assert json.loads(capsys.readouterr().out)["complete"] is False

    def test_missing_file(self, tmp_path, capsys):
        code = main(["replay", "--trace", str(tmp_path / "nope.jsonl")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_malformed_trace(self, tmp_path, capsys):
        path = tmp_path / "garbage.jsonl"
        path.write_text("hello\n", encoding="utf-8")
        code = main(["replay", "--trace", str(path)])
        assert code == 2
        assert "line 1" in capsys.readouterr().err

    def test_incomplete_trace(self, tmp_path, capsys):
        trace = roll_trace()
        press_at = next(i for i, f in enumerate(trace.frames) if f.front_button)
        cut = Trace(trace.header, trace.frames[: press_at + 2])
        trace_path = str(tmp_path / "cut.jsonl")
        write_trace(cut, trace_path)
        code = main(["replay", "--trace", trace_path])
        assert code == 2
        assert json.loads(capsys.readouterr().out)["complete"] is False


class TestStats:
    def test_summary(self, sim_run, tmp_path, capsys):
        jsonl, _ = sim_run
        csv = str(tmp_path / "summary.csv")
        code = main(["stats", "--results", jsonl, "--csv", csv])
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("outlier filter: dropped")
        body = [line for line in out.splitlines()[2:] if line.strip()]
        assert len(body) == 6
        lines = open(csv, encoding="utf-8").read().splitlines()
        assert lines[0] == "switch,orient,n,mean,sd,ci95"
        assert len(lines) == 7

    def test_group_by_single_field(self, sim_run, capsys):
        jsonl, _ = sim_run
        code = main(["stats", "--results", jsonl, "--group-by", "switch", "--metric", "pos_err_m"])
        assert code == 0
        body = [line for line in capsys.readouterr().out.splitlines()[2:] if line.strip()]
        assert len(body) == 2

    def test_unknown_field(self, sim_run, capsys):
        jsonl, _ = sim_run
        assert main(["stats", "--results", jsonl, "--metric", "speed"]) == 2
        assert "unknown field" in capsys.readouterr().err

    def test_bad_line_is_numbered(self, tmp_path, capsys):
        path = tmp_path / "rows.jsonl"
        path.write_text('{"task_ms": 1}\nnot json\n', encoding="utf-8")
        assert main(["stats", "--results", str(path)]) == 2
        assert ":2:" in capsys.readouterr().err

    def test_singleton_group(self, tmp_path, capsys):
        rows = [
            {"switch": "button", "orient": "roll", "task_ms": 100.0 + i} for i in range(3)
        ] + [{"switch": "flip", "orient": "roll", "task_ms": 103.0}]
        path = tmp_path / "rows.jsonl"
        path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
        assert main(["stats", "--results", str(path)]) == 2
        assert "fewer than 2" in capsys.readouterr().err

    def test_empty_results(self, tmp_path):
        path = tmp_path / "rows.jsonl"
        path.write_text("", encoding="utf-8")
        assert main(["stats", "--results", str(path)]) == 2


# -- serve --------------------------------------------------------------------

TIP_DOWN = UnitQuat.from_axis_angle(UNIT_X, 15.0)


def frame_msg(t, *, front=False, rear=False):
    frame = InputFrame(
        t=t,
        stylus=Pose(Vec3(0.0, 1.2, 0.0), TIP_DOWN),
        head=Pose(Vec3(0.0, 1.6, 0.0), UnitQuat.identity()),
        front_button=front,
        rear_button=rear,
    )
    return {"kind": "frame", **frame_to_json(frame)}


class Client:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=10)
        self.reader = self.sock.makefile("r", encoding="utf-8")
        self.writer = self.sock.makefile("w", encoding="utf-8")

    def send(self, obj):
        self.writer.write(json.dumps(obj) + "\n")
        self.writer.flush()

    def recv(self):
        line = self.reader.readline()
        assert line, "server closed the connection"
        return json.loads(line)

    def ask(self, obj):
        self.send(obj)
        return self.recv()

    def close(self):
        # closing the wrappers before the socket lets the server see EOF
        self.reader.close()
        self.writer.close()
        self.sock.close()


@pytest.fixture
def server(request):
    extra = getattr(request, "param", [])
    proc = subprocess.Popen(
        [sys.executable, "-m", "teleportkit.cli", "serve", "--port", "0", *extra],
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
    )
    try:
        ready = json.loads(proc.stdout.readline())
        assert ready["kind"] == "ready"
        yield ready
    finally:
        proc.terminate()
        proc.wait(timeout=10)


class TestServe:
    def test_config_reply_carries_scene(self, server):
        client = Client(server["port"])
        try:
            reply = client.ask({"kind": "config", "study": {"depth": 6.0, "rotation_deg": 90.0}})
            assert reply["kind"] == "state"
            assert reply["state"]["mode"] == "draw"
            assert reply["config"]["switch_method"] == "button"
            assert len(reply["scene"]["objects"]) == 7
        finally:
            client.close()

    def test_frame_produces_events(self, server):
        client = Client(server["port"])
        try:
            reply = client.ask(frame_msg(0.0, rear=True))
            kinds = [e["kind"] for e in reply["events"]]
            assert kinds == ["mode_switched", "cursor_updated"]
            assert reply["state"]["mode"] == "teleport"
        finally:
            client.close()

    def test_malformed_line_keeps_session(self, server):
        client = Client(server["port"])
        try:
            client.writer.write("{oops\n")
            client.writer.flush()
            assert client.recv()["kind"] == "error"
            reply = client.ask(frame_msg(0.0))
            assert reply["kind"] == "state"
        finally:
            client.close()

    def test_domain_error_keeps_session(self, server):
        client = Client(server["port"])
        try:
            reply = client.ask({"kind": "config", "study": {"depth": 3.0}})
            assert reply["kind"] == "error"
            assert client.ask(frame_msg(0.0))["kind"] == "state"
        finally:
            client.close()

    def test_unknown_kind(self, server):
        client = Client(server["port"])
        try:
            assert client.ask({"kind": "warp"})["kind"] == "error"
        finally:
            client.close()

    def test_reset_returns_to_draw(self, server):
        client = Client(server["port"])
        try:
            client.ask(frame_msg(0.0, rear=True))
            reply = client.ask({"kind": "reset"})
            assert reply["state"]["mode"] == "draw"
            # time restarts after a reset; t=0 must be accepted again
            assert client.ask(frame_msg(0.0))["kind"] == "state"
        finally:
            client.close()

    def test_second_client_refused_then_admitted(self, server):
        first = Client(server["port"])
        try:
            first.ask(frame_msg(0.0))
            second = Client(server["port"])
            try:
                assert "busy" in second.recv()["msg"]
            finally:
                second.close()
        finally:
            first.close()
        deadline = time.monotonic() + 5.0
        while True:
            third = Client(server["port"])
            try:
                reply = third.ask(frame_msg(0.0))
            except AssertionError:
                reply = None
            third.close()
            if reply is not None and reply["kind"] == "state":
                break
            assert time.monotonic() < deadline, "slot never freed"
            time.sleep(0.05)

    @pytest.mark.parametrize("server", [["--heartbeat", "0.3"]], indirect=True)
    def test_heartbeat_gap_resets_session(self, server):
        client = Client(server["port"])
        try:
            client.ask(frame_msg(0.0, rear=True))
            time.sleep(0.6)
            client.send(frame_msg(10.0))
            first = client.recv()
            assert first == {"kind": "events", "events": [{"kind": "session_reset"}]}
            second = client.recv()
            assert second["kind"] == "state"
            assert second["state"]["mode"] == "draw"
        finally:
            client.close()

    def test_ws_bridge(self):
        # pick a free port for the websocket listener
        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        ws_port = probe.getsockname()[1]
        probe.close()
        proc = subprocess.Popen(
            [
                sys.executable,
                "-m",
                "teleportkit.cli",
                "serve",
                "--port",
                "0",
                "--ws-port",
                str(ws_port),
            ],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        try:
            ready = json.loads(proc.stdout.readline())
            assert ready["ws_port"] == ws_port
            from websockets.sync.client import connect

            deadline = time.monotonic() + 5.0
            while True:
                try:
                    ws = connect(f"ws://127.0.0.1:{ws_port}")
                    break
                except OSError:
                    if time.monotonic() > deadline:
                        raise
                    time.sleep(0.05)
            with ws:
                ws.send(json.dumps({"kind": "config"}))
                reply = json.loads(ws.recv(timeout=10))
                assert reply["kind"] == "state"
                assert "scene" in reply
                ws.send(json.dumps(frame_msg(0.0, rear=True)))
                reply = json.loads(ws.recv(timeout=10))
                assert reply["state"]["mode"] == "teleport"
        finally:
            proc.terminate()
            proc.wait(timeout=10)
