"""Command-line interface: exit codes, traces, replay, check, serve."""

import json
import os
import subprocess
import sys

import pytest

from lsd.cli import (
    EXIT_BUDGET,
    EXIT_NO_SOLUTION,
    EXIT_OK,
    EXIT_USAGE,
    build_parser,
    corpus_sources,
    main,
    _Session,
)

MATRIX_TEXT = "3 2 4\n2 2 2 2\n1 2 1 2\n1 1\n1 0\n0 1\n"
GOOD_IMPL = "3 2 4\n1 2 1 2\n2 2 1 2\n1 2 2 2\n1,2 2 1 2\n1 2 1,2 2\n"
BAD_IMPL = "3 2 4\n1 2 1 2\n2 2 1 2\n1 2 1 2\n1,2 2 1 2\n1 2 1,2 2\n"


def test_corpus_sources_nonempty():
    sources = corpus_sources()
    assert len(sources) == 4
    assert any("design Key" in s for s in sources)


def test_run_key4_prints_solution(capsys):
    assert main(["run", "--corpus", "--query", "key4"]) == EXIT_OK
    sol = json.loads(capsys.readouterr().out)
    assert sol["bindings"]["bits"][0] == "•"
    assert len(sol["solids"]) == 1


def test_run_failure_and_budget_exit_codes(capsys):
    assert main(["run", "--corpus", "--query", "member_absent"]) == \
        EXIT_NO_SOLUTION
    assert "no solution" in capsys.readouterr().err
    assert main(["run", "--corpus", "--query", "key4", "--budget", "5"]) == \
        EXIT_BUDGET


def test_usage_errors(capsys):
    assert main(["run", "--corpus", "--query", "nope"]) == EXIT_USAGE
    assert main(["run", "/no/such/file.lsd", "--query", "q"]) == EXIT_USAGE
    assert main(["bogus-subcommand"]) == EXIT_USAGE
    capsys.readouterr()


def test_enumerate_streams_json_lines(capsys):
    rc = main(["enumerate", "--corpus", "--query", "key4"])
    assert rc == EXIT_OK
    lines = [ln for ln in capsys.readouterr().out.splitlines() if ln]
    assert len(lines) == 1
    assert json.loads(lines[0])["bindings"]["bits"][0] == "•"
    assert main(["enumerate", "--corpus", "--query", "member_absent"]) == \
        EXIT_NO_SOLUTION


def test_trace_write_is_deterministic_and_replayable(tmp_path, capsys):
    t1, t2 = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
    assert main(["run", "--corpus", "--query", "key4", "--trace", t1]) == EXIT_OK
    assert main(["run", "--corpus", "--query", "key4", "--trace", t2]) == EXIT_OK
    with open(t1) as f1, open(t2) as f2:
        assert f1.read() == f2.read()
    capsys.readouterr()
    rc = main(["replay", t1, "--corpus", "--query", "key4"])
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "live run matches" in out


def test_replay_dump_states_one_model_per_event(tmp_path, capsys):
    trace = str(tmp_path / "t.jsonl")
    dump = str(tmp_path / "states.jsonl")
    main(["run", "--corpus", "--query", "key4", "--trace", trace])
    capsys.readouterr()
    assert main(["replay", trace, "--dump-states", dump]) == EXIT_OK
    capsys.readouterr()
    with open(trace) as fh:
        n_events = sum(1 for _ in fh)
    with open(dump) as fh:
        models = [json.loads(ln) for ln in fh]
    assert len(models) == n_events  # initial snapshot state + one per delta
    assert all("cells" in m for m in models)


def test_replay_missing_trace_is_usage_error(capsys):
    assert main(["replay", "/no/such/trace.jsonl"]) == EXIT_USAGE
    capsys.readouterr()


def test_check_pass_fail_and_shape(tmp_path, capsys):
    mx = tmp_path / "matrix.txt"
    mx.write_text(MATRIX_TEXT)
    good = tmp_path / "good.txt"
    good.write_text(GOOD_IMPL)
    bad = tmp_path / "bad.txt"
    bad.write_text(BAD_IMPL)
    short = tmp_path / "short.txt"
    short.write_text("2 2 4\n1 2 1 2\n2 2 1 2\n1,2 2 1 2\n1 2 1,2 2\n")
    assert main(["check", str(mx), str(good)]) == EXIT_OK
    assert "passed" in capsys.readouterr().out
    assert main(["check", str(mx), str(bad)]) == EXIT_NO_SOLUTION
    assert "failed" in capsys.readouterr().out
    assert main(["check", str(mx), str(short)]) == EXIT_USAGE
    capsys.readouterr()


def test_run_renders_bond_frame_directories(tmp_path, capsys):
    frames = str(tmp_path / "frames")
    rc = main(["run", "--corpus", "--query", "key4", "--frames", frames,
               "--samples", "4"])
    capsys.readouterr()
    assert rc == EXIT_OK
    dirs = sorted(os.listdir(frames))
    assert dirs == ["bond-%03d" % i for i in range(9)]
    assert sorted(os.listdir(os.path.join(frames, "bond-000"))) == \
        ["frame-%04d.svg" % i for i in range(4)]


# ---------------------------------------------------------------------------
# stepper sessions


def serve_args(query="key4"):
    parser = build_parser()
    return parser.parse_args(["serve", "--corpus", "--query", query])


def test_session_steps_to_success_and_resets():
    session = _Session(serve_args())
    out = session.handle({"cmd": "state"})
    assert out["status"] == "running" and "model" in out
    seen = 0
    while True:
        out = session.handle({"cmd": "step"})
        seen += len(out["events"])
        if out["status"] != "running":
            break
    assert out["status"] == "success"
    final = session.handle({"cmd": "state"})
    reset = session.handle({"cmd": "reset"})
    assert reset["status"] == "running"
    again = session.handle({"cmd": "run"})
    assert again["status"] == "success"
    assert session.handle({"cmd": "state"})["hash"] == final["hash"]


def test_session_backtrack_enumerates_and_errors():
    session = _Session(serve_args())
    assert session.handle({"cmd": "backtrack"})["error"]
    assert session.handle({"cmd": "run"})["status"] == "success"
    assert session.handle({"cmd": "backtrack"})["status"] in \
        ("running", "exhausted")
    assert session.handle({"cmd": "nonsense"})["error"]


def test_serve_stdio_roundtrip_subprocess():
    requests = "\n".join([
        json.dumps({"cmd": "run"}),
        json.dumps({"cmd": "state"}),
        "not json",
    ]) + "\n"
    proc = subprocess.run(
        [sys.executable, "-m", "lsd.cli", "serve", "--corpus",
         "--query", "key4"],
        input=requests, capture_output=True, text=True, timeout=60)
    assert proc.returncode == EXIT_OK
    replies = [json.loads(ln) for ln in proc.stdout.splitlines() if ln]
    assert replies[0]["status"] == "success"
    assert replies[1]["status"] == "success" and "model" in replies[1]
    assert "bad request" in replies[2]["error"]


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "lsd.cli", "run", "--corpus",
         "--query", "key4"],
        capture_output=True, text=True, timeout=60)
    assert proc.returncode == EXIT_OK
    assert json.loads(proc.stdout)["bindings"]["bits"][0] == "•"
