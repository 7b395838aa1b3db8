"""Command-line front door for the design-language toolkit.

Subcommands:

  run        execute one query to its first success
  enumerate  force backtracking and list every distinct solution
  replay     rebuild states from a trace file (optionally verifying
             against a fresh live run) and dump per-step models
  check      verify a masterkey implementation file against a matrix
  serve      line-delimited JSON stepper session (stdio or TCP)

Exit codes: 0 success / check passed; 1 no solution or failed check;
2 usage, parse, or validation error; 3 step budget exceeded.

Traces are line-delimited JSON, one event per line; rationals are
serialized as exact "p/q" strings (decimal rendering exists only in
SVG output).
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys
from typing import Optional

from . import anim, masterkey, text
from .core import validate
from .engine import (
    DEFAULT_BUDGET,
    ExecutionState,
    Replayer,
    enumerate_solutions,
    read_trace,
    write_trace,
)

EXIT_OK = 0
EXIT_NO_SOLUTION = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3

_CORPUS_FILES = ("key.lsd", "lock.lsd", "logic.lsd", "masterkey_query.lsd")


def corpus_sources() -> list[str]:
    """Text of the shipped corpus programs."""
    base = os.path.join(os.path.dirname(__file__), "corpus")
    return [open(os.path.join(base, nm), encoding="utf-8").read()
            for nm in _CORPUS_FILES]


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE) -> None:
        super().__init__(message)
        self.code = code


def _load_program(paths: list[str], with_corpus: bool):
    sources = corpus_sources() if with_corpus else []
    for path in paths:
        try:
            with open(path, encoding="utf-8") as fh:
                sources.append(fh.read())
        except OSError as exc:
            raise CliError("cannot read %s: %s" % (path, exc))
    if not sources:
        raise CliError("no program sources given")
    try:
        program = text.load_program(sources)
    except text.LsdSyntaxError as exc:
        raise CliError("parse error: %s" % exc)
    problems = validate(program)
    if problems:
        raise CliError("validation: " + "; ".join(problems))
    return program


def _start(args, trace: bool) -> ExecutionState:
    program = _load_program(args.program, args.corpus)
    try:
        return ExecutionState.start(program, args.query,
                                    budget=args.budget, trace=trace)
    except Exception as exc:
        raise CliError(str(exc))


def _install_frame_hook(state: ExecutionState, args) -> list:
    """Render each bond execution's animation under the frames dir."""
    rendered: list[str] = []

    def hook(iid_a: int, edge_a: str, iid_b: int, edge_b: str) -> None:
        # anchor the operand assembled earlier: the build grows from it
        if iid_a > iid_b:
            iid_a, edge_a, iid_b, edge_b = iid_b, edge_b, iid_a, edge_a
        try:
            plan = anim.plan_bond_animation(
                state.solids, iid_a, edge_a, iid_b, edge_b,
                anchoring=args.anchoring, kind=args.animation)
        except anim.AnimationError:
            return  # an unplannable bond is a bond without a movie
        directory = os.path.join(args.frames, "bond-%03d" % len(rendered))
        anim.write_frames(plan, args.samples, directory)
        rendered.append(directory)

    state.on_bond = hook
    return rendered


def cmd_run(args) -> int:
    wants_trace = bool(args.trace)
    state = _start(args, trace=wants_trace)
    if args.frames:
        _install_frame_hook(state, args)
    status = state.run()
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            write_trace(state.events, fh)
    if status == "success":
        sol = state.solution()
        json.dump(sol, sys.stdout, sort_keys=True)
        sys.stdout.write("\n")
        return EXIT_OK
    if status == "budget":
        print("budget exceeded after %d steps" % state.steps_used,
              file=sys.stderr)
        return EXIT_BUDGET
    print("no solution", file=sys.stderr)
    return EXIT_NO_SOLUTION


def cmd_enumerate(args) -> int:
    program = _load_program(args.program, args.corpus)
    try:
        sols, state = enumerate_solutions(
            program, args.query, max_solutions=args.max_solutions,
            budget=args.budget, trace=False)
    except Exception as exc:
        raise CliError(str(exc))
    for sol in sols:
        json.dump(sol, sys.stdout, sort_keys=True)
        sys.stdout.write("\n")
    if state.status == "budget":
        print("budget exceeded after %d steps" % state.steps_used,
              file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK if sols else EXIT_NO_SOLUTION


def cmd_replay(args) -> int:
    try:
        with open(args.trace, encoding="utf-8") as fh:
            events = read_trace(fh)
    except OSError as exc:
        raise CliError(str(exc))
    try:
        replayer = Replayer(events)
    except Exception as exc:
        raise CliError("bad trace: %s" % exc)
    dump = None
    if args.dump_states:
        dump = open(args.dump_states, "w", encoding="utf-8")
    try:
        if dump:
            json.dump(replayer.model, dump, sort_keys=True,
                      separators=(",", ":"))
            dump.write("\n")
        while True:
            ev = replayer.advance()
            if ev is None:
                break
            if dump:
                json.dump(replayer.model, dump, sort_keys=True,
                          separators=(",", ":"))
                dump.write("\n")
    finally:
        if dump:
            dump.close()
    final = replayer.current_hash()
    print("replayed %d events; final hash %s" % (len(events), final))
    if args.query and (args.program or args.corpus):
        live = _start(args, trace=True)
        live.run()
        if live.state_hash() != final:
            print("MISMATCH: live run hash %s" % live.state_hash(),
                  file=sys.stderr)
            return EXIT_NO_SOLUTION
        print("live run matches")
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        with open(args.matrix, encoding="utf-8") as fh:
            x, system, master = masterkey.parse_matrix_file(fh.read())
        with open(args.implementation, encoding="utf-8") as fh:
            impl = masterkey.parse_implementation_file(fh.read())
    except (OSError, masterkey.MasterkeyError) as exc:
        raise CliError(str(exc))
    if len(impl.vectors) != x.n or len(impl.arrays) != x.m or \
            any(not system.valid_vector(v) for v in impl.vectors):
        raise CliError("implementation shape does not fit the matrix")
    try:
        ok = masterkey.check_implementation(impl, x)
    except masterkey.MasterkeyError as exc:
        raise CliError(str(exc))
    print("check %s" % ("passed" if ok else "failed"))
    return EXIT_OK if ok else EXIT_NO_SOLUTION


# ---------------------------------------------------------------------------
# stepper server


class _Session:
    """One stepper session over a pair of text streams."""

    def __init__(self, args) -> None:
        self.args = args
        self.state = _start(args, trace=True)
        self.seen = 0

    def _new_events(self) -> list[dict]:
        evs = self.state.events[self.seen:]
        self.seen = len(self.state.events)
        return [{"step": e.step, "kind": e.kind, "payload": e.payload}
                for e in evs]

    def handle(self, request: dict) -> dict:
        cmd = request.get("cmd")
        state = self.state
        if cmd == "step":
            status = state.step_once()
            return {"status": status, "events": self._new_events()}
        if cmd == "run":
            status = state.run()
            return {"status": status, "events": self._new_events()}
        if cmd == "backtrack":
            if state.status != "success":
                return {"error": "backtrack requires a success state"}
            status = state.force_backtrack()
            return {"status": status, "events": self._new_events()}
        if cmd == "reset":
            self.state = _start(self.args, trace=True)
            self.seen = 0
            return {"status": self.state.status,
                    "events": self._new_events()}
        if cmd == "state":
            return {"status": state.status, "model": state.model_dump(),
                    "hash": state.state_hash()}
        return {"error": "unknown command %r" % (cmd,)}


def _serve_streams(session: _Session, rfh, wfh) -> None:
    for line in rfh:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request must be an object")
        except ValueError as exc:
            response = {"error": "bad request: %s" % exc}
        else:
            response = session.handle(request)
        wfh.write(json.dumps(response, sort_keys=True))
        wfh.write("\n")
        wfh.flush()


def cmd_serve(args) -> int:
    session = _Session(args)
    if args.port is None:
        _serve_streams(session, sys.stdin, sys.stdout)
        return EXIT_OK
    srv = socket.create_server(("127.0.0.1", args.port))
    try:
        print("listening on 127.0.0.1:%d" % srv.getsockname()[1], flush=True)
        while True:
            conn, _ = srv.accept()
            with conn:
                rfh = conn.makefile("r", encoding="utf-8")
                wfh = conn.makefile("w", encoding="utf-8")
                _serve_streams(session, rfh, wfh)
            if args.once:
                return EXIT_OK
    finally:
        srv.close()


# ---------------------------------------------------------------------------
# argument parsing


def _add_program_args(sub, query_required=True) -> None:
    sub.add_argument("program", nargs="*", help="program source files")
    sub.add_argument("--query", required=query_required)
    sub.add_argument("--corpus", action="store_true",
                     help="preload the shipped corpus designs")
    sub.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                     help="rule-application budget")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lsd", description="design-language engine and tools")
    subs = parser.add_subparsers(dest="command", required=True)

    run = subs.add_parser("run", help="run a query to its first success")
    _add_program_args(run)
    run.add_argument("--trace", help="write a line-delimited JSON trace")
    run.add_argument("--frames", help="render bond animations under DIR")
    run.add_argument("--samples", type=int, default=16,
                     help="frames per bond animation")
    run.add_argument("--animation", choices=("linear", "snap"),
                     default="linear")
    run.add_argument("--anchoring",
                     choices=(anim.ANCHOR_FIRST, anim.ANCHOR_SECOND,
                              anim.MIDPOINT),
                     default=anim.ANCHOR_FIRST)

    enum = subs.add_parser("enumerate", help="list all distinct solutions")
    _add_program_args(enum)
    enum.add_argument("--max-solutions", type=int, default=None)

    rep = subs.add_parser("replay", help="rebuild states from a trace")
    rep.add_argument("trace")
    rep.add_argument("program", nargs="*",
                     help="optional program to verify against")
    rep.add_argument("--query")
    rep.add_argument("--corpus", action="store_true")
    rep.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    rep.add_argument("--dump-states",
                     help="write the model after every event (JSON lines)")

    chk = subs.add_parser("check",
                          help="verify an implementation file against a matrix")
    chk.add_argument("matrix")
    chk.add_argument("implementation")

    srv = subs.add_parser("serve", help="stepper protocol session")
    _add_program_args(srv)
    srv.add_argument("--port", type=int, default=None,
                     help="TCP port (default: stdio)")
    srv.add_argument("--once", action="store_true",
                     help="exit after the first connection closes")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handlers = {
        "run": cmd_run,
        "enumerate": cmd_enumerate,
        "replay": cmd_replay,
        "check": cmd_check,
        "serve": cmd_serve,
    }
    try:
        if args.command == "replay" and args.program and not args.query:
            raise CliError("--query is required when verifying a program")
        return handlers[args.command](args)
    except CliError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return exc.code
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
