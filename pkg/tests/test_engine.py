"""Engine execution: rules, tracing, backtracking, negation, enumeration."""

import io
import random
from fractions import Fraction as F

import pytest

from lsd import text
from lsd.cli import corpus_sources
from lsd.core import EComponent, FunctionCell
from lsd.engine import (
    EngineError,
    ExecutionState,
    Replayer,
    enumerate_solutions,
    read_trace,
    write_trace,
)

import unifyref


def corpus_program(extra=()):
    return text.load_program(corpus_sources() + list(extra))


def run_query(program, name, **kw):
    state = ExecutionState.start(program, name, **kw)
    state.run()
    return state


# ---------------------------------------------------------------------------
# basic runs and tracing


def test_key4_success_with_single_residual_solid():
    st = run_query(corpus_program(), "key4")
    assert st.status == "success"
    cells = list(st.spec.cells.values())
    assert sum(isinstance(c, EComponent) for c in cells) == 1
    assert not any(isinstance(c, FunctionCell) for c in cells)
    assert st.solution()["bindings"]["bits"] == [
        "•", ["1"], ["•", ["2"], ["•", ["1"], ["•", ["2"], ["nil"]]]]]


def test_trace_contains_expected_rule_sequence():
    st = run_query(corpus_program(), "key4")
    seq = [(e.kind, e.payload.get("design") or e.payload.get("name"))
           for e in st.events]
    expected = [("replace", "Key"), ("replace", "Partial-Key"),
                ("merge", "•"), ("delete", "•"), ("replace", "Bit"),
                ("merge", "1"), ("delete", "1"), ("bond", None)]
    it = iter(seq)
    for want_kind, want_name in expected:
        assert any(k == want_kind and (want_name is None or n == want_name)
                   for k, n in it), (want_kind, want_name)


def test_trace_steps_strictly_increase():
    st = run_query(corpus_program(), "key4")
    steps = [e.step for e in st.events]
    assert steps == sorted(steps) and len(set(steps)) == len(steps)


def test_unknown_query_raises():
    with pytest.raises(EngineError):
        ExecutionState.start(corpus_program(), "no_such_query")


# ---------------------------------------------------------------------------
# replay parity


LOCK_QUERY = "query lock4 { [[1, 2], [2], [1], [2]] -> arr; call Lock(arr); }"


@pytest.mark.parametrize("query", ["key4", "lock4", "member_absent"])
def test_replay_reproduces_live_hash(query):
    st = run_query(corpus_program([LOCK_QUERY]), query)
    rp = Replayer(st.events)
    while rp.advance() is not None:
        pass
    assert rp.current_hash() == st.state_hash()


def test_trace_file_roundtrip_preserves_replay():
    st = run_query(corpus_program(), "key4")
    fh = io.StringIO()
    write_trace(st.events, fh)
    fh.seek(0)
    evs = read_trace(fh)
    assert [(e.step, e.kind) for e in evs] == \
        [(e.step, e.kind) for e in st.events]
    rp = Replayer(evs)
    while rp.advance() is not None:
        pass
    assert rp.current_hash() == st.state_hash()


def test_identical_runs_hash_identically():
    a = run_query(corpus_program(), "key4")
    b = run_query(corpus_program(), "key4")
    assert a.state_hash() == b.state_hash()
    assert [e.to_json() for e in a.events] == [e.to_json() for e in b.events]


# ---------------------------------------------------------------------------
# failure and recovery


def test_inverted_bit_cases_fail_then_recover():
    prog = corpus_program()
    prog.design("Bit").cases.reverse()
    st = ExecutionState.start(prog, "key4")
    assert st.run() == "success"
    clashes = [e.payload for e in st.events
               if e.kind == "fail" and e.payload["reason"] == "clash"]
    assert any(sorted(p["cells"]) == ["1/0", "2/0"] for p in clashes)
    assert any(e.kind == "backtrack" for e in st.events)
    base = run_query(corpus_program(), "key4")
    assert st.solution() == base.solution()


def test_budget_exhaustion_and_resume():
    st = ExecutionState.start(corpus_program(), "key4", budget=10, trace=False)
    assert st.run() == "budget"
    assert st.resume(100_000) == "success"
    base = run_query(corpus_program(), "key4")
    assert st.solution()["bindings"] == base.solution()["bindings"]


def test_force_backtrack_only_from_success():
    st = ExecutionState.start(corpus_program(), "key4", trace=False)
    with pytest.raises(EngineError):
        st.force_backtrack()
    st.run()
    # the only success was found; rejecting it exhausts the search
    if st.force_backtrack() == "running":
        assert st.run() == "exhausted"
    assert st.status == "exhausted"


# ---------------------------------------------------------------------------
# negation


def test_negation_succeeds_when_inner_query_fails():
    prog = corpus_program(
        ["query closed { [1] -> k; [[2]] -> a; not call Open(k, a); }"])
    assert run_query(prog, "closed").status == "success"


def test_negation_fails_when_inner_query_succeeds():
    prog = corpus_program(
        ["query blocked { [1] -> k; [[1]] -> a; not call Open(k, a); }"])
    assert run_query(prog, "blocked").status == "exhausted"


def test_negation_flags_floundering_on_unbound_nets():
    prog = corpus_program(["query fl { not call Member(x, l); }"])
    st = run_query(prog, "fl")
    enters = [e for e in st.events if e.kind == "negation_enter"]
    assert enters and enters[0].payload["floundering"] is True
    assert st.status == "exhausted"


# ---------------------------------------------------------------------------
# enumeration


def test_two_unbound_bits_give_four_distinct_keys():
    prog = corpus_program(["query k2 { [x, y] -> bits; call Key(bits); }"])
    sols, state = enumerate_solutions(prog, "k2", trace=False)
    assert state.status == "exhausted"
    got = {(s["bindings"]["x"][0], s["bindings"]["y"][0]) for s in sols}
    assert len(sols) == 4
    assert got == {("1", "1"), ("1", "2"), ("2", "1"), ("2", "2")}


def bit_height(solution):
    """Height of the single bit of a 1-bit key, read off its outline."""
    (solid,) = solution["solids"]
    ys = [F(y) for _, pts in solid["geometry"]["polys"]
          for (x, y) in pts if F(4) <= F(x) <= F(6)]
    return max(ys)


def test_fully_unbound_key_enumerates_by_blade_length():
    prog = corpus_program(["query kfree { call Key(bits); }"])
    sols, state = enumerate_solutions(prog, "kfree", max_solutions=3,
                                      trace=False)
    assert state.status == "success"  # stopped at the cap, more remain
    assert sols[0]["bindings"]["bits"] == ["nil"]
    assert sols[1]["bindings"]["bits"][0] == "•"
    assert [bit_height(s) for s in sols[1:]] == [1, 2]


# ---------------------------------------------------------------------------
# snapshot / rollback exactness through the live engine


def test_mark_apply_rollback_restores_engine_state():
    rng = random.Random(7)
    verified = 0
    while verified < 60:
        st = ExecutionState.start(corpus_program(), "key4", trace=False)
        for _ in range(rng.randrange(0, 40)):
            if st.step_once() != "running":
                break
        spec_mark = st.spec.mark()
        solid_mark = st.solids.mark()
        before = (st.spec.snapshot_key(), st.solids.snapshot_key())
        held = [id(cp) for cp in st.choice_stack]
        shrunk = False
        for _ in range(rng.randrange(1, 25)):
            if st.step_once() != "running":
                break
            if [id(cp) for cp in st.choice_stack[:len(held)]] != held:
                shrunk = True  # backtracked past the mark; not restorable
                break
        if shrunk:
            continue
        st.spec.undo_to(spec_mark)
        st.solids.rollback(solid_mark)
        st.spec.audit()
        assert (st.spec.snapshot_key(), st.solids.snapshot_key()) == before
        verified += 1


# ---------------------------------------------------------------------------
# structural simplification parity (sampled; the full sweep runs in the
# acceptance suite)


def test_simplification_matches_reference_unifier():
    assert unifyref.parity_failures(120, seed=20240825) == []
