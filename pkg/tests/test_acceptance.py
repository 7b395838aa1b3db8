"""End-to-end acceptance checks.

Each test covers one numbered criterion; tests/conftest.py prints one
pass/fail line per criterion in the terminal summary.  Unless a wall
time is stated, every comparison is exact rational or structural
equality with zero tolerance.
"""

import random
import time
from fractions import Fraction as F

from lsd import text
from lsd.anim import (
    MIDPOINT,
    linear_animation,
    plan_bond_animation,
    snap_animation,
    validate,
)
from lsd.cli import corpus_sources
from lsd.core import EComponent
from lsd.engine import ExecutionState, Replayer, enumerate_solutions
from lsd.masterkey import (
    TABLE1,
    TABLE1_MASTER,
    TABLE1_SYSTEM,
    Implementation,
    check_implementation,
    induced_array,
    opens,
)
from lsd.masterkey import enumerate_solutions as oracle_enumerate
from lsd.params import Inconsistent
from lsd.solids import PUNCH, SolidStore

import unifyref


def corpus_program(extra=()):
    return text.load_program(corpus_sources() + list(extra))


def run_query(program, name, **kw):
    state = ExecutionState.start(program, name, **kw)
    state.run()
    return state


def live_solid_ids(state):
    return [c.instance_id for c in state.spec.cells.values()
            if isinstance(c, EComponent)]


# ---------------------------------------------------------------------------
# 1. key assembly


def test_criterion_1_key_assembly():
    t0 = time.perf_counter()
    st = run_query(corpus_program(), "key4")
    elapsed = time.perf_counter() - t0

    assert st.status == "success"
    solids = live_solid_ids(st)
    assert len(solids) == 1  # exactly one residual solid component

    # the expected rule sequence, as an ordered subsequence of the trace
    seq = iter((e.kind, e.payload.get("design") or e.payload.get("name"))
               for e in st.events)
    for want_kind, want_name in [
            ("replace", "Key"), ("replace", "Partial-Key"), ("merge", "•"),
            ("delete", "•"), ("replace", "Bit"), ("merge", "1"),
            ("delete", "1"), ("bond", None)]:
        assert any(k == want_kind and (want_name is None or n == want_name)
                   for k, n in seq), (want_kind, want_name)

    # bit heights at the chamber centers, closed at the cut and open
    # immediately above it (pitch 3: 1-unit leveller + 2-unit bit)
    (iid,) = solids
    for i, h in enumerate([1, 2, 1, 2]):
        cx = F(3) + 3 * i + 2
        assert st.solids.membership(iid, (cx, F(h)))
        assert not st.solids.membership(iid, (cx, F(h) + F(1, 10**6)))
    assert elapsed < 1.0, "key assembly took %.3f s" % elapsed


# ---------------------------------------------------------------------------
# 2. wrong-choice failure and recovery


def test_criterion_2_inverted_cases_recover():
    prog = corpus_program()
    prog.design("Bit").cases.reverse()
    st = ExecutionState.start(prog, "key4")
    assert st.run() == "success"

    # the first derivation now puts the wrong cut constant on the first
    # bit: two constant roots, 1 and 2, clash in a single net
    clashes = [e for e in st.events
               if e.kind == "fail" and e.payload["reason"] == "clash"
               and sorted(e.payload["cells"]) == ["1/0", "2/0"]]
    assert clashes, "no 1/2 constant clash observed"
    first = clashes[0]
    backtracks = [e for e in st.events if e.kind == "backtrack"]
    assert any(b.step > first.step for b in backtracks)

    base = run_query(corpus_program(), "key4")
    assert st.solution() == base.solution()


# ---------------------------------------------------------------------------
# 3. worked bitting values


def test_criterion_3_worked_bitting_values():
    array = (frozenset({1, 2}), frozenset({2}), frozenset({1}), frozenset({2}))
    assert opens((1, 2, 1, 2), array) is True

    got = induced_array([(1, 2, 2, 1), (2, 2, 2, 1), (1, 1, 2, 1)])
    assert got == (frozenset({1, 2}), frozenset({1, 2}),
                   frozenset({2}), frozenset({1}))

    worked = Implementation(
        vectors=((1, 2, 1, 2), (2, 2, 1, 2), (1, 2, 2, 2)),
        arrays=(array,
                (frozenset({1}), frozenset({2}), frozenset({1, 2}),
                 frozenset({2}))))
    assert check_implementation(worked, TABLE1)


# ---------------------------------------------------------------------------
# 4. masterkeying end-to-end


def decode_list(term):
    out = []
    while term[0] == "•":
        out.append(term[1])
        term = term[2]
    assert term == ["nil"], term
    return out


def decode_vector(term):
    return tuple(int(t[0]) for t in decode_list(term))


def decode_array(term):
    return tuple(frozenset(int(c[0]) for c in decode_list(ch))
                 for ch in decode_list(term))


def decode_implementation(bindings):
    return Implementation(
        vectors=(decode_vector(bindings["m"]),
                 decode_vector(bindings["k1"]),
                 decode_vector(bindings["k2"])),
        arrays=(decode_array(bindings["a1"]),
                decode_array(bindings["a2"])))


def vector_literal(v):
    return "[%s]" % ", ".join(str(b) for b in v)


def array_literal(a):
    return "[%s]" % ", ".join(vector_literal(sorted(c)) for c in a)


def reference_geometry(kind, literal):
    """Geometry of a standalone key or lock built from a ground literal."""
    prog = corpus_program([
        "query probe { %s -> v; call %s(v); }" % (literal, kind)])
    st = run_query(prog, "probe", trace=False)
    (sol,) = st.solution()["solids"]
    return sol["geometry"]


def test_criterion_4_masterkeying_end_to_end():
    t0 = time.perf_counter()
    prog = corpus_program()
    st = ExecutionState.start(prog, "masterkey", budget=500_000, trace=False)
    assert st.run() == "success"
    sol = st.solution()
    impl = decode_implementation(sol["bindings"])
    assert check_implementation(impl, TABLE1)
    assert impl.vectors[0] == TABLE1_MASTER

    # 3 key solids and 2 lock solids: each residual solid's geometry
    # matches a standalone build from the decoded bindings
    got = sorted(repr(s["geometry"]) for s in sol["solids"])
    want = sorted(
        [repr(reference_geometry("Key", vector_literal(v)))
         for v in impl.vectors] +
        [repr(reference_geometry("Lock", array_literal(a)))
         for a in impl.arrays])
    assert got == want and len(got) == 5

    engine_sols, state = enumerate_solutions(
        prog, "masterkey", budget=10_000_000, trace=False)
    assert state.status == "exhausted"
    engine_set = {decode_implementation(s["bindings"]) for s in engine_sols}
    oracle_set = set(oracle_enumerate(TABLE1, TABLE1_SYSTEM, TABLE1_MASTER))
    assert len(engine_sols) == len(engine_set)
    assert engine_set == oracle_set
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0, "masterkeying took %.3f s" % elapsed


# ---------------------------------------------------------------------------
# 5. punch / ring


def test_criterion_5_punch_ring_closed_form():
    st = SolidStore()
    outer = st.new_instance("disk", [F(0), F(0), F(2)])
    inner = st.new_instance("disk", [F(0), F(0), F(1)])
    ring = st.apply_operation(PUNCH, [outer, inner], [None, None])
    for i in range(21):
        for j in range(21):
            x = F(-3) + F(6 * i, 20)
            y = F(-3) + F(6 * j, 20)
            expect = 1 < x * x + y * y <= 4
            assert st.membership(ring, (x, y)) == expect, (x, y)

    st2 = SolidStore()
    small = st2.new_instance("disk", [F(0), F(0), F(1)])
    large = st2.new_instance("disk", [F(0), F(0), F(2)])
    try:
        st2.apply_operation(PUNCH, [small, large], [None, None])
        raise AssertionError("oversized inner disk accepted")
    except Inconsistent:
        pass
    st3 = SolidStore()
    o = st3.new_instance("disk", [F(0), F(0), F(2)])
    shifted = st3.new_instance("disk", [F(1), F(0), F(1)])
    try:
        st3.apply_operation(PUNCH, [o, shifted], [None, None])
        raise AssertionError("distinct centres accepted")
    except Inconsistent:
        pass


# ---------------------------------------------------------------------------
# 6. animation laws


def rand_frac(rng, span=8):
    return F(rng.randrange(-span, span + 1), rng.randrange(1, 7))


def test_criterion_6_animation_laws():
    rng = random.Random(2024)
    for _ in range(100):
        n = rng.randrange(1, 9)
        x = tuple(rand_frac(rng) for _ in range(n))
        y = tuple(rand_frac(rng) for _ in range(n))
        ts = rand_frac(rng)
        te = ts + F(rng.randrange(1, 5), rng.randrange(1, 4))
        for ctor in (linear_animation, snap_animation):
            a = ctor(n, ts, te)
            assert a.at(x, y, ts) == x and a.at(x, y, te) == y

    # midpoint-policy target for two free squares: matched corners meet
    # halfway, per the closed form over the start vector
    st = SolidStore()
    a = st.new_instance("square", [F(0), F(2), F(0), F(0)])
    b = st.new_instance("square", [F(5), F(1), F(5), F(3)])
    plan = plan_bond_animation(st, a, "edge", b, "edge", anchoring=MIDPOINT)
    x = plan.x
    assert plan.y == ((x[0] + x[6]) / 2, (x[1] + x[7]) / 2,
                      (x[2] + x[4]) / 2, (x[3] + x[5]) / 2,
                      (x[2] + x[4]) / 2, (x[3] + x[5]) / 2,
                      (x[0] + x[6]) / 2, (x[1] + x[7]) / 2)
    assert validate(plan, samples=32) == "ok"

    lin, snap = linear_animation(1), snap_animation(1)
    for t in [F(j, 31) for j in range(1, 31)]:
        assert snap.at((0,), (1,), t) < lin.at((0,), (1,), t)


# ---------------------------------------------------------------------------
# 7. snapshot / rollback and replay


def test_criterion_7_rollback_and_replay():
    rng = random.Random(1_000_003)
    queries = ["key4", "lock4"]
    prog_src = ["query lock4 { [[1, 2], [2], [1], [2]] -> arr; "
                "call Lock(arr); }"]
    verified = 0
    while verified < 200:
        st = ExecutionState.start(corpus_program(prog_src),
                                  rng.choice(queries), trace=False)
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
        assert (st.spec.snapshot_key(), st.solids.snapshot_key()) == before
        verified += 1

    # trace replay reproduces the terminal hash of assorted runs
    inverted = corpus_program(prog_src)
    inverted.design("Bit").cases.reverse()
    runs = [run_query(corpus_program(prog_src), q) for q in queries]
    runs.append(run_query(inverted, "key4"))
    for st in runs:
        rp = Replayer(st.events)
        while rp.advance() is not None:
            pass
        assert rp.current_hash() == st.state_hash()


# ---------------------------------------------------------------------------
# 8. enumeration order


def bit_height(solution):
    (solid,) = solution["solids"]
    ys = [F(y) for _, pts in solid["geometry"]["polys"]
          for (x, y) in pts if F(4) <= F(x) <= F(6)]
    return max(ys)


def test_criterion_8_enumeration_order():
    prog = corpus_program(["query k2 { [x, y] -> bits; call Key(bits); }",
                           "query kfree { call Key(bits); }"])
    sols, state = enumerate_solutions(prog, "k2", trace=False)
    assert state.status == "exhausted"
    assert len(sols) == 4  # oracle: 2 bits x 2 depths
    got = {(s["bindings"]["x"][0], s["bindings"]["y"][0]) for s in sols}
    assert got == {("1", "1"), ("1", "2"), ("2", "1"), ("2", "2")}

    first3, _ = enumerate_solutions(prog, "kfree", max_solutions=3,
                                    trace=False)
    assert first3[0]["bindings"]["bits"] == ["nil"]
    assert all(s["bindings"]["bits"][0] == "•" for s in first3[1:])
    assert [bit_height(s) for s in first3[1:]] == [1, 2]


# ---------------------------------------------------------------------------
# 9. unification parity


def test_criterion_9_unification_parity():
    assert unifyref.parity_failures(500, seed=424242) == []
