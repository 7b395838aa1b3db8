"""Bitting combinatorics, the masterkeying solver, and file formats."""

import random

import pytest

from lsd.masterkey import (
    TABLE1,
    TABLE1_MASTER,
    TABLE1_SYSTEM,
    Implementation,
    KeyLockMatrix,
    LockingSystem,
    MasterkeyError,
    check_implementation,
    enumerate_solutions,
    format_implementation,
    induced_array,
    opens,
    parse_implementation_file,
    parse_matrix_file,
    solve,
)

WORKED_IMPL = Implementation(
    vectors=((1, 2, 1, 2), (2, 2, 1, 2), (1, 2, 2, 2)),
    arrays=(
        (frozenset({1, 2}), frozenset({2}), frozenset({1}), frozenset({2})),
        (frozenset({1}), frozenset({2}), frozenset({1, 2}), frozenset({2})),
    ),
)


# ---------------------------------------------------------------------------
# worked values


def test_opens_worked_example():
    array = (frozenset({1, 2}), frozenset({2}), frozenset({1}), frozenset({2}))
    assert opens((1, 2, 1, 2), array)
    assert not opens((1, 1, 1, 2), array)
    with pytest.raises(MasterkeyError):
        opens((1, 2), array)


def test_induced_array_worked_example():
    got = induced_array([(1, 2, 2, 1), (2, 2, 2, 1), (1, 1, 2, 1)])
    assert got == (frozenset({1, 2}), frozenset({1, 2}),
                   frozenset({2}), frozenset({1}))
    with pytest.raises(MasterkeyError):
        induced_array([])
    with pytest.raises(MasterkeyError):
        induced_array([(1, 2), (1, 2, 1)])


def test_worked_implementation_passes_check():
    assert check_implementation(WORKED_IMPL, TABLE1)


def test_check_rejects_wrong_shape_and_wrong_openings():
    with pytest.raises(MasterkeyError):
        check_implementation(Implementation((), ()), TABLE1)
    broken = Implementation(WORKED_IMPL.vectors[:2] + ((2, 2, 2, 2),),
                            WORKED_IMPL.arrays)
    assert not check_implementation(broken, TABLE1)


# ---------------------------------------------------------------------------
# model objects


def test_locking_system_vectors_lexicographic():
    sys2 = LockingSystem((2, 3))
    assert list(sys2.vectors()) == [
        (1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (2, 3)]
    assert sys2.valid_vector((2, 3)) and not sys2.valid_vector((2, 4))
    with pytest.raises(MasterkeyError):
        LockingSystem((2, 0))


def test_matrix_validation():
    with pytest.raises(MasterkeyError):
        KeyLockMatrix(((1, 2),))
    with pytest.raises(MasterkeyError):
        KeyLockMatrix(((1, 1), (1,)))
    assert TABLE1.n == 3 and TABLE1.m == 2


# ---------------------------------------------------------------------------
# solver


def test_solve_is_first_of_enumeration_and_deterministic():
    first = solve(TABLE1, TABLE1_SYSTEM, TABLE1_MASTER)
    assert first is not None
    assert first.vectors == ((1, 2, 1, 2), (1, 1, 1, 1), (1, 1, 2, 2))
    assert check_implementation(first, TABLE1)
    assert enumerate_solutions(TABLE1, TABLE1_SYSTEM, TABLE1_MASTER,
                               limit=1) == [first]
    assert solve(TABLE1, TABLE1_SYSTEM, TABLE1_MASTER) == first


def test_enumeration_count_distinctness_and_order():
    sols = enumerate_solutions(TABLE1, TABLE1_SYSTEM, TABLE1_MASTER)
    assert len(sols) == 110
    keysets = [s.vectors for s in sols]
    assert len(set(keysets)) == len(keysets)
    assert keysets == sorted(keysets)  # lexicographic over (k1, k2)
    for s in sols:
        assert s.vectors[0] == TABLE1_MASTER
        assert len(set(s.vectors)) == 3
        assert check_implementation(s, TABLE1)


def test_solver_handles_unsolvable_and_invalid_inputs():
    # no key may open lock 0, so no induced array exists for it
    dead = KeyLockMatrix(((0, 1), (0, 1)))
    assert solve(dead, TABLE1_SYSTEM, TABLE1_MASTER) is None
    with pytest.raises(MasterkeyError):
        solve(TABLE1, TABLE1_SYSTEM, (9, 9, 9, 9))
    assert enumerate_solutions(TABLE1, TABLE1_SYSTEM, TABLE1_MASTER,
                               limit=0) == []


def test_random_instances_satisfy_check():
    rng = random.Random(77)
    found = 0
    for _ in range(40):
        system = LockingSystem(tuple(rng.choice([1, 2, 3])
                                     for _ in range(rng.randrange(1, 4))))
        all_vecs = list(system.vectors())
        n = rng.randrange(1, min(4, len(all_vecs)) + 1)
        m = rng.randrange(1, 4)
        x = KeyLockMatrix(tuple(tuple(rng.randrange(2) for _ in range(m))
                                for _ in range(n)))
        master = rng.choice(all_vecs)
        impl = solve(x, system, master)
        if impl is not None:
            found += 1
            assert check_implementation(impl, x)
            assert impl.vectors[0] == master
    assert found > 0  # the sweep actually exercised accepting runs


# ---------------------------------------------------------------------------
# file formats


MATRIX_TEXT = """\
3 2 4
2 2 2 2
1 2 1 2
1 1
1 0
0 1
"""


def test_matrix_file_roundtrip():
    x, system, master = parse_matrix_file(MATRIX_TEXT)
    assert x == TABLE1 and system == TABLE1_SYSTEM and master == TABLE1_MASTER


@pytest.mark.parametrize("bad", [
    "",                                  # empty
    "3 2 4\n2 2 2 2\n1 2 1 2\n1 1\n1 0", # truncated rows
    "3 2 4\n2 2 2 2\n1 2 1 2\n1 1\n1 0\n0 2",  # non-binary entry
    "3 2 4\n2 2 2 2\n1 3 1 2\n1 1\n1 0\n0 1",  # master out of range
    MATRIX_TEXT + "7",                   # trailing tokens
    "3 2 4\n2 2 2 2\n1 2 1 2\n1 1\n1 0\n0 x",  # non-numeric
])
def test_matrix_file_rejections(bad):
    with pytest.raises(MasterkeyError):
        parse_matrix_file(bad)


def test_implementation_file_roundtrip():
    text = format_implementation(WORKED_IMPL)
    assert parse_implementation_file(text) == WORKED_IMPL
    assert "1,2" in text  # multi-cut chambers are comma-joined


@pytest.mark.parametrize("bad", [
    "",
    "3 2\n",                             # short header
    "2 1 2\n1 2\n1\n1,2 2",              # key row wrong width
    "1 1 2\n1 2\n1,2",                   # lock row wrong width
    "2 2 2\n1 2\n2 1\n1,2 2",            # missing lock row
])
def test_implementation_file_rejections(bad):
    with pytest.raises(MasterkeyError):
        parse_implementation_file(bad)
