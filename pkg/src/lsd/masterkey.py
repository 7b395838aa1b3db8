"""Masterkeying domain library: bitting vectors, arrays, and solvers.

A locking system fixes, per pin chamber, how many cut depths exist.  A
key is a bitting vector (one cut depth per chamber); a lock is a
bitting array (one non-empty set of admitted depths per chamber).  A
key opens a lock when every cut is admitted by the matching chamber.
A key-lock matrix prescribes exactly which keys open which locks; an
implementation realizes it with concrete vectors and arrays.

This module is pure combinatorics over small integers, independent of
the execution engine; it doubles as the oracle the engine's masterkey
corpus is checked against.  Lock arrays are always induced from the
keys that must open them: a free-standing array that no key induces is
out of scope.

File formats (whitespace-separated decimals):

  matrix file          n m k
                       s1 .. sk
                       master bitting (k cuts)
                       n rows of m binary digits
  implementation file  n m k
                       n key rows of k cuts
                       m lock rows of k chambers, each a comma-joined
                       cut list (e.g. "1,2 2 1 2")
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Optional


class MasterkeyError(Exception):
    """Invalid vectors, dimension mismatch, or unparseable file."""


@dataclass(frozen=True)
class LockingSystem:
    """Cut-depth counts per chamber: depth i of chamber j is 1..s[j]."""

    s: tuple[int, ...]

    def __post_init__(self):
        if any(x < 1 for x in self.s):
            raise MasterkeyError("every chamber needs at least one depth")

    @property
    def k(self) -> int:
        return len(self.s)

    def vectors(self) -> Iterable[tuple[int, ...]]:
        """All bitting vectors in lexicographic order."""
        return product(*(range(1, x + 1) for x in self.s))

    def valid_vector(self, v) -> bool:
        return len(v) == self.k and all(1 <= b <= x for b, x in zip(v, self.s))


Vector = tuple[int, ...]
Array = tuple[frozenset, ...]


@dataclass(frozen=True)
class KeyLockMatrix:
    """0/1 prescription: key i opens lock j iff x[i][j] == 1.

    Row 0 is conventionally the master key.
    """

    x: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.x or not self.x[0]:
            raise MasterkeyError("matrix dimensions must be positive")
        m = len(self.x[0])
        for row in self.x:
            if len(row) != m or any(v not in (0, 1) for v in row):
                raise MasterkeyError("matrix rows must be equal-length binary")

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def m(self) -> int:
        return len(self.x[0])


@dataclass(frozen=True)
class Implementation:
    vectors: tuple[Vector, ...]
    arrays: tuple[Array, ...]


def opens(v, a) -> bool:
    """True iff every cut of the key is admitted by its chamber."""
    v, a = tuple(v), tuple(a)
    if len(v) != len(a):
        raise MasterkeyError("key and lock have different chamber counts")
    return all(b in c for b, c in zip(v, a))


def induced_array(vectors) -> Array:
    """Column-wise union of cut depths: the minimal lock opened by all."""
    vectors = [tuple(v) for v in vectors]
    if not vectors:
        raise MasterkeyError("induced array needs at least one key")
    k = len(vectors[0])
    if any(len(v) != k for v in vectors):
        raise MasterkeyError("keys have different chamber counts")
    return tuple(frozenset(v[i] for v in vectors) for i in range(k))


def check_implementation(impl: Implementation, x: KeyLockMatrix) -> bool:
    """opens(v_i, a_j) must coincide with x_ij for every key/lock pair."""
    if len(impl.vectors) != x.n or len(impl.arrays) != x.m:
        raise MasterkeyError("implementation does not match matrix shape")
    for i, v in enumerate(impl.vectors):
        for j, a in enumerate(impl.arrays):
            if opens(v, a) != (x.x[i][j] == 1):
                return False
    return True


def _induced_arrays(x: KeyLockMatrix, vectors) -> Optional[tuple[Array, ...]]:
    """Each lock's array induced from the keys that must open it."""
    arrays = []
    for j in range(x.m):
        openers = [vectors[i] for i in range(x.n) if x.x[i][j] == 1]
        if not openers:
            return None  # a lock nobody may open has no induced array
        arrays.append(induced_array(openers))
    return tuple(arrays)


def solve(x: KeyLockMatrix, system: LockingSystem,
          master) -> Optional[Implementation]:
    """First implementation in lexicographic order, or None.

    The master vector is fixed as key 0; the remaining keys are chosen
    in lexicographic order over the locking system, pairwise distinct
    and distinct from the master; each lock's array is induced from
    the keys prescribed to open it, and a complete assignment is
    accepted iff it reproduces the matrix exactly.
    """
    for impl in enumerate_solutions(x, system, master, limit=1):
        return impl
    return None


def enumerate_solutions(x: KeyLockMatrix, system: LockingSystem, master,
                        limit: Optional[int] = None) -> list[Implementation]:
    """All accepted assignments in lexicographic order, up to limit."""
    master = tuple(master)
    if not system.valid_vector(master):
        raise MasterkeyError("master bitting invalid in this system")
    out: list[Implementation] = []
    if limit is not None and limit <= 0:
        return out
    chosen: list[Vector] = [master]

    def descend(i: int) -> bool:
        if i == x.n:
            arrays = _induced_arrays(x, chosen)
            if arrays is None:
                return False
            impl = Implementation(tuple(chosen), arrays)
            if check_implementation(impl, x):
                out.append(impl)
                if limit is not None and len(out) >= limit:
                    return True
            return False
        for v in system.vectors():
            if v in chosen:
                continue
            chosen.append(v)
            if descend(i + 1):
                return True
            chosen.pop()
        return False

    descend(1)
    return out


# ---------------------------------------------------------------------------
# file formats


def parse_matrix_file(text: str):
    """-> (KeyLockMatrix, LockingSystem, master vector)."""
    toks = text.split()
    try:
        pos = 0

        def take(count):
            nonlocal pos
            if pos + count > len(toks):
                raise MasterkeyError("matrix file truncated")
            vals = [int(t) for t in toks[pos:pos + count]]
            pos += count
            return vals

        n, m, k = take(3)
        if n < 1 or m < 1 or k < 0:
            raise MasterkeyError("bad matrix file dimensions")
        system = LockingSystem(tuple(take(k)))
        master = tuple(take(k))
        rows = tuple(tuple(take(m)) for _ in range(n))
        if pos != len(toks):
            raise MasterkeyError("trailing tokens in matrix file")
    except ValueError as exc:
        raise MasterkeyError("matrix file: %s" % exc)
    x = KeyLockMatrix(rows)
    if not system.valid_vector(master):
        raise MasterkeyError("master bitting invalid in this system")
    return x, system, master


def parse_implementation_file(text: str) -> Implementation:
    lines = [ln for ln in (s.strip() for s in text.splitlines()) if ln]
    try:
        n, m, k = (int(t) for t in lines[0].split())
        vectors = []
        for ln in lines[1:1 + n]:
            v = tuple(int(t) for t in ln.split())
            if len(v) != k:
                raise MasterkeyError("key row has wrong chamber count")
            vectors.append(v)
        arrays = []
        for ln in lines[1 + n:1 + n + m]:
            cells = ln.split()
            if len(cells) != k:
                raise MasterkeyError("lock row has wrong chamber count")
            arrays.append(tuple(frozenset(int(t) for t in cell.split(","))
                                for cell in cells))
        if len(vectors) != n or len(arrays) != m:
            raise MasterkeyError("implementation file truncated")
    except (ValueError, IndexError) as exc:
        raise MasterkeyError("implementation file: %s" % exc)
    return Implementation(tuple(vectors), tuple(arrays))


def format_implementation(impl: Implementation) -> str:
    k = len(impl.vectors[0]) if impl.vectors else 0
    lines = ["%d %d %d" % (len(impl.vectors), len(impl.arrays), k)]
    for v in impl.vectors:
        lines.append(" ".join(str(b) for b in v))
    for a in impl.arrays:
        lines.append(" ".join(",".join(str(c) for c in sorted(cell))
                              for cell in a))
    return "\n".join(lines) + "\n"


# The worked three-key / two-lock instance: a master over four
# two-depth chambers, one change key per lock.
TABLE1 = KeyLockMatrix(((1, 1), (1, 0), (0, 1)))
TABLE1_SYSTEM = LockingSystem((2, 2, 2, 2))
TABLE1_MASTER = (1, 2, 1, 2)
