"""Exact linear parameter expressions and an incremental equality store.

Every geometric quantity in the solid modeler is an affine form over
constraint variables with rational coefficients.  The store keeps a
triangular solved form (Gaussian elimination, no pivoting surprises:
the lowest variable id is always the pivot) so substitution is
deterministic and idempotent.  Inequalities are not solved; they are
deferred until both sides are ground and re-checked as equalities land.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable


_SMALL = {i: Fraction(i) for i in range(-16, 17)}


def _fr(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        f = _SMALL.get(x)
        if f is not None:
            return f
    return Fraction(x)


@dataclass(frozen=True)
class ParamExpr:
    """Affine form: const + sum(coeff * var).  coeffs sorted by var id."""

    const: Fraction
    coeffs: tuple[tuple[int, Fraction], ...] = ()

    @staticmethod
    def of(value) -> "ParamExpr":
        return ParamExpr(_fr(value))

    @staticmethod
    def var(vid: int, coeff=1) -> "ParamExpr":
        c = _fr(coeff)
        if c == 0:
            return ParamExpr(Fraction(0))
        return ParamExpr(Fraction(0), ((vid, c),))

    @staticmethod
    def build(const, coeffs: dict[int, Fraction]) -> "ParamExpr":
        items = tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))
        return ParamExpr(_fr(const), items)

    def coeff_map(self) -> dict[int, Fraction]:
        return dict(self.coeffs)

    @property
    def is_ground(self) -> bool:
        return not self.coeffs

    def ground_value(self) -> Fraction:
        if self.coeffs:
            raise ValueError("expression is not ground: %s" % (self,))
        return self.const

    def variables(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.coeffs)

    def __add__(self, other) -> "ParamExpr":
        other = _as_expr(other)
        m = self.coeff_map()
        for v, c in other.coeffs:
            m[v] = m.get(v, Fraction(0)) + c
        return ParamExpr.build(self.const + other.const, m)

    def __sub__(self, other) -> "ParamExpr":
        return self + (_as_expr(other) * -1)

    def __rsub__(self, other) -> "ParamExpr":
        return _as_expr(other) - self

    __radd__ = __add__

    def __mul__(self, k) -> "ParamExpr":
        k = _fr(k)
        return ParamExpr.build(self.const * k, {v: c * k for v, c in self.coeffs})

    __rmul__ = __mul__

    def __neg__(self) -> "ParamExpr":
        return self * -1

    def __str__(self) -> str:
        parts = [str(self.const)] if self.const or not self.coeffs else []
        parts += ["%s*v%d" % (c, v) for v, c in self.coeffs]
        return " + ".join(parts)


def _as_expr(x) -> ParamExpr:
    if isinstance(x, ParamExpr):
        return x
    return ParamExpr.of(x)


class Inconsistent(Exception):
    """Raised by assertions that contradict the store."""


class ConstraintStore:
    """Linear equalities in solved (triangular) form, with undo marks.

    Mutations append inverse records to a trail; ``rollback`` replays the
    trail backwards to a mark, restoring the solved form and the deferred
    inequality set exactly.
    """

    def __init__(self) -> None:
        self._next_var = 0
        self.solved: dict[int, ParamExpr] = {}
        # id -> (expr, active); invariant expr <= 0 when active
        self.deferred: dict[int, tuple[ParamExpr, bool]] = {}
        self._next_ineq = 0
        self._trail: list[tuple] = []

    # -- variables -------------------------------------------------------

    def fresh_var(self) -> int:
        vid = self._next_var
        self._next_var += 1
        self._trail.append(("var",))
        return vid

    # -- substitution ----------------------------------------------------

    def resolve(self, expr: ParamExpr) -> ParamExpr:
        """Substitute the solved form into expr."""
        if not expr.coeffs:
            return expr
        const = expr.const
        m: dict[int, Fraction] = {}
        for v, c in expr.coeffs:
            rhs = self.solved.get(v)
            if rhs is None:
                m[v] = m.get(v, Fraction(0)) + c
            else:
                const += c * rhs.const
                for w, cw in rhs.coeffs:
                    m[w] = m.get(w, Fraction(0)) + c * cw
        return ParamExpr.build(const, m)

    def value(self, expr: ParamExpr) -> Fraction:
        return self.resolve(expr).ground_value()

    # -- assertions ------------------------------------------------------

    def assert_equal(self, e1: ParamExpr, e2: ParamExpr) -> None:
        """Add e1 = e2; raises Inconsistent (store untouched) on clash."""
        r = self.resolve(_as_expr(e1) - _as_expr(e2))
        if not r.coeffs:
            if r.const != 0:
                raise Inconsistent("%s = 0" % r.const)
            return
        pivot, pc = r.coeffs[0]
        rest = ParamExpr.build(r.const, {v: c for v, c in r.coeffs[1:]})
        rhs = rest * (Fraction(-1) / pc)
        self._install(pivot, rhs)
        self._recheck_deferred()

    def assert_leq(self, e1: ParamExpr, e2: ParamExpr) -> str:
        """Add e1 <= e2.  Returns 'consistent' or 'deferred'."""
        r = self.resolve(_as_expr(e1) - _as_expr(e2))
        if not r.coeffs:
            if r.const > 0:
                raise Inconsistent("%s <= 0" % r.const)
            return "consistent"
        iid = self._next_ineq
        self._next_ineq += 1
        self.deferred[iid] = (r, True)
        self._trail.append(("defer", iid))
        return "deferred"

    def _install(self, pivot: int, rhs: ParamExpr) -> None:
        # Eliminate the new pivot from existing right-hand sides first so
        # the solved form stays triangular and substitution idempotent.
        updates = []
        for v, old in self.solved.items():
            m = old.coeff_map()
            c = m.pop(pivot, None)
            if c is None:
                continue
            new = ParamExpr.build(old.const, m) + rhs * c
            updates.append((v, old, new))
        for v, old, new in updates:
            self.solved[v] = new
            self._trail.append(("update", v, old))
        self.solved[pivot] = rhs
        self._trail.append(("solve", pivot))

    def _recheck_deferred(self) -> None:
        for iid in sorted(self.deferred):
            expr, active = self.deferred[iid]
            if not active:
                continue
            r = self.resolve(expr)
            if not r.coeffs:
                if r.const > 0:
                    raise Inconsistent("deferred %s <= 0" % r.const)
                self.deferred[iid] = (expr, False)
                self._trail.append(("settle", iid, expr))

    def pending_inequalities(self) -> list[ParamExpr]:
        return [self.resolve(e) for _, (e, active) in sorted(self.deferred.items()) if active]

    # -- snapshots -------------------------------------------------------

    def mark(self) -> int:
        return len(self._trail)

    def rollback(self, mark: int) -> None:
        while len(self._trail) > mark:
            entry = self._trail.pop()
            tag = entry[0]
            if tag == "var":
                self._next_var -= 1
            elif tag == "solve":
                del self.solved[entry[1]]
            elif tag == "update":
                self.solved[entry[1]] = entry[2]
            elif tag == "defer":
                del self.deferred[entry[1]]
                self._next_ineq -= 1
            elif tag == "settle":
                self.deferred[entry[1]] = (entry[2], True)
            else:  # pragma: no cover
                raise AssertionError(tag)

    def snapshot_key(self):
        """Canonical, comparable image of the store state."""
        return (
            self._next_var,
            tuple(sorted(self.solved.items())),
            tuple(sorted((i, e, a) for i, (e, a) in self.deferred.items())),
        )
