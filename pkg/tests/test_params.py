"""Linear parameter expressions and the incremental equality store."""

import random
from fractions import Fraction as F

import pytest

from lsd.params import ConstraintStore, Inconsistent, ParamExpr


def test_affine_arithmetic_exact():
    a = ParamExpr.var(0) * 2 + 3
    b = ParamExpr.var(1) - a
    assert a.coeffs == ((0, F(2)),) and a.const == F(3)
    assert b.coeffs == ((0, F(-2)), (1, F(1))) and b.const == F(-3)
    assert (a - a).is_ground and (a - a).const == 0
    assert (a * F(1, 2)).coeffs == ((0, F(1)),)


def test_zero_coefficients_are_dropped():
    e = ParamExpr.var(3) - ParamExpr.var(3)
    assert e == ParamExpr.of(0)
    assert ParamExpr.var(5, 0) == ParamExpr.of(0)


def test_ground_value_requires_ground():
    with pytest.raises(ValueError):
        ParamExpr.var(0).ground_value()
    assert ParamExpr.of(F(7, 3)).ground_value() == F(7, 3)


def test_solve_simple_chain():
    cs = ConstraintStore()
    x, y, z = (ParamExpr.var(cs.fresh_var()) for _ in range(3))
    cs.assert_equal(x, y + 1)
    cs.assert_equal(y, z * 2)
    cs.assert_equal(z, ParamExpr.of(3))
    assert cs.value(x) == 7 and cs.value(y) == 6 and cs.value(z) == 3


def test_inconsistent_leaves_store_untouched():
    cs = ConstraintStore()
    x = ParamExpr.var(cs.fresh_var())
    cs.assert_equal(x, ParamExpr.of(2))
    before = cs.snapshot_key()
    with pytest.raises(Inconsistent):
        cs.assert_equal(x, ParamExpr.of(3))
    assert cs.snapshot_key() == before


def test_deferred_inequality_settles_and_fails():
    cs = ConstraintStore()
    r1 = ParamExpr.var(cs.fresh_var())
    r2 = ParamExpr.var(cs.fresh_var())
    assert cs.assert_leq(r2, r1) == "deferred"
    assert len(cs.pending_inequalities()) == 1
    cs.assert_equal(r1, ParamExpr.of(2))
    cs.assert_equal(r2, ParamExpr.of(1))
    assert cs.pending_inequalities() == []

    cs2 = ConstraintStore()
    a = ParamExpr.var(cs2.fresh_var())
    cs2.assert_leq(a, ParamExpr.of(0))
    with pytest.raises(Inconsistent):
        cs2.assert_equal(a, ParamExpr.of(1))


def test_ground_inequality_checked_immediately():
    cs = ConstraintStore()
    assert cs.assert_leq(ParamExpr.of(1), ParamExpr.of(2)) == "consistent"
    with pytest.raises(Inconsistent):
        cs.assert_leq(ParamExpr.of(3), ParamExpr.of(2))


def test_rollback_restores_exactly():
    rng = random.Random(20240817)
    cs = ConstraintStore()
    vs = [ParamExpr.var(cs.fresh_var()) for _ in range(6)]
    cs.assert_equal(vs[0], vs[1] + 1)
    base = cs.snapshot_key()
    for _ in range(50):
        mark = cs.mark()
        try:
            for _ in range(rng.randrange(1, 5)):
                i, j = rng.randrange(6), rng.randrange(6)
                k = F(rng.randrange(-3, 4))
                if rng.random() < 0.5:
                    cs.assert_equal(vs[i], vs[j] + k)
                else:
                    cs.assert_leq(vs[i], vs[j] + k)
        except Inconsistent:
            pass
        cs.rollback(mark)
        assert cs.snapshot_key() == base


def test_resolve_is_idempotent_after_updates():
    cs = ConstraintStore()
    x, y, z = (ParamExpr.var(cs.fresh_var()) for _ in range(3))
    cs.assert_equal(x + y, z)
    cs.assert_equal(y, ParamExpr.of(4))
    r = cs.resolve(x + y + z)
    assert cs.resolve(r) == r
