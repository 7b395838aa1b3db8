"""Animations of solid operations: interpolants, plans, frames, SVG.

An animation maps a start vector x and a target vector y to a
time-parametrized path with exact rational boundary conditions
(path(t_start) = x, path(t_end) = y).  Two interpolant kinds ship:

  linear  f_i(t) = x_i + (t - ts) (y_i - x_i) / (te - ts)
  snap    f_i(t) = x_i + (t - ts)(t - ts + 1)(y_i - x_i)
                       / ((te - ts)(te - ts + 1))

The snap kind accelerates toward the target, giving a "snap" at the
end of the travel; both are polynomial in t (degree <= 2), hence
continuous.

A bond plan interpolates the edge-defining parameters of the two
operands of a 2D bonding from their current values to a solved target
under an anchoring policy.  Plans are pure data: validation and frame
rendering never touch the originating solid store.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

from .params import ConstraintStore, Inconsistent, ParamExpr
from .solids import SolidStore, _eval_template, _poly_area2

Vec = tuple[Fraction, ...]


class AnimationError(Exception):
    """Bad interval, unsolvable anchoring, or a non-ground plan."""


def _frac_vec(xs) -> Vec:
    return tuple(Fraction(x) for x in xs)


@dataclass(frozen=True)
class Animation:
    """n-ary interpolant over [t_start, t_end]; kind is linear or snap."""

    n: int
    t_start: Fraction
    t_end: Fraction
    kind: str  # "linear" | "snap"

    def at(self, x, y, t) -> Vec:
        """Evaluate the path for start x, target y at time t; exact."""
        x, y = _frac_vec(x), _frac_vec(y)
        t = Fraction(t)
        if len(x) != self.n or len(y) != self.n:
            raise AnimationError("vector arity mismatch")
        if not (self.t_start <= t <= self.t_end):
            raise AnimationError("time %s outside duration" % t)
        ts, te = self.t_start, self.t_end
        if self.kind == "linear":
            w = (t - ts) / (te - ts)
        else:
            w = (t - ts) * (t - ts + 1) / ((te - ts) * (te - ts + 1))
        return tuple(xi + w * (yi - xi) for xi, yi in zip(x, y))


def linear_animation(n: int, t_start=0, t_end=1) -> Animation:
    ts, te = Fraction(t_start), Fraction(t_end)
    if ts >= te:
        raise AnimationError("t_start must precede t_end")
    return Animation(n, ts, te, "linear")


def snap_animation(n: int, t_start=0, t_end=1) -> Animation:
    ts, te = Fraction(t_start), Fraction(t_end)
    if ts >= te:
        raise AnimationError("t_start must precede t_end")
    return Animation(n, ts, te, "snap")


# ---------------------------------------------------------------------------
# plans


@dataclass(frozen=True)
class OperandPlan:
    """How one operand's slice of the plan vector turns into geometry.

    Family operands carry their family name; the slice is the full
    parameter vector and geometry is evaluated from the family
    templates.  Composite operands carry a frozen base outline and the
    slice holds the moving edge's endpoints (sx, sy, ex, ey); frames
    translate the base outline by the edge-start displacement.
    """

    instance_id: int
    offset: int
    length: int
    family: Optional[str]
    edge: str = ""
    base_outline: tuple = ()  # composite: ((pt, ...), ...) at plan time


@dataclass(frozen=True)
class FramePlan:
    """An animation applied to concrete operands of one bonding."""

    animation: Animation
    operands: tuple[OperandPlan, ...]
    x: Vec
    y: Vec
    sample_count: int = 32

    def at(self, t) -> Vec:
        return self.animation.at(self.x, self.y, t)

    def slice_at(self, t, i: int) -> Vec:
        op = self.operands[i]
        v = self.at(t)
        return v[op.offset:op.offset + op.length]

    def times(self, k: Optional[int] = None) -> list[Fraction]:
        """k equally spaced sample times covering the duration."""
        k = self.sample_count if k is None else k
        if k < 2:
            raise AnimationError("need at least 2 samples")
        ts, te = self.animation.t_start, self.animation.t_end
        return [ts + Fraction(j, k - 1) * (te - ts) for j in range(k)]


ANCHOR_FIRST = "anchor_first"
ANCHOR_SECOND = "anchor_second"
MIDPOINT = "midpoint"


def _operand_vector(store: SolidStore, iid: int, edge: str):
    """(exprs, family, edge-endpoint index quadruple) for one operand.

    Family operands expose every family parameter; composites expose
    just the chosen edge's endpoint coordinates.
    """
    inst = store.get(iid)
    if inst.family is not None:
        if inst.family.kind != "polygon":
            raise AnimationError("operand %d has no bondable edge" % iid)
        tpl = next((e for e in inst.family.edges if e.name == edge), None)
        if tpl is None:
            raise AnimationError("unknown edge %r on %d" % (edge, iid))
        return list(inst.params), inst.family.name, tpl
    if edge not in inst.open_edges:
        raise AnimationError("unknown edge %r on %d" % (edge, iid))
    (sx, sy), (ex, ey) = inst.open_edges[edge]
    return [sx, sy, ex, ey], None, None


def _edge_exprs(family, tpl, scratch_vars):
    """Edge endpoints as ParamExpr over the scratch variables."""
    if family is None:
        v = scratch_vars
        return (v[0], v[1]), (v[2], v[3])
    params = list(scratch_vars)
    return ((_eval_template(tpl.start[0], params), _eval_template(tpl.start[1], params)),
            (_eval_template(tpl.end[0], params), _eval_template(tpl.end[1], params)))


def plan_bond_animation(store: SolidStore, iid_a: int, edge_a: str,
                        iid_b: int, edge_b: str,
                        anchoring: str = ANCHOR_FIRST,
                        kind: str = "linear",
                        t_start=0, t_end=1,
                        sample_count: int = 32) -> FramePlan:
    """Plan the motion that aligns two open edges for bonding.

    The target vector y solves the bonding equalities (each edge's
    start meets the other's end) under the anchoring policy; the start
    vector x is the operands' current state, with any coordinate the
    store has not yet fixed taking its target value (those components
    simply do not move).
    """
    if anchoring not in (ANCHOR_FIRST, ANCHOR_SECOND, MIDPOINT):
        raise AnimationError("unknown anchoring policy %r" % anchoring)

    exprs_a, fam_a, tpl_a = _operand_vector(store, iid_a, edge_a)
    exprs_b, fam_b, tpl_b = _operand_vector(store, iid_b, edge_b)
    exprs = exprs_a + exprs_b
    cur: list[Optional[Fraction]] = []
    for e in exprs:
        r = store.cs.resolve(e)
        cur.append(r.const if r.is_ground else None)

    scratch = ConstraintStore()

    def scratch_exprs(exprs_op, fam):
        # family operands are rigid via their templates; a composite
        # whose edge shape is already fixed relative to itself is
        # modeled as a translation, so the shape survives solving
        if fam is None:
            rs = [store.cs.resolve(e) for e in exprs_op]
            dx, dy = rs[2] - rs[0], rs[3] - rs[1]
            if dx.is_ground and dy.is_ground:
                tx = ParamExpr.var(scratch.fresh_var())
                ty = ParamExpr.var(scratch.fresh_var())
                return [tx, ty, tx + dx.const, ty + dy.const]
        return [ParamExpr.var(scratch.fresh_var()) for _ in exprs_op]

    sa = scratch_exprs(exprs_a, fam_a)
    sb = scratch_exprs(exprs_b, fam_b)
    sv = sa + sb
    start_a, end_a = _edge_exprs(fam_a, tpl_a, sa)
    start_b, end_b = _edge_exprs(fam_b, tpl_b, sb)

    try:
        # bonding equalities: start_a = end_b, end_a = start_b
        for p, q in ((start_a, end_b), (end_a, start_b)):
            scratch.assert_equal(p[0], q[0])
            scratch.assert_equal(p[1], q[1])
        if anchoring in (ANCHOR_FIRST, ANCHOR_SECOND):
            lo = 0 if anchoring == ANCHOR_FIRST else len(exprs_a)
            hi = lo + (len(exprs_a) if anchoring == ANCHOR_FIRST else len(exprs_b))
            for i in range(lo, hi):
                if cur[i] is None:
                    continue
                scratch.assert_equal(sv[i], ParamExpr.of(cur[i]))
        else:
            if any(c is None for c in cur):
                raise AnimationError("midpoint policy needs ground operands")
            cur_sa, cur_ea = _current_edge(fam_a, tpl_a, cur[:len(exprs_a)])
            cur_sb, cur_eb = _current_edge(fam_b, tpl_b, cur[len(exprs_a):])
            # matched endpoints meet halfway between their current spots
            meet_a = ((cur_sa[0] + cur_eb[0]) / 2, (cur_sa[1] + cur_eb[1]) / 2)
            meet_b = ((cur_ea[0] + cur_sb[0]) / 2, (cur_ea[1] + cur_sb[1]) / 2)
            for p, target in ((start_a, meet_a), (end_a, meet_b)):
                scratch.assert_equal(p[0], ParamExpr.of(target[0]))
                scratch.assert_equal(p[1], ParamExpr.of(target[1]))
        # leftover freedom: keep current values where known; a
        # coordinate free on both sides gets a unit default (free
        # variable assignment is the modeler's prerogative, and 1
        # keeps every shipped family non-degenerate)
        for i, e in enumerate(sv):
            if scratch.resolve(e).is_ground:
                continue
            if cur[i] is not None:
                scratch.assert_equal(e, ParamExpr.of(cur[i]))
        for e in sv:
            if not scratch.resolve(e).is_ground:
                scratch.assert_equal(e, ParamExpr.of(Fraction(1)))
    except Inconsistent as exc:
        raise AnimationError("anchoring %s unsolvable: %s" % (anchoring, exc))

    y = [scratch.resolve(e).ground_value() for e in sv]
    x = [c if c is not None else t for c, t in zip(cur, y)]

    op_a = _operand_plan(store, iid_a, edge_a, fam_a, 0, len(exprs_a),
                         exprs, y)
    op_b = _operand_plan(store, iid_b, edge_b, fam_b, len(exprs_a),
                         len(exprs_b), exprs, y)
    anim_ctor = linear_animation if kind == "linear" else snap_animation
    return FramePlan(anim_ctor(len(exprs), t_start, t_end),
                     (op_a, op_b), tuple(x), tuple(y), sample_count)


def _current_edge(family, tpl, cur_slice):
    """Current ((sx, sy), (ex, ey)) of an operand's bonded edge."""
    if family is None:
        return ((cur_slice[0], cur_slice[1]), (cur_slice[2], cur_slice[3]))
    vals = [ParamExpr.of(c) for c in cur_slice]
    return ((_eval_template(tpl.start[0], vals).const,
             _eval_template(tpl.start[1], vals).const),
            (_eval_template(tpl.end[0], vals).const,
             _eval_template(tpl.end[1], vals).const))


def _operand_plan(store: SolidStore, iid: int, edge: str,
                  family: Optional[str], offset: int, length: int,
                  exprs, y) -> OperandPlan:
    if family is not None:
        return OperandPlan(iid, offset, length, family, edge)
    # composite: freeze the outline at target-consistent positions so a
    # coordinate the store leaves free renders where it will end up
    mark = store.cs.mark()
    try:
        for e, target in zip(exprs[offset:offset + length],
                             y[offset:offset + length]):
            store.cs.assert_equal(e, ParamExpr.of(target))
        polys = store.outline_of_live(iid)
    except Inconsistent as exc:
        raise AnimationError("composite geometry inconsistent: %s" % exc)
    finally:
        store.cs.rollback(mark)
    base = tuple(tuple(p for p in poly) for poly in polys)
    # base outline is anchored at the target edge start; frames shift it
    return OperandPlan(iid, offset, length, None, edge, base)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    t: Fraction
    operand_index: int
    reason: str


def validate(plan: FramePlan, samples: Optional[int] = None):
    """Check the plan is a lawful operation animation.

    (a) the target vector satisfies the bonding equalities exactly and
    (b) every operand keeps a non-empty point set at each sample time
    (polygon area > 0, disk radius > 0).  Returns "ok" or the first
    Violation found.
    """
    from .solids import FAMILIES
    te = plan.animation.t_end
    # terminal constraint: start_a = end_b, end_a = start_b
    ea = _plan_edge(plan, 0, plan.y)
    eb = _plan_edge(plan, 1, plan.y)
    if ea[0] != eb[1] or ea[1] != eb[0]:
        return Violation(te, 0, "terminal vector violates bonding equalities")
    for t in plan.times(samples):
        v = plan.animation.at(plan.x, plan.y, t)
        for i, op in enumerate(plan.operands):
            part = v[op.offset:op.offset + op.length]
            if op.family is not None:
                fam = FAMILIES[op.family]
                vals = list(part)
                if fam.kind == "disk":
                    if vals[2] <= 0:
                        return Violation(t, i, "disk radius not positive")
                    continue
                for poly in fam.polygons:
                    if abs(_poly_area2(poly, vals)) == 0:
                        return Violation(t, i, "polygon area not positive")
            else:
                for poly in op.base_outline:
                    if abs(_outline_area2(poly)) == 0:
                        return Violation(t, i, "outline area not positive")
    return "ok"


def _outline_area2(poly) -> Fraction:
    s = Fraction(0)
    n = len(poly)
    for j in range(n):
        x1, y1 = poly[j]
        x2, y2 = poly[(j + 1) % n]
        s += x1 * y2 - x2 * y1
    return s


def _plan_edge(plan: FramePlan, i: int, v):
    """((sx, sy), (ex, ey)) of operand i's bonded edge at vector v."""
    from .solids import FAMILIES
    op = plan.operands[i]
    part = list(v[op.offset:op.offset + op.length])
    if op.family is None:
        return (part[0], part[1]), (part[2], part[3])
    fam = FAMILIES[op.family]
    tpl = next(e for e in fam.edges if e.name == op.edge)
    exprs = [ParamExpr.of(x) for x in part]
    s = (_eval_template(tpl.start[0], exprs).const,
         _eval_template(tpl.start[1], exprs).const)
    e = (_eval_template(tpl.end[0], exprs).const,
         _eval_template(tpl.end[1], exprs).const)
    return s, e


# ---------------------------------------------------------------------------
# frames and SVG


def reverse(plan: FramePlan) -> FramePlan:
    """Swap start and target: pure reverse playback of the motion."""
    return replace(plan, x=plan.y, y=plan.x)


@dataclass(frozen=True)
class CanvasSpec:
    width: int = 640
    height: int = 480
    margin: int = 24
    decimals: int = 4


def frame_geometry(plan: FramePlan, t) -> list[list[tuple[Fraction, Fraction]]]:
    """World-space polygons of every operand at time t."""
    from .solids import FAMILIES
    v = plan.animation.at(plan.x, plan.y, t)
    out: list[list[tuple[Fraction, Fraction]]] = []
    for op in plan.operands:
        part = list(v[op.offset:op.offset + op.length])
        if op.family is not None:
            fam = FAMILIES[op.family]
            if fam.kind == "disk":
                continue
            for poly in fam.polygons:
                pts = [(_ground(px, part), _ground(py, part)) for px, py in poly]
                out.append(pts)
        else:
            # translate the frozen outline by the edge-start displacement
            target = plan.y[op.offset:op.offset + op.length]
            dx = part[0] - target[0]
            dy = part[1] - target[1]
            for poly in op.base_outline:
                out.append([(px + dx, py + dy) for px, py in poly])
    return out


def _ground(tpl, vals) -> Fraction:
    const, coeffs = tpl
    out = const
    for i, c in coeffs:
        out += c * vals[i]
    return out


def fixed_decimal(value: Fraction, places: int = 4) -> str:
    """Deterministic fixed-point rendering (round half away from zero)."""
    value = Fraction(value)
    q = 10 ** places
    n = value.numerator * q
    d = value.denominator
    sign = "-" if n < 0 else ""
    n = abs(n)
    whole, rem = divmod(n, d)
    if 2 * rem >= d:
        whole += 1
    if places == 0:
        return "%s%d" % (sign, whole)
    return "%s%d.%0*d" % (sign, whole // q, places, whole % q)


def render_frame_svg(plan: FramePlan, t, canvas: CanvasSpec,
                     bbox=None) -> str:
    """One SVG 1.1 document for the state at time t."""
    polys = frame_geometry(plan, t)
    if bbox is None:
        bbox = plan_bbox(plan)
    minx, miny, maxx, maxy = bbox
    spanx = maxx - minx or Fraction(1)
    spany = maxy - miny or Fraction(1)
    avail_w = Fraction(canvas.width - 2 * canvas.margin)
    avail_h = Fraction(canvas.height - 2 * canvas.margin)
    scale = min(avail_w / spanx, avail_h / spany)
    f = lambda v: fixed_decimal(v, canvas.decimals)  # noqa: E731

    def sx(x):
        return f(Fraction(canvas.margin) + (x - minx) * scale)

    def sy(y):
        return f(Fraction(canvas.height - canvas.margin) - (y - miny) * scale)

    parts = ['<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
             'width="%d" height="%d">' % (canvas.width, canvas.height)]
    for poly in polys:
        pts = " ".join("%s,%s" % (sx(x), sy(y)) for x, y in poly)
        parts.append('<polygon points="%s" fill="#cfd8e3" '
                     'stroke="#26323f" stroke-width="1"/>' % pts)
    parts.append("</svg>")
    return "\n".join(parts)


def plan_bbox(plan: FramePlan):
    """World bounding box over the plan's sampled frames."""
    minx = miny = maxx = maxy = None
    for t in plan.times():
        for poly in frame_geometry(plan, t):
            for x, y in poly:
                minx = x if minx is None or x < minx else minx
                maxx = x if maxx is None or x > maxx else maxx
                miny = y if miny is None or y < miny else miny
                maxy = y if maxy is None or y > maxy else maxy
    if minx is None:
        return (Fraction(0), Fraction(0), Fraction(1), Fraction(1))
    return (minx, miny, maxx, maxy)


def render_frames(plan: FramePlan, k: int, canvas: Optional[CanvasSpec] = None) -> list[str]:
    """k SVG documents sampling the plan's duration uniformly."""
    canvas = canvas or CanvasSpec()
    bbox = plan_bbox(plan)
    return [render_frame_svg(plan, t, canvas, bbox) for t in plan.times(k)]


def write_frames(plan: FramePlan, k: int, directory: str,
                 canvas: Optional[CanvasSpec] = None) -> list[str]:
    """Write frame-%04d.svg files; returns the paths written."""
    import os
    os.makedirs(directory, exist_ok=True)
    paths = []
    for idx, doc in enumerate(render_frames(plan, k, canvas)):
        path = os.path.join(directory, "frame-%04d.svg" % idx)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(doc)
        paths.append(path)
    return paths
