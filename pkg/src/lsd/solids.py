"""2D design space: parametrized solids, selector interfaces, operations.

Solids are families of point sets, affine in their parameters so every
bonding constraint stays linear.  All geometry is exact rational; floats
appear only in SVG serialization (handled elsewhere).

Built-in registry (unit u = 1, translation-only placement):

  handle      fixed at the origin, 3 x 2, open right edge
  bit1/bit2   2 wide, 1 or 2 high, open left and right edges
  leveller    1 wide, independent left/right heights (the ramp piece)
  tip         1 wide triangle, free left height, open left edge
  lock_front  fixed at the origin, 1 x 3, open right edge
  chamber1/chamber2/chamber12   3 x 3 lock chamber, pin cuts drawn inside
  lock_back   1 x 3, open left edge
  square      parametrized directly by its open-edge endpoints
  disk        centre and radius; no open edges (punch operand)

The handle and lock front shell carry no position parameters: anchoring
one solid of each assembly fixes the translation gauge, so a finished
assembly is fully ground.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .params import ConstraintStore, Inconsistent, ParamExpr

Point = tuple[ParamExpr, ParamExpr]
GroundPoint = tuple[Fraction, Fraction]


class SolidError(Exception):
    """Interface misuse: unknown family, edge, or unbound parameter."""


@dataclass(frozen=True)
class EdgeTemplate:
    name: str
    # endpoint coordinates as affine functions of the family parameters
    start: tuple
    end: tuple


@dataclass(frozen=True)
class SolidFamily:
    name: str
    param_names: tuple[str, ...]
    # each polygon: list of vertices, coordinates affine in params
    polygons: tuple[tuple[tuple, ...], ...]
    edges: tuple[EdgeTemplate, ...]
    kind: str = "polygon"  # or "disk"
    properties: tuple[tuple[str, Fraction], ...] = ()

    @property
    def param_count(self) -> int:
        return len(self.param_names)


def _aff(const, coeffs=()):
    """Affine template entry: (const, ((param_index, coeff), ...))."""
    return (Fraction(const), tuple((i, Fraction(c)) for i, c in coeffs))


def _eval_template(tpl, params: list[ParamExpr]) -> ParamExpr:
    const, coeffs = tpl
    if not coeffs:
        return ParamExpr(const)
    total = const
    m: dict[int, Fraction] = {}
    for i, c in coeffs:
        p = params[i]
        if c == 1:
            total = total + p.const
            for v, pc in p.coeffs:
                m[v] = m.get(v, 0) + pc
        else:
            total = total + p.const * c
            for v, pc in p.coeffs:
                m[v] = m.get(v, 0) + pc * c
    return ParamExpr.build(total, m)


def _p(cx, cy):
    return (cx, cy)


_X = lambda i, c=1, k=0: _aff(k, [(i, c)])  # noqa: E731 - terse table helpers
_K = lambda k: _aff(k)  # noqa: E731


def _rect(x0, y0, x1, y1):
    """Axis-aligned rectangle template from corner templates (ccw)."""
    return (
        _p(x0, y0),
        _p(x1, y0),
        _p(x1, y1),
        _p(x0, y1),
    )


def _xplus(i, d):
    return _aff(d, [(i, 1)])


def _build_registry() -> dict[str, SolidFamily]:
    fams: dict[str, SolidFamily] = {}

    def add(fam: SolidFamily) -> None:
        fams[fam.name] = fam

    # handle: anchored rectangle [0,3] x [0,2]
    add(SolidFamily(
        name="handle", param_names=(),
        polygons=(_rect(_K(0), _K(0), _K(3), _K(2)),),
        edges=(EdgeTemplate("right", (_K(3), _K(2)), (_K(3), _K(0))),),
    ))

    for nm, h in (("bit1", 1), ("bit2", 2)):
        x, y = 0, 1
        add(SolidFamily(
            name=nm, param_names=("x", "y"),
            polygons=(_rect(_xplus(x, 0), _xplus(y, 0), _xplus(x, 2), _xplus(y, h)),),
            edges=(
                EdgeTemplate("left", (_xplus(x, 0), _xplus(y, 0)), (_xplus(x, 0), _xplus(y, h))),
                EdgeTemplate("right", (_xplus(x, 2), _xplus(y, h)), (_xplus(x, 2), _xplus(y, 0))),
            ),
        ))

    # leveller: quad with independent side heights hl, hr
    x, y, hl, hr = 0, 1, 2, 3
    add(SolidFamily(
        name="leveller", param_names=("x", "y", "hl", "hr"),
        polygons=((
            _p(_xplus(x, 0), _xplus(y, 0)),
            _p(_xplus(x, 1), _xplus(y, 0)),
            _p(_xplus(x, 1), _aff(0, [(y, 1), (hr, 1)])),
            _p(_xplus(x, 0), _aff(0, [(y, 1), (hl, 1)])),
        ),),
        edges=(
            EdgeTemplate("left", (_xplus(x, 0), _xplus(y, 0)),
                         (_xplus(x, 0), _aff(0, [(y, 1), (hl, 1)]))),
            EdgeTemplate("right", (_xplus(x, 1), _aff(0, [(y, 1), (hr, 1)])),
                         (_xplus(x, 1), _xplus(y, 0))),
        ),
    ))

    # tip: right triangle, free left height
    x, y, hl = 0, 1, 2
    add(SolidFamily(
        name="tip", param_names=("x", "y", "hl"),
        polygons=((
            _p(_xplus(x, 0), _xplus(y, 0)),
            _p(_xplus(x, 1), _xplus(y, 0)),
            _p(_xplus(x, 0), _aff(0, [(y, 1), (hl, 1)])),
        ),),
        edges=(EdgeTemplate("left", (_xplus(x, 0), _xplus(y, 0)),
                            (_xplus(x, 0), _aff(0, [(y, 1), (hl, 1)]))),),
    ))

    add(SolidFamily(
        name="lock_front", param_names=(),
        polygons=(_rect(_K(0), _K(0), _K(1), _K(3)),),
        edges=(EdgeTemplate("right", (_K(1), _K(3)), (_K(1), _K(0))),),
    ))

    def chamber(nm: str, cuts: tuple[int, ...]) -> SolidFamily:
        x, y = 0, 1
        polys = [_rect(_xplus(x, 0), _xplus(y, 0), _xplus(x, 3), _xplus(y, 3))]
        # pin cuts drawn as stacked inner segments; presentational only
        for c in cuts:
            h0 = Fraction(c, 2)
            polys.append(_rect(
                _xplus(x, Fraction(5, 4)), _aff(h0, [(y, 1)]),
                _xplus(x, Fraction(7, 4)), _aff(h0 + Fraction(1, 4), [(y, 1)]),
            ))
        return SolidFamily(
            name=nm, param_names=("x", "y"),
            polygons=tuple(polys),
            edges=(
                EdgeTemplate("left", (_xplus(x, 0), _xplus(y, 0)), (_xplus(x, 0), _xplus(y, 3))),
                EdgeTemplate("right", (_xplus(x, 3), _xplus(y, 3)), (_xplus(x, 3), _xplus(y, 0))),
            ),
        )

    add(chamber("chamber1", (1,)))
    add(chamber("chamber2", (2,)))
    add(chamber("chamber12", (1, 2)))

    x, y = 0, 1
    add(SolidFamily(
        name="lock_back", param_names=("x", "y"),
        polygons=(_rect(_xplus(x, 0), _xplus(y, 0), _xplus(x, 1), _xplus(y, 3)),),
        edges=(EdgeTemplate("left", (_xplus(x, 0), _xplus(y, 0)), (_xplus(x, 0), _xplus(y, 3))),),
    ))

    # square parametrized by its open-edge endpoints; body on the right
    # of the directed segment (x1,y1)->(x2,y2)
    x1, y1, x2, y2 = 0, 1, 2, 3
    n_x = _aff(0, [(y2, 1), (y1, -1)])        # right normal = (dy, -dx)
    n_y = _aff(0, [(x2, -1), (x1, 1)])
    add(SolidFamily(
        name="square", param_names=("x1", "y1", "x2", "y2"),
        polygons=((
            _p(_X(x1), _X(y1)),
            _p(_X(x2), _X(y2)),
            _p(_aff(0, [(x2, 1), (y2, 1), (y1, -1)]), _aff(0, [(y2, 1), (x2, -1), (x1, 1)])),
            _p(_aff(0, [(x1, 1), (y2, 1), (y1, -1)]), _aff(0, [(y1, 1), (x2, -1), (x1, 1)])),
        ),),
        edges=(EdgeTemplate("edge", (_X(x1), _X(y1)), (_X(x2), _X(y2))),),
    ))

    add(SolidFamily(
        name="disk", param_names=("b", "c", "r"),
        polygons=(),
        edges=(),
        kind="disk",
    ))

    return fams


FAMILIES: dict[str, SolidFamily] = _build_registry()


def register_family(fam: SolidFamily) -> None:
    """Extension hook (used by the property-conflict test family)."""
    if fam.name in FAMILIES:
        raise SolidError("family already registered: %s" % fam.name)
    FAMILIES[fam.name] = fam


@dataclass
class SolidInstance:
    iid: int
    family: Optional[SolidFamily]          # None for composites
    params: list[ParamExpr]
    open_edges: dict[str, tuple[Point, Point]]
    children: list[int] = field(default_factory=list)
    combinator: str = "union"              # union | difference
    alive: bool = True


@dataclass(frozen=True)
class Operation:
    """(F, L, C): combinator, selector list, linear constraint."""

    name: str
    arity: int
    combinator: str
    selector_kinds: tuple[str, ...]        # 'edge' | 'centre' per operand
    # constraint: callable(selected vars per operand) -> (eqs, leqs)
    constraint: Callable


def _edge_vars(inst: SolidInstance, edge_name: str):
    if edge_name not in inst.open_edges:
        raise SolidError("unknown or consumed edge %r" % edge_name)
    (sx, sy), (ex, ey) = inst.open_edges[edge_name]
    return (sx, sy, ex, ey)


def _centre_vars(inst: SolidInstance, _edge_name):
    if inst.family is None or inst.family.kind != "disk":
        raise SolidError("centre selector applies to disks only")
    b, c, r = inst.params
    return (b, c, r)


_SELECTORS = {"edge": _edge_vars, "centre": _centre_vars}


def _bond_constraint(sel):
    (s1x, s1y, e1x, e1y), (s2x, s2y, e2x, e2y) = sel
    eqs = [(s1x, e2x), (s1y, e2y), (e1x, s2x), (e1y, s2y)]
    return eqs, []


def _punch_constraint(sel):
    (b1, c1, r1), (b2, c2, r2) = sel
    return [(b1, b2), (c1, c2)], [(r2, r1)]


BONDING2D = Operation("bonding2d", 2, "union", ("edge", "edge"), _bond_constraint)
PUNCH = Operation("punch", 2, "difference", ("centre", "centre"), _punch_constraint)

OPERATIONS = {op.name: op for op in (BONDING2D, PUNCH)}


class SolidStore:
    """Instance table plus constraint store, with a LIFO snapshot stack."""

    def __init__(self) -> None:
        self.cs = ConstraintStore()
        self.instances: dict[int, SolidInstance] = {}
        self._next_iid = 0
        self._trail: list[tuple] = []

    # -- instantiation ---------------------------------------------------

    def new_instance(self, family_name: str, fixed_args: list[Fraction] | None = None) -> int:
        fam = FAMILIES.get(family_name)
        if fam is None:
            raise SolidError("unknown solid family %r" % family_name)
        fixed = fixed_args or []
        if len(fixed) > fam.param_count:
            raise SolidError("family %s takes at most %d args" % (fam.name, fam.param_count))
        params: list[ParamExpr] = []
        for i in range(fam.param_count):
            if i < len(fixed):
                params.append(ParamExpr.of(fixed[i]))
            else:
                params.append(ParamExpr.var(self.cs.fresh_var()))
        edges = {
            e.name: ((_eval_template(e.start[0], params), _eval_template(e.start[1], params)),
                     (_eval_template(e.end[0], params), _eval_template(e.end[1], params)))
            for e in fam.edges
        }
        iid = self._next_iid
        self._next_iid += 1
        self.instances[iid] = SolidInstance(iid, fam, params, edges)
        self._trail.append(("new", iid))
        return iid

    def get(self, iid: int) -> SolidInstance:
        inst = self.instances.get(iid)
        if inst is None or not inst.alive:
            raise SolidError("no live instance %d" % iid)
        return inst

    # -- selectors -------------------------------------------------------

    def edge_selector(self, iid: int, edge_name: str):
        return _edge_vars(self.get(iid), edge_name)

    # -- operations ------------------------------------------------------

    def apply_operation(self, op: Operation, operand_ids: list[int],
                        edge_choices: list[str | None]) -> int:
        """Apply op; returns composite instance id or raises Inconsistent.

        On constraint failure the store is rolled back to its state at
        entry; the instance table is untouched.
        """
        if len(operand_ids) != op.arity:
            raise SolidError("%s expects %d operands" % (op.name, op.arity))
        insts = [self.get(i) for i in operand_ids]
        selected = [
            _SELECTORS[kind](inst, choice)
            for kind, inst, choice in zip(op.selector_kinds, insts, edge_choices)
        ]
        eqs, leqs = op.constraint(selected)
        mark = self.cs.mark()
        try:
            for a, b in eqs:
                self.cs.assert_equal(a, b)
            for a, b in leqs:
                self.cs.assert_leq(a, b)
        except Inconsistent:
            self.cs.rollback(mark)
            raise
        return self._fuse(op, operand_ids, edge_choices)

    def assert_self_bond(self, iid: int, edge_a: str, edge_b: str) -> None:
        """Bond two open edges of one composite: constraints plus edge consumption."""
        inst = self.get(iid)
        sel = (_edge_vars(inst, edge_a), _edge_vars(inst, edge_b))
        eqs, _ = _bond_constraint(sel)
        mark = self.cs.mark()
        try:
            for a, b in eqs:
                self.cs.assert_equal(a, b)
        except Inconsistent:
            self.cs.rollback(mark)
            raise
        for nm in (edge_a, edge_b):
            self._trail.append(("edge_del", iid, nm, inst.open_edges[nm]))
            del inst.open_edges[nm]

    def _fuse(self, op: Operation, operand_ids: list[int], edge_choices: list) -> int:
        survivors: dict[str, tuple[Point, Point]] = {}
        for idx, (oid, consumed) in enumerate(zip(operand_ids, edge_choices)):
            inst = self.instances[oid]
            for nm, seg in inst.open_edges.items():
                if op.selector_kinds[idx] == "edge" and nm == consumed:
                    continue
                survivors["%d.%s" % (idx, nm)] = seg
            inst.alive = False
            self._trail.append(("kill", oid))
        iid = self._next_iid
        self._next_iid += 1
        comp = SolidInstance(iid, None, [], survivors, list(operand_ids), op.combinator)
        self.instances[iid] = comp
        self._trail.append(("new", iid))
        return iid

    # -- geometry --------------------------------------------------------

    def ground_params(self, iid: int) -> list[Fraction]:
        return [self.cs.value(p) for p in self.get(iid).params]

    def membership(self, iid: int, point: GroundPoint) -> bool:
        inst = self.get(iid)
        return self._member(inst, (Fraction(point[0]), Fraction(point[1])))

    def _member(self, inst: SolidInstance, pt: GroundPoint) -> bool:
        if inst.family is not None:
            return family_membership(inst.family, [self.cs.value(p) for p in inst.params], pt)
        if self._property_conflict(inst):
            return False
        children = [self.instances[c] for c in inst.children]
        if inst.combinator == "difference":
            return self._member(children[0], pt) and not self._member(children[1], pt)
        return any(self._member(c, pt) for c in children)

    def _property_conflict(self, inst: SolidInstance) -> bool:
        """Conflicting property values on overlapping children collapse
        the composite to the empty set (checked on rectangular carriers)."""
        boxes = []
        for cid in inst.children:
            c = self.instances[cid]
            if c.family is None or not c.family.properties:
                continue
            box = self._bbox(c)
            if box is not None:
                boxes.append((dict(c.family.properties), box))
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                pi, bi = boxes[i]
                pj, bj = boxes[j]
                if any(k in pj and pj[k] != v for k, v in pi.items()):
                    if _boxes_overlap(bi, bj):
                        return True
        return False

    def _bbox(self, inst: SolidInstance):
        if inst.family is None or inst.family.kind != "polygon":
            return None
        vals = [self.cs.value(p) for p in inst.params]
        xs, ys = [], []
        for poly in inst.family.polygons:
            for tx, ty in poly:
                xs.append(_eval_ground(tx, vals))
                ys.append(_eval_ground(ty, vals))
        if not xs:
            return None
        return (min(xs), min(ys), max(xs), max(ys))

    def outline(self, iid: int) -> list[list[GroundPoint]]:
        """Ground polygon list for rendering (disks approximated elsewhere)."""
        inst = self.get(iid)
        return self._outline(inst)

    def _outline(self, inst: SolidInstance) -> list[list[GroundPoint]]:
        if inst.family is not None:
            vals = [self.cs.value(p) for p in inst.params]
            if inst.family.kind == "disk":
                return []
            return [
                [(_eval_ground(tx, vals), _eval_ground(ty, vals)) for tx, ty in poly]
                for poly in inst.family.polygons
            ]
        out: list[list[GroundPoint]] = []
        for cid in inst.children:
            out.extend(self._outline(self.instances[cid]))
        return out

    def ground_edges(self, iid: int) -> dict[str, tuple[GroundPoint, GroundPoint]]:
        inst = self.get(iid)
        out = {}
        for nm, ((sx, sy), (ex, ey)) in inst.open_edges.items():
            out[nm] = ((self.cs.value(sx), self.cs.value(sy)),
                       (self.cs.value(ex), self.cs.value(ey)))
        return out

    def is_ground(self, iid: int) -> bool:
        return self._is_ground(self.get(iid))

    def _is_ground(self, inst: SolidInstance) -> bool:
        if inst.family is not None:
            return all(self.cs.resolve(p).is_ground for p in inst.params)
        return all(self._is_ground(self.instances[c]) for c in inst.children)

    def nonempty_witness(self, iid: int) -> bool:
        """Family-specific non-emptiness of a ground instance."""
        return self._witness(self.get(iid))

    def _witness(self, inst: SolidInstance) -> bool:
        if inst.family is None:
            if inst.combinator == "difference":
                # outer disk strictly larger, or inner strictly smaller
                a, b = (self.instances[c] for c in inst.children)
                ra = self.cs.value(a.params[2])
                rb = self.cs.value(b.params[2])
                return ra > 0 and rb < ra
            return any(self._witness(self.instances[c]) for c in inst.children)
        if inst.family.kind == "disk":
            return self.cs.value(inst.params[2]) > 0
        vals = [self.cs.value(p) for p in inst.params]
        return any(_poly_area2(poly, vals) != 0 for poly in inst.family.polygons)

    def outline_of_live(self, iid: int) -> list[list[GroundPoint]]:
        """Outline if the instance is live and ground, else None."""
        inst = self.instances.get(iid)
        if inst is None or not inst.alive or not self._is_ground(inst):
            return None
        return self._outline(inst)

    def geometry(self, iid: int):
        """Renderable record for a live, fully ground instance (else None).

        ``polys`` and ``disks`` carry a hole flag: difference composites
        mark their second operand's geometry as holes.
        """
        inst = self.instances.get(iid)
        if inst is None or not inst.alive or not self._is_ground(inst):
            return None
        polys: list = []
        disks: list = []
        self._collect_geom(inst, False, polys, disks)
        edges = {
            nm: ((self.cs.value(sx), self.cs.value(sy)),
                 (self.cs.value(ex), self.cs.value(ey)))
            for nm, ((sx, sy), (ex, ey)) in inst.open_edges.items()
        }
        return {"polys": polys, "disks": disks, "edges": edges}

    def _collect_geom(self, inst: SolidInstance, hole: bool, polys, disks) -> None:
        if inst.family is not None:
            vals = [self.cs.value(p) for p in inst.params]
            if inst.family.kind == "disk":
                disks.append((vals[0], vals[1], vals[2], hole))
            else:
                for poly in inst.family.polygons:
                    polys.append((hole, [(_eval_ground(tx, vals), _eval_ground(ty, vals))
                                         for tx, ty in poly]))
            return
        children = [self.instances[c] for c in inst.children]
        if inst.combinator == "difference":
            self._collect_geom(children[0], hole, polys, disks)
            self._collect_geom(children[1], not hole, polys, disks)
        else:
            for c in children:
                self._collect_geom(c, hole, polys, disks)

    # -- snapshots -------------------------------------------------------

    def mark(self):
        return (self.cs.mark(), len(self._trail))

    def rollback(self, mark) -> None:
        cs_mark, t_mark = mark
        while len(self._trail) > t_mark:
            entry = self._trail.pop()
            tag = entry[0]
            if tag == "new":
                del self.instances[entry[1]]
                self._next_iid -= 1
            elif tag == "kill":
                self.instances[entry[1]].alive = True
            elif tag == "edge_del":
                _, iid, nm, seg = entry
                self.instances[iid].open_edges[nm] = seg
            else:  # pragma: no cover
                raise AssertionError(tag)
        self.cs.rollback(cs_mark)

    def snapshot_key(self):
        insts = []
        for iid in sorted(self.instances):
            inst = self.instances[iid]
            insts.append((
                iid,
                inst.family.name if inst.family else None,
                tuple(self.cs.resolve(p) for p in inst.params),
                tuple(sorted(
                    (nm, self.cs.resolve(s[0]), self.cs.resolve(s[1]),
                     self.cs.resolve(e[0]), self.cs.resolve(e[1]))
                    for nm, (s, e) in inst.open_edges.items())),
                tuple(inst.children),
                inst.combinator,
                inst.alive,
            ))
        return (tuple(insts), self.cs.snapshot_key())


def _eval_ground(tpl, vals: list[Fraction]) -> Fraction:
    const, coeffs = tpl
    out = const
    for i, c in coeffs:
        out += c * vals[i]
    return out


def _poly_area2(poly, vals) -> Fraction:
    pts = [(_eval_ground(tx, vals), _eval_ground(ty, vals)) for tx, ty in poly]
    s = Fraction(0)
    for i in range(len(pts)):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % len(pts)]
        s += x1 * y2 - x2 * y1
    return s


def family_membership(fam: SolidFamily, vals: list[Fraction], pt: GroundPoint) -> bool:
    """Exact membership of a point in one ground family instance."""
    if fam.kind == "disk":
        b, c, r = vals
        return (pt[0] - b) ** 2 + (pt[1] - c) ** 2 <= r ** 2
    for poly in fam.polygons:
        if _point_in_convex(poly, vals, pt):
            return True
    return False


def _point_in_convex(poly, vals, pt) -> bool:
    pts = [(_eval_ground(tx, vals), _eval_ground(ty, vals)) for tx, ty in poly]
    if _poly_area2(poly, vals) == 0:
        return False
    sign = 1 if _poly_area2(poly, vals) > 0 else -1
    for i in range(len(pts)):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % len(pts)]
        cross = (x2 - x1) * (pt[1] - y1) - (y2 - y1) * (pt[0] - x1)
        if sign * cross < 0:
            return False
    return True
