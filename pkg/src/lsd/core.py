"""In-memory representation of programs, cases, and run-time specifications.

A Specification is the rewritable network the engine mutates: function
cells, i-components (design invocations) and e-components (solids),
wires grouped into nets, and bonds between edges.  Every mutation pushes
an inverse record onto a trail so any prefix of work can be undone
exactly; the same records serialize into trace deltas.

Simple terminals live in nets (connected wire components, acting as
shared logic variables).  Edge terminals live in at most one bond each.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

SIMPLE = "simple"
EDGE = "edge"


class StructuralError(Exception):
    """Violation of the graph rules (kind mismatch, dangling reference)."""


@dataclass(frozen=True)
class Signature:
    name: str
    kinds: tuple[str, ...]

    @property
    def arity(self) -> int:
        return len(self.kinds)


# ---------------------------------------------------------------------------
# Case templates (compiled program bodies, instantiated by the engine)


@dataclass
class FuncTemplate:
    name: str
    root: int
    args: list[int]


@dataclass
class CallTemplate:
    design_name: str
    terminals: list[int]
    negated: bool = False


@dataclass
class SolidTemplate:
    family: str
    fixed_args: list[Fraction]
    edge_binds: dict[str, int]  # family edge name -> local edge terminal


@dataclass
class CaseTemplate:
    head: list[int]                    # local terminal ids, in order
    kinds: dict[int, str]              # local terminal -> simple|edge
    cells: list[object]                # templates in statement order
    nets: list[list[int]]              # partition of local simple terminals
    bonds: list[tuple[int, int]]       # pairs of local edge terminals
    # names kept for diagnostics/printing
    term_names: dict[int, str] = field(default_factory=dict)


@dataclass
class Design:
    signature: Signature
    cases: list[CaseTemplate]


@dataclass
class Query:
    name: str
    body: CaseTemplate                 # headless (head == [])


class Program:
    def __init__(self) -> None:
        self.designs: dict[str, Design] = {}
        self.queries: dict[str, Query] = {}

    def design(self, name: str) -> Design:
        d = self.designs.get(name)
        if d is None:
            raise StructuralError("unknown design %r" % name)
        return d

    def is_definition(self, name: str) -> bool:
        """True iff no e-component is reachable from the design's cases."""
        seen: set[str] = set()

        def reaches_solid(n: str) -> bool:
            if n in seen:
                return False
            seen.add(n)
            d = self.designs.get(n)
            if d is None:
                return False
            for case in d.cases:
                for cell in case.cells:
                    if isinstance(cell, SolidTemplate):
                        return True
                    if isinstance(cell, CallTemplate) and reaches_solid(cell.design_name):
                        return True
            return False

        return not reaches_solid(name)


# ---------------------------------------------------------------------------
# Run-time cells


@dataclass
class FunctionCell:
    cid: int
    name: str
    root: int
    args: list[int]


@dataclass
class IComponent:
    cid: int
    signature: Signature
    terminals: list[int]
    negated: bool
    priority: tuple[int, ...]


@dataclass
class EComponent:
    cid: int
    instance_id: int
    open_edges: dict[str, int]         # edge name -> edge terminal id


Cell = FunctionCell | IComponent | EComponent


class Specification:
    """The engine's mutable graph state, with exact undo."""

    def __init__(self) -> None:
        self.cells: dict[int, Cell] = {}
        self.term_owner: dict[int, tuple[int, str]] = {}   # tid -> (cid, kind)
        self.nets: dict[int, set[int]] = {}
        self.term_net: dict[int, int] = {}
        self.bonds: dict[int, tuple[int, int]] = {}
        self.edge_bond: dict[int, int] = {}
        self.bindings: dict[str, object] = {}
        self.net_labels: dict[int, tuple[str, ...]] = {}
        self.icomps: dict[int, IComponent] = {}
        self._next_cid = 0
        self._next_tid = 0
        self._next_nid = 0
        self._next_bid = 0
        self.trail: list[tuple] = []

    # -- id allocation (counter bumps are trailed so undo is exact) -------

    def _fresh(self, attr: str) -> int:
        v = getattr(self, attr)
        setattr(self, attr, v + 1)
        return v

    # -- queries ----------------------------------------------------------

    def kind_of(self, tid: int) -> str:
        return self.term_owner[tid][1]

    def cell_of(self, tid: int) -> Cell:
        return self.cells[self.term_owner[tid][0]]

    def live_icomponents(self) -> list[IComponent]:
        return sorted(self.icomps.values(), key=lambda c: c.priority)

    def min_icomponent(self) -> Optional[IComponent]:
        if not self.icomps:
            return None
        return min(self.icomps.values(), key=lambda c: c.priority)

    def net_roots(self, nid: int) -> list[FunctionCell]:
        """Function cells whose root terminal lies in this net."""
        out = []
        cells = self.cells
        owner = self.term_owner
        for tid in self.nets[nid]:
            cell = cells[owner[tid][0]]
            if type(cell) is FunctionCell and cell.root == tid:
                out.append(cell)
        if len(out) > 1:
            out.sort(key=lambda c: c.cid)
        return out

    # -- construction -----------------------------------------------------

    def add_function(self, name: str, arity: int) -> FunctionCell:
        cid = self._next_cid
        self._next_cid = cid + 1
        t0 = self._next_tid
        self._next_tid = t0 + arity + 1
        tids = list(range(t0, t0 + arity + 1))
        cell = FunctionCell(cid, name, t0, tids[1:])
        self._register(cell, [(t, SIMPLE) for t in tids])
        return cell

    def add_icomponent(self, sig: Signature, negated: bool,
                       priority: tuple[int, ...]) -> IComponent:
        cid = self._fresh("_next_cid")
        tids = [self._fresh("_next_tid") for _ in sig.kinds]
        cell = IComponent(cid, sig, tids, negated, priority)
        self._register(cell, list(zip(tids, sig.kinds)))
        return cell

    def add_ecomponent(self, instance_id: int, edge_names: list[str]) -> EComponent:
        cid = self._fresh("_next_cid")
        edges = {nm: self._fresh("_next_tid") for nm in edge_names}
        cell = EComponent(cid, instance_id, edges)
        self._register(cell, [(t, EDGE) for t in edges.values()])
        return cell

    def _register(self, cell: Cell, terms: list[tuple[int, str]]) -> None:
        self.cells[cell.cid] = cell
        if isinstance(cell, IComponent):
            self.icomps[cell.cid] = cell
        new_nets = []
        cid = cell.cid
        owner = self.term_owner
        nets = self.nets
        term_net = self.term_net
        nid = self._next_nid
        for tid, kind in terms:
            owner[tid] = (cid, kind)
            if kind == SIMPLE:
                nets[nid] = {tid}
                term_net[tid] = nid
                new_nets.append(nid)
                nid += 1
        self._next_nid = nid
        self.trail.append(("cell+", cid, tuple(t for t, _ in terms), tuple(new_nets)))

    # -- wires ------------------------------------------------------------

    def connect(self, a: int, b: int) -> None:
        """Union the nets of two simple terminals (no-op if already one)."""
        na = self.term_net.get(a)
        nb = self.term_net.get(b)
        if na is None or nb is None:
            for t in (a, b):
                if t not in self.term_owner:
                    raise StructuralError("dead terminal %d" % t)
            raise StructuralError("wire requires simple terminals")
        if na == nb:
            return
        kept, removed = (na, nb) if len(self.nets[na]) >= len(self.nets[nb]) else (nb, na)
        moved = tuple(sorted(self.nets[removed]))
        for t in moved:
            self.term_net[t] = kept
        self.nets[kept] |= self.nets[removed]
        del self.nets[removed]
        old_kept = self.net_labels.get(kept)
        old_removed = self.net_labels.pop(removed, None)
        if old_removed is not None:
            merged = tuple(dict.fromkeys((old_kept or ()) + old_removed))
            self.net_labels[kept] = merged
        self.trail.append(("union", kept, removed, moved, old_kept, old_removed))

    def label_net(self, nid: int, name: str) -> None:
        """Attach a query-variable name to a net (for binding capture)."""
        old = self.net_labels.get(nid)
        self.net_labels[nid] = tuple(dict.fromkeys((old or ()) + (name,)))
        self.trail.append(("label", nid, old))

    # -- bonds ------------------------------------------------------------

    def add_bond(self, a: int, b: int) -> int:
        for t in (a, b):
            if t not in self.term_owner:
                raise StructuralError("dead terminal %d" % t)
            if self.kind_of(t) != EDGE:
                raise StructuralError("bond requires edges")
            if t in self.edge_bond:
                raise StructuralError("edge %d already bonded" % t)
        if a == b:
            raise StructuralError("bond cannot join an edge to itself")
        bid = self._fresh("_next_bid")
        self.bonds[bid] = (a, b)
        self.edge_bond[a] = bid
        self.edge_bond[b] = bid
        self.trail.append(("bond+", bid))
        return bid

    def remove_bond(self, bid: int) -> None:
        a, b = self.bonds.pop(bid)
        del self.edge_bond[a]
        del self.edge_bond[b]
        self.trail.append(("bond-", bid, a, b))

    # -- cell removal -----------------------------------------------------

    def remove_cell(self, cid: int) -> None:
        """Remove a cell; simple terminals leave their nets, empty nets die.

        Edge terminals must be bond-free before removal.
        """
        cell = self.cells[cid]
        restore = []
        for tid in _cell_terms(cell):
            kind = self.kind_of(tid)
            if kind == SIMPLE:
                nid = self.term_net.pop(tid)
                self.nets[nid].discard(tid)
                died = not self.nets[nid]
                if died:
                    del self.nets[nid]
                restore.append((tid, kind, nid, died))
            else:
                if tid in self.edge_bond:
                    raise StructuralError("removing cell with bonded edge %d" % tid)
                restore.append((tid, kind, None, False))
            del self.term_owner[tid]
        del self.cells[cid]
        self.icomps.pop(cid, None)
        dead_labels = tuple(
            (nid, self.net_labels.pop(nid))
            for _, kind, nid, died in restore
            if died and nid in self.net_labels
        )
        self.trail.append(("cell-", cid, cell, tuple(restore), dead_labels))

    # -- e-component fusion (bond execution support) ----------------------

    def fuse_ecomponents(self, cid_a: int, cid_b: int, consumed: tuple[int, int],
                         new_instance_id: int,
                         renamed_edges: dict[str, int]) -> EComponent:
        """Replace two solid cells with one composite, adopting edges.

        ``renamed_edges`` maps new edge names to surviving edge terminal
        ids of the two old cells; ``consumed`` names the two edge
        terminals fused away.  Surviving terminals keep their ids so any
        other bonds on them remain valid.
        """
        old_a, old_b = self.cells[cid_a], self.cells[cid_b]
        for tid in consumed:
            if tid in self.edge_bond:
                raise StructuralError("fusing a still-bonded edge %d" % tid)
        cid = self._fresh("_next_cid")
        cell = EComponent(cid, new_instance_id, dict(renamed_edges))
        del self.cells[cid_a]
        del self.cells[cid_b]
        self.cells[cid] = cell
        for tid in consumed:
            del self.term_owner[tid]
        for tid in renamed_edges.values():
            self.term_owner[tid] = (cid, EDGE)
        self.trail.append(("fuse", cid, old_a, old_b, tuple(consumed),
                           dict(renamed_edges)))
        return cell

    def consume_edges(self, cid: int, tids: list[int]) -> None:
        """Remove open-edge terminals from a solid cell (self-bond fusion)."""
        cell = self.cells[cid]
        if not isinstance(cell, EComponent):
            raise StructuralError("consume_edges on non-solid cell %d" % cid)
        removed = []
        for tid in tids:
            if tid in self.edge_bond:
                raise StructuralError("consuming a still-bonded edge %d" % tid)
            name = next(nm for nm, t in cell.open_edges.items() if t == tid)
            del cell.open_edges[name]
            del self.term_owner[tid]
            removed.append((name, tid))
        self.trail.append(("edges-", cid, tuple(removed)))

    def record_binding(self, name: str, value) -> None:
        old = self.bindings.get(name)
        self.bindings[name] = value
        self.trail.append(("bind", name, old))

    # -- undo -------------------------------------------------------------

    def mark(self) -> int:
        return len(self.trail)

    def undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            entry = self.trail.pop()
            tag = entry[0]
            if tag == "cell+":
                _, cid, tids, nids = entry
                for tid in tids:
                    if self.term_owner[tid][1] == SIMPLE:
                        nid = self.term_net.pop(tid)
                        self.nets[nid].discard(tid)
                        if not self.nets[nid]:
                            del self.nets[nid]
                    del self.term_owner[tid]
                del self.cells[cid]
                self.icomps.pop(cid, None)
                self._next_cid -= 1
                self._next_tid -= len(tids)
                self._next_nid -= len(nids)
            elif tag == "cell-":
                _, cid, cell, restore, dead_labels = entry
                self.cells[cid] = cell
                if isinstance(cell, IComponent):
                    self.icomps[cid] = cell
                for tid, kind, nid, died in restore:
                    self.term_owner[tid] = (cid, kind)
                    if kind == SIMPLE:
                        if died:
                            self.nets[nid] = set()
                        self.nets[nid].add(tid)
                        self.term_net[tid] = nid
                for nid, labels in dead_labels:
                    self.net_labels[nid] = labels
            elif tag == "union":
                _, kept, removed, moved, old_kept, old_removed = entry
                self.nets[removed] = set(moved)
                for t in moved:
                    self.nets[kept].discard(t)
                    self.term_net[t] = removed
                if old_removed is not None:
                    self.net_labels[removed] = old_removed
                    if old_kept is None:
                        self.net_labels.pop(kept, None)
                    else:
                        self.net_labels[kept] = old_kept
            elif tag == "label":
                _, nid, old = entry
                if old is None:
                    self.net_labels.pop(nid, None)
                else:
                    self.net_labels[nid] = old
            elif tag == "fuse":
                _, cid, old_a, old_b, consumed, renamed = entry
                del self.cells[cid]
                self.cells[old_a.cid] = old_a
                self.cells[old_b.cid] = old_b
                for old in (old_a, old_b):
                    for tid in old.open_edges.values():
                        self.term_owner[tid] = (old.cid, EDGE)
                self._next_cid -= 1
            elif tag == "edges-":
                _, cid, removed = entry
                cell = self.cells[cid]
                for name, tid in removed:
                    cell.open_edges[name] = tid
                    self.term_owner[tid] = (cid, EDGE)
            elif tag == "bond+":
                bid = entry[1]
                a, b = self.bonds.pop(bid)
                del self.edge_bond[a]
                del self.edge_bond[b]
                self._next_bid -= 1
            elif tag == "bond-":
                _, bid, a, b = entry
                self.bonds[bid] = (a, b)
                self.edge_bond[a] = bid
                self.edge_bond[b] = bid
            elif tag == "bind":
                _, name, old = entry
                if old is None:
                    self.bindings.pop(name, None)
                else:
                    self.bindings[name] = old
            else:  # pragma: no cover
                raise AssertionError(tag)

    # -- audits and snapshots --------------------------------------------

    def audit(self) -> None:
        """Structural integrity check (used by tests)."""
        seen = set()
        for nid, members in self.nets.items():
            if not members:
                raise StructuralError("empty net %d" % nid)
            for t in members:
                if t in seen:
                    raise StructuralError("terminal %d in two nets" % t)
                seen.add(t)
                if self.term_net.get(t) != nid:
                    raise StructuralError("net map mismatch at %d" % t)
                if self.term_owner[t][1] != SIMPLE:
                    raise StructuralError("edge terminal %d in a net" % t)
        for t, (cid, kind) in self.term_owner.items():
            if cid not in self.cells:
                raise StructuralError("terminal %d of dead cell" % t)
            if kind == SIMPLE and t not in seen:
                raise StructuralError("simple terminal %d outside nets" % t)
        for bid, (a, b) in self.bonds.items():
            for t in (a, b):
                if self.term_owner.get(t, (None, None))[1] != EDGE:
                    raise StructuralError("bond %d on non-edge" % bid)
                if self.edge_bond.get(t) != bid:
                    raise StructuralError("bond index mismatch at %d" % t)

    def snapshot_key(self):
        cells = []
        for cid in sorted(self.cells):
            c = self.cells[cid]
            if isinstance(c, FunctionCell):
                cells.append((cid, "func", c.name, c.root, tuple(c.args)))
            elif isinstance(c, IComponent):
                cells.append((cid, "icomp", c.signature.name, tuple(c.terminals),
                              c.negated, c.priority))
            else:
                cells.append((cid, "ecomp", c.instance_id,
                              tuple(sorted(c.open_edges.items()))))
        nets = tuple(sorted(tuple(sorted(m)) for m in self.nets.values()))
        bonds = tuple(sorted((min(a, b), max(a, b)) for a, b in self.bonds.values()))
        binds = tuple(sorted(self.bindings.items()))
        return (tuple(cells), nets, bonds, binds)


def _cell_terms(cell: Cell) -> list[int]:
    if isinstance(cell, FunctionCell):
        return [cell.root] + list(cell.args)
    if isinstance(cell, IComponent):
        return list(cell.terminals)
    return list(cell.open_edges.values())


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Diagnostic:
    message: str
    where: str


def validate(program: Program) -> list[Diagnostic]:
    """Static checks over a compiled program (and its queries)."""
    from .solids import FAMILIES

    out: list[Diagnostic] = []
    for name, design in program.designs.items():
        if "#dup" in name:
            out.append(Diagnostic(
                "duplicate design %r" % design.signature.name, design.signature.name))
            continue
        for i, case in enumerate(design.cases):
            where = "%s/case %d" % (name, i)
            if [case.kinds[t] for t in case.head] != list(design.signature.kinds):
                out.append(Diagnostic("case head does not match signature", where))
            out.extend(_check_case(program, case, where))
    for qname, query in program.queries.items():
        out.extend(_check_case(program, query.body, "query %s" % qname))

    def fam_ok(template: SolidTemplate, where: str) -> None:
        fam = FAMILIES.get(template.family)
        if fam is None:
            out.append(Diagnostic("unknown solid family %r" % template.family, where))
            return
        if len(template.fixed_args) > fam.param_count:
            out.append(Diagnostic("too many args for family %r" % template.family, where))
        for nm in template.edge_binds:
            if nm not in {e.name for e in fam.edges}:
                out.append(Diagnostic("family %r has no edge %r" % (template.family, nm), where))

    for name, design in program.designs.items():
        for i, case in enumerate(design.cases):
            for cell in case.cells:
                if isinstance(cell, SolidTemplate):
                    fam_ok(cell, "%s/case %d" % (name, i))
    for qname, query in program.queries.items():
        for cell in query.body.cells:
            if isinstance(cell, SolidTemplate):
                fam_ok(cell, "query %s" % qname)
    return out


def _check_case(program: Program, case: CaseTemplate, where: str) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    for cell in case.cells:
        if isinstance(cell, CallTemplate):
            d = program.designs.get(cell.design_name)
            if d is None:
                out.append(Diagnostic("unknown design %r" % cell.design_name, where))
                continue
            kinds = [case.kinds[t] for t in cell.terminals]
            if kinds != list(d.signature.kinds):
                out.append(Diagnostic(
                    "call to %s has terminal kinds %s, signature wants %s"
                    % (cell.design_name, kinds, list(d.signature.kinds)), where))
            if cell.negated and not program.is_definition(cell.design_name):
                out.append(Diagnostic(
                    "negation restricted to definitions: %s reaches e-components"
                    % cell.design_name, where))
    for a, b in case.bonds:
        for t in (a, b):
            if case.kinds.get(t) != EDGE:
                out.append(Diagnostic("bond requires edges", where))
    for net in case.nets:
        for t in net:
            if case.kinds.get(t) != SIMPLE:
                out.append(Diagnostic("wire requires simple terminals", where))
    # dangling references
    known = set(case.kinds)
    for cell in case.cells:
        refs = []
        if isinstance(cell, FuncTemplate):
            refs = [cell.root] + cell.args
        elif isinstance(cell, CallTemplate):
            refs = cell.terminals
        elif isinstance(cell, SolidTemplate):
            refs = list(cell.edge_binds.values())
        for t in refs:
            if t not in known:
                out.append(Diagnostic("dangling terminal reference %d" % t, where))
    return out
