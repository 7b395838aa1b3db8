"""The rewriting engine: scheduling, backtracking, tracing, replay.

A run repeatedly applies four rules to a Specification:

- merge: two function cells whose roots share a net unify (clash fails),
- deletion: a function cell whose root net is a singleton disappears,
- replacement: the lowest-priority invocation expands to one of its cases,
- bond execution: a bond whose two ends are solid edges fuses the solids
  through the modeler.

Scheduling is deterministic: merges and deletions run to fixpoint, then
executable bonds fire (lowest id first), then the lowest-priority
invocation is handled (depth-first: a child inherits its parent's
priority extended by its textual position).  Negated invocations run
negation-as-failure on a copied subgraph; no bindings flow out.

Every rule application emits a TraceEvent whose payload carries an
invertible, self-contained delta, so traces replay (and rewind through
backtracking) without re-executing the engine.  The final-state hash is
the sha256 of the canonical model dump, which replay reproduces
byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .core import (
    EDGE,
    SIMPLE,
    CallTemplate,
    CaseTemplate,
    EComponent,
    FuncTemplate,
    FunctionCell,
    IComponent,
    Program,
    Signature,
    SolidTemplate,
    Specification,
    StructuralError,
)
from .params import Inconsistent
from .solids import BONDING2D, SolidStore

DEFAULT_BUDGET = 100000


class EngineError(Exception):
    pass


@dataclass
class TraceEvent:
    step: int
    kind: str
    payload: dict

    def to_json(self) -> str:
        return json.dumps(
            {"step": self.step, "kind": self.kind, "payload": self.payload},
            sort_keys=True, separators=(",", ":"))


@dataclass
class _ChoicePoint:
    icomp_cid: int
    next_case: int
    spec_mark: int
    solid_mark: tuple
    step_start: int


def _fs(x: Fraction) -> str:
    return str(Fraction(x))


def _ser(x):
    """Recursively stringify Fractions for JSON payloads."""
    if isinstance(x, Fraction):
        return _fs(x)
    if isinstance(x, dict):
        return {str(k): _ser(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_ser(v) for v in x]
    return x


class ExecutionState:
    """One engine run over a query; resumable and enumerable."""

    def __init__(self, program: Program, budget: int = DEFAULT_BUDGET,
                 trace: bool = True) -> None:
        self.program = program
        self.spec = Specification()
        self.solids = SolidStore()
        self.budget = budget
        self.trace = trace
        self.events: list[TraceEvent] = []
        self.sink: Optional[Callable[[TraceEvent], None]] = None
        self.steps_used = 0
        self.status = "running"   # running | success | exhausted | budget
        self.choice_stack: list[_ChoicePoint] = []
        self.watched_names: list[str] = []
        self._dirty: deque[int] = deque()
        self._dirty_set: set[int] = set()
        self._geom: dict[int, Optional[dict]] = {}
        self._next_step = 0
        self._sig_cache: dict[str, Signature] = {}
        # observer called before each two-operand bond execution with
        # (instance_a, edge_a, instance_b, edge_b); used for animation
        self.on_bond: Optional[Callable[[int, str, int, str], None]] = None

    # ------------------------------------------------------------------
    # setup

    @staticmethod
    def start(program: Program, query_name: str,
              budget: int = DEFAULT_BUDGET, trace: bool = True) -> "ExecutionState":
        q = program.queries.get(query_name)
        if q is None:
            raise EngineError("unknown query %r" % query_name)
        st = ExecutionState(program, budget, trace)
        st._instantiate(q.body, (), {}, {})
        st._label_query_nets(q.body)
        if st.trace:
            st._refresh_geom(collect=None)
            st._emit("snapshot", {"model": st.model_dump()})
        return st

    def _label_query_nets(self, body: CaseTemplate) -> None:
        seen: set[str] = set()
        for group in body.nets:
            names = [body.term_names[t] for t in group
                     if t in body.term_names and body.term_names[t] != "_"]
            anchor = next((t for t in group if t in self._last_local_tid), None)
            if anchor is None:
                continue
            nid = self.spec.term_net[self._last_local_tid[anchor]]
            for nm in names:
                if nm not in seen:
                    seen.add(nm)
                    self.watched_names.append(nm)
                self.spec.label_net(nid, nm)

    # ------------------------------------------------------------------
    # tracing

    def _emit(self, kind: str, payload: dict) -> Optional[TraceEvent]:
        step = self._next_step
        self._next_step += 1
        if not self.trace:
            return None
        ev = TraceEvent(step, kind, payload)
        self.events.append(ev)
        if self.sink is not None:
            self.sink(ev)
        return ev

    def _mark_dirty(self, nid: int) -> None:
        if nid not in self._dirty_set:
            self._dirty_set.add(nid)
            self._dirty.append(nid)

    def _pop_dirty(self) -> Optional[int]:
        nets = self.spec.nets
        while self._dirty:
            nid = self._dirty.popleft()
            self._dirty_set.discard(nid)
            if nid in nets:
                return nid
        return None

    # ------------------------------------------------------------------
    # instantiation (query load and replacement both go through here)

    def _instantiate(self, case: CaseTemplate, parent_priority: tuple,
                     head_simple: dict[int, int], head_edge: dict[int, Optional[int]]):
        """Builds the case body in the live spec.

        head_simple maps head simple locals to outer simple terminals;
        head_edge maps head edge locals to the outer bond partner (or
        None when the invocation edge was unbonded: that attachment
        dangles).
        """
        spec = self.spec
        local_tid: dict[int, int] = {}
        call_index = 0
        for tmpl in case.cells:
            if isinstance(tmpl, FuncTemplate):
                cell = spec.add_function(tmpl.name, len(tmpl.args))
                local_tid[tmpl.root] = cell.root
                for loc, tid in zip(tmpl.args, cell.args):
                    local_tid[loc] = tid
            elif isinstance(tmpl, CallTemplate):
                sig = self._sig_cache.get(tmpl.design_name)
                if sig is None:
                    sig = self.program.design(tmpl.design_name).signature
                    self._sig_cache[tmpl.design_name] = sig
                cell = spec.add_icomponent(sig, tmpl.negated,
                                           parent_priority + (call_index,))
                call_index += 1
                for loc, tid in zip(tmpl.terminals, cell.terminals):
                    local_tid[loc] = tid
            elif isinstance(tmpl, SolidTemplate):
                iid = self.solids.new_instance(tmpl.family, tmpl.fixed_args)
                names = [e.name for e in self.solids.get(iid).family.edges]
                cell = spec.add_ecomponent(iid, names)
                self._geom[iid] = None
                for ename, loc in tmpl.edge_binds.items():
                    local_tid[loc] = cell.open_edges[ename]
            else:  # pragma: no cover
                raise AssertionError(tmpl)
        # wires: chain-connect all anchors of each template net
        for group in case.nets:
            anchors = [local_tid[t] for t in group if t in local_tid]
            anchors += [head_simple[t] for t in group if t in head_simple]
            for a, b in zip(anchors, anchors[1:]):
                spec.connect(a, b)
            if anchors:
                self._mark_dirty(spec.term_net[anchors[0]])
        # bonds: head edge locals splice through to their outer partners
        for a, b in case.bonds:
            ra = local_tid.get(a, head_edge.get(a))
            rb = local_tid.get(b, head_edge.get(b))
            if ra is not None and rb is not None:
                spec.add_bond(ra, rb)
        self._last_local_tid = local_tid
        return local_tid

    # ------------------------------------------------------------------
    # rules

    def _advance(self) -> str:
        """Apply one rule; returns continue|success|exhausted|budget."""
        if self.steps_used >= self.budget:
            return "budget"
        spec = self.spec
        # 1. merge / deletion to fixpoint (dirty-net worklist)
        while True:
            nid = self._pop_dirty()
            if nid is None:
                break
            members = spec.nets[nid]
            if len(members) == 1:
                (tid,) = members
                cell = spec.cell_of(tid)
                if isinstance(cell, FunctionCell) and cell.root == tid:
                    return self._rule_delete(nid, cell)
                continue
            roots = spec.net_roots(nid)
            if len(roots) >= 2:
                return self._rule_merge(nid, roots)
        # 2. executable bonds
        for bid in sorted(spec.bonds):
            a, b = spec.bonds[bid]
            ca, cb = spec.cell_of(a), spec.cell_of(b)
            if isinstance(ca, EComponent) and isinstance(cb, EComponent):
                return self._rule_bond(bid, a, b, ca, cb)
        # 3. lowest-priority invocation
        lit = spec.min_icomponent()
        if lit is not None:
            if lit.negated:
                return self._rule_negate(lit)
            return self._rule_replace(lit)
        # 4. terminal state
        return self._terminal()

    def _rule_merge(self, nid: int, roots: list[FunctionCell]) -> str:
        self.steps_used += 1
        spec = self.spec
        keep, drop = roots[0], roots[1]
        if keep.name != drop.name or len(keep.args) != len(drop.args):
            if self.trace:
                self._emit("fail", {"reason": "clash",
                                    "cells": [keep.name + "/%d" % len(keep.args),
                                              drop.name + "/%d" % len(drop.args)],
                                    "net": nid})
            else:
                self._next_step += 1
            return self._backtrack()
        t0 = len(spec.trail)
        for x, y in zip(keep.args, drop.args):
            spec.connect(x, y)
            self._mark_dirty(spec.term_net[x])
        spec.remove_cell(drop.cid)
        self._mark_dirty(nid)
        if self.trace:
            self._emit("merge", {"net": nid, "kept": keep.cid, "removed": drop.cid,
                                 "name": keep.name, "delta": self._delta(t0, None)})
        else:
            self._next_step += 1
        return "continue"

    def _rule_delete(self, nid: int, cell: FunctionCell) -> str:
        self.steps_used += 1
        spec = self.spec
        t0 = len(spec.trail)
        labels = spec.net_labels.get(nid, ())
        if labels:
            value = self._read_term(cell)
            for nm in labels:
                spec.record_binding(nm, value)
        arg_nets = [spec.term_net[t] for t in cell.args]
        spec.remove_cell(cell.cid)
        for n in arg_nets:
            if n in spec.nets:
                self._mark_dirty(n)
        if self.trace:
            self._emit("delete", {"cell": cell.cid, "name": cell.name,
                                  "delta": self._delta(t0, None)})
        else:
            self._next_step += 1
        return "continue"

    def _rule_bond(self, bid: int, a: int, b: int,
                   ca: EComponent, cb: EComponent) -> str:
        self.steps_used += 1
        spec = self.spec
        t0 = len(spec.trail)
        s0 = len(self.solids._trail)
        name_a = next(nm for nm, t in ca.open_edges.items() if t == a)
        if ca.cid == cb.cid:
            name_b = next(nm for nm, t in ca.open_edges.items() if t == b)
            try:
                self.solids.assert_self_bond(ca.instance_id, name_a, name_b)
            except Inconsistent as e:
                self._emit("fail", {"reason": "geometry", "bond": bid,
                                    "detail": str(e)})
                return self._backtrack()
            spec.remove_bond(bid)
            spec.consume_edges(ca.cid, [a, b])
        else:
            name_b = next(nm for nm, t in cb.open_edges.items() if t == b)
            if self.on_bond is not None:
                self.on_bond(ca.instance_id, name_a, cb.instance_id, name_b)
            try:
                comp = self.solids.apply_operation(
                    BONDING2D, [ca.instance_id, cb.instance_id], [name_a, name_b])
            except Inconsistent as e:
                self._emit("fail", {"reason": "geometry", "bond": bid,
                                    "detail": str(e)})
                return self._backtrack()
            spec.remove_bond(bid)
            renamed = {"0.%s" % nm: t for nm, t in ca.open_edges.items() if t != a}
            renamed.update(
                {"1.%s" % nm: t for nm, t in cb.open_edges.items() if t != b})
            spec.fuse_ecomponents(ca.cid, cb.cid, (a, b), comp, renamed)
        delta = self._delta(t0, s0)
        if self.trace:
            geom_ops: list = []
            self._refresh_geom(collect=geom_ops)
            delta.extend(geom_ops)
        self._emit("bond", {"bond": bid, "edges": [name_a, name_b],
                            "delta": delta})
        return "continue"

    def _rule_replace(self, lit: IComponent) -> str:
        design = self.program.design(lit.signature.name)
        if not design.cases:
            self.steps_used += 1
            self._emit("fail", {"reason": "no_cases", "design": lit.signature.name})
            return self._backtrack()
        return self._apply_case(lit, 0)

    def _apply_case(self, lit: IComponent, case_index: int) -> str:
        self.steps_used += 1
        design = self.program.design(lit.signature.name)
        spec = self.spec
        spec_mark = spec.mark()
        solid_mark = self.solids.mark()
        step_no = self._next_step
        if case_index + 1 < len(design.cases):
            self.choice_stack.append(_ChoicePoint(
                lit.cid, case_index + 1, spec_mark, solid_mark, step_no))
        case = design.cases[case_index]
        t0 = len(spec.trail)
        s0 = len(self.solids._trail)
        # attachments
        head_simple: dict[int, int] = {}
        head_edge: dict[int, Optional[int]] = {}
        for local, tid in zip(case.head, lit.terminals):
            if case.kinds[local] == SIMPLE:
                head_simple[local] = tid
            else:
                bid = spec.edge_bond.get(tid)
                if bid is None:
                    head_edge[local] = None
                else:
                    x, y = spec.bonds[bid]
                    spec.remove_bond(bid)
                    head_edge[local] = y if x == tid else x
        self._instantiate(case, lit.priority, head_simple, head_edge)
        for t in lit.terminals:
            if spec.kind_of(t) == SIMPLE:
                self._mark_dirty(spec.term_net[t])
        spec.remove_cell(lit.cid)
        if self.trace:
            delta = self._delta(t0, s0)
            geom_ops: list = []
            self._refresh_geom(collect=geom_ops)
            delta.extend(geom_ops)
            self._emit("replace", {"design": lit.signature.name, "case": case_index,
                                   "cell": lit.cid,
                                   "priority": list(lit.priority),
                                   "delta": delta})
        else:
            self._next_step += 1
        return "continue"

    # ------------------------------------------------------------------
    # negation as failure

    def _rule_negate(self, lit: IComponent) -> str:
        self.steps_used += 1
        spec = self.spec
        sub, floundering = self._copy_fragment(lit)
        if self.trace:
            self._emit("negation_enter", {"design": lit.signature.name,
                                          "cell": lit.cid,
                                          "floundering": floundering})
        else:
            self._next_step += 1
        sub.budget = max(1, self.budget - self.steps_used)
        result = sub.run()
        self.steps_used += sub.steps_used
        if result == "budget":
            return "budget"
        if result == "success":
            self._emit("fail", {"reason": "negation_succeeded",
                                "design": lit.signature.name})
            return self._backtrack()
        # inner run exhausted: the negated literal holds; drop it
        t0 = len(spec.trail)
        nets = [spec.term_net[t] for t in lit.terminals
                if spec.kind_of(t) == SIMPLE]
        spec.remove_cell(lit.cid)
        for n in nets:
            if n in spec.nets:
                self._mark_dirty(n)
        if self.trace:
            self._emit("negation_exit", {"design": lit.signature.name,
                                         "cell": lit.cid,
                                         "delta": self._delta(t0, None)})
        else:
            self._next_step += 1
        return "continue"

    def _copy_fragment(self, lit: IComponent) -> tuple["ExecutionState", bool]:
        """Deep-copy the term graph reachable from the literal into a
        fresh engine (literal un-negated, priority ()); returns the sub
        state and a floundering flag (an unbound reachable net)."""
        spec = self.spec
        sub = ExecutionState(self.program, budget=self.budget, trace=False)
        frag: dict[int, FunctionCell] = {}
        visited: set[int] = set()
        queue = [spec.term_net[t] for t in lit.terminals
                 if spec.kind_of(t) == SIMPLE]
        floundering = False
        while queue:
            nid = queue.pop()
            if nid in visited:
                continue
            visited.add(nid)
            for tid in spec.nets[nid]:
                cell = spec.cell_of(tid)
                if isinstance(cell, FunctionCell) and cell.cid not in frag:
                    frag[cell.cid] = cell
                    queue.append(spec.term_net[cell.root])
                    queue.extend(spec.term_net[t] for t in cell.args)
        for nid in visited:
            if not spec.net_roots(nid):
                floundering = True
        new_icomp = sub.spec.add_icomponent(lit.signature, False, (0,))
        tid_map: dict[int, int] = dict(zip(lit.terminals, new_icomp.terminals))
        for cid in sorted(frag):
            cell = frag[cid]
            new = sub.spec.add_function(cell.name, len(cell.args))
            tid_map[cell.root] = new.root
            for old, fresh in zip(cell.args, new.args):
                tid_map[old] = fresh
        for nid in visited:
            members = [tid_map[t] for t in sorted(spec.nets[nid]) if t in tid_map]
            for a, b in zip(members, members[1:]):
                sub.spec.connect(a, b)
            if members:
                sub._mark_dirty(sub.spec.term_net[members[0]])
        return sub, floundering

    # ------------------------------------------------------------------
    # terminal classification and backtracking

    def _terminal(self) -> str:
        spec = self.spec
        bad = None
        if any(isinstance(c, FunctionCell) for c in spec.cells.values()):
            bad = "residual_function_cells"
        elif spec.bonds:
            bad = "residual_bonds"
        elif self.solids.cs.pending_inequalities():
            bad = "unsettled_inequalities"
        else:
            for c in spec.cells.values():
                iid = c.instance_id
                if self.solids.is_ground(iid) and not self.solids.nonempty_witness(iid):
                    bad = "degenerate_solid"
                    break
        if bad is not None:
            self.steps_used += 1
            self._emit("fail", {"reason": bad})
            return self._backtrack()
        if self.trace:
            self._emit("success", {"bindings": _ser(self._binding_view()),
                                   "hash": self.state_hash()})
        return "success"

    def _backtrack(self) -> str:
        while self.choice_stack:
            cp = self.choice_stack.pop()
            self.steps_used += 1
            self.spec.undo_to(cp.spec_mark)
            self.solids.rollback(cp.solid_mark)
            self._dirty.clear()
            self._dirty_set.clear()
            if self.trace:
                self._refresh_geom(collect=None)
                self._emit("backtrack", {"to_step": cp.step_start})
            else:
                self._next_step += 1
            lit = self.spec.cells[cp.icomp_cid]
            return self._apply_case(lit, cp.next_case)
        return "exhausted"

    # ------------------------------------------------------------------
    # driving

    def run(self) -> str:
        if self.status in ("success", "exhausted"):
            return self.status
        self.status = "running"
        while True:
            r = self._advance()
            if r == "continue":
                continue
            self.status = r
            return r

    def resume(self, extra_budget: int) -> str:
        """Continue a budget-exceeded run with more budget."""
        self.budget += extra_budget
        if self.status == "budget":
            self.status = "running"
        return self.run()

    def force_backtrack(self) -> str:
        """Reject the current success and search on (enumeration)."""
        if self.status != "success":
            raise EngineError("force_backtrack requires a success state")
        self._emit("fail", {"reason": "forced"})
        r = self._backtrack()
        self.status = "running" if r == "continue" else "exhausted"
        return self.status

    def step_once(self) -> str:
        """Apply a single rule (stepper protocol)."""
        if self.status in ("success", "exhausted"):
            return self.status
        r = self._advance()
        self.status = "running" if r == "continue" else r
        return self.status

    # ------------------------------------------------------------------
    # results

    def _binding_view(self) -> dict:
        return {nm: self.spec.bindings.get(nm, "_") for nm in self.watched_names}

    def solution(self) -> dict:
        """Residual answer: bindings plus live solid geometry."""
        solids = []
        for cid in sorted(self.spec.cells):
            c = self.spec.cells[cid]
            if isinstance(c, EComponent):
                solids.append({
                    "instance": c.instance_id,
                    "geometry": _ser(self.solids.geometry(c.instance_id)),
                })
        return {"bindings": _ser(self._binding_view()),
                "solids": solids,
                "hash": self.state_hash()}

    # ------------------------------------------------------------------
    # model dumps, deltas, hashing

    def _refresh_geom(self, collect: Optional[list]) -> None:
        store = self.solids
        for iid, inst in store.instances.items():
            if not inst.alive:
                if self._geom.get(iid) is not None:
                    old = self._geom[iid]
                    self._geom[iid] = None
                    if collect is not None:
                        collect.append({"op": "solid_kill_geom", "iid": iid,
                                        "old": old})
                continue
            new = _ser(store.geometry(iid))
            if self._geom.get(iid) != new:
                if collect is not None:
                    collect.append({"op": "geom", "iid": iid,
                                    "old": self._geom.get(iid), "new": new})
                self._geom[iid] = new
        for iid in list(self._geom):
            if iid not in store.instances:
                del self._geom[iid]

    def _read_term(self, cell: FunctionCell, seen: Optional[set] = None):
        if seen is None:
            seen = set()
        if cell.cid in seen:
            return ["..."]
        seen.add(cell.cid)
        out = [cell.name]
        for t in cell.args:
            roots = self.spec.net_roots(self.spec.term_net[t])
            out.append(self._read_term(roots[0], seen) if roots else "_")
        seen.discard(cell.cid)
        return out

    def _cell_record(self, cell, singleton_nets: Optional[list] = None) -> dict:
        spec = self.spec
        if isinstance(cell, FunctionCell):
            rec = {"cid": cell.cid, "type": "func", "name": cell.name,
                   "root": cell.root, "args": list(cell.args)}
            tids = [cell.root] + list(cell.args)
            kinds = [SIMPLE] * len(tids)
        elif isinstance(cell, IComponent):
            rec = {"cid": cell.cid, "type": "call", "name": cell.signature.name,
                   "terminals": list(cell.terminals), "negated": cell.negated,
                   "priority": list(cell.priority)}
            tids = list(cell.terminals)
            kinds = list(cell.signature.kinds)
        else:
            rec = {"cid": cell.cid, "type": "solid", "instance": cell.instance_id,
                   "edges": {nm: t for nm, t in sorted(cell.open_edges.items())}}
            tids = list(cell.open_edges.values())
            kinds = [EDGE] * len(tids)
        if singleton_nets is not None:
            nets = list(singleton_nets)
            terms = []
            for tid, kind in zip(tids, kinds):
                terms.append({"tid": tid, "kind": kind,
                              "net": nets.pop(0) if kind == SIMPLE else None})
            rec["terms"] = terms
        return rec

    def _delta(self, spec_from: int, solid_from: Optional[int]) -> list:
        if not self.trace:
            return []
        spec = self.spec
        ops: list = []
        for entry in spec.trail[spec_from:]:
            tag = entry[0]
            if tag == "cell+":
                _, cid, tids, nids = entry
                ops.append({"op": "cell_add",
                            "cell": self._cell_record(spec.cells[cid], list(nids))})
            elif tag == "cell-":
                _, cid, cell, restore, dead_labels = entry
                rec = self._cell_record(cell)
                rec["terms"] = [
                    {"tid": tid, "kind": kind, "net": nid, "died": died}
                    for tid, kind, nid, died in restore]
                ops.append({"op": "cell_remove", "cell": rec})
            elif tag == "union":
                _, kept, removed, moved, _olk, _olr = entry
                ops.append({"op": "net_union", "kept": kept, "removed": removed,
                            "moved": list(moved)})
            elif tag == "bond+":
                bid = entry[1]
                a, b = spec.bonds[bid]
                ops.append({"op": "bond_add", "bid": bid, "a": a, "b": b})
            elif tag == "bond-":
                _, bid, a, b = entry
                ops.append({"op": "bond_remove", "bid": bid, "a": a, "b": b})
            elif tag == "bind":
                _, name, old = entry
                ops.append({"op": "bind", "name": name, "old": _ser(old),
                            "new": _ser(spec.bindings.get(name))})
            elif tag == "label":
                pass
            elif tag == "fuse":
                _, cid, old_a, old_b, consumed, renamed = entry
                ops.append({"op": "fuse",
                            "new_cell": self._cell_record(spec.cells[cid]),
                            "removed": [self._cell_record(old_a),
                                        self._cell_record(old_b)],
                            "consumed": list(consumed)})
            elif tag == "edges-":
                _, cid, removed = entry
                ops.append({"op": "edges_del", "cid": cid,
                            "removed": [[nm, t] for nm, t in removed]})
            else:  # pragma: no cover
                raise AssertionError(tag)
        if solid_from is not None:
            for entry in self.solids._trail[solid_from:]:
                tag = entry[0]
                if tag == "new":
                    iid = entry[1]
                    inst = self.solids.instances[iid]
                    ops.append({"op": "solid_add", "iid": iid,
                                "family": inst.family.name if inst.family else None,
                                "children": list(inst.children),
                                "combinator": inst.combinator})
                elif tag == "kill":
                    ops.append({"op": "solid_kill", "iid": entry[1]})
                elif tag == "edge_del":
                    pass
                else:  # pragma: no cover
                    raise AssertionError(tag)
        return ops

    def model_dump(self) -> dict:
        """Canonical, JSON-ready image of the current state."""
        spec = self.spec
        cells = {str(cid): self._cell_record(spec.cells[cid])
                 for cid in sorted(spec.cells)}
        nets = {str(nid): sorted(m) for nid, m in sorted(spec.nets.items())}
        bonds = {str(bid): list(ab) for bid, ab in sorted(spec.bonds.items())}
        solids = {}
        for iid in sorted(self.solids.instances):
            inst = self.solids.instances[iid]
            solids[str(iid)] = {
                "family": inst.family.name if inst.family else None,
                "children": list(inst.children),
                "combinator": inst.combinator,
                "alive": inst.alive,
                "geom": self._geom.get(iid),
            }
        return {"cells": cells, "nets": nets, "bonds": bonds,
                "bindings": _ser(dict(sorted(spec.bindings.items()))),
                "solids": solids}

    def state_hash(self) -> str:
        return model_hash(self.model_dump())


def model_hash(model: dict) -> str:
    blob = json.dumps(model, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# enumeration


def enumerate_solutions(program: Program, query_name: str,
                        max_solutions: Optional[int] = None,
                        budget: int = DEFAULT_BUDGET,
                        trace: bool = False) -> tuple[list[dict], "ExecutionState"]:
    """All solutions (deduplicated, search order) via forced backtracking."""
    state = ExecutionState.start(program, query_name, budget=budget, trace=trace)
    out: list[dict] = []
    seen: set[str] = set()
    while True:
        status = state.run()
        if status != "success":
            break
        sol = state.solution()
        key = json.dumps({"b": sol["bindings"], "s": sol["solids"]},
                         sort_keys=True)
        if key not in seen:
            seen.add(key)
            out.append(sol)
            if max_solutions is not None and len(out) >= max_solutions:
                break
        state.force_backtrack()
    return out, state


# ---------------------------------------------------------------------------
# trace replay (no engine: pure delta application)


def write_trace(events: list[TraceEvent], fh) -> None:
    for ev in events:
        fh.write(ev.to_json())
        fh.write("\n")


def read_trace(fh) -> list[TraceEvent]:
    out = []
    for line in fh:
        line = line.strip()
        if not line:
            continue
        d = json.loads(line)
        out.append(TraceEvent(d["step"], d["kind"], d["payload"]))
    return out


class Replayer:
    """Reconstructs states by applying trace deltas (never re-executes)."""

    def __init__(self, events: list[TraceEvent]) -> None:
        if not events or events[0].kind != "snapshot":
            raise EngineError("trace must begin with a snapshot event")
        self.events = events
        self.model = json.loads(json.dumps(events[0].payload["model"]))
        self._applied: list[tuple[int, list]] = []
        self.pos = 0   # number of events applied (snapshot counts as applied)

    def current_hash(self) -> str:
        return model_hash(self.model)

    def advance(self) -> Optional[TraceEvent]:
        """Apply the next event; returns it (None at end of trace)."""
        nxt = self.pos + 1
        if nxt >= len(self.events):
            return None
        ev = self.events[nxt]
        self.pos = nxt
        if ev.kind == "backtrack":
            to = ev.payload["to_step"]
            while self._applied and self._applied[-1][0] >= to:
                _, delta = self._applied.pop()
                for op in reversed(delta):
                    _apply_op(self.model, op, inverse=True)
        else:
            delta = ev.payload.get("delta") or []
            if delta:
                self._applied.append((ev.step, delta))
                for op in delta:
                    _apply_op(self.model, op, inverse=False)
        return ev

    def run(self) -> dict:
        while self.advance() is not None:
            pass
        return self.model


def _apply_op(model: dict, op: dict, inverse: bool) -> None:
    kind = op["op"]
    cells, nets, bonds = model["cells"], model["nets"], model["bonds"]
    solids = model["solids"]
    if kind == "cell_add":
        _cell_insert(model, op["cell"]) if not inverse else _cell_extract(model, op["cell"])
    elif kind == "cell_remove":
        _cell_extract(model, op["cell"]) if not inverse else _cell_insert(model, op["cell"])
    elif kind == "net_union":
        kept, removed = str(op["kept"]), str(op["removed"])
        if not inverse:
            nets[kept] = sorted(nets[kept] + op["moved"])
            del nets[removed]
        else:
            nets[removed] = sorted(op["moved"])
            nets[kept] = sorted(t for t in nets[kept] if t not in set(op["moved"]))
    elif kind == "bond_add":
        if not inverse:
            bonds[str(op["bid"])] = [op["a"], op["b"]]
        else:
            del bonds[str(op["bid"])]
    elif kind == "bond_remove":
        if not inverse:
            del bonds[str(op["bid"])]
        else:
            bonds[str(op["bid"])] = [op["a"], op["b"]]
    elif kind == "bind":
        value = op["old"] if inverse else op["new"]
        if value is None:
            model["bindings"].pop(op["name"], None)
        else:
            model["bindings"][op["name"]] = value
    elif kind == "fuse":
        if not inverse:
            for rec in op["removed"]:
                del cells[str(rec["cid"])]
            c = dict(op["new_cell"])
            c.pop("terms", None)
            cells[str(c["cid"])] = c
        else:
            del cells[str(op["new_cell"]["cid"])]
            for rec in op["removed"]:
                c = dict(rec)
                c.pop("terms", None)
                cells[str(c["cid"])] = c
    elif kind == "edges_del":
        cell = cells[str(op["cid"])]
        if not inverse:
            for nm, _t in op["removed"]:
                del cell["edges"][nm]
        else:
            for nm, t in op["removed"]:
                cell["edges"][nm] = t
    elif kind == "solid_add":
        if not inverse:
            solids[str(op["iid"])] = {"family": op["family"],
                                      "children": op["children"],
                                      "combinator": op["combinator"],
                                      "alive": True, "geom": None}
        else:
            del solids[str(op["iid"])]
    elif kind == "solid_kill":
        solids[str(op["iid"])]["alive"] = inverse
    elif kind == "solid_kill_geom":
        solids[str(op["iid"])]["geom"] = op["old"] if inverse else None
    elif kind == "geom":
        solids[str(op["iid"])]["geom"] = op["old"] if inverse else op["new"]
    else:  # pragma: no cover
        raise EngineError("unknown delta op %r" % kind)


def _cell_insert(model: dict, rec: dict) -> None:
    c = dict(rec)
    terms = c.pop("terms", [])
    model["cells"][str(c["cid"])] = c
    for t in terms:
        if t["kind"] == SIMPLE and t.get("net") is not None:
            key = str(t["net"])
            if t.get("died"):
                model["nets"][key] = [t["tid"]]
            else:
                members = model["nets"].setdefault(key, [])
                if t["tid"] not in members:
                    members.append(t["tid"])
                    members.sort()


def _cell_extract(model: dict, rec: dict) -> None:
    del model["cells"][str(rec["cid"])]
    for t in rec.get("terms", []):
        if t["kind"] == SIMPLE and t.get("net") is not None:
            key = str(t["net"])
            members = [x for x in model["nets"].get(key, []) if x != t["tid"]]
            if members:
                model["nets"][key] = members
            else:
                model["nets"].pop(key, None)
