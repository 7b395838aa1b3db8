"""Concrete syntax for programs and queries, with parser and printer.

Grammar (whitespace-insensitive, ``//`` comments):

    program  := (design | query)* ;
    design   := "design" NAME "(" params? ")" "{" case+ "}" ;
    params   := param ("," param)* ;  param := NAME ":" ("simple"|"edge") ;
    case     := "case" "{" stmt* "}" ;
    stmt     := funcStmt | callStmt | solidStmt | bondStmt ;
    funcStmt := (NAME|INT) "(" args? ")" "->" var ";" ;
    callStmt := ["not"] "call" NAME "(" args? ")" ";" ;
    solidStmt:= "solid" NAME "(" intargs? ")" "{" edgeBinds? "}" ";" ;
    edgeBinds:= NAME ":" var ("," NAME ":" var)* ;
    bondStmt := "bond" var "," var ";" ;
    args     := arg ("," arg)* ;  arg := var | INT | list ;
    list     := "[" (arg ("," arg)*)? ("|" var)? "]" ;
    query    := "query" NAME "{" stmt* "}" ;
    var      := NAME | "_" ;

Identifiers sharing a name within one case body denote the same net (in
simple positions) or the same edge link (in edge positions).  An edge
link attached to exactly two edges becomes a bond; `bond a, b` merges
two links explicitly.  `[x,y|T]` expands to cons cells named `•` with
terminator constant `nil`; integers are 0-arity function cells named by
their decimal text.  Statement order defines execution priority.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .core import (
    EDGE, SIMPLE, CallTemplate, CaseTemplate, Design, FuncTemplate, Program,
    Query, Signature, SolidTemplate,
)


class LsdSyntaxError(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__("%d:%d: %s" % (line, col, message))
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# AST


@dataclass
class AVar:
    name: str


@dataclass
class AInt:
    value: int


@dataclass
class AList:
    items: list
    tail: Optional[str] = None


@dataclass
class AFunc:
    name: str
    args: list
    result: str
    pos: tuple[int, int]


@dataclass
class AListStmt:
    value: AList
    result: str
    pos: tuple[int, int]


@dataclass
class ACall:
    name: str
    args: list
    negated: bool
    pos: tuple[int, int]


@dataclass
class ASolid:
    family: str
    int_args: list[int]
    edge_binds: list[tuple[str, str]]
    pos: tuple[int, int]


@dataclass
class ABond:
    a: str
    b: str
    pos: tuple[int, int]


@dataclass
class ADesign:
    name: str
    params: list[tuple[str, str]]
    cases: list[list]
    pos: tuple[int, int]


@dataclass
class AQuery:
    name: str
    stmts: list
    pos: tuple[int, int]


@dataclass
class SourceProgram:
    designs: list[ADesign] = field(default_factory=list)
    queries: list[AQuery] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Lexer

_TOKEN = re.compile(
    r"""(?P<ws>\s+|//[^\n]*)
      | (?P<int>\d+)
      | (?P<name>[A-Za-z_•][A-Za-z0-9_•-]*)
      | (?P<arrow>->)
      | (?P<punct>[(){}\[\],;:|])
    """,
    re.VERBOSE,
)


def _lex(text: str):
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise LsdSyntaxError("unexpected character %r" % text[i], line, col)
        lexeme = m.group(0)
        if not m.lastgroup == "ws":
            kind = m.lastgroup
            tokens.append((kind, lexeme, line, col))
        nl = lexeme.count("\n")
        if nl:
            line += nl
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        i = m.end()
    tokens.append(("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = _lex(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def err(self, msg: str):
        _, _, line, col = self.peek()
        raise LsdSyntaxError(msg, line, col)

    def expect(self, lexeme: str):
        kind, lx, line, col = self.next()
        if lx != lexeme:
            raise LsdSyntaxError("expected %r, found %r" % (lexeme, lx), line, col)

    def name(self) -> str:
        kind, lx, line, col = self.next()
        if kind != "name":
            raise LsdSyntaxError("expected name, found %r" % lx, line, col)
        return lx

    def at(self, lexeme: str) -> bool:
        return self.peek()[1] == lexeme

    # -- grammar ---------------------------------------------------------

    def program(self) -> SourceProgram:
        prog = SourceProgram()
        while True:
            kind, lx, line, col = self.peek()
            if kind == "eof":
                return prog
            if lx == "design":
                prog.designs.append(self.design())
            elif lx == "query":
                prog.queries.append(self.query())
            else:
                self.err("expected 'design' or 'query'")

    def design(self) -> ADesign:
        _, _, line, col = self.next()  # 'design'
        name = self.name()
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                pname = self.name()
                self.expect(":")
                pkind = self.name()
                if pkind not in (SIMPLE, EDGE):
                    self.err("parameter kind must be 'simple' or 'edge'")
                params.append((pname, pkind))
                if self.at(","):
                    self.next()
                else:
                    break
        self.expect(")")
        self.expect("{")
        cases = []
        while self.at("case"):
            self.next()
            self.expect("{")
            stmts = []
            while not self.at("}"):
                stmts.append(self.stmt())
            self.expect("}")
            cases.append(stmts)
        self.expect("}")
        if not cases:
            self.err("design %r needs at least one case" % name)
        return ADesign(name, params, cases, (line, col))

    def query(self) -> AQuery:
        _, _, line, col = self.next()  # 'query'
        name = self.name()
        self.expect("{")
        stmts = []
        while not self.at("}"):
            stmts.append(self.stmt())
        self.expect("}")
        return AQuery(name, stmts, (line, col))

    def stmt(self):
        kind, lx, line, col = self.peek()
        if lx == "call" or lx == "not":
            negated = lx == "not"
            self.next()
            if negated:
                self.expect("call")
            name = self.name()
            args = self.arg_list()
            self.expect(";")
            return ACall(name, args, negated, (line, col))
        if lx == "solid":
            self.next()
            family = self.name()
            self.expect("(")
            ints = []
            if not self.at(")"):
                while True:
                    k, v, ln, cl = self.next()
                    if k != "int":
                        raise LsdSyntaxError("solid arguments must be integers", ln, cl)
                    ints.append(int(v))
                    if self.at(","):
                        self.next()
                    else:
                        break
            self.expect(")")
            self.expect("{")
            binds = []
            if not self.at("}"):
                while True:
                    ename = self.name()
                    self.expect(":")
                    binds.append((ename, self.var()))
                    if self.at(","):
                        self.next()
                    else:
                        break
            self.expect("}")
            self.expect(";")
            return ASolid(family, ints, binds, (line, col))
        if lx == "bond":
            self.next()
            a = self.var()
            self.expect(",")
            b = self.var()
            self.expect(";")
            return ABond(a, b, (line, col))
        if lx == "[":
            lst = self.list_lit()
            self.expect("->")
            result = self.var()
            self.expect(";")
            return AListStmt(lst, result, (line, col))
        # function statement
        k, fname, ln, cl = self.next()
        if k not in ("name", "int"):
            raise LsdSyntaxError("expected statement, found %r" % fname, ln, cl)
        args = self.arg_list()
        self.expect("->")
        result = self.var()
        self.expect(";")
        return AFunc(fname, args, result, (line, col))

    def arg_list(self) -> list:
        self.expect("(")
        args = []
        if not self.at(")"):
            while True:
                args.append(self.arg())
                if self.at(","):
                    self.next()
                else:
                    break
        self.expect(")")
        return args

    def arg(self):
        kind, lx, line, col = self.peek()
        if kind == "int":
            self.next()
            return AInt(int(lx))
        if lx == "[":
            return self.list_lit()
        if kind == "name":
            self.next()
            return AVar(lx)
        self.err("expected argument")

    def list_lit(self) -> AList:
        self.expect("[")
        items = []
        tail = None
        if not self.at("]"):
            while True:
                items.append(self.arg())
                if self.at(","):
                    self.next()
                    continue
                break
            if self.at("|"):
                self.next()
                tail = self.var()
        self.expect("]")
        return AList(items, tail)

    def var(self) -> str:
        kind, lx, line, col = self.next()
        if kind != "name" and lx != "_":
            raise LsdSyntaxError("expected variable, found %r" % lx, line, col)
        return lx


def parse(text: str) -> SourceProgram:
    """Parse one source file into an AST."""
    return _Parser(text).program()


# ---------------------------------------------------------------------------
# Lowering (AST -> core templates)


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[int, int] = {}

    def add(self, x: int) -> None:
        self.parent.setdefault(x, x)

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


class _CaseBuilder:
    """Lowers one case body, resolving names to nets and edge links."""

    def __init__(self, signatures: dict[str, Signature], pos) -> None:
        self.signatures = signatures
        self.pos = pos
        self.next_local = 0
        self.kinds: dict[int, str] = {}
        self.names: dict[int, str] = {}
        self.cells: list[object] = []
        self.simple_groups = _UnionFind()
        self.simple_by_name: dict[str, int] = {}
        self.edge_links: dict[str, list[int]] = {}
        self.link_merges: list[tuple[str, str]] = []
        self.head: list[int] = []

    def fail(self, msg: str):
        raise LsdSyntaxError(msg, self.pos[0], self.pos[1])

    def local(self, kind: str, name: str | None = None) -> int:
        t = self.next_local
        self.next_local += 1
        self.kinds[t] = kind
        if name:
            self.names[t] = name
        if kind == SIMPLE:
            self.simple_groups.add(t)
        return t

    def bind_simple(self, t: int, name: str) -> None:
        if name == "_":
            return
        if name in self.edge_links:
            self.fail("name %r used as both wire and edge" % name)
        prev = self.simple_by_name.get(name)
        if prev is None:
            self.simple_by_name[name] = t
        else:
            self.simple_groups.union(prev, t)

    def bind_edge(self, t: int, name: str) -> None:
        if name == "_":
            self.edge_links.setdefault("_%d" % t, []).append(t)
            return
        if name in self.simple_by_name:
            self.fail("name %r used as both wire and edge" % name)
        self.edge_links.setdefault(name, []).append(t)

    def head_param(self, name: str, kind: str) -> None:
        t = self.local(kind, name)
        self.head.append(t)
        if kind == SIMPLE:
            self.bind_simple(t, name)
        else:
            self.bind_edge(t, name)

    def lower_arg(self, arg) -> int:
        """Returns a simple local carrying the argument value."""
        if isinstance(arg, AVar):
            t = self.local(SIMPLE, arg.name)
            self.bind_simple(t, arg.name)
            return t
        if isinstance(arg, AInt):
            cell = FuncTemplate(str(arg.value), self.local(SIMPLE), [])
            self.cells.append(cell)
            return cell.root
        if isinstance(arg, AList):
            return self.lower_list(arg)
        raise AssertionError(arg)

    def lower_list(self, lst: AList) -> int:
        if lst.tail is not None:
            t = self.local(SIMPLE, lst.tail)
            self.bind_simple(t, lst.tail)
            tail = t
        else:
            nil = FuncTemplate("nil", self.local(SIMPLE), [])
            self.cells.append(nil)
            tail = nil.root
        for item in reversed(lst.items):
            head = self.lower_arg(item)
            cons = FuncTemplate("•", self.local(SIMPLE), [self.local(SIMPLE), self.local(SIMPLE)])
            self.cells.append(cons)
            self.simple_groups.union(cons.args[0], head)
            self.simple_groups.union(cons.args[1], tail)
            tail = cons.root
        return tail

    def stmt(self, s) -> None:
        self.pos = s.pos
        if isinstance(s, AFunc):
            args = [self.lower_arg(a) for a in s.args]
            cell = FuncTemplate(s.name, self.local(SIMPLE, s.result), args)
            self.cells.append(cell)
            self.bind_simple(cell.root, s.result)
        elif isinstance(s, AListStmt):
            root = self.lower_list(s.value)
            self.bind_simple(root, s.result)
        elif isinstance(s, ACall):
            sig = self.signatures.get(s.name)
            kinds = sig.kinds if sig and sig.arity == len(s.args) else tuple(
                SIMPLE for _ in s.args)
            terms = []
            for arg, kind in zip(s.args, kinds):
                if kind == EDGE:
                    if not isinstance(arg, AVar):
                        self.fail("edge argument of %s must be a variable" % s.name)
                    t = self.local(EDGE, arg.name)
                    self.bind_edge(t, arg.name)
                    terms.append(t)
                else:
                    terms.append(self.lower_arg(arg))
            self.cells.append(CallTemplate(s.name, terms, s.negated))
        elif isinstance(s, ASolid):
            binds = {}
            for ename, var in s.edge_binds:
                t = self.local(EDGE, var)
                self.bind_edge(t, var)
                if ename in binds:
                    self.fail("edge %r bound twice" % ename)
                binds[ename] = t
            self.cells.append(SolidTemplate(
                s.family, [Fraction(v) for v in s.int_args], binds))
        elif isinstance(s, ABond):
            self.link_merges.append((s.a, s.b))
        else:
            raise AssertionError(s)

    def finish(self) -> CaseTemplate:
        for a, b in self.link_merges:
            for nm in (a, b):
                if nm not in self.edge_links:
                    self.fail("bond references unknown edge %r" % nm)
            if a == b:
                self.fail("bond cannot join %r to itself" % a)
            self.edge_links[a].extend(self.edge_links.pop(b))
        bonds = []
        for nm, members in self.edge_links.items():
            if len(members) == 2:
                bonds.append((members[0], members[1]))
            elif len(members) > 2:
                self.fail("edge %r attached to %d ends (max 2)" % (nm, len(members)))
        groups: dict[int, list[int]] = {}
        for t, kind in self.kinds.items():
            if kind == SIMPLE:
                groups.setdefault(self.simple_groups.find(t), []).append(t)
        nets = [sorted(v) for _, v in sorted(groups.items())]
        return CaseTemplate(
            head=self.head,
            kinds=self.kinds,
            cells=self.cells,
            nets=nets,
            bonds=sorted(bonds),
            term_names=self.names,
        )


def compile_sources(sources: list[SourceProgram]) -> Program:
    """Lower parsed files into one executable Program."""
    program = Program()
    signatures: dict[str, Signature] = {}
    for src in sources:
        for d in src.designs:
            sig = Signature(d.name, tuple(k for _, k in d.params))
            if d.name in signatures:
                # keep the first; validate() reports the duplicate
                continue
            signatures[d.name] = sig
    for src in sources:
        for d in src.designs:
            sig = signatures[d.name]
            cases = []
            for stmts in d.cases:
                b = _CaseBuilder(signatures, d.pos)
                for pname, pkind in d.params:
                    b.head_param(pname, pkind)
                for s in stmts:
                    b.stmt(s)
                cases.append(b.finish())
            if d.name in program.designs:
                # duplicate design: recorded by validate via a sentinel
                program.designs[d.name + "#dup"] = Design(sig, cases)
                continue
            program.designs[d.name] = Design(sig, cases)
        for q in src.queries:
            if q.name in program.queries:
                raise LsdSyntaxError("duplicate query %r" % q.name,
                                     q.pos[0], q.pos[1])
            b = _CaseBuilder(signatures, q.pos)
            for s in q.stmts:
                b.stmt(s)
            program.queries[q.name] = Query(q.name, b.finish())
    return program


def load_program(texts: list[str]) -> Program:
    return compile_sources([parse(t) for t in texts])


# ---------------------------------------------------------------------------
# Printing (canonical form; parse(print(p)) is structurally identical)


def print_program(program: Program) -> str:
    out: list[str] = []
    for name in program.designs:
        design = program.designs[name]
        params = ", ".join(
            "p%d: %s" % (i, k) for i, k in enumerate(design.signature.kinds))
        out.append("design %s(%s) {" % (design.signature.name, params))
        for case in design.cases:
            out.append("  case {")
            out.extend(_print_case(case, indent="    "))
            out.append("  }")
        out.append("}")
    for name in program.queries:
        out.append("query %s {" % name)
        out.extend(_print_case(program.queries[name].body, indent="  "))
        out.append("}")
    return "\n".join(out) + ("\n" if out else "")


def _print_case(case: CaseTemplate, indent: str) -> list[str]:
    net_of: dict[int, int] = {}
    for i, net in enumerate(case.nets):
        for t in net:
            net_of[t] = i
    simple_names: dict[int, str] = {}
    edge_names: dict[int, str] = {}
    counters = {"n": 0, "e": 0}

    for pos, t in enumerate(case.head):
        if case.kinds[t] == SIMPLE:
            simple_names[net_of[t]] = "p%d" % pos
        else:
            edge_names[t] = "p%d" % pos

    def sname(t: int) -> str:
        nid = net_of[t]
        if nid not in simple_names:
            simple_names[nid] = "n%d" % counters["n"]
            counters["n"] += 1
        return simple_names[nid]

    def ename(t: int) -> str:
        if t not in edge_names:
            edge_names[t] = "e%d" % counters["e"]
            counters["e"] += 1
        return edge_names[t]

    lines = []
    for cell in case.cells:
        if isinstance(cell, FuncTemplate):
            lines.append("%s(%s) -> %s;" % (
                cell.name, ", ".join(sname(a) for a in cell.args), sname(cell.root)))
        elif isinstance(cell, CallTemplate):
            args = ", ".join(
                ename(t) if case.kinds[t] == EDGE else sname(t)
                for t in cell.terminals)
            lines.append("%scall %s(%s);" % (
                "not " if cell.negated else "", cell.design_name, args))
        elif isinstance(cell, SolidTemplate):
            args = ", ".join(str(int(a)) for a in cell.fixed_args)
            binds = ", ".join(
                "%s: %s" % (nm, ename(t)) for nm, t in sorted(cell.edge_binds.items()))
            lines.append("solid %s(%s) { %s };" % (cell.family, args, binds))
    for a, b in case.bonds:
        lines.append("bond %s, %s;" % (ename(a), ename(b)))
    return [indent + ln for ln in lines]
