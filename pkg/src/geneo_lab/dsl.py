"""A small textual language for string diagrams over a monoidal signature.

``a ; b`` runs ``a`` then ``b`` (so it denotes ``b ∘ a``); ``*`` is the
parallel product and binds tighter than ``;``.  ``#`` starts a line comment.

    sort A;
    gen f : A -> A*A @2;
    diagram d = f ; (id[A] * discard[A]);
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping

from . import geo as G
from .perception import UNIT, PerceptionSpace, tensor_spaces

KEYWORDS = {"sort", "gen", "diagram", "id", "swap", "copy", "discard", "empty"}
DECL_KEYWORDS = {"sort", "gen", "diagram"}


# --------------------------------------------------------------------------- errors

class DslError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message, self.line, self.col = message, line, col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class LexError(DslError):
    pass


class DslSyntaxError(DslError):
    pass


class DuplicateDeclaration(DslError):
    pass


class UnknownIdentifier(DslError):
    pass


class TypeCheckError(DslError):
    pass


class MissingBinding(DslError):
    pass


class MissingComplexity(DslError):
    pass


# --------------------------------------------------------------------------- AST

@dataclass(frozen=True)
class Pos:
    line: int
    col: int


@dataclass(frozen=True)
class Node:
    pass


@dataclass(frozen=True)
class Gen(Node):
    name: str
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Empty(Node):
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Id(Node):
    sort: str
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Swap(Node):
    a: str
    b: str
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Copy(Node):
    sort: str
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Discard(Node):
    sort: str
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Seq(Node):
    first: Node
    second: Node
    pos: Pos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Par(Node):
    top: Node
    bottom: Node
    pos: Pos | None = field(default=None, compare=False, repr=False)


Word = tuple  # tuple of sort names; () is the monoidal unit


def word_str(w: Word) -> str:
    return "*".join(w) if w else "1"


@dataclass(frozen=True)
class GenDecl:
    name: str
    arity: Word
    coarity: Word
    complexity: float | None = None


@dataclass
class Signature:
    sorts: list = field(default_factory=list)
    generators: dict = field(default_factory=dict)   # name -> GenDecl

    def add_sort(self, name: str):
        self.sorts.append(name)

    def add_gen(self, decl: GenDecl):
        self.generators[decl.name] = decl


@dataclass
class Program:
    signature: Signature
    diagrams: dict   # name -> Node, in declaration order


@dataclass(frozen=True)
class TypedDiagram:
    ast: Node
    input: Word
    output: Word

    def __str__(self):
        return f"{word_str(self.input)} -> {word_str(self.output)}"


# --------------------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow>->)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[;:@=*()\[\],])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str      # ident, number, punct (value is the char), arrow, eof
    value: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks = []
    i, line, line_start = 0, 1, 0
    while i < len(text):
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise LexError(f"unexpected character {text[i]!r}", line, i - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            toks.append(Token(kind, m.group(), line, i - line_start + 1))
        i = m.end()
    toks.append(Token("eof", "", line, i - line_start + 1))
    return toks


# --------------------------------------------------------------------------- parser

class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.sig = Signature()
        self.diagrams: dict = {}

    # helpers
    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.peek()
        self.i += 1
        return t

    def at(self, value: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("punct", "arrow", "ident") and t.value == value

    def expect(self, value: str) -> Token:
        t = self.peek()
        if not self.at(value):
            raise DslSyntaxError(f"expected {value!r}, found {t.value or 'end of input'!r}", t.line, t.col)
        return self.next()

    def expect_ident(self, what: str = "identifier") -> Token:
        t = self.peek()
        if t.kind != "ident" or t.value in KEYWORDS:
            raise DslSyntaxError(f"expected {what}, found {t.value or 'end of input'!r}", t.line, t.col)
        return self.next()

    def sort_ref(self) -> str:
        t = self.expect_ident("sort name")
        if t.value not in self.sig.sorts:
            raise UnknownIdentifier(f"unknown sort {t.value!r}", t.line, t.col)
        return t.value

    def declared(self, name: str) -> bool:
        return name in self.sig.sorts or name in self.sig.generators or name in self.diagrams

    # grammar
    def program(self) -> Program:
        while self.peek().kind != "eof":
            self.decl()
        return Program(self.sig, self.diagrams)

    def decl(self):
        t = self.peek()
        if self.at("sort"):
            self.next()
            name = self.expect_ident("sort name")
            self._fresh(name)
            self.sig.add_sort(name.value)
        elif self.at("gen"):
            self.next()
            name = self.expect_ident("generator name")
            self._fresh(name)
            self.expect(":")
            arity = self.word()
            self.expect("->")
            coarity = self.word()
            cost = None
            if self.at("@"):
                self.next()
                cost = self.number()
            self.sig.add_gen(GenDecl(name.value, arity, coarity, cost))
        elif self.at("diagram"):
            self.next()
            name = self.expect_ident("diagram name")
            self._fresh(name)
            self.expect("=")
            self.diagrams[name.value] = self.expr()
        else:
            raise DslSyntaxError(f"expected 'sort', 'gen' or 'diagram', found {t.value or 'end of input'!r}",
                                 t.line, t.col)
        self.expect(";")

    def _fresh(self, tok: Token):
        if self.declared(tok.value):
            raise DuplicateDeclaration(f"{tok.value!r} is already declared", tok.line, tok.col)

    def number(self) -> float:
        t = self.peek()
        if t.kind == "number":
            self.next()
            return float(t.value)
        if t.kind == "ident" and t.value in ("inf", "infinity"):
            self.next()
            return math.inf
        raise DslSyntaxError(f"expected a number, found {t.value or 'end of input'!r}", t.line, t.col)

    def word(self) -> Word:
        t = self.peek()
        if t.kind == "number" and t.value == "1":
            self.next()
            return ()
        sorts = [self.sort_ref()]
        while self.at("*"):
            self.next()
            sorts.append(self.sort_ref())
        return tuple(sorts)

    def expr(self) -> Node:
        node = self.term()
        while self.at(";"):
            nxt = self.peek(1)
            if nxt.kind == "eof" or (nxt.kind == "ident" and nxt.value in DECL_KEYWORDS):
                break                   # this ';' terminates the declaration
            t = self.next()
            node = Seq(node, self.term(), Pos(t.line, t.col))
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.at("*"):
            t = self.next()
            node = Par(node, self.factor(), Pos(t.line, t.col))
        return node

    def factor(self) -> Node:
        t = self.peek()
        pos = Pos(t.line, t.col)
        if self.at("("):
            self.next()
            node = self.expr()
            self.expect(")")
            return node
        if t.kind != "ident":
            raise DslSyntaxError(f"expected a diagram, found {t.value or 'end of input'!r}", t.line, t.col)
        self.next()
        if t.value == "empty":
            return Empty(pos)
        if t.value in ("id", "copy", "discard"):
            self.expect("[")
            s = self.sort_ref()
            self.expect("]")
            return {"id": Id, "copy": Copy, "discard": Discard}[t.value](s, pos)
        if t.value == "swap":
            self.expect("[")
            a = self.sort_ref()
            self.expect(",")
            b = self.sort_ref()
            self.expect("]")
            return Swap(a, b, pos)
        if t.value in KEYWORDS:
            raise DslSyntaxError(f"unexpected keyword {t.value!r}", t.line, t.col)
        if t.value in self.sig.generators:
            return Gen(t.value, pos)
        if t.value in self.diagrams:
            return self.diagrams[t.value]
        raise UnknownIdentifier(f"unknown identifier {t.value!r}", t.line, t.col)


def parse(text: str) -> Program:
    """Parse a DSL program into its signature and named diagram ASTs."""
    return _Parser(text).program()


def parse_expr(text: str, sig: Signature, diagrams: Mapping | None = None) -> Node:
    """Parse a single diagram expression against an existing signature."""
    p = _Parser(text)
    p.sig = sig
    p.diagrams = dict(diagrams or {})
    node = p.expr()
    if p.peek().kind != "eof" and not (p.at(";") and p.peek(1).kind == "eof"):
        t = p.peek()
        raise DslSyntaxError(f"unexpected {t.value!r}", t.line, t.col)
    return node


# --------------------------------------------------------------------------- printer

def to_source(node: Node) -> str:
    """Print an AST so that :func:`parse_expr` gives back the same tree."""
    if isinstance(node, Gen):
        return node.name
    if isinstance(node, Empty):
        return "empty"
    if isinstance(node, Id):
        return f"id[{node.sort}]"
    if isinstance(node, Copy):
        return f"copy[{node.sort}]"
    if isinstance(node, Discard):
        return f"discard[{node.sort}]"
    if isinstance(node, Swap):
        return f"swap[{node.a},{node.b}]"
    if isinstance(node, Seq):
        right = to_source(node.second)
        if isinstance(node.second, Seq):
            right = f"({right})"
        return f"{to_source(node.first)} ; {right}"
    if isinstance(node, Par):
        left, right = to_source(node.top), to_source(node.bottom)
        if isinstance(node.top, Seq):
            left = f"({left})"
        if isinstance(node.bottom, (Seq, Par)):
            right = f"({right})"
        return f"{left} * {right}"
    raise TypeError(f"not a diagram node: {node!r}")


def program_source(prog: Program) -> str:
    sig = prog.signature
    lines = [f"sort {s};" for s in sig.sorts]
    for g in sig.generators.values():
        cost = "" if g.complexity is None else f" @{_fmt_number(g.complexity)}"
        lines.append(f"gen {g.name} : {word_str(g.arity)} -> {word_str(g.coarity)}{cost};")
    lines += [f"diagram {name} = {to_source(node)};" for name, node in prog.diagrams.items()]
    return "\n".join(lines) + "\n"


def _fmt_number(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return str(int(v)) if float(v).is_integer() else repr(float(v))


# --------------------------------------------------------------------------- typing

def typecheck(node: Node, sig: Signature) -> TypedDiagram:
    """Infer the input and output words of a diagram."""
    i, o = _type(node, sig)
    return TypedDiagram(node, i, o)


def _where(node) -> tuple:
    return (node.pos.line, node.pos.col) if node.pos else (0, 0)


def _check_sort(s, sig, node):
    if s not in sig.sorts:
        raise UnknownIdentifier(f"unknown sort {s!r}", *_where(node))


def _type(node: Node, sig: Signature):
    if isinstance(node, Gen):
        g = sig.generators.get(node.name)
        if g is None:
            raise UnknownIdentifier(f"unknown generator {node.name!r}", *_where(node))
        return g.arity, g.coarity
    if isinstance(node, Empty):
        return (), ()
    if isinstance(node, Id):
        _check_sort(node.sort, sig, node)
        return (node.sort,), (node.sort,)
    if isinstance(node, Copy):
        _check_sort(node.sort, sig, node)
        return (node.sort,), (node.sort, node.sort)
    if isinstance(node, Discard):
        _check_sort(node.sort, sig, node)
        return (node.sort,), ()
    if isinstance(node, Swap):
        _check_sort(node.a, sig, node)
        _check_sort(node.b, sig, node)
        return (node.a, node.b), (node.b, node.a)
    if isinstance(node, Seq):
        ia, oa = _type(node.first, sig)
        ib, ob = _type(node.second, sig)
        if oa != ib:
            raise TypeCheckError(
                f"type mismatch in `{to_source(node)}`: {word_str(oa)} ≠ {word_str(ib)}", *_where(node))
        return ia, ob
    if isinstance(node, Par):
        ia, oa = _type(node.top, sig)
        ib, ob = _type(node.bottom, sig)
        return ia + ib, oa + ob
    raise TypeError(f"not a diagram node: {node!r}")


# --------------------------------------------------------------------------- semantics

@dataclass
class Interpretation:
    """Sorts to perception spaces and generators to Geos."""

    sorts: dict
    generators: dict

    def space(self, word: Word) -> PerceptionSpace:
        try:
            return tensor_spaces([self.sorts[s] for s in word])
        except KeyError as exc:
            raise MissingBinding(f"no space bound to sort {exc}") from None


def evaluate_semantics(d: TypedDiagram | Node, interp: Interpretation, sig: Signature | None = None):
    """The Geo denoted by a diagram under an interpretation of its signature."""
    node = d.ast if isinstance(d, TypedDiagram) else d
    return _sem(node, interp, sig)


def _sem(node: Node, I: Interpretation, sig):
    if isinstance(node, Gen):
        g = I.generators.get(node.name)
        if g is None:
            raise MissingBinding(f"no Geo bound to generator {node.name!r}", *_where(node))
        if sig is not None:
            decl = sig.generators[node.name]
            dom, cod = I.space(decl.arity), I.space(decl.coarity)
            if not (G.same_space(g.dom, dom) and G.same_space(g.cod, cod)):
                raise MissingBinding(
                    f"generator {node.name!r} bound to {g.dom.id} -> {g.cod.id}, expected {dom.id} -> {cod.id}",
                    *_where(node))
        return g
    if isinstance(node, Empty):
        return G.identity(UNIT)
    if isinstance(node, Id):
        return G.identity(I.space((node.sort,)))
    if isinstance(node, Copy):
        return G.copy(I.space((node.sort,)))
    if isinstance(node, Discard):
        return G.discard(I.space((node.sort,)))
    if isinstance(node, Swap):
        return G.swap(I.space((node.a,)), I.space((node.b,)))
    if isinstance(node, Seq):
        return G.compose(_sem(node.second, I, sig), _sem(node.first, I, sig))
    if isinstance(node, Par):
        return G.tensor(_sem(node.top, I, sig), _sem(node.bottom, I, sig))
    raise TypeError(f"not a diagram node: {node!r}")


# --------------------------------------------------------------------------- complexity

def generator_occurrences(node: Node) -> list[str]:
    """Generator names in left-to-right order (structural blocks omitted)."""
    out: list = []
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Gen):
            out.append(n.name)
        elif isinstance(n, Seq):
            stack += [n.second, n.first]
        elif isinstance(n, Par):
            stack += [n.bottom, n.top]
    return out


def complexity(d: TypedDiagram | Node, assignment: Mapping | None = None, sig: Signature | None = None) -> float:
    """Sum of generator complexities; structural blocks cost 0.

    ``assignment`` overrides the ``@`` defaults declared in ``sig``.  The sum is
    exactly rounded (``math.fsum``) so it does not depend on bracketing.
    """
    node = d.ast if isinstance(d, TypedDiagram) else d
    assignment = assignment or {}
    costs = []
    for name in generator_occurrences(node):
        if name in assignment:
            v = assignment[name]
        elif sig is not None and name in sig.generators and sig.generators[name].complexity is not None:
            v = sig.generators[name].complexity
        else:
            raise MissingComplexity(f"no complexity assigned to generator {name!r}")
        v = parse_cost(v)
        costs.append(v)
    if any(math.isinf(c) for c in costs):
        return math.inf
    return math.fsum(costs)


def parse_cost(v) -> float:
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity", "∞"):
            return math.inf
        v = float(v)
    v = float(v)
    if math.isnan(v) or v < 0:
        raise ValueError(f"complexity must be non-negative, got {v}")
    return v


# --------------------------------------------------------------------------- model diagrams

def _copy_tree(sort: str, n: int, defs: dict) -> str:
    """Name of a diagram ``sort -> sort^n`` built from binary copies."""
    if n == 1:
        return f"id[{sort}]"
    name = f"copies{n}"
    if name not in defs:
        a, b = n // 2, n - n // 2
        defs[name] = f"copy[{sort}] ; ({_copy_tree(sort, a, defs)} * {_copy_tree(sort, b, defs)})"
    return name


def _balanced_par(items: list[str]) -> str:
    """Parallel product of ``items`` bracketed as a balanced tree (keeps ASTs shallow)."""
    if len(items) == 1:
        return items[0]
    mid = len(items) // 2
    return f"({_balanced_par(items[:mid])} * {_balanced_par(items[mid:])})"


def _ordered_defs(defs: dict) -> list:
    return sorted(defs.items(), key=lambda kv: int(kv[0][6:]))


def geo1_source(n_patterns: int, n_classes: int = 10) -> str:
    """DSL program for the image-wide-maxpool model with ``n_patterns`` patterns.

    The ``@`` defaults are parameter counts; see :func:`geo1_assignments`.
    """
    P = n_patterns
    lines = ["# pattern matching, image-wide max and a sigmoid head",
             "sort Img;", "sort Map;", "sort Vec;", "sort Out;"]
    lines += [f"gen match_{i} : Img -> Map @0;" for i in range(P)]
    lines.append(f"gen maxpool : {'*'.join(['Map'] * P)} -> Vec @0;")
    lines.append(f"gen head : Vec -> Out @{P * n_classes + n_classes};")
    defs: dict = {}
    tree = _copy_tree("Img", P, defs)
    lines += [f"diagram {k} = {v};" for k, v in _ordered_defs(defs)]
    bank = _balanced_par([f"match_{i}" for i in range(P)])
    lines.append(f"diagram geo1 = {tree} ; {bank} ; maxpool ; head;")
    return "\n".join(lines) + "\n"


def geo1_assignments(n_patterns: int, n_classes: int = 10) -> dict:
    P = n_patterns
    params = {f"match_{i}": 0 for i in range(P)} | {"maxpool": 0, "head": P * n_classes + n_classes}
    nonlin = {f"match_{i}": 0 for i in range(P)} | {"maxpool": P, "head": n_classes}
    return {"params": params, "nonlinearities": nonlin}


def geo2_source(n_patterns: int, height: int = 28, width: int = 28, n_classes: int = 10) -> str:
    """DSL program for the channel-wise-max model (``@`` defaults are parameter counts)."""
    P, hw = n_patterns, height * width
    lines = ["# pattern matching, channel-wise max, channel mixing and a dense sigmoid head",
             "sort Img;", "sort Map;", "sort Out;"]
    lines += [f"gen match_{i} : Img -> Map @0;" for i in range(P)]
    lines += [f"gen cwm_{i} : Map -> Map @0;" for i in range(P)]
    lines.append(f"gen mix : {'*'.join(['Map'] * P)} -> Map @{P + 1};")
    lines.append(f"gen head : Map -> Out @{hw * n_classes + n_classes};")
    defs: dict = {}
    tree = _copy_tree("Img", P, defs)
    lines += [f"diagram {k} = {v};" for k, v in _ordered_defs(defs)]
    bank = _balanced_par([f"(match_{i} ; cwm_{i})" for i in range(P)])
    lines.append(f"diagram geo2 = {tree} ; {bank} ; mix ; head;")
    return "\n".join(lines) + "\n"


def geo2_assignments(n_patterns: int, height: int = 28, width: int = 28, n_classes: int = 10) -> dict:
    P, hw = n_patterns, height * width
    zero = {f"match_{i}": 0 for i in range(P)}
    params = zero | {f"cwm_{i}": 0 for i in range(P)} | {"mix": P + 1, "head": hw * n_classes + n_classes}
    nonlin = zero | {f"cwm_{i}": 2 for i in range(P)} | {"mix": 1, "head": n_classes}
    return {"params": params, "nonlinearities": nonlin}


def mlp_source(sizes: list[int]) -> str:
    """DSL program for an MLP with the given layer sizes (ReLU hidden layers, sigmoid output)."""
    sorts = [f"V{n}_{k}" for k, n in enumerate(sizes)]
    lines = ["# dense layers"] + [f"sort {s};" for s in sorts]
    for k in range(len(sizes) - 1):
        lines.append(f"gen layer{k} : {sorts[k]} -> {sorts[k + 1]} @{sizes[k] * sizes[k + 1] + sizes[k + 1]};")
    lines.append("diagram mlp = " + " ; ".join(f"layer{k}" for k in range(len(sizes) - 1)) + ";")
    return "\n".join(lines) + "\n"


def mlp_assignments(sizes: list[int]) -> dict:
    n = len(sizes) - 1
    return {"params": {f"layer{k}": sizes[k] * sizes[k + 1] + sizes[k + 1] for k in range(n)},
            "nonlinearities": {f"layer{k}": sizes[k + 1] for k in range(n)}}


def cnn_source(channels=(56, 28), hidden: int = 300, side: int = 28, n_classes: int = 10) -> str:
    """DSL program for the two-stage convolutional black box (``@`` defaults are parameter counts)."""
    c1, c2 = channels
    s1 = (side - 2) // 2
    flat = ((s1 - 2) // 2) ** 2 * c2
    return "\n".join([
        "# conv-relu-pool twice, then a dense relu layer and a softmax head",
        "sort Img;", "sort F1;", "sort P1;", "sort F2;", "sort P2;", "sort H;", "sort Out;",
        f"gen conv1 : Img -> F1 @{c1 * 9 + c1};", "gen pool1 : F1 -> P1 @0;",
        f"gen conv2 : P1 -> F2 @{c2 * c1 * 9 + c2};", "gen pool2 : F2 -> P2 @0;",
        f"gen fc1 : P2 -> H @{flat * hidden + hidden};", f"gen fc2 : H -> Out @{hidden * n_classes + n_classes};",
        "diagram cnn = conv1 ; pool1 ; conv2 ; pool2 ; fc1 ; fc2;",
    ]) + "\n"


def cnn_assignments(channels=(56, 28), hidden: int = 300, side: int = 28, n_classes: int = 10) -> dict:
    c1, c2 = channels
    h1 = side - 2
    h2 = h1 // 2 - 2
    flat = (h2 // 2) ** 2 * c2
    params = {"conv1": c1 * 9 + c1, "pool1": 0, "conv2": c2 * c1 * 9 + c2, "pool2": 0,
              "fc1": flat * hidden + hidden, "fc2": hidden * n_classes + n_classes}
    # one ReLU per convolution output and per dense unit, one output unit per class; pools are not counted
    nonlin = {"conv1": h1 * h1 * c1, "pool1": 0, "conv2": h2 * h2 * c2, "pool2": 0, "fc1": hidden,
              "fc2": n_classes}
    return {"params": params, "nonlinearities": nonlin}


def builtin_model(spec: str):
    """``geo1:500``, ``geo2:250``, ``geo2:250:14x14``, ``mlp:784-40-10`` or ``cnn`` as (source, assignments, name)."""
    kind, _, rest = spec.partition(":")
    if kind == "geo1":
        P = int(rest)
        return geo1_source(P), geo1_assignments(P), "geo1"
    if kind == "geo2":
        P, _, shape = rest.partition(":")
        h, w = (int(v) for v in shape.split("x")) if shape else (28, 28)
        return geo2_source(int(P), h, w), geo2_assignments(int(P), h, w), "geo2"
    if kind == "mlp":
        sizes = [int(v) for v in rest.split("-")]
        return mlp_source(sizes), mlp_assignments(sizes), "mlp"
    if kind == "cnn":
        return cnn_source(), cnn_assignments(), "cnn"
    raise ValueError(f"unknown builtin model {spec!r}")
