"""AST for the relational trace-specification language.

The language is an Alloy-inspired subset: signature declarations with an
``extends`` tree (plus ``in``-subset signatures), relation-valued fields,
and facts over a first-order relational formula language with transitive
closure. Nodes carry source positions; the type checker annotates
expressions in place with an arity and a bounding column type.

Structural equality deliberately ignores positions and type annotations —
use :func:`structurally_equal` (the dataclasses' own ``__eq__`` is disabled
so nodes can be used as dict keys by identity).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from ..errors import SourcePos

MULTIPLICITIES = ("lone", "some", "one", "set")


@dataclass(eq=False)
class Node:
    pos: SourcePos = field(default_factory=SourcePos, repr=False, kw_only=True)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Expr(Node):
    # Filled in by the type checker: arity and, per column, the set of
    # primitive signatures that can contribute atoms.
    arity: int = field(default=0, kw_only=True, repr=False)
    cols: tuple[frozenset[str], ...] = field(default=(), kw_only=True, repr=False)


@dataclass(eq=False)
class Name(Expr):
    """Unresolved identifier; the checker sets ``kind`` to sig/field/var."""

    name: str = ""
    kind: str = field(default="", kw_only=True, repr=False)


@dataclass(eq=False)
class Univ(Expr):
    pass


@dataclass(eq=False)
class Iden(Expr):
    pass


@dataclass(eq=False)
class NoneExpr(Expr):
    pass


@dataclass(eq=False)
class Binary(Expr):
    op: str = ""  # join product union intersect difference
    left: Expr = None
    right: Expr = None


@dataclass(eq=False)
class Unary(Expr):
    op: str = ""  # transpose closure rclosure
    operand: Expr = None


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class Formula(Node):
    pass


@dataclass(eq=False)
class Quant(Formula):
    kind: str = "all"  # all | some | no
    decls: list[tuple[str, Expr]] = field(default_factory=list)
    body: Formula = None


@dataclass(eq=False)
class Compare(Formula):
    op: str = "in"  # in | eq
    left: Expr = None
    right: Expr = None


@dataclass(eq=False)
class MultTest(Formula):
    kind: str = "some"  # no | some | lone | one
    expr: Expr = None


@dataclass(eq=False)
class NotF(Formula):
    operand: Formula = None


@dataclass(eq=False)
class BinF(Formula):
    op: str = "and"  # and | or | implies | iff
    left: Formula = None
    right: Formula = None


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FieldDecl(Node):
    name: str = ""
    owner: str = ""
    # Column signature names, owner first; arity == len(cols).
    cols: list[str] = field(default_factory=list)
    # Multiplicity pair (left, right); only binary fields may differ from
    # ("set", "set"), and the concrete syntax only exposes the right slot.
    mult: tuple[str, str] = ("set", "one")


@dataclass(eq=False)
class SigDecl(Node):
    name: str = ""
    abstract: bool = False
    kind: str = "toplevel"  # toplevel | extends | subset
    parents: list[str] = field(default_factory=list)
    fields: list[FieldDecl] = field(default_factory=list)


@dataclass(eq=False)
class ReasonAnnotation(Node):
    targets: list[str] = field(default_factory=list)
    keyword: str = "Reason"  # extension point for future annotation kinds


@dataclass(eq=False)
class FactDecl(Node):
    name: Optional[str] = None
    annotation: Optional[ReasonAnnotation] = None
    formula: Formula = None
    # Set by the type checker.
    horn: bool = field(default=False, kw_only=True, repr=False)
    implicit: bool = field(default=False, kw_only=True, repr=False)

    @property
    def display_name(self) -> str:
        return self.name or f"fact@{self.pos.line}"


@dataclass(eq=False)
class SpecAst(Node):
    sigs: list[SigDecl] = field(default_factory=list)
    facts: list[FactDecl] = field(default_factory=list)


AnyNode = Union[SpecAst, SigDecl, FieldDecl, FactDecl, ReasonAnnotation, Formula, Expr]


def structurally_equal(a: AnyNode, b: AnyNode) -> bool:
    """Equality over the concrete content, ignoring spans and annotations."""

    if type(a) is not type(b):
        return False
    if isinstance(a, SpecAst):
        return _all_eq(a.sigs, b.sigs) and _all_eq(a.facts, b.facts)
    if isinstance(a, SigDecl):
        return (
            (a.name, a.abstract, a.kind, a.parents) == (b.name, b.abstract, b.kind, b.parents)
            and _all_eq(a.fields, b.fields)
        )
    if isinstance(a, FieldDecl):
        return (a.name, a.owner, a.cols, a.mult) == (b.name, b.owner, b.cols, b.mult)
    if isinstance(a, FactDecl):
        if (a.name, a.annotation is None) != (b.name, b.annotation is None):
            return False
        if a.annotation and not structurally_equal(a.annotation, b.annotation):
            return False
        return structurally_equal(a.formula, b.formula)
    if isinstance(a, ReasonAnnotation):
        return (a.targets, a.keyword) == (b.targets, b.keyword)
    if isinstance(a, Quant):
        if (a.kind, len(a.decls)) != (b.kind, len(b.decls)):
            return False
        for (va, ea), (vb, eb) in zip(a.decls, b.decls):
            if va != vb or not structurally_equal(ea, eb):
                return False
        return structurally_equal(a.body, b.body)
    if isinstance(a, Compare):
        return a.op == b.op and structurally_equal(a.left, b.left) and structurally_equal(a.right, b.right)
    if isinstance(a, MultTest):
        return a.kind == b.kind and structurally_equal(a.expr, b.expr)
    if isinstance(a, NotF):
        return structurally_equal(a.operand, b.operand)
    if isinstance(a, BinF):
        return a.op == b.op and structurally_equal(a.left, b.left) and structurally_equal(a.right, b.right)
    if isinstance(a, Name):
        return a.name == b.name
    if isinstance(a, (Univ, Iden, NoneExpr)):
        return True
    if isinstance(a, Binary):
        return a.op == b.op and structurally_equal(a.left, b.left) and structurally_equal(a.right, b.right)
    if isinstance(a, Unary):
        return a.op == b.op and structurally_equal(a.operand, b.operand)
    raise TypeError(f"unhandled node type {type(a)!r}")


def _all_eq(xs: list, ys: list) -> bool:
    return len(xs) == len(ys) and all(structurally_equal(x, y) for x, y in zip(xs, ys))
