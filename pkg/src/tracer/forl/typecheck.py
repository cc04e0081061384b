"""Static checking of parsed specs.

Produces a :class:`TypedSpec`: the signature hierarchy (an ``extends`` tree
of *primitive* signatures with subset signatures layered on top), globally
resolved field declarations, and facts annotated with

* per-expression arity and a bounding column type (for each column, the set
  of primitive signatures whose atoms can appear there),
* a Horn classification used by the fixpoint fast path,
* implicit facts desugared from field multiplicities.

A provably empty join is reported as a warning-level diagnostic (Alloy
practice), not an error.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

from ..errors import (
    ArityError,
    Diagnostic,
    NonBinaryClosure,
    SpecError,
    UnknownName,
    UnknownReasonTarget,
)
from . import ast

Cols = tuple[frozenset[str], ...]


@dataclass
class SigInfo:
    decl: ast.SigDecl
    children: list[str] = dfield(default_factory=list)  # extends-children
    prims: frozenset[str] = frozenset()  # primitive sigs contributing atoms

    @property
    def name(self) -> str:
        return self.decl.name

    @property
    def abstract(self) -> bool:
        return self.decl.abstract

    @property
    def kind(self) -> str:
        return self.decl.kind

    @property
    def parents(self) -> list[str]:
        return self.decl.parents


@dataclass
class HornRule:
    """``all vars | premises => head`` with every atom a membership test."""

    variables: list[tuple[str, str]]  # (var, bounding sig)
    premises: list[tuple[tuple[str, ...], str]]  # (var tuple, relation)
    head: tuple[tuple[str, ...], str]


@dataclass
class TypedSpec:
    spec_ast: ast.SpecAst
    sigs: dict[str, SigInfo]
    sig_order: list[str]
    fields: dict[str, ast.FieldDecl]
    field_order: list[str]
    facts: list[ast.FactDecl]  # user facts then implicit multiplicity facts
    diagnostics: list[Diagnostic]
    horn_rules: dict[int, HornRule]  # index into .facts -> rule

    def prim_sigs(self) -> list[str]:
        return [s for s in self.sig_order if self.sigs[s].kind != "subset"]

    def field_cols(self, name: str) -> Cols:
        f = self.fields[name]
        return tuple(self.sigs[c].prims for c in f.cols)

    def consistency_facts(self) -> list[ast.FactDecl]:
        """Facts for consistency checking: everything not Reason@-annotated."""
        return [f for f in self.facts if f.annotation is None]

    def reasoning_facts(self, targets: set[str]) -> list[ast.FactDecl]:
        """Facts whose Reason@ targets intersect the requested targets."""
        return [
            f for f in self.facts
            if f.annotation is not None and set(f.annotation.targets) & targets
        ]

    def horn_rule_for(self, fact: ast.FactDecl) -> HornRule | None:
        try:
            return self.horn_rules.get(self.facts.index(fact))
        except ValueError:
            return None


def typecheck(spec: ast.SpecAst) -> TypedSpec:
    sigs: dict[str, SigInfo] = {}
    sig_order: list[str] = []
    for s in spec.sigs:
        if s.name in sigs:
            raise SpecError(f"duplicate signature {s.name!r}", s.pos)
        sigs[s.name] = SigInfo(decl=s)
        sig_order.append(s.name)

    for s in spec.sigs:
        for p in s.parents:
            if p not in sigs:
                raise UnknownName(f"unknown signature {p!r}", s.pos)
        if s.kind == "extends":
            parent = sigs[s.parents[0]]
            if parent.kind == "subset":
                raise SpecError(
                    f"{s.name!r} cannot extend subset signature {parent.name!r}",
                    s.pos,
                )
            parent.children.append(s.name)

    _check_acyclic(spec, sigs)
    _compute_prims(sigs, sig_order)

    fields: dict[str, ast.FieldDecl] = {}
    field_order: list[str] = []
    for s in spec.sigs:
        seen_here: set[str] = set()
        for f in s.fields:
            if f.name in seen_here:
                raise SpecError(f"duplicate field {f.name!r} in sig {s.name!r}", f.pos)
            seen_here.add(f.name)
            if f.name in fields:
                raise SpecError(
                    f"field {f.name!r} already declared in sig "
                    f"{fields[f.name].owner!r}; field names must be unique",
                    f.pos,
                )
            if f.name in sigs:
                raise SpecError(
                    f"field {f.name!r} collides with a signature name", f.pos
                )
            for c in f.cols:
                if c not in sigs:
                    raise UnknownName(f"unknown signature {c!r} in field {f.name!r}", f.pos)
            fields[f.name] = f
            field_order.append(f.name)

    diagnostics: list[Diagnostic] = []
    checker = _Checker(sigs, fields, diagnostics)

    all_facts = list(spec.facts) + _multiplicity_facts(fields, field_order)
    for fact in all_facts:
        if fact.annotation is not None:
            for t in fact.annotation.targets:
                if t not in fields:
                    raise UnknownReasonTarget(
                        f"Reason@ target {t!r} is not a declared field",
                        fact.annotation.pos,
                    )
        checker.formula(fact.formula, {})

    horn_rules: dict[int, HornRule] = {}
    for idx, fact in enumerate(all_facts):
        rule = _classify_horn(fact.formula, sigs, fields)
        fact.horn = rule is not None
        if rule is not None:
            horn_rules[idx] = rule

    return TypedSpec(
        spec_ast=spec,
        sigs=sigs,
        sig_order=sig_order,
        fields=fields,
        field_order=field_order,
        facts=all_facts,
        diagnostics=diagnostics,
        horn_rules=horn_rules,
    )


def _check_acyclic(spec: ast.SpecAst, sigs: dict[str, SigInfo]) -> None:
    for start in sigs:
        seen = [start]
        cur = sigs[start]
        while cur.kind == "extends":
            nxt = cur.parents[0]
            if nxt in seen:
                raise SpecError(
                    f"cyclic extends chain through {start!r}", cur.decl.pos
                )
            seen.append(nxt)
            cur = sigs[nxt]
    # Subset sigs may reference other subsets; require those acyclic too.
    state: dict[str, int] = {}

    def visit(name: str) -> None:
        if state.get(name) == 1:
            raise SpecError(f"cyclic subset declaration through {name!r}",
                            sigs[name].decl.pos)
        if state.get(name) == 2:
            return
        state[name] = 1
        if sigs[name].kind == "subset":
            for p in sigs[name].parents:
                visit(p)
        state[name] = 2

    for name in sigs:
        visit(name)


def _compute_prims(sigs: dict[str, SigInfo], order: list[str]) -> None:
    def prim_closure(name: str) -> frozenset[str]:
        info = sigs[name]
        if info.prims:
            return info.prims
        if info.kind == "subset":
            acc: frozenset[str] = frozenset()
            for p in info.parents:
                acc |= prim_closure(p)
        else:
            acc = frozenset([name])
            for c in info.children:
                acc |= prim_closure(c)
        info.prims = acc
        return acc

    for name in order:
        prim_closure(name)


class _Checker:
    def __init__(self, sigs: dict[str, SigInfo], fields: dict[str, ast.FieldDecl],
                 diagnostics: list[Diagnostic]):
        self.sigs = sigs
        self.fields = fields
        self.diagnostics = diagnostics

    @property
    def all_prims(self) -> frozenset[str]:
        return frozenset(n for n, i in self.sigs.items() if i.kind != "subset")

    # -- expressions --------------------------------------------------------

    def expr(self, e: ast.Expr, env: dict[str, Cols]) -> Cols:
        cols = self._expr(e, env)
        e.arity = len(cols)
        e.cols = cols
        return cols

    def _expr(self, e: ast.Expr, env: dict[str, Cols]) -> Cols:
        if isinstance(e, ast.Name):
            if e.name in env:
                e.kind = "var"
                return env[e.name]
            if e.name in self.sigs:
                e.kind = "sig"
                return (self.sigs[e.name].prims,)
            if e.name in self.fields:
                e.kind = "field"
                return tuple(self.sigs[c].prims for c in self.fields[e.name].cols)
            raise UnknownName(f"unknown name {e.name!r}", e.pos)
        if isinstance(e, ast.Univ):
            return (self.all_prims,)
        if isinstance(e, ast.Iden):
            return (self.all_prims, self.all_prims)
        if isinstance(e, ast.NoneExpr):
            return (frozenset(),)
        if isinstance(e, ast.Unary):
            inner = self.expr(e.operand, env)
            if e.op == "transpose":
                if len(inner) != 2:
                    raise ArityError("transpose requires a binary expression", e.pos)
                return (inner[1], inner[0])
            if e.op in ("closure", "rclosure"):
                if len(inner) != 2:
                    raise NonBinaryClosure(
                        "transitive closure requires a binary expression", e.pos
                    )
                if not (inner[0] & inner[1]):
                    self.diagnostics.append(Diagnostic(
                        "closure over provably disjoint column types is empty",
                        e.pos,
                    ))
                if e.op == "rclosure":
                    return (inner[0] | self.all_prims, inner[1] | self.all_prims)
                return inner
            raise TypeError(e.op)
        if isinstance(e, ast.Binary):
            left = self.expr(e.left, env)
            right = self.expr(e.right, env)
            if e.op == "join":
                if len(left) + len(right) - 2 < 1:
                    raise ArityError("join of two unary expressions", e.pos)
                if not (left[-1] & right[0]):
                    self.diagnostics.append(Diagnostic(
                        "join over provably disjoint column types is empty",
                        e.pos,
                    ))
                return left[:-1] + right[1:]
            if e.op == "product":
                return left + right
            if e.op in ("union", "intersect", "difference"):
                if len(left) != len(right):
                    raise ArityError(
                        f"{e.op} of expressions with arities {len(left)} and "
                        f"{len(right)}",
                        e.pos,
                    )
                if e.op == "union":
                    return tuple(a | b for a, b in zip(left, right))
                if e.op == "intersect":
                    return tuple(a & b for a, b in zip(left, right))
                return left
            raise TypeError(e.op)
        raise TypeError(type(e))

    # -- formulas -------------------------------------------------------------

    def formula(self, f: ast.Formula, env: dict[str, Cols]) -> None:
        if isinstance(f, ast.Quant):
            inner = dict(env)
            for var, bound in f.decls:
                cols = self.expr(bound, inner)
                if len(cols) != 1:
                    raise ArityError(
                        f"quantifier bound for {var!r} must be unary", bound.pos
                    )
                inner[var] = cols
            self.formula(f.body, inner)
            return
        if isinstance(f, ast.Compare):
            left = self.expr(f.left, env)
            right = self.expr(f.right, env)
            if len(left) != len(right):
                raise ArityError(
                    f"'{'in' if f.op == 'in' else '='}' relates expressions of "
                    f"arities {len(left)} and {len(right)}",
                    f.pos,
                )
            return
        if isinstance(f, ast.MultTest):
            self.expr(f.expr, env)
            return
        if isinstance(f, ast.NotF):
            self.formula(f.operand, env)
            return
        if isinstance(f, ast.BinF):
            self.formula(f.left, env)
            self.formula(f.right, env)
            return
        raise TypeError(type(f))


# ---------------------------------------------------------------------------
# Multiplicity desugaring
# ---------------------------------------------------------------------------

def _multiplicity_facts(fields: dict[str, ast.FieldDecl],
                        order: list[str]) -> list[ast.FactDecl]:
    """``r: A set -> one B`` becomes the implicit fact ``all a: A | one a.r``.

    These participate in consistency checking exactly like user facts; they
    are never Reason@-annotated.
    """
    out: list[ast.FactDecl] = []
    for name in order:
        f = fields[name]
        if len(f.cols) != 2:
            continue
        left_mult, right_mult = f.mult
        if right_mult != "set":
            body = ast.MultTest(
                kind=right_mult,
                expr=ast.Binary(op="join", left=ast.Name(name="a"),
                                right=ast.Name(name=f.name)),
            )
            out.append(ast.FactDecl(
                name=f"{f.name}$mult",
                formula=ast.Quant(kind="all", decls=[("a", ast.Name(name=f.cols[0]))],
                                  body=body),
                pos=f.pos,
                implicit=True,
            ))
        if left_mult != "set":
            body = ast.MultTest(
                kind=left_mult,
                expr=ast.Binary(op="join", left=ast.Name(name=f.name),
                                right=ast.Name(name="b")),
            )
            out.append(ast.FactDecl(
                name=f"{f.name}$leftmult",
                formula=ast.Quant(kind="all", decls=[("b", ast.Name(name=f.cols[1]))],
                                  body=body),
                pos=f.pos,
                implicit=True,
            ))
    for fact in out:
        fact.implicit = True
    return out


# ---------------------------------------------------------------------------
# Horn classification
# ---------------------------------------------------------------------------

def _classify_horn(formula: ast.Formula, sigs: dict[str, SigInfo],
                   fields: dict[str, ast.FieldDecl]) -> HornRule | None:
    """Match ``all x,..: (t1 in R1 and .. tk in Rk) implies t in R``.

    The premise conjunction may be empty (a bare head atom). Premise atoms
    may test sig or field membership; the head must be a field atom, since
    the fixpoint derives relation tuples. Quantifier bounds must be plain
    signature references so the fixpoint can enumerate atoms.
    """
    variables: list[tuple[str, str]] = []
    body = formula
    while isinstance(body, ast.Quant) and body.kind == "all":
        for var, bound in body.decls:
            if not (isinstance(bound, ast.Name) and bound.name in sigs):
                return None
            variables.append((var, bound.name))
        body = body.body

    if isinstance(body, ast.BinF) and body.op == "implies":
        premise_f, head_f = body.left, body.right
    else:
        premise_f, head_f = None, body

    bound_vars = {v for v, _ in variables}

    def atom(f: ast.Formula) -> tuple[tuple[str, ...], str] | None:
        if not (isinstance(f, ast.Compare) and f.op == "in"):
            return None
        if not isinstance(f.right, ast.Name):
            return None
        rel = f.right.name
        if rel not in fields and rel not in sigs:
            return None
        vars_ = _var_tuple(f.left, bound_vars)
        if vars_ is None:
            return None
        want = len(fields[rel].cols) if rel in fields else 1
        if len(vars_) != want:
            return None
        return (vars_, rel)

    premises: list[tuple[tuple[str, ...], str]] = []
    if premise_f is not None:
        stack = [premise_f]
        while stack:
            f = stack.pop()
            if isinstance(f, ast.BinF) and f.op == "and":
                stack.extend([f.right, f.left])
                continue
            a = atom(f)
            if a is None:
                return None
            premises.append(a)
        premises.reverse()

    head = atom(head_f)
    if head is None or head[1] not in fields:
        return None
    return HornRule(variables=variables, premises=premises, head=head)


def _var_tuple(e: ast.Expr, bound: set[str]) -> tuple[str, ...] | None:
    if isinstance(e, ast.Name):
        return (e.name,) if e.name in bound else None
    if isinstance(e, ast.Binary) and e.op == "product":
        left = _var_tuple(e.left, bound)
        right = _var_tuple(e.right, bound)
        if left is None or right is None:
            return None
        return left + right
    return None
