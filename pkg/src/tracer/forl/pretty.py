"""Canonical text rendering of spec ASTs.

``parse_spec(pretty_print(x))`` is structurally equal to ``x`` (modulo
source spans), and pretty-printing is a fixpoint after one print-parse
cycle. Parentheses are emitted only where precedence demands them.
"""

from __future__ import annotations

from . import ast

# Larger binds tighter; mirrors the parser.
_F_PREC = {"iff": 1, "implies": 2, "or": 3, "and": 4}
_E_PREC = {"union": 1, "difference": 1, "intersect": 2, "product": 3, "join": 4}
_NOT_PREC = 5
_UNARY = {"transpose": "~", "closure": "^", "rclosure": "*"}


def pretty_print(spec: ast.SpecAst) -> str:
    parts: list[str] = []
    for s in spec.sigs:
        parts.append(_sig(s))
    for f in spec.facts:
        if f.implicit:
            continue
        parts.append(_fact(f))
    return "\n\n".join(parts) + ("\n" if parts else "")


def _sig(s: ast.SigDecl) -> str:
    head = "abstract sig " if s.abstract else "sig "
    head += s.name
    if s.kind == "extends":
        head += f" extends {s.parents[0]}"
    elif s.kind == "subset":
        head += " in " + " + ".join(s.parents)
    if not s.fields:
        return head + " {}"
    body = ",\n".join("  " + _field(f) for f in s.fields)
    return head + " {\n" + body + "\n}"


def _field(f: ast.FieldDecl) -> str:
    cols = f.cols[1:]
    if len(f.cols) == 2:
        right = f.mult[1]
        prefix = "" if right == "one" else right + " "
        return f"{f.name}: {prefix}{cols[0]}"
    return f"{f.name}: " + " -> ".join(cols)


def _fact(f: ast.FactDecl) -> str:
    out = ""
    if f.annotation is not None:
        out += f"{f.annotation.keyword}@ " + ", ".join(f.annotation.targets) + "\n"
    out += "fact"
    if f.name:
        out += " " + f.name
    out += " {\n  " + formula_text(f.formula) + "\n}"
    return out


def formula_text(f: ast.Formula, parent_prec: int = 0) -> str:
    if isinstance(f, ast.Quant):
        decls = _decl_groups(f.decls)
        text = f"{f.kind} {decls} | {formula_text(f.body)}"
        # Quantifiers swallow everything to their right: parenthesize
        # whenever they appear under any operator.
        return f"({text})" if parent_prec > 0 else text
    if isinstance(f, ast.BinF):
        prec = _F_PREC[f.op]
        op = {"iff": "iff", "implies": "implies", "or": "or", "and": "and"}[f.op]
        # implies is right-associative, the rest are parsed left-associative.
        lp = prec + 1 if f.op == "implies" else prec
        rp = prec if f.op == "implies" else prec + 1
        text = f"{formula_text(f.left, lp)} {op} {formula_text(f.right, rp)}"
        return f"({text})" if parent_prec > prec else text
    if isinstance(f, ast.NotF):
        text = f"not {formula_text(f.operand, _NOT_PREC)}"
        return f"({text})" if parent_prec > _NOT_PREC else text
    if isinstance(f, ast.MultTest):
        text = f"{f.kind} {expr_text(f.expr)}"
        return f"({text})" if parent_prec > _NOT_PREC else text
    if isinstance(f, ast.Compare):
        op = "in" if f.op == "in" else "="
        return f"{expr_text(f.left)} {op} {expr_text(f.right)}"
    raise TypeError(type(f))


def _decl_groups(decls: list[tuple[str, ast.Expr]]) -> str:
    groups: list[tuple[list[str], ast.Expr]] = []
    for var, bound in decls:
        if groups and ast.structurally_equal(groups[-1][1], bound):
            groups[-1][0].append(var)
        else:
            groups.append(([var], bound))
    return ", ".join(f"{', '.join(vs)}: {expr_text(b)}" for vs, b in groups)


def expr_text(e: ast.Expr, parent_prec: int = 0) -> str:
    if isinstance(e, ast.Name):
        return e.name
    if isinstance(e, ast.Univ):
        return "univ"
    if isinstance(e, ast.Iden):
        return "iden"
    if isinstance(e, ast.NoneExpr):
        return "none"
    if isinstance(e, ast.Unary):
        text = _UNARY[e.op] + expr_text(e.operand, 6)
        return f"({text})" if parent_prec > 5 else text
    if isinstance(e, ast.Binary):
        prec = _E_PREC[e.op]
        sym = {"union": "+", "difference": "-", "intersect": "&",
               "product": "->", "join": "."}[e.op]
        sep = sym if sym == "." else f" {sym} "
        text = f"{expr_text(e.left, prec)}{sep}{expr_text(e.right, prec + 1)}"
        return f"({text})" if parent_prec > prec else text
    raise TypeError(type(e))
