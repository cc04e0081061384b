"""Recursive-descent parser producing :mod:`tracer.forl.ast` nodes.

Operator precedence follows Alloy's published table. The two classic
ambiguities are handled the usual way:

* ``some``/``no`` open either a quantifier or a multiplicity test — decided
  by looking ahead for ``name (, name)* :``;
* ``(`` opens either a parenthesized formula or a parenthesized expression —
  decided by trying the formula parse and backtracking on failure.

A standalone line ``Reason@ r1, r2`` immediately before ``fact`` attaches a
:class:`ReasonAnnotation` with those targets.
"""

from __future__ import annotations

from ..errors import ForlSyntaxError
from . import ast
from .lexer import Token, tokenize

QUANT_KINDS = ("all", "some", "no")
MULT_KINDS = ("no", "some", "lone", "one")
UNARY_OPS = {"tilde": "transpose", "caret": "closure", "star": "rclosure"}


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # -- token plumbing -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        j = min(self.i + k, len(self.tokens) - 1)
        return self.tokens[j]

    def next(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, *kinds: str) -> bool:
        return self.tok.kind in kinds

    def expect(self, kind: str, what: str = "") -> Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise ForlSyntaxError(
                f"expected {what or kind!r}, found {found!r}", self.tok.pos,
                expected=what or kind,
            )
        return self.next()

    # -- spec items ----------------------------------------------------------

    def parse_spec(self) -> ast.SpecAst:
        spec = ast.SpecAst(pos=self.tok.pos)
        while not self.at("eof"):
            if self.at("abstract", "sig"):
                spec.sigs.append(self.sig_decl())
            elif self.at("fact") or self._at_annotation():
                spec.facts.append(self.fact_decl())
            else:
                raise ForlSyntaxError(
                    f"expected 'sig', 'fact' or 'Reason@' annotation, found "
                    f"{self.tok.text!r}",
                    self.tok.pos,
                    expected="declaration",
                )
        return spec

    def _at_annotation(self) -> bool:
        return self.at("name") and self.tok.text == "Reason" and self.peek().kind == "at"

    def sig_decl(self) -> ast.SigDecl:
        pos = self.tok.pos
        abstract = False
        if self.at("abstract"):
            abstract = True
            self.next()
        self.expect("sig")
        name = self.expect("name", "signature name").text
        kind, parents = "toplevel", []
        if self.at("extends"):
            self.next()
            kind = "extends"
            parents = [self.expect("name", "parent signature").text]
        elif self.at("in"):
            self.next()
            kind = "subset"
            parents = [self.expect("name", "parent signature").text]
            while self.at("plus"):
                self.next()
                parents.append(self.expect("name", "parent signature").text)
        self.expect("lbrace")
        fields: list[ast.FieldDecl] = []
        if not self.at("rbrace"):
            fields.append(self.field_decl(name))
            while self.at("comma"):
                self.next()
                fields.append(self.field_decl(name))
        self.expect("rbrace")
        return ast.SigDecl(name=name, abstract=abstract, kind=kind,
                           parents=parents, fields=fields, pos=pos)

    def field_decl(self, owner: str) -> ast.FieldDecl:
        pos = self.tok.pos
        fname = self.expect("name", "field name").text
        self.expect("colon")
        mult = None
        if self.at(*ast.MULTIPLICITIES):
            mult = self.next().text
        cols = [self.expect("name", "column signature").text]
        while self.at(*ast.MULTIPLICITIES) or self.at("arrow"):
            if self.at(*ast.MULTIPLICITIES):
                raise ForlSyntaxError(
                    "multiplicity pairs are restricted to binary fields",
                    self.tok.pos,
                )
            self.next()  # arrow
            if self.at(*ast.MULTIPLICITIES):
                raise ForlSyntaxError(
                    "multiplicity pairs are restricted to binary fields",
                    self.tok.pos,
                )
            cols.append(self.expect("name", "column signature").text)
        if len(cols) > 1:
            if mult is not None:
                raise ForlSyntaxError(
                    "multiplicity keywords are restricted to binary fields",
                    pos,
                )
            pair = ("set", "set")
        else:
            pair = ("set", mult or "one")
        return ast.FieldDecl(name=fname, owner=owner, cols=[owner] + cols,
                             mult=pair, pos=pos)

    def fact_decl(self) -> ast.FactDecl:
        pos = self.tok.pos
        annotation = None
        if self._at_annotation():
            self.next()  # Reason
            self.next()  # @
            targets = [self.expect("name", "annotation target").text]
            while self.at("comma"):
                self.next()
                targets.append(self.expect("name", "annotation target").text)
            annotation = ast.ReasonAnnotation(targets=targets, pos=pos)
            if not self.at("fact"):
                raise ForlSyntaxError(
                    "a Reason@ annotation must be immediately followed by a fact",
                    self.tok.pos,
                    expected="fact",
                )
        self.expect("fact")
        name = self.next().text if self.at("name") else None
        self.expect("lbrace")
        formula = self.formula()
        self.expect("rbrace")
        return ast.FactDecl(name=name, annotation=annotation, formula=formula, pos=pos)

    # -- formulas ------------------------------------------------------------

    def formula(self) -> ast.Formula:
        return self.iff_formula()

    def iff_formula(self) -> ast.Formula:
        left = self.implies_formula()
        while self.at("iff"):
            pos = self.next().pos
            right = self.implies_formula()
            left = ast.BinF(op="iff", left=left, right=right, pos=pos)
        return left

    def implies_formula(self) -> ast.Formula:
        left = self.or_formula()
        if self.at("implies"):
            pos = self.next().pos
            right = self.implies_formula()  # right-associative
            return ast.BinF(op="implies", left=left, right=right, pos=pos)
        return left

    def or_formula(self) -> ast.Formula:
        left = self.and_formula()
        while self.at("or"):
            pos = self.next().pos
            left = ast.BinF(op="or", left=left, right=self.and_formula(), pos=pos)
        return left

    def and_formula(self) -> ast.Formula:
        left = self.not_formula()
        while self.at("and"):
            pos = self.next().pos
            left = ast.BinF(op="and", left=left, right=self.not_formula(), pos=pos)
        return left

    def not_formula(self) -> ast.Formula:
        if self.at("not"):
            pos = self.next().pos
            return ast.NotF(operand=self.not_formula(), pos=pos)
        return self.primary_formula()

    def _at_quantifier(self) -> bool:
        if not self.at(*QUANT_KINDS):
            return False
        j = self.i + 1
        toks = self.tokens
        if toks[j].kind != "name":
            return False
        j += 1
        while toks[j].kind == "comma" and toks[j + 1].kind == "name":
            j += 2
        return toks[j].kind == "colon"

    def primary_formula(self) -> ast.Formula:
        if self._at_quantifier():
            return self.quantifier()
        if self.at(*MULT_KINDS):
            t = self.next()
            return ast.MultTest(kind=t.kind, expr=self.expr(), pos=t.pos)
        if self.at("lparen"):
            saved = self.i
            try:
                self.next()
                inner = self.formula()
                self.expect("rparen")
                return inner
            except ForlSyntaxError:
                self.i = saved  # fall through: parenthesized expression
        return self.compare()

    def quantifier(self) -> ast.Quant:
        pos = self.tok.pos
        kind = self.next().kind
        decls: list[tuple[str, ast.Expr]] = []
        while True:
            names = [self.expect("name", "bound variable").text]
            while self.at("comma") and self.peek().kind == "name" and self._comma_in_decl():
                self.next()
                names.append(self.expect("name", "bound variable").text)
            self.expect("colon")
            bound = self.expr()
            decls.extend((n, bound) for n in names)
            if self.at("comma"):
                self.next()
                continue
            break
        self.expect("bar", "'|'")
        return ast.Quant(kind=kind, decls=decls, body=self.formula(), pos=pos)

    def _comma_in_decl(self) -> bool:
        # Inside a decl group `a, b: X` the comma separates names; the
        # names must still be followed by `,` chains ending in `:`.
        j = self.i + 1
        toks = self.tokens
        while toks[j].kind == "name":
            j += 1
            if toks[j].kind == "colon":
                return True
            if toks[j].kind != "comma":
                return False
            j += 1
        return False

    def compare(self) -> ast.Formula:
        pos = self.tok.pos
        left = self.expr()
        if self.at("in"):
            self.next()
            return ast.Compare(op="in", left=left, right=self.expr(), pos=pos)
        if self.at("eq"):
            self.next()
            return ast.Compare(op="eq", left=left, right=self.expr(), pos=pos)
        raise ForlSyntaxError(
            f"expected 'in' or '=' after expression, found {self.tok.text!r}",
            self.tok.pos,
            expected="in",
        )

    # -- expressions ----------------------------------------------------------

    def expr(self) -> ast.Expr:
        left = self.intersect_expr()
        while self.at("plus", "minus"):
            t = self.next()
            op = "union" if t.kind == "plus" else "difference"
            left = ast.Binary(op=op, left=left, right=self.intersect_expr(), pos=t.pos)
        return left

    def intersect_expr(self) -> ast.Expr:
        left = self.product_expr()
        while self.at("amp"):
            pos = self.next().pos
            left = ast.Binary(op="intersect", left=left, right=self.product_expr(), pos=pos)
        return left

    def product_expr(self) -> ast.Expr:
        left = self.join_expr()
        while self.at("arrow"):
            pos = self.next().pos
            left = ast.Binary(op="product", left=left, right=self.join_expr(), pos=pos)
        return left

    def join_expr(self) -> ast.Expr:
        left = self.unary_expr()
        while self.at("dot"):
            pos = self.next().pos
            left = ast.Binary(op="join", left=left, right=self.unary_expr(), pos=pos)
        return left

    def unary_expr(self) -> ast.Expr:
        if self.at(*UNARY_OPS):
            t = self.next()
            return ast.Unary(op=UNARY_OPS[t.kind], operand=self.unary_expr(), pos=t.pos)
        return self.primary_expr()

    def primary_expr(self) -> ast.Expr:
        t = self.tok
        if t.kind == "name":
            self.next()
            return ast.Name(name=t.text, pos=t.pos)
        if t.kind == "univ":
            self.next()
            return ast.Univ(pos=t.pos)
        if t.kind == "iden":
            self.next()
            return ast.Iden(pos=t.pos)
        if t.kind == "none":
            self.next()
            return ast.NoneExpr(pos=t.pos)
        if t.kind == "lparen":
            self.next()
            inner = self.expr()
            self.expect("rparen")
            return inner
        raise ForlSyntaxError(
            f"expected an expression, found {t.text or 'end of input'!r}",
            t.pos,
            expected="expression",
        )


def parse_spec(text: str) -> ast.SpecAst:
    """Parse spec text into an AST; raises :class:`ForlSyntaxError`."""
    return _Parser(tokenize(text)).parse_spec()


def parse_formula(text: str) -> ast.Formula:
    """Parse a standalone formula (handy in tests and the evaluator API)."""
    p = _Parser(tokenize(text))
    f = p.formula()
    p.expect("eof", "end of formula")
    return f


def parse_expr(text: str) -> ast.Expr:
    p = _Parser(tokenize(text))
    e = p.expr()
    p.expect("eof", "end of expression")
    return e
