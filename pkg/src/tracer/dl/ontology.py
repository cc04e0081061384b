"""TBox: general concept inclusions, disjointness, role hierarchy,
functional roles; plus the line-oriented functional-style file format.

Format (one axiom per line, ``#`` comments):

    SubClassOf(A B)
    DisjointClasses(A B)
    SubObjectPropertyOf(r s)
    FunctionalObjectProperty(r)

Concepts use prefix form: ``and(...)``, ``or(...)``, ``not(...)``,
``some(r C)``, ``all(r C)``, with ``inv(r)`` for inverse roles and
``Thing``/``Nothing`` for ⊤/⊥.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import SpecError
from .concepts import (
    BOTTOM,
    TOP,
    Atomic,
    Concept,
    Role,
    and_,
    nnf,
    not_,
    or_,
)
from .concepts import Exists, Forall


@dataclass
class Ontology:
    gcis: list[tuple[Concept, Concept]] = field(default_factory=list)
    role_inclusions: list[tuple[str, str]] = field(default_factory=list)
    functional_roles: set[str] = field(default_factory=set)

    def __post_init__(self):
        self._check_role_graph_acyclic()

    def add_gci(self, sub: Concept, sup: Concept) -> None:
        self.gcis.append((sub, sup))

    def add_disjoint(self, a: Concept, b: Concept) -> None:
        # Sugar for A ⊓ B ⊑ ⊥.
        self.gcis.append((and_([a, b]), BOTTOM))

    def internalized(self) -> list[Concept]:
        """NNF of ¬C ⊔ D per GCI; added to every tableau node label."""
        return [nnf(or_([not_(c), d])) for c, d in self.gcis]

    def without_role_inclusions(self) -> "Ontology":
        return Ontology(gcis=list(self.gcis), role_inclusions=[],
                        functional_roles=set(self.functional_roles))

    def super_roles(self, name: str) -> frozenset[str]:
        """Reflexive-transitive closure over the inclusion graph."""
        out = {name}
        changed = True
        while changed:
            changed = False
            for sub, sup in self.role_inclusions:
                if sub in out and sup not in out:
                    out.add(sup)
                    changed = True
        return frozenset(out)

    def role_below(self, edge_role: Role, wanted: Role) -> bool:
        """Does an edge labeled ``edge_role`` witness a ``wanted``-edge?"""
        if edge_role.inverse != wanted.inverse:
            return False
        return wanted.name in self.super_roles(edge_role.name)

    def _check_role_graph_acyclic(self) -> None:
        state: dict[str, int] = {}
        adj: dict[str, list[str]] = {}
        for sub, sup in self.role_inclusions:
            adj.setdefault(sub, []).append(sup)

        def visit(r: str) -> None:
            if state.get(r) == 1:
                raise SpecError(f"cyclic role inclusion through {r!r}")
            if state.get(r) == 2:
                return
            state[r] = 1
            for s in adj.get(r, ()):
                visit(s)
            state[r] = 2

        for r in list(adj):
            visit(r)


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------


def parse_ontology(text: str) -> Ontology:
    onto = Ontology()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, args = _split_call(line, lineno)
        if head == "SubClassOf":
            sub, sup = _two(args, lineno)
            onto.add_gci(_concept(sub, lineno), _concept(sup, lineno))
        elif head == "DisjointClasses":
            a, b = _two(args, lineno)
            onto.add_disjoint(_concept(a, lineno), _concept(b, lineno))
        elif head == "SubObjectPropertyOf":
            r, s = _two(args, lineno)
            onto.role_inclusions.append((_role_name(r, lineno), _role_name(s, lineno)))
        elif head == "FunctionalObjectProperty":
            (r,) = _one(args, lineno)
            onto.functional_roles.add(_role_name(r, lineno))
        else:
            raise SpecError(f"line {lineno}: unknown axiom kind {head!r}")
    onto._check_role_graph_acyclic()
    return onto


def _tokenize(text: str) -> list[str]:
    out: list[str] = []
    cur = ""
    for ch in text:
        if ch in "()":
            if cur:
                out.append(cur)
                cur = ""
            out.append(ch)
        elif ch.isspace():
            if cur:
                out.append(cur)
                cur = ""
        else:
            cur += ch
    if cur:
        out.append(cur)
    return out


def _parse_sexpr(tokens: list[str], pos: int, lineno: int):
    if pos >= len(tokens):
        raise SpecError(f"line {lineno}: unexpected end of expression")
    tok = tokens[pos]
    if tok == "(" or tok == ")":
        raise SpecError(f"line {lineno}: unexpected {tok!r}")
    if pos + 1 < len(tokens) and tokens[pos + 1] == "(":
        args = []
        pos += 2
        while tokens[pos] != ")":
            node, pos = _parse_sexpr(tokens, pos, lineno)
            args.append(node)
            if pos >= len(tokens):
                raise SpecError(f"line {lineno}: missing ')'")
        return (tok, args), pos + 1
    return tok, pos + 1


def _split_call(line: str, lineno: int):
    tokens = _tokenize(line)
    node, pos = _parse_sexpr(tokens, 0, lineno)
    if pos != len(tokens) or not isinstance(node, tuple):
        raise SpecError(f"line {lineno}: expected a single axiom call")
    return node[0], node[1]


def _one(args: list, lineno: int):
    if len(args) != 1:
        raise SpecError(f"line {lineno}: expected one argument")
    return args


def _two(args: list, lineno: int):
    if len(args) != 2:
        raise SpecError(f"line {lineno}: expected two arguments")
    return args


def _role(node, lineno: int) -> Role:
    if isinstance(node, str):
        return Role(node)
    head, args = node
    if head == "inv" and len(args) == 1 and isinstance(args[0], str):
        return Role(args[0], inverse=True)
    raise SpecError(f"line {lineno}: bad role expression")


def _role_name(node, lineno: int) -> str:
    role = _role(node, lineno)
    if role.inverse:
        raise SpecError(f"line {lineno}: inverse roles not allowed here")
    return role.name


def _concept(node, lineno: int) -> Concept:
    if isinstance(node, str):
        if node == "Thing":
            return TOP
        if node == "Nothing":
            return BOTTOM
        return Atomic(node)
    head, args = node
    if head == "and":
        return and_(_concept(a, lineno) for a in args)
    if head == "or":
        return or_(_concept(a, lineno) for a in args)
    if head == "not":
        (a,) = _one(args, lineno)
        return not_(_concept(a, lineno))
    if head == "some":
        r, c = _two(args, lineno)
        return Exists(_role(r, lineno), _concept(c, lineno))
    if head == "all":
        r, c = _two(args, lineno)
        return Forall(_role(r, lineno), _concept(c, lineno))
    raise SpecError(f"line {lineno}: unknown concept constructor {head!r}")
