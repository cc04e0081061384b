"""Description-logic concept language.

Fragment: ⊤, ⊥, atomic concepts, ¬, ⊓, ⊔, ∃R.C, ∀R.C with named and
inverse roles. Constructors canonicalize (conjunctions flatten, dedupe,
absorb constants) and instances are interned-friendly frozen values, so
structurally equal concepts compare equal and cache well.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache


@dataclass(frozen=True)
class Role:
    name: str
    inverse: bool = False

    def inv(self) -> "Role":
        return Role(self.name, not self.inverse)

    def __str__(self) -> str:
        return f"{self.name}⁻" if self.inverse else self.name


class Concept:
    __slots__ = ()

    def __and__(self, other: "Concept") -> "Concept":
        return and_([self, other])

    def __or__(self, other: "Concept") -> "Concept":
        return or_([self, other])


@dataclass(frozen=True)
class Top(Concept):
    __slots__ = ()

    def __str__(self) -> str:
        return "⊤"


@dataclass(frozen=True)
class Bottom(Concept):
    __slots__ = ()

    def __str__(self) -> str:
        return "⊥"


@dataclass(frozen=True)
class Atomic(Concept):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Not(Concept):
    operand: Concept

    def __str__(self) -> str:
        return f"¬{self.operand}"


@dataclass(frozen=True)
class And(Concept):
    operands: frozenset[Concept]

    def __str__(self) -> str:
        return "(" + " ⊓ ".join(sorted(map(str, self.operands))) + ")"


@dataclass(frozen=True)
class Or(Concept):
    operands: frozenset[Concept]

    def __str__(self) -> str:
        return "(" + " ⊔ ".join(sorted(map(str, self.operands))) + ")"


@dataclass(frozen=True)
class Exists(Concept):
    role: Role
    filler: Concept

    def __str__(self) -> str:
        return f"∃{self.role}.{self.filler}"


@dataclass(frozen=True)
class Forall(Concept):
    role: Role
    filler: Concept

    def __str__(self) -> str:
        return f"∀{self.role}.{self.filler}"


TOP = Top()
BOTTOM = Bottom()


def atom(name: str) -> Atomic:
    return Atomic(name)


def and_(operands) -> Concept:
    flat: set[Concept] = set()
    for c in operands:
        if isinstance(c, And):
            flat.update(c.operands)
        elif isinstance(c, Bottom):
            return BOTTOM
        elif isinstance(c, Top):
            continue
        else:
            flat.add(c)
    for c in flat:
        if complement_of(c) in flat:
            return BOTTOM
    if not flat:
        return TOP
    if len(flat) == 1:
        return next(iter(flat))
    return And(frozenset(flat))


def or_(operands) -> Concept:
    flat: set[Concept] = set()
    for c in operands:
        if isinstance(c, Or):
            flat.update(c.operands)
        elif isinstance(c, Top):
            return TOP
        elif isinstance(c, Bottom):
            continue
        else:
            flat.add(c)
    for c in flat:
        if complement_of(c) in flat:
            return TOP
    if not flat:
        return BOTTOM
    if len(flat) == 1:
        return next(iter(flat))
    return Or(frozenset(flat))


def not_(c: Concept) -> Concept:
    """Negation, pushed into negation normal form immediately."""
    if isinstance(c, Top):
        return BOTTOM
    if isinstance(c, Bottom):
        return TOP
    if isinstance(c, Atomic):
        return Not(c)
    if isinstance(c, Not):
        return c.operand
    if isinstance(c, And):
        return or_(not_(x) for x in c.operands)
    if isinstance(c, Or):
        return and_(not_(x) for x in c.operands)
    if isinstance(c, Exists):
        return Forall(c.role, not_(c.filler))
    if isinstance(c, Forall):
        return Exists(c.role, not_(c.filler))
    raise TypeError(type(c))


def nnf(c: Concept) -> Concept:
    """Canonical negation normal form (negation only on atomics)."""
    if isinstance(c, (Top, Bottom, Atomic)):
        return c
    if isinstance(c, Not):
        inner = c.operand
        if isinstance(inner, Atomic):
            return c
        return nnf(not_(inner))
    if isinstance(c, And):
        return and_(nnf(x) for x in c.operands)
    if isinstance(c, Or):
        return or_(nnf(x) for x in c.operands)
    if isinstance(c, Exists):
        return Exists(c.role, nnf(c.filler))
    if isinstance(c, Forall):
        return Forall(c.role, nnf(c.filler))
    raise TypeError(type(c))


def complement_of(c: Concept) -> Concept | None:
    """The NNF complement when syntactically immediate (atomics only)."""
    if isinstance(c, Atomic):
        return Not(c)
    if isinstance(c, Not) and isinstance(c.operand, Atomic):
        return c.operand
    return None


@lru_cache(maxsize=None)
def sort_key(c: Concept):
    """Total deterministic order over concepts (rule-application order)."""
    if isinstance(c, Top):
        return (0,)
    if isinstance(c, Bottom):
        return (1,)
    if isinstance(c, Atomic):
        return (2, c.name)
    if isinstance(c, Not):
        return (3, sort_key(c.operand))
    if isinstance(c, And):
        return (4,) + tuple(sorted(sort_key(x) for x in c.operands))
    if isinstance(c, Or):
        return (5,) + tuple(sorted(sort_key(x) for x in c.operands))
    if isinstance(c, Exists):
        return (6, c.role.name, c.role.inverse, sort_key(c.filler))
    if isinstance(c, Forall):
        return (7, c.role.name, c.role.inverse, sort_key(c.filler))
    raise TypeError(type(c))
