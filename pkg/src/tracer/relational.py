"""Finite relational semantics: universes, tuple sets, bounds, evaluation.

The evaluator implements the textbook semantics of the relational operators
and is the independent oracle the SAT pipeline is checked against. Bounds
construction realizes the three analysis modes:

* consistency — every relation exact (lower = upper = instance value);
* inference — sig relations and untargeted fields exact, each target field
  free between its instance tuples and the full column-type product;
* discovery — the universe gains fresh atoms which may join any signature
  whose hierarchy admits concrete members (fields stay exact unless
  ``link_fresh`` also frees tuples touching a fresh atom).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import TupleOutsideType, UnknownTarget
from .forl import TypedSpec, ast

Atom = str
Tup = tuple[str, ...]

FRESH_PREFIX = "$fresh"


class Universe:
    """Ordered finite set of atoms; order is stable for identical input."""

    def __init__(self, atoms: tuple[Atom, ...] | list[Atom]):
        self.atoms = tuple(atoms)
        if len(set(self.atoms)) != len(self.atoms):
            raise ValueError("duplicate atoms in universe")
        self.index = {a: i for i, a in enumerate(self.atoms)}

    def __len__(self) -> int:
        return len(self.atoms)

    def __contains__(self, atom: Atom) -> bool:
        return atom in self.index

    def __iter__(self):
        return iter(self.atoms)

    def __eq__(self, other) -> bool:
        return isinstance(other, Universe) and self.atoms == other.atoms

    def __repr__(self) -> str:
        return f"Universe({list(self.atoms)!r})"

    def extend(self, extra: list[Atom]) -> "Universe":
        """Fresh atoms append after the existing order, keeping variable
        numbering of the base universe stable."""
        return Universe(self.atoms + tuple(extra))


@dataclass(frozen=True)
class TupleSet:
    arity: int
    tuples: frozenset[Tup]

    def __post_init__(self):
        for t in self.tuples:
            if len(t) != self.arity:
                raise ValueError(f"tuple {t!r} does not have arity {self.arity}")

    @staticmethod
    def of(arity: int, tuples=()) -> "TupleSet":
        return TupleSet(arity, frozenset(tuple(t) for t in tuples))

    def __len__(self) -> int:
        return len(self.tuples)

    def __contains__(self, t: Tup) -> bool:
        return tuple(t) in self.tuples

    def sorted(self) -> list[Tup]:
        return sorted(self.tuples)


@dataclass
class Instance:
    """A concrete valuation: one tuple set per sig and field relation."""

    universe: Universe
    relations: dict[str, frozenset[Tup]]

    def rel(self, name: str) -> frozenset[Tup]:
        return self.relations.get(name, frozenset())

    def copy_with(self, name: str, tuples: frozenset[Tup]) -> "Instance":
        rels = dict(self.relations)
        rels[name] = tuples
        return Instance(self.universe, rels)


# ---------------------------------------------------------------------------
# Analysis modes and bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Consistency:
    pass


@dataclass(frozen=True)
class Infer:
    targets: tuple[str, ...]


@dataclass(frozen=True)
class Discover:
    fresh_count: int
    link_fresh: bool = False


Mode = Consistency | Infer | Discover


@dataclass
class Bounds:
    universe: Universe
    rel_order: list[str]
    lower: dict[str, frozenset[Tup]]
    upper: dict[str, frozenset[Tup]]
    arity: dict[str, int]
    fresh_atoms: list[Atom] = field(default_factory=list)

    def free_tuples(self, name: str) -> list[Tup]:
        """Tuples whose membership the solver decides, in canonical order."""
        return sorted(self.upper[name] - self.lower[name])

    def is_exact(self, name: str) -> bool:
        return self.lower[name] == self.upper[name]

    def as_instance(self) -> Instance:
        if any(not self.is_exact(r) for r in self.rel_order):
            raise ValueError("bounds are not exact")
        return Instance(self.universe, {r: self.lower[r] for r in self.rel_order})

    def check_invariants(self, spec: TypedSpec) -> None:
        """Structural sanity: lower ⊆ upper, uppers inside column types,
        child uppers inside parent uppers, and disjointness of extends
        siblings on the determined (lower) part. Fresh atoms deliberately
        appear in several sibling uppers at once — the grounded hierarchy
        constraints arbitrate actual membership."""
        for r in self.rel_order:
            assert self.lower[r] <= self.upper[r], r
        for fname in spec.field_order:
            cols = spec.fields[fname].cols
            for t in self.upper[fname]:
                for atom, col in zip(t, cols):
                    assert (atom,) in self.upper[col], (fname, t, col)
        for sname in spec.prim_sigs():
            info = spec.sigs[sname]
            for child in info.children:
                assert self.upper[child] <= self.upper[sname], (child, sname)
            for a, b in itertools.combinations(info.children, 2):
                assert not (self.lower[a] & self.lower[b]), (a, b)


def _conform(spec: TypedSpec, instance: Instance) -> None:
    for fname in spec.field_order:
        cols = spec.fields[fname].cols
        for t in instance.rel(fname):
            if len(t) != len(cols):
                raise TupleOutsideType(
                    f"tuple {t!r} has arity {len(t)}, field {fname!r} expects "
                    f"{len(cols)}"
                )
            for atom, col in zip(t, cols):
                if (atom,) not in instance.rel(col):
                    raise TupleOutsideType(
                        f"atom {atom!r} in {fname!r} tuple {t!r} is not a "
                        f"member of column type {col!r}"
                    )


def build_bounds(mode: Mode, spec: TypedSpec, instance: Instance) -> Bounds:
    _conform(spec, instance)
    rel_order = spec.sig_order + spec.field_order
    arity = {s: 1 for s in spec.sig_order}
    arity.update({f: len(spec.fields[f].cols) for f in spec.field_order})

    lower = {r: frozenset(instance.rel(r)) for r in rel_order}
    upper = dict(lower)
    universe = instance.universe
    fresh: list[Atom] = []

    if isinstance(mode, Consistency):
        pass

    elif isinstance(mode, Infer):
        for t in mode.targets:
            if t not in spec.fields:
                raise UnknownTarget(f"{t!r} is not a declared field")
        for t in mode.targets:
            cols = spec.fields[t].cols
            col_sets = [sorted(a for (a,) in instance.rel(c)) for c in cols]
            upper[t] = frozenset(itertools.product(*col_sets)) | lower[t]

    elif isinstance(mode, Discover):
        if mode.fresh_count < 1:
            raise ValueError("discovery requires at least one fresh atom")
        fresh = [f"{FRESH_PREFIX}{i}" for i in range(mode.fresh_count)]
        universe = universe.extend(fresh)
        fresh_tuples = frozenset((a,) for a in fresh)
        for s in spec.sig_order:
            info = spec.sigs[s]
            admits_concrete = any(
                not spec.sigs[p].abstract for p in info.prims
            )
            if admits_concrete:
                upper[s] = lower[s] | fresh_tuples
        if mode.link_fresh:
            for fname in spec.field_order:
                cols = spec.fields[fname].cols
                col_sets = [
                    sorted(a for (a,) in upper[c]) for c in cols
                ]
                extra = frozenset(
                    t for t in itertools.product(*col_sets)
                    if any(a.startswith(FRESH_PREFIX) for a in t)
                )
                upper[fname] = lower[fname] | extra
    else:
        raise TypeError(mode)

    bounds = Bounds(universe=universe, rel_order=rel_order, lower=lower,
                    upper=upper, arity=arity, fresh_atoms=fresh)
    bounds.check_invariants(spec)
    return bounds


# ---------------------------------------------------------------------------
# Concrete evaluation (the oracle)
# ---------------------------------------------------------------------------

class Evaluator:
    """Evaluates typed expressions and formulas against a valuation."""

    def __init__(self, universe: Universe, valuation: dict[str, frozenset[Tup]]):
        self.universe = universe
        self.valuation = valuation

    # -- expressions ---------------------------------------------------------

    def expr(self, e: ast.Expr, env: dict[str, Atom] | None = None) -> set[Tup]:
        env = env or {}
        if isinstance(e, ast.Name):
            if e.kind == "var":
                return {(env[e.name],)}
            return set(self.valuation.get(e.name, frozenset()))
        if isinstance(e, ast.Univ):
            return {(a,) for a in self.universe}
        if isinstance(e, ast.Iden):
            return {(a, a) for a in self.universe}
        if isinstance(e, ast.NoneExpr):
            return set()
        if isinstance(e, ast.Unary):
            inner = self.expr(e.operand, env)
            if e.op == "transpose":
                return {(b, a) for a, b in inner}
            if e.op == "closure":
                return transitive_closure(inner)
            if e.op == "rclosure":
                return transitive_closure(inner) | {(a, a) for a in self.universe}
            raise TypeError(e.op)
        if isinstance(e, ast.Binary):
            left = self.expr(e.left, env)
            right = self.expr(e.right, env)
            if e.op == "join":
                return dot_join(left, right)
            if e.op == "product":
                return {s + t for s in left for t in right}
            if e.op == "union":
                return left | right
            if e.op == "intersect":
                return left & right
            if e.op == "difference":
                return left - right
            raise TypeError(e.op)
        raise TypeError(type(e))

    # -- formulas --------------------------------------------------------------

    def formula(self, f: ast.Formula, env: dict[str, Atom] | None = None) -> bool:
        env = env or {}
        if isinstance(f, ast.Quant):
            if f.kind == "all":
                return self._all(f.decls, f.body, env)
            witness = self._some(f.decls, f.body, env)
            return witness if f.kind == "some" else not witness
        if isinstance(f, ast.Compare):
            left = self.expr(f.left, env)
            right = self.expr(f.right, env)
            return left <= right if f.op == "in" else left == right
        if isinstance(f, ast.MultTest):
            n = len(self.expr(f.expr, env))
            return {"no": n == 0, "some": n >= 1, "lone": n <= 1, "one": n == 1}[f.kind]
        if isinstance(f, ast.NotF):
            return not self.formula(f.operand, env)
        if isinstance(f, ast.BinF):
            l = self.formula(f.left, env)
            if f.op == "and":
                return l and self.formula(f.right, env)
            if f.op == "or":
                return l or self.formula(f.right, env)
            if f.op == "implies":
                return (not l) or self.formula(f.right, env)
            if f.op == "iff":
                return l == self.formula(f.right, env)
            raise TypeError(f.op)
        raise TypeError(type(f))

    def _all(self, decls, body: ast.Formula, env: dict[str, Atom]) -> bool:
        if not decls:
            return self.formula(body, env)
        (var, bound), rest = decls[0], decls[1:]
        atoms = sorted(a for (a,) in self.expr(bound, env))
        return all(self._all(rest, body, {**env, var: a}) for a in atoms)

    def _some(self, decls, body: ast.Formula, env: dict[str, Atom]) -> bool:
        if not decls:
            return self.formula(body, env)
        (var, bound), rest = decls[0], decls[1:]
        atoms = sorted(a for (a,) in self.expr(bound, env))
        return any(self._some(rest, body, {**env, var: a}) for a in atoms)


def dot_join(left: set[Tup], right: set[Tup]) -> set[Tup]:
    out: set[Tup] = set()
    by_first: dict[Atom, list[Tup]] = {}
    for t in right:
        by_first.setdefault(t[0], []).append(t)
    for s in left:
        for t in by_first.get(s[-1], ()):
            out.add(s[:-1] + t[1:])
    return out


def transitive_closure(rel: set[Tup]) -> set[Tup]:
    closure = set(rel)
    while True:
        step = dot_join(closure, closure) - closure
        if not step:
            return closure
        closure |= step


def eval_expr(expr: ast.Expr, valuation: dict[str, frozenset[Tup]],
              env: dict[str, Atom] | None = None,
              universe: Universe | None = None) -> TupleSet:
    """Module-level convenience wrapper around :class:`Evaluator`."""
    uni = universe or Universe(sorted({a for ts in valuation.values() for t in ts for a in t}))
    result = Evaluator(uni, valuation).expr(expr, env)
    arity = expr.arity or (len(next(iter(result))) if result else 1)
    return TupleSet.of(arity, result)


def eval_formula(formula: ast.Formula, valuation: dict[str, frozenset[Tup]],
                 env: dict[str, Atom] | None = None,
                 universe: Universe | None = None) -> bool:
    uni = universe or Universe(sorted({a for ts in valuation.values() for t in ts for a in t}))
    return Evaluator(uni, valuation).formula(formula, env)
