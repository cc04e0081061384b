"""Grounding: typed facts + bounds -> boolean circuit -> CNF.

Expressions become matrices of circuit nodes indexed by upper-bound tuples
(Kodkod's translation scheme): join is OR-of-ANDs along the contracted
columns, transpose permutes indices, transitive closure is computed by
iterative squaring, and quantifiers expand over the atoms in the bound
expression's upper bound — not the whole universe — which keeps clauses
small and matches partial-model exactness.

The circuit is a hash-consed DAG with constant folding, so grounding over
exact bounds folds to a constant and identical subcircuits are shared. One
propositional variable exists per free tuple (upper minus lower), shared
across all fact occurrences; Tseitin auxiliaries follow. The full
biconditional encoding is the default; Plaisted-Greenbaum polarity
clauses can be enabled with a flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .forl import TypedSpec, ast
from .relational import Bounds, Tup

# ---------------------------------------------------------------------------
# Hash-consed boolean circuit
# ---------------------------------------------------------------------------


class Node:
    __slots__ = ("id", "op", "children", "var")

    def __init__(self, id_: int, op: str, children: tuple["Node", ...] = (),
                 var: int = 0):
        self.id = id_
        self.op = op  # true | false | var | not | and | or
        self.children = children
        self.var = var

    def __repr__(self) -> str:
        if self.op == "var":
            return f"v{self.var}"
        if self.op in ("true", "false"):
            return self.op.upper()
        return f"{self.op}({','.join(map(repr, self.children))})"


class Circuit:
    """Node factory with structural hashing and local constant folding."""

    def __init__(self):
        self._nodes: list[Node] = []
        self._intern: dict[tuple, Node] = {}
        self.TRUE = self._new("true")
        self.FALSE = self._new("false")
        self._vars: dict[int, Node] = {}

    def _new(self, op: str, children: tuple[Node, ...] = (), var: int = 0) -> Node:
        n = Node(len(self._nodes), op, children, var)
        self._nodes.append(n)
        return n

    def __len__(self) -> int:
        return len(self._nodes)

    def var(self, index: int) -> Node:
        node = self._vars.get(index)
        if node is None:
            node = self._vars[index] = self._new("var", var=index)
        return node

    def not_(self, x: Node) -> Node:
        if x.op == "true":
            return self.FALSE
        if x.op == "false":
            return self.TRUE
        if x.op == "not":
            return x.children[0]
        key = ("not", x.id)
        node = self._intern.get(key)
        if node is None:
            node = self._intern[key] = self._new("not", (x,))
        return node

    def and_(self, xs) -> Node:
        return self._nary("and", xs, absorb=self.FALSE, neutral=self.TRUE)

    def or_(self, xs) -> Node:
        return self._nary("or", xs, absorb=self.TRUE, neutral=self.FALSE)

    def _nary(self, op: str, xs, absorb: Node, neutral: Node) -> Node:
        seen: dict[int, Node] = {}
        for x in xs:
            if x is absorb:
                return absorb
            if x is neutral:
                continue
            seen[x.id] = x
        # x op not(x) annihilates
        for x in seen.values():
            if x.op == "not" and x.children[0].id in seen:
                return absorb
        if not seen:
            return neutral
        if len(seen) == 1:
            return next(iter(seen.values()))
        children = tuple(seen[i] for i in sorted(seen))
        key = (op,) + tuple(c.id for c in children)
        node = self._intern.get(key)
        if node is None:
            node = self._intern[key] = self._new(op, children)
        return node

    def implies(self, a: Node, b: Node) -> Node:
        return self.or_([self.not_(a), b])

    def iff(self, a: Node, b: Node) -> Node:
        return self.and_([self.implies(a, b), self.implies(b, a)])


# ---------------------------------------------------------------------------
# Variable map
# ---------------------------------------------------------------------------


@dataclass
class VarMap:
    """(relation, tuple) -> DIMACS variable, for tuples in upper minus lower.

    Allocation order is relation declaration order, then lexicographic tuple
    order, so variable numbering is reproducible run to run.
    """

    index: dict[tuple[str, Tup], int] = field(default_factory=dict)
    reverse: list[tuple[str, Tup]] = field(default_factory=list)

    @classmethod
    def build(cls, bounds: Bounds) -> "VarMap":
        vm = cls()
        for rel in bounds.rel_order:
            for t in bounds.free_tuples(rel):
                vm.index[(rel, t)] = len(vm.reverse) + 1
                vm.reverse.append((rel, t))
        return vm

    def __len__(self) -> int:
        return len(self.reverse)

    def var_of(self, rel: str, t: Tup) -> int:
        return self.index[(rel, t)]


Matrix = dict[Tup, Node]


@dataclass
class Grounding:
    circuit: Circuit
    root: Node
    varmap: VarMap
    bounds: Bounds


# ---------------------------------------------------------------------------
# Translation
# ---------------------------------------------------------------------------


class _Grounder:
    def __init__(self, spec: TypedSpec, bounds: Bounds, circuit: Circuit,
                 varmap: VarMap):
        self.spec = spec
        self.bounds = bounds
        self.c = circuit
        self.vm = varmap
        self._rel_cache: dict[str, Matrix] = {}

    def relation_matrix(self, name: str) -> Matrix:
        m = self._rel_cache.get(name)
        if m is None:
            m = {}
            lower = self.bounds.lower[name]
            for t in sorted(self.bounds.upper[name]):
                m[t] = self.c.TRUE if t in lower else self.c.var(self.vm.var_of(name, t))
            self._rel_cache[name] = m
        return m

    # -- expressions --------------------------------------------------------

    def expr(self, e: ast.Expr, env: dict[str, str]) -> tuple[int, Matrix]:
        c = self.c
        if isinstance(e, ast.Name):
            if e.kind == "var":
                return 1, {(env[e.name],): c.TRUE}
            return (
                self.bounds.arity[e.name],
                dict(self.relation_matrix(e.name)),
            )
        if isinstance(e, ast.Univ):
            return 1, {(a,): c.TRUE for a in self.bounds.universe}
        if isinstance(e, ast.Iden):
            return 2, {(a, a): c.TRUE for a in self.bounds.universe}
        if isinstance(e, ast.NoneExpr):
            return 1, {}
        if isinstance(e, ast.Unary):
            arity, m = self.expr(e.operand, env)
            if e.op == "transpose":
                return 2, {(b, a): n for (a, b), n in m.items()}
            if e.op == "closure":
                return 2, self._closure(m)
            if e.op == "rclosure":
                closed = self._closure(m)
                for a in self.bounds.universe:
                    closed[(a, a)] = c.TRUE
                return 2, closed
            raise TypeError(e.op)
        if isinstance(e, ast.Binary):
            la, lm = self.expr(e.left, env)
            ra, rm = self.expr(e.right, env)
            if e.op == "join":
                return la + ra - 2, self._join(lm, rm)
            if e.op == "product":
                out: Matrix = {}
                for s, ns in lm.items():
                    for t, nt in rm.items():
                        node = c.and_([ns, nt])
                        if node is not c.FALSE:
                            out[s + t] = node
                return la + ra, out
            if e.op == "union":
                out = dict(lm)
                for t, n in rm.items():
                    out[t] = c.or_([out[t], n]) if t in out else n
                return la, out
            if e.op == "intersect":
                out = {}
                for t, n in lm.items():
                    if t in rm:
                        node = c.and_([n, rm[t]])
                        if node is not c.FALSE:
                            out[t] = node
                return la, out
            if e.op == "difference":
                out = {}
                for t, n in lm.items():
                    node = c.and_([n, c.not_(rm[t])]) if t in rm else n
                    if node is not c.FALSE:
                        out[t] = node
                return la, out
            raise TypeError(e.op)
        raise TypeError(type(e))

    def _join(self, lm: Matrix, rm: Matrix) -> Matrix:
        c = self.c
        by_first: dict[str, list[tuple[Tup, Node]]] = {}
        for t, n in rm.items():
            by_first.setdefault(t[0], []).append((t, n))
        acc: dict[Tup, list[Node]] = {}
        for s, ns in sorted(lm.items()):
            for t, nt in by_first.get(s[-1], ()):
                node = c.and_([ns, nt])
                if node is not c.FALSE:
                    acc.setdefault(s[:-1] + t[1:], []).append(node)
        return {t: c.or_(nodes) for t, nodes in acc.items()}

    def _closure(self, m: Matrix) -> Matrix:
        # Iterative squaring: after k rounds the matrix covers all paths of
        # length <= 2^k, so ceil(log2 |univ|) rounds suffice.
        c = self.c
        n = max(2, len(self.bounds.universe))
        rounds = math.ceil(math.log2(n))
        cur = dict(m)
        for _ in range(rounds):
            step = self._join(cur, cur)
            for t, node in step.items():
                cur[t] = c.or_([cur[t], node]) if t in cur else node
        return cur

    # -- formulas -------------------------------------------------------------

    def formula(self, f: ast.Formula, env: dict[str, str]) -> Node:
        c = self.c
        if isinstance(f, ast.Quant):
            if f.kind == "all":
                return self._forall(f.decls, f.body, env)
            witness = self._exists(f.decls, f.body, env)
            return witness if f.kind == "some" else c.not_(witness)
        if isinstance(f, ast.Compare):
            _, lm = self.expr(f.left, env)
            _, rm = self.expr(f.right, env)
            subset = c.and_([
                c.implies(n, rm.get(t, c.FALSE)) for t, n in sorted(lm.items())
            ])
            if f.op == "in":
                return subset
            superset = c.and_([
                c.implies(n, lm.get(t, c.FALSE)) for t, n in sorted(rm.items())
            ])
            return c.and_([subset, superset])
        if isinstance(f, ast.MultTest):
            _, m = self.expr(f.expr, env)
            nodes = [m[t] for t in sorted(m)]
            if f.kind == "no":
                return c.and_([c.not_(n) for n in nodes])
            if f.kind == "some":
                return c.or_(nodes)
            if f.kind == "lone":
                return self._at_most_one(nodes)
            if f.kind == "one":
                return c.and_([c.or_(nodes), self._at_most_one(nodes)])
            raise TypeError(f.kind)
        if isinstance(f, ast.NotF):
            return c.not_(self.formula(f.operand, env))
        if isinstance(f, ast.BinF):
            left = self.formula(f.left, env)
            right = self.formula(f.right, env)
            if f.op == "and":
                return c.and_([left, right])
            if f.op == "or":
                return c.or_([left, right])
            if f.op == "implies":
                return c.implies(left, right)
            if f.op == "iff":
                return c.iff(left, right)
            raise TypeError(f.op)
        raise TypeError(type(f))

    def _at_most_one(self, nodes: list[Node]) -> Node:
        c = self.c
        pairs = [
            c.not_(c.and_([nodes[i], nodes[j]]))
            for i in range(len(nodes))
            for j in range(i + 1, len(nodes))
        ]
        return c.and_(pairs)

    def _forall(self, decls, body: ast.Formula, env: dict[str, str]) -> Node:
        if not decls:
            return self.formula(body, env)
        (var, bound), rest = decls[0], decls[1:]
        _, m = self.expr(bound, env)
        parts = []
        for (atom,), guard in sorted(m.items()):
            inner = self._forall(rest, body, {**env, var: atom})
            parts.append(self.c.implies(guard, inner))
        return self.c.and_(parts)

    def _exists(self, decls, body: ast.Formula, env: dict[str, str]) -> Node:
        if not decls:
            return self.formula(body, env)
        (var, bound), rest = decls[0], decls[1:]
        _, m = self.expr(bound, env)
        parts = []
        for (atom,), guard in sorted(m.items()):
            inner = self._exists(rest, body, {**env, var: atom})
            parts.append(self.c.and_([guard, inner]))
        return self.c.or_(parts)


def hierarchy_constraints(spec: TypedSpec, grounder: _Grounder) -> list[Node]:
    """Structural constraints grounded alongside user facts.

    For ``B extends A``: B ⊆ A and pairwise disjointness among extends
    siblings (top-level sigs count as siblings under the implicit root);
    an abstract sig equals the union of its extension children; a subset
    sig is contained in the union of its parents.
    """
    c = grounder.c
    out: list[Node] = []
    prim = [s for s in spec.sig_order if spec.sigs[s].kind != "subset"]
    toplevel = [s for s in prim if spec.sigs[s].kind == "toplevel"]

    sibling_groups = [toplevel] + [spec.sigs[s].children for s in prim]
    for group in sibling_groups:
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                a, b = grounder.relation_matrix(group[i]), grounder.relation_matrix(group[j])
                for t in sorted(set(a) & set(b)):
                    out.append(c.not_(c.and_([a[t], b[t]])))

    for s in prim:
        info = spec.sigs[s]
        parent_matrix = grounder.relation_matrix(s)
        for child in info.children:
            child_matrix = grounder.relation_matrix(child)
            for t, n in sorted(child_matrix.items()):
                out.append(c.implies(n, parent_matrix.get(t, c.FALSE)))
        if info.abstract:
            children = [grounder.relation_matrix(ch) for ch in info.children]
            for t, n in sorted(parent_matrix.items()):
                cover = c.or_([m.get(t, c.FALSE) for m in children])
                out.append(c.implies(n, cover))

    for s in spec.sig_order:
        info = spec.sigs[s]
        if info.kind != "subset":
            continue
        matrix = grounder.relation_matrix(s)
        parents = [grounder.relation_matrix(p) for p in info.parents]
        for t, n in sorted(matrix.items()):
            cover = c.or_([m.get(t, c.FALSE) for m in parents])
            out.append(c.implies(n, cover))
    return out


def ground(spec: TypedSpec, facts: list[ast.FactDecl], bounds: Bounds) -> Grounding:
    """Ground the given facts (plus hierarchy constraints) under bounds."""
    circuit = Circuit()
    varmap = VarMap.build(bounds)
    g = _Grounder(spec, bounds, circuit, varmap)
    parts = hierarchy_constraints(spec, g)
    for fact in facts:
        parts.append(g.formula(fact.formula, {}))
    root = circuit.and_(parts)
    return Grounding(circuit=circuit, root=root, varmap=varmap, bounds=bounds)


def ground_fact(spec: TypedSpec, fact: ast.FactDecl, bounds: Bounds) -> Node:
    """Ground a single fact without hierarchy constraints (localization)."""
    circuit = Circuit()
    varmap = VarMap.build(bounds)
    g = _Grounder(spec, bounds, circuit, varmap)
    return g.formula(fact.formula, {})


# ---------------------------------------------------------------------------
# Tseitin CNF
# ---------------------------------------------------------------------------


@dataclass
class CnfFormula:
    clauses: list[tuple[int, ...]]
    num_vars: int
    num_tuple_vars: int
    # Tseitin auxiliary -> circuit node id, for debugging.
    aux_origin: dict[int, int] = field(default_factory=dict)

    def copy(self) -> "CnfFormula":
        return CnfFormula(list(self.clauses), self.num_vars,
                          self.num_tuple_vars, dict(self.aux_origin))


def to_cnf(grounding: Grounding, plaisted_greenbaum: bool = False) -> CnfFormula:
    """Equisatisfiable CNF with a unit clause asserting the root.

    Tuple variables keep their VarMap numbering; auxiliaries follow in a
    deterministic DFS order. A constant-TRUE root yields the empty clause
    set; a constant-FALSE root yields the canonical unsatisfiable pair
    ``[x1], [-x1]``.
    """
    root = grounding.root
    n_tuple = len(grounding.varmap)
    cnf = CnfFormula(clauses=[], num_vars=n_tuple, num_tuple_vars=n_tuple)

    if root.op == "true":
        return cnf
    if root.op == "false":
        if cnf.num_vars == 0:
            cnf.num_vars = 1
        cnf.clauses = [(1,), (-1,)]
        return cnf

    lit_of: dict[int, int] = {}

    def literal(node: Node) -> int:
        if node.op == "var":
            return node.var
        if node.op == "not":
            return -literal(node.children[0])
        lit = lit_of.get(node.id)
        if lit is None:
            cnf.num_vars += 1
            lit = lit_of[node.id] = cnf.num_vars
            cnf.aux_origin[lit] = node.id
        return lit

    # Iterative DFS keeps recursion depth independent of circuit depth.
    emitted: set[int] = set()
    # polarity: +1 root-positive occurrences, -1 negative, 0 both (default
    # when the PG optimization is off).
    polarity: dict[int, int] = {}

    def note_polarity(node: Node, p: int) -> bool:
        """Record an occurrence polarity; True when it changed."""
        old = polarity.get(node.id)
        new = p if old is None else (old if old == p else 0)
        polarity[node.id] = new
        return old != new

    stack: list[tuple[Node, int]] = [(root, 1)]
    order: list[Node] = []
    while stack:
        node, p = stack.pop()
        if node.op in ("true", "false"):
            raise AssertionError("constants below root should have folded away")
        if node.op == "var":
            continue
        if node.op == "not":
            stack.append((node.children[0], -p))
            continue
        first_visit = node.id not in polarity
        changed = note_polarity(node, p if plaisted_greenbaum else 0)
        if first_visit:
            order.append(node)
        if first_visit or (plaisted_greenbaum and changed):
            for ch in node.children:
                stack.append((ch, p))

    for node in order:
        a = literal(node)
        kids = [literal(ch) for ch in node.children]
        p = polarity.get(node.id, 0)
        if node.op == "and":
            if p >= 0:
                for k in kids:
                    cnf.clauses.append((-a, k))
            if p <= 0:
                cnf.clauses.append(tuple([a] + [-k for k in kids]))
        elif node.op == "or":
            if p >= 0:
                cnf.clauses.append(tuple([-a] + kids))
            if p <= 0:
                for k in kids:
                    cnf.clauses.append((a, -k))
        else:
            raise AssertionError(node.op)

    cnf.clauses.append((literal(root),))
    return cnf
