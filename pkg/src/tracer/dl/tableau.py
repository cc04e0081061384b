"""Tableau satisfiability for the supported fragment.

Completion-graph calculus with lazy GCI internalization (every node label
carries NNF(¬C ⊔ D) per GCI), the ⊓/⊔/∃/∀ rules, role hierarchy and
inverse roles in the neighbour relation, ≤1-merging for functional roles,
and dynamic pairwise blocking for termination.

Rule order is deterministic (nodes ascending, concepts in canonical
order): clash, ⊓, functional merge, ∀, then ⊔ (branch), and ∃ only when
no disjunction is pending anywhere. Satisfiability results are cached per
canonical NNF concept.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ResourceLimit
from .concepts import (
    BOTTOM,
    And,
    Atomic,
    Bottom,
    Concept,
    Exists,
    Forall,
    Not,
    Or,
    Role,
    and_,
    complement_of,
    nnf,
    not_,
    sort_key,
)
from .ontology import Ontology


@dataclass
class _State:
    labels: dict[int, frozenset[Concept]]
    edges: dict[tuple[int, int], frozenset[Role]]
    parent: dict[int, int]
    next_id: int

    def copy(self) -> "_State":
        return _State(dict(self.labels), dict(self.edges), dict(self.parent),
                      self.next_id)

    def add(self, node: int, concept: Concept) -> bool:
        label = self.labels[node]
        if concept in label:
            return False
        self.labels[node] = label | {concept}
        return True


class Reasoner:
    """Cached satisfiability / subsumption over one immutable ontology."""

    def __init__(self, onto: Ontology, node_budget: int = 4000):
        self.onto = onto
        self.node_budget = node_budget
        self.tu = tuple(onto.internalized())
        self._cache: dict[Concept, bool] = {}

    def is_satisfiable(self, c: Concept) -> bool:
        c = nnf(c)
        hit = self._cache.get(c)
        if hit is not None:
            return hit
        result = _Tableau(self).run(c)
        self._cache[c] = result
        return result

    def subsumes(self, c1: Concept, c2: Concept) -> bool:
        """c2 ⊑ c1 in the ontology."""
        return not self.is_satisfiable(and_([c2, not_(c1)]))

    def equivalent(self, c1: Concept, c2: Concept) -> bool:
        return self.subsumes(c1, c2) and self.subsumes(c2, c1)


class _Tableau:
    def __init__(self, reasoner: Reasoner):
        self.onto = reasoner.onto
        self.tu = reasoner.tu
        self.budget = reasoner.node_budget
        self.created = 1

    def run(self, c: Concept) -> bool:
        if isinstance(c, Bottom):
            return False
        state = _State(labels={0: frozenset({c, *self.tu})},
                       edges={}, parent={}, next_id=1)
        return self._sat(state)

    # -- rule machinery ---------------------------------------------------------

    def _sat(self, state: _State) -> bool:
        while True:
            if self._has_clash(state):
                return False
            if self._deterministic_step(state):
                continue
            branch = self._find_or(state)
            if branch is not None:
                node, disjuncts = branch
                for d in disjuncts:
                    attempt = state.copy()
                    attempt.add(node, d)
                    if self._sat(attempt):
                        return True
                return False
            if self._exists_step(state):
                continue
            return True

    def _has_clash(self, state: _State) -> bool:
        for label in state.labels.values():
            if BOTTOM in label:
                return True
            for c in label:
                comp = complement_of(c)
                if comp is not None and comp in label:
                    return True
        return False

    def _deterministic_step(self, state: _State) -> bool:
        # ⊓ unfolding
        for node in sorted(state.labels):
            for c in sorted(state.labels[node], key=sort_key):
                if isinstance(c, And) and not c.operands <= state.labels[node]:
                    state.labels[node] = state.labels[node] | c.operands
                    return True
        # ≤1 merging for functional roles
        for node in sorted(state.labels):
            for f in sorted(self.onto.functional_roles):
                neigh = self._neighbours(state, node, Role(f))
                if len(neigh) >= 2:
                    self._merge(state, neigh[0], neigh[1])
                    return True
        # ∀ propagation
        for node in sorted(state.labels):
            for c in sorted(state.labels[node], key=sort_key):
                if isinstance(c, Forall):
                    for y in self._neighbours(state, node, c.role):
                        if c.filler not in state.labels[y]:
                            state.add(y, c.filler)
                            return True
        return False

    def _find_or(self, state: _State):
        for node in sorted(state.labels):
            for c in sorted(state.labels[node], key=sort_key):
                if isinstance(c, Or) and not (c.operands & state.labels[node]):
                    return node, sorted(c.operands, key=sort_key)
        return None

    def _exists_step(self, state: _State) -> bool:
        for node in sorted(state.labels):
            if self._blocked(state, node):
                continue
            for c in sorted(state.labels[node], key=sort_key):
                if not isinstance(c, Exists):
                    continue
                if any(c.filler in state.labels[y]
                       for y in self._neighbours(state, node, c.role)):
                    continue
                self.created += 1
                if self.created > self.budget:
                    raise ResourceLimit(
                        f"tableau node budget exhausted ({self.budget})"
                    )
                child = state.next_id
                state.next_id += 1
                state.labels[child] = frozenset({c.filler, *self.tu})
                state.edges[(node, child)] = frozenset({c.role})
                state.parent[child] = node
                return True
        return False

    # -- graph helpers -----------------------------------------------------------

    def _neighbours(self, state: _State, x: int, wanted: Role) -> list[int]:
        out = set()
        for (u, v), roles in state.edges.items():
            if u == x and any(self.onto.role_below(r, wanted) for r in roles):
                out.add(v)
            if v == x and any(self.onto.role_below(r.inv(), wanted) for r in roles):
                out.add(u)
        return sorted(out)

    def _merge(self, state: _State, keep: int, absorb: int) -> None:
        state.labels[keep] = state.labels[keep] | state.labels[absorb]
        del state.labels[absorb]
        for (u, v) in list(state.edges):
            if absorb not in (u, v):
                continue
            roles = state.edges.pop((u, v))
            nu = keep if u == absorb else u
            nv = keep if v == absorb else v
            key = (nu, nv)
            state.edges[key] = state.edges.get(key, frozenset()) | roles
        for child, par in list(state.parent.items()):
            if par == absorb:
                state.parent[child] = keep
        state.parent.pop(absorb, None)

    def _blocked(self, state: _State, w: int) -> bool:
        """Pairwise blocking: w (with predecessor w') is blocked by an
        ancestor v (with predecessor v') when both labels and the connecting
        edge labels coincide; descendants of blocked nodes are indirectly
        blocked. Ancestor walks guard against cycles introduced by merges."""
        chain: list[int] = []
        cur = w
        seen = set()
        while cur in state.parent and cur not in seen:
            seen.add(cur)
            chain.append(cur)
            cur = state.parent[cur]
        # chain[0] == w .. upwards, excluding the root.
        for idx, node in enumerate(chain):
            np = state.parent[node]
            for anc in chain[idx + 1:]:
                ap = state.parent.get(anc)
                if ap is None:
                    continue
                if (state.labels.get(node) == state.labels.get(anc)
                        and state.labels.get(np) == state.labels.get(ap)
                        and state.edges.get((np, node)) == state.edges.get((ap, anc))):
                    return True
        return False
