"""The three trace analyses plus the accept-trace loop and the Horn
fixpoint fast path.

* consistency — non-annotated facts over exact bounds; with exact bounds
  every fact grounds to a constant, so inconsistency localization is
  deletion-based at O(#facts) cost: a fact is named iff removing it (and
  everything else violated) restores consistency, i.e. iff its own
  grounding folds to FALSE.
* inference — facts whose Reason@ targets intersect the requested targets,
  over bounds that free exactly the target fields; the reported model is
  subset-minimal with respect to the free tuples (on Horn semantics that is
  the unique least model, which the fixpoint engine reproduces exactly).
* discovery — non-annotated facts over a universe extended with fresh
  atoms whose sig membership (and, optionally, links) the solver chooses.

Alternative solutions enumerate by superset-blocking: forbidding all
supersets of a found minimal model leaves exactly the other minimal
models, so on Horn inputs the iterator exhausts after one solution.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import itertools

from .errors import InconsistentPremises, NonHornFact, NoSuggestion
from .forl import TypedSpec, ast
from .grounder import CnfFormula, ground, ground_fact, to_cnf
from .relational import (
    Bounds,
    Consistency,
    Discover,
    Infer,
    Instance,
    Tup,
    build_bounds,
)
from .sat import Solver, SolverConfig
from .workspace import TraceabilityInformation, add_typed_link

INFERRED_PROVENANCE = "RL"


@dataclass
class AnalysisStats:
    vars: int = 0
    clauses: int = 0
    ms: float = 0.0

    def to_json(self) -> dict:
        return {"vars": self.vars, "clauses": self.clauses, "ms": round(self.ms, 3)}


@dataclass
class InferredTuple:
    relation: str
    tuple: Tup
    provenance: str = INFERRED_PROVENANCE

    def to_json(self) -> dict:
        return {"relation": self.relation, "tuple": list(self.tuple),
                "provenance": self.provenance}


@dataclass
class Suggestion:
    atom: str
    sigs: list[str] = field(default_factory=list)
    links: list[tuple[str, Tup]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"atom": self.atom, "sigs": self.sigs,
                "links": [{"relation": r, "tuple": list(t)} for r, t in self.links]}


@dataclass
class AnalysisReport:
    mode: str  # consistency | infer | discover
    verdict: str  # consistent | inconsistent | solutions
    violated: list[str] = field(default_factory=list)
    inferred: list[InferredTuple] = field(default_factory=list)
    suggestions: list[Suggestion] = field(default_factory=list)
    stats: AnalysisStats = field(default_factory=AnalysisStats)

    def to_json(self) -> dict:
        out = {
            "mode": self.mode,
            "verdict": self.verdict,
            "inferred": [t.to_json() for t in self.inferred],
            "violated": list(self.violated),
            "stats": self.stats.to_json(),
        }
        if self.mode == "discover":
            out["suggestions"] = [s.to_json() for s in self.suggestions]
        return out


# ---------------------------------------------------------------------------
# Consistency
# ---------------------------------------------------------------------------


def check_consistency(spec: TypedSpec, instance: Instance,
                      facts: list[ast.FactDecl] | None = None) -> AnalysisReport:
    """Check the exact instance against the non-annotated facts."""
    t0 = time.perf_counter()
    facts = spec.consistency_facts() if facts is None else facts
    bounds = build_bounds(Consistency(), spec, instance)
    grounding = ground(spec, facts, bounds)
    cnf = to_cnf(grounding)
    result = Solver.from_cnf(cnf).solve()
    report = AnalysisReport(
        mode="consistency",
        verdict="consistent" if result.sat else "inconsistent",
        stats=AnalysisStats(vars=cnf.num_vars, clauses=len(cnf.clauses)),
    )
    if not result.sat:
        report.violated = _violated_facts(spec, facts, bounds)
    report.stats.ms = (time.perf_counter() - t0) * 1000
    return report


def _violated_facts(spec: TypedSpec, facts: list[ast.FactDecl],
                    bounds: Bounds) -> list[str]:
    """Greedy deletion over exact bounds: every fact is a constant, so the
    facts whose removal (jointly) restores consistency are exactly those
    whose own grounding folds to FALSE."""
    violated = []
    for f in facts:
        node = ground_fact(spec, f, bounds)
        if node.op == "false":
            violated.append(f.display_name)
        elif node.op != "true":  # non-exact bounds: fall back to a solve
            g = ground(spec, [f], bounds)
            if not Solver.from_cnf(to_cnf(g)).solve().sat:
                violated.append(f.display_name)
    return violated


# ---------------------------------------------------------------------------
# Solution iteration (minimal models)
# ---------------------------------------------------------------------------


class SolutionIterator:
    """Materializing cursor over subset-minimal models.

    ``next()``/``prev()`` move the cursor; visited solutions replay
    deterministically. Each solution is a set of (relation, tuple) pairs of
    free tuples assigned true.
    """

    def __init__(self, cnf: CnfFormula, free_vars: list[int],
                 varmap_reverse: list[tuple[str, Tup]],
                 config: SolverConfig | None = None):
        self._cnf = cnf
        self._free = free_vars
        self._reverse = varmap_reverse
        self._config = config
        self._blocks: list[tuple[int, ...]] = []
        self._found: list[frozenset[tuple[str, Tup]]] = []
        self._exhausted = False
        self.cursor = -1

    def _extract_minimal(self) -> frozenset[tuple[str, Tup]] | None:
        clauses = list(self._cnf.clauses) + self._blocks
        solver = Solver(self._cnf.num_vars, clauses, self._config)
        result = solver.solve()
        if not result.sat:
            return None
        true_frees = {v for v in self._free if result.assignment[v]}
        while true_frees:
            shrink = list(clauses)
            shrink.append(tuple(-v for v in sorted(true_frees)))
            assumptions = [-v for v in self._free if v not in true_frees]
            attempt = Solver(self._cnf.num_vars, shrink, self._config).solve(assumptions)
            if not attempt.sat:
                break
            true_frees = {v for v in self._free if attempt.assignment[v]}
        return frozenset(self._reverse[v - 1] for v in sorted(true_frees))

    def next(self) -> frozenset[tuple[str, Tup]] | None:
        if self.cursor + 1 < len(self._found):
            self.cursor += 1
            return self._found[self.cursor]
        if self._exhausted:
            return None
        model = self._extract_minimal()
        if model is None:
            self._exhausted = True
            return None
        self._found.append(model)
        self.cursor = len(self._found) - 1
        true_vars = sorted(v for v in self._free
                           if self._reverse[v - 1] in model)
        if true_vars:
            # Superset block: some currently-true free tuple must go false.
            self._blocks.append(tuple(-v for v in true_vars))
        else:
            # The empty model is minimal and below every other; nothing follows.
            self._exhausted = True
        return model

    def prev(self) -> frozenset[tuple[str, Tup]] | None:
        if self.cursor <= 0:
            return None
        self.cursor -= 1
        return self._found[self.cursor]

    @property
    def exhausted(self) -> bool:
        return self._exhausted and self.cursor + 1 >= len(self._found)


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------


def infer_relations(spec: TypedSpec, instance: Instance, targets: list[str],
                    engine: str = "sat",
                    config: SolverConfig | None = None
                    ) -> tuple[AnalysisReport, SolutionIterator | None]:
    """Deduce new tuples for the target relations.

    Returns the report for the first (subset-minimal) solution and, for the
    SAT engine, an iterator over alternative minimal models.
    """
    t0 = time.perf_counter()
    target_set = set(targets)
    facts = spec.reasoning_facts(target_set)

    if engine == "horn":
        closure = horn_fixpoint(spec, instance, targets, facts=facts)
        inferred = _closure_to_inferred(spec, instance, closure, targets)
        report = AnalysisReport(mode="infer", verdict="solutions", inferred=inferred)
        report.stats.ms = (time.perf_counter() - t0) * 1000
        return report, None
    if engine != "sat":
        raise ValueError(f"unknown engine {engine!r}")

    bounds = build_bounds(Infer(targets=tuple(targets)), spec, instance)
    grounding = ground(spec, facts, bounds)
    cnf = to_cnf(grounding)
    free_vars = [grounding.varmap.var_of(rel, t)
                 for rel in bounds.rel_order for t in bounds.free_tuples(rel)]
    iterator = SolutionIterator(cnf, free_vars, grounding.varmap.reverse, config)
    first = iterator.next()
    if first is None:
        violated = _localize_unsat(spec, facts, bounds)
        raise InconsistentPremises(
            "inference impossible: selected facts are unsatisfiable over the "
            "instance", violated)
    report = AnalysisReport(
        mode="infer",
        verdict="solutions",
        inferred=[InferredTuple(rel, t) for rel, t in sorted(first)],
        stats=AnalysisStats(vars=cnf.num_vars, clauses=len(cnf.clauses)),
    )
    report.stats.ms = (time.perf_counter() - t0) * 1000
    return report, iterator


def _closure_to_inferred(spec: TypedSpec, instance: Instance,
                         closure: dict[str, frozenset[Tup]],
                         targets: list[str]) -> list[InferredTuple]:
    out = []
    for rel in spec.field_order:
        if rel not in targets:
            continue
        for t in sorted(closure[rel] - instance.rel(rel)):
            out.append(InferredTuple(rel, t))
    return out


def _localize_unsat(spec: TypedSpec, facts: list[ast.FactDecl],
                    bounds: Bounds) -> list[str]:
    """Deletion-based localization on non-exact bounds: name facts whose
    single removal restores satisfiability."""
    violated = []
    for i in range(len(facts)):
        rest = facts[:i] + facts[i + 1:]
        g = ground(spec, rest, bounds)
        if Solver.from_cnf(to_cnf(g)).solve().sat:
            violated.append(facts[i].display_name)
    return violated


# ---------------------------------------------------------------------------
# Horn fixpoint (semi-naive least fixpoint; oracle and fast path)
# ---------------------------------------------------------------------------


def horn_fixpoint(spec: TypedSpec, instance: Instance, targets: list[str],
                  facts: list[ast.FactDecl] | None = None
                  ) -> dict[str, frozenset[Tup]]:
    """Least-fixpoint closure of the Horn-classified reasoning facts.

    Exactly equals the SAT engine's subset-minimal model on Horn inputs:
    a derivation that escapes the inference bounds (a non-target relation,
    or a tuple outside its column types) corresponds to an unsatisfiable
    grounding and raises :class:`InconsistentPremises`.
    """
    target_set = set(targets)
    if facts is None:
        facts = spec.reasoning_facts(target_set)
    rules = []
    for f in facts:
        rule = spec.horn_rule_for(f)
        if rule is None:
            raise NonHornFact(
                f"fact {f.display_name!r} is not a Horn implication"
            )
        rules.append((f, rule))

    rel_names = spec.sig_order + spec.field_order
    db: dict[str, set[Tup]] = {r: set(instance.rel(r)) for r in rel_names}
    delta: dict[str, set[Tup]] = {r: set(db[r]) for r in rel_names}

    def check_head(fact: ast.FactDecl, rel: str, tup: Tup) -> None:
        if rel not in target_set:
            raise InconsistentPremises(
                f"fact {fact.display_name!r} derives {rel}{tup!r}, but "
                f"{rel!r} is exact in this analysis", [fact.display_name])
        for atom, col in zip(tup, spec.fields[rel].cols):
            if (atom,) not in db[col]:
                raise InconsistentPremises(
                    f"fact {fact.display_name!r} derives {rel}{tup!r} outside "
                    f"column type {col!r}", [fact.display_name])

    while any(delta.get(r) for r in rel_names):
        new_delta: dict[str, set[Tup]] = {r: set() for r in rel_names}
        for fact, rule in rules:
            sig_of = dict(rule.variables)
            n = len(rule.premises)
            seeds = range(n) if n else (None,)
            for seed in seeds:
                for env in _rule_matches(rule, db, delta, seed, sig_of):
                    head_vars, rel = rule.head
                    tup = tuple(env[v] for v in head_vars)
                    if tup in db[rel] or tup in new_delta[rel]:
                        continue
                    check_head(fact, rel, tup)
                    new_delta[rel].add(tup)
        for r in rel_names:
            db[r] |= new_delta[r]
        delta = new_delta
    return {r: frozenset(db[r]) for r in rel_names}


def _rule_matches(rule, db, delta, seed, sig_of):
    """Enumerate variable bindings; premise ``seed`` reads the delta,
    the others the full database (semi-naive evaluation)."""

    def extend(i: int, env: dict[str, str]):
        if i == len(rule.premises):
            yield from _bind_free(rule, env, db, sig_of)
            return
        vars_, rel = rule.premises[i]
        source = delta[rel] if i == seed else db[rel]
        for tup in source:
            attempt = dict(env)
            ok = True
            for v, atom in zip(vars_, tup):
                if attempt.get(v, atom) != atom:
                    ok = False
                    break
                attempt[v] = atom
            if ok:
                yield from extend(i + 1, attempt)

    yield from extend(0, {})


def _bind_free(rule, env, db, sig_of):
    """Enumerate variables not bound by any premise over their sig, and
    check sig membership of the bound ones."""
    for v, atom in env.items():
        if (atom,) not in db[sig_of[v]]:
            return
    unbound = [v for v, _ in rule.variables if v not in env]
    if not unbound:
        yield env
        return
    pools = [sorted(a for (a,) in db[sig_of[v]]) for v in unbound]
    for combo in itertools.product(*pools):
        yield {**env, **dict(zip(unbound, combo))}


# ---------------------------------------------------------------------------
# Discovery
# ---------------------------------------------------------------------------


def discover_locations(spec: TypedSpec, instance: Instance, fresh_count: int,
                       link_fresh: bool = False,
                       config: SolverConfig | None = None
                       ) -> tuple[AnalysisReport, SolutionIterator]:
    """Suggest missing trace-locations (and optionally links) by letting
    fresh atoms join signatures."""
    if fresh_count < 1:
        raise ValueError("fresh_count must be at least 1")
    t0 = time.perf_counter()
    facts = spec.consistency_facts()
    bounds = build_bounds(
        Discover(fresh_count=fresh_count, link_fresh=link_fresh), spec, instance)
    grounding = ground(spec, facts, bounds)
    cnf = to_cnf(grounding)
    free_vars = [grounding.varmap.var_of(rel, t)
                 for rel in bounds.rel_order for t in bounds.free_tuples(rel)]
    iterator = SolutionIterator(cnf, free_vars, grounding.varmap.reverse, config)
    first = iterator.next()
    if first is None:
        raise NoSuggestion(
            f"no consistent completion exists even with {fresh_count} fresh "
            f"atom(s)")
    report = AnalysisReport(
        mode="discover",
        verdict="solutions",
        suggestions=solution_to_suggestions(spec, bounds, first),
        stats=AnalysisStats(vars=cnf.num_vars, clauses=len(cnf.clauses)),
    )
    report.stats.ms = (time.perf_counter() - t0) * 1000
    return report, iterator


def solution_to_suggestions(spec: TypedSpec, bounds: Bounds,
                            solution: frozenset[tuple[str, Tup]]) -> list[Suggestion]:
    per_atom: dict[str, Suggestion] = {
        a: Suggestion(atom=a) for a in bounds.fresh_atoms
    }
    sig_membership: dict[str, set[str]] = {a: set() for a in bounds.fresh_atoms}
    for rel, t in sorted(solution):
        if rel in spec.sigs:
            atom = t[0]
            if atom in sig_membership:
                sig_membership[atom].add(rel)
        else:
            for atom in t:
                if atom in per_atom:
                    per_atom[atom].links.append((rel, t))
                    break
    for atom, sigs in sig_membership.items():
        # Report the most specific memberships; ancestors are implied.
        specific = [
            s for s in sigs
            if not any(o != s and s in spec.sigs[o].prims for o in sigs)
        ]
        per_atom[atom].sigs = sorted(specific)
    return [per_atom[a] for a in bounds.fresh_atoms
            if per_atom[a].sigs or per_atom[a].links]


# ---------------------------------------------------------------------------
# Accept-trace loop
# ---------------------------------------------------------------------------


def accept_trace(info: TraceabilityInformation, relation: str, endpoints,
                 spec: TypedSpec,
                 provenance: str = INFERRED_PROVENANCE
                 ) -> tuple[TraceabilityInformation, bool]:
    """Materialize an inferred tuple as a workspace link.

    The tuple joins the lower bound of all subsequent analyses. Duplicate
    acceptance is an idempotent no-op (reported via the returned flag).
    """
    return add_typed_link(info, relation, tuple(endpoints), spec,
                          provenance=provenance, accepted=True)
