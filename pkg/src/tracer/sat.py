"""Embedded CDCL SAT solver: two-watched literals, first-UIP learning,
Luby restarts, VSIDS decisions, assumption-based cores, model enumeration,
DIMACS export.

Deterministic by construction: no wall-clock heuristics, ties break toward
the lowest variable index, and the default decision polarity is FALSE —
which is what makes the first model of a pure-Horn inference CNF assign
only implied tuples true (phase saving is off by default for the same
reason).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .errors import ResourceLimit
from .grounder import CnfFormula

ENV_CONFLICT_LIMIT = "TRACER_SAT_CONFLICT_LIMIT"


@dataclass
class SolverConfig:
    conflict_limit: int | None = None
    var_decay: float = 0.95
    luby_base: int = 100
    default_phase: bool = False
    phase_saving: bool = False

    @classmethod
    def from_env(cls) -> "SolverConfig":
        cfg = cls()
        raw = os.environ.get(ENV_CONFLICT_LIMIT)
        if raw:
            try:
                cfg.conflict_limit = int(raw)
            except ValueError:
                pass
        return cfg


@dataclass
class SatResult:
    assignment: dict[int, bool]

    @property
    def sat(self) -> bool:
        return True


@dataclass
class UnsatResult:
    # Indices into the assumptions list that form an unsatisfiable core;
    # None when solving without assumptions.
    core: list[int] | None = None

    @property
    def sat(self) -> bool:
        return False


SolveResult = SatResult | UnsatResult


def luby(i: int) -> int:
    """Luby restart sequence 1 1 2 1 1 2 4 ... (1-based)."""
    x = i - 1
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x %= size
    return 1 << seq


class Solver:
    def __init__(self, num_vars: int, clauses=(), config: SolverConfig | None = None):
        self.config = config or SolverConfig.from_env()
        self.n = num_vars
        self.clauses: list[list[int]] = []
        self.watches: dict[int, list[list[int]]] = {}
        self.assign: list[int] = [0] * (num_vars + 1)  # 0 unknown, 1 true, -1 false
        self.level: list[int] = [0] * (num_vars + 1)
        self.reason: list[list[int] | None] = [None] * (num_vars + 1)
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.activity: list[float] = [0.0] * (num_vars + 1)
        self.var_inc = 1.0
        self.saved_phase: list[bool] = [self.config.default_phase] * (num_vars + 1)
        self.unsat = False
        self.conflicts = 0
        for cl in clauses:
            self.add_clause(cl)

    @classmethod
    def from_cnf(cls, cnf: CnfFormula, config: SolverConfig | None = None) -> "Solver":
        return cls(cnf.num_vars, cnf.clauses, config)

    # -- clause management ----------------------------------------------------

    def add_clause(self, lits) -> None:
        """Add a clause; must be called at decision level 0."""
        assert not self.trail_lim, "add_clause only at level 0"
        out: list[int] = []
        for lit in lits:
            v = self._value(lit)
            if v == 1:
                return  # satisfied at root
            if v == 0 and lit not in out:
                if -lit in out:
                    return  # tautology
                out.append(lit)
        if not out:
            self.unsat = True
            return
        if len(out) == 1:
            if not self._enqueue(out[0], None):
                self.unsat = True
            elif self._propagate() is not None:
                self.unsat = True
            return
        self._attach(out)

    def _attach(self, cl: list[int]) -> None:
        self.clauses.append(cl)
        self.watches.setdefault(cl[0], []).append(cl)
        self.watches.setdefault(cl[1], []).append(cl)

    # -- assignment primitives --------------------------------------------------

    def _value(self, lit: int) -> int:
        a = self.assign[abs(lit)]
        return a if lit > 0 else -a

    def _enqueue(self, lit: int, reason: list[int] | None) -> bool:
        if self._value(lit) == -1:
            return False
        if self._value(lit) == 1:
            return True
        v = abs(lit)
        self.assign[v] = 1 if lit > 0 else -1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)
        return True

    def _propagate(self) -> list[int] | None:
        """Unit propagation; returns a conflicting clause or None."""
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            false_lit = -lit
            watchlist = self.watches.get(false_lit)
            if not watchlist:
                continue
            i = 0
            while i < len(watchlist):
                cl = watchlist[i]
                if cl[0] == false_lit:
                    cl[0], cl[1] = cl[1], cl[0]
                # cl[1] == false_lit now
                if self._value(cl[0]) == 1:
                    i += 1
                    continue
                moved = False
                for k in range(2, len(cl)):
                    if self._value(cl[k]) != -1:
                        cl[1], cl[k] = cl[k], cl[1]
                        self.watches.setdefault(cl[1], []).append(cl)
                        watchlist[i] = watchlist[-1]
                        watchlist.pop()
                        moved = True
                        break
                if moved:
                    continue
                if self._value(cl[0]) == -1:
                    return cl  # conflict
                self._enqueue(cl[0], cl)
                i += 1
        return None

    # -- conflict analysis -------------------------------------------------------

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(1, self.n + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100

    def _decay(self) -> None:
        self.var_inc /= self.config.var_decay

    def _analyze(self, confl: list[int]) -> tuple[list[int], int]:
        learnt: list[int] = []
        seen = [False] * (self.n + 1)
        counter = 0
        p = 0
        index = len(self.trail)
        cur_level = len(self.trail_lim)
        while True:
            lits = confl if p == 0 else confl[1:]
            for q in lits:
                v = abs(q)
                if not seen[v] and self.level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if self.level[v] == cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while True:
                index -= 1
                p = self.trail[index]
                if seen[abs(p)]:
                    break
            counter -= 1
            seen[abs(p)] = False
            if counter == 0:
                break
            confl = self.reason[abs(p)]
        learnt.insert(0, -p)
        if len(learnt) == 1:
            return learnt, 0
        # Watch the asserting literal and one literal from the backjump level.
        max_i = max(range(1, len(learnt)), key=lambda i: self.level[abs(learnt[i])])
        learnt[1], learnt[max_i] = learnt[max_i], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _analyze_final(self, p: int, assumptions: list[int]) -> list[int]:
        """Subset of assumption indices implying the falsified assumption p."""
        core_lits = {p}
        if not self.trail_lim:
            return self._core_indices(core_lits, assumptions)
        seen = [False] * (self.n + 1)
        seen[abs(p)] = True
        for i in range(len(self.trail) - 1, self.trail_lim[0] - 1, -1):
            x = self.trail[i]
            v = abs(x)
            if not seen[v]:
                continue
            if self.reason[v] is None:
                core_lits.add(x)
            else:
                for q in self.reason[v][1:]:
                    if self.level[abs(q)] > 0:
                        seen[abs(q)] = True
            seen[v] = False
        return self._core_indices(core_lits, assumptions)

    @staticmethod
    def _core_indices(core_lits: set[int], assumptions: list[int]) -> list[int]:
        return [i for i, a in enumerate(assumptions) if a in core_lits or -a in core_lits]

    # -- search ---------------------------------------------------------------------

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        for i in range(len(self.trail) - 1, self.trail_lim[lvl] - 1, -1):
            lit = self.trail[i]
            v = abs(lit)
            if self.config.phase_saving:
                self.saved_phase[v] = lit > 0
            self.assign[v] = 0
            self.reason[v] = None
        del self.trail[self.trail_lim[lvl]:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    def _decide_var(self) -> int:
        best, best_act = 0, -1.0
        for v in range(1, self.n + 1):
            if self.assign[v] == 0 and self.activity[v] > best_act:
                best, best_act = v, self.activity[v]
        return best

    def solve(self, assumptions: list[int] | None = None) -> SolveResult:
        assumptions = list(assumptions or [])
        self._cancel_until(0)
        if self.unsat:
            return UnsatResult(core=[] if assumptions else None)
        if self._propagate() is not None:
            self.unsat = True
            return UnsatResult(core=[] if assumptions else None)

        budget = self.config.conflict_limit
        restart_idx = 1
        conflicts_until_restart = luby(restart_idx) * self.config.luby_base

        while True:
            confl = self._propagate()
            if confl is not None:
                self.conflicts += 1
                if budget is not None and self.conflicts > budget:
                    raise ResourceLimit(
                        f"conflict budget exhausted ({budget} conflicts)"
                    )
                if not self.trail_lim:
                    self.unsat = True
                    return UnsatResult(core=[] if assumptions else None)
                if len(self.trail_lim) <= len(assumptions):
                    # Conflict inside the assumption prefix: the assumptions
                    # at fault are on the trail; analyze from the conflict.
                    core = self._assumption_core_from_conflict(confl, assumptions)
                    self._cancel_until(0)
                    return UnsatResult(core=core)
                learnt, back = self._analyze(confl)
                back = max(back, len(assumptions))
                self._cancel_until(back)
                if len(learnt) == 1:
                    self._cancel_until(0)
                    if not self._enqueue(learnt[0], None) or self._propagate() is not None:
                        self.unsat = True
                        return UnsatResult(core=[] if assumptions else None)
                    # Re-establish the assumption prefix on the next loop.
                    conflicts_until_restart -= 1
                    continue
                self._attach(learnt)
                self._enqueue(learnt[0], learnt)
                self._decay()
                conflicts_until_restart -= 1
                if conflicts_until_restart <= 0:
                    restart_idx += 1
                    conflicts_until_restart = luby(restart_idx) * self.config.luby_base
                    self._cancel_until(len(assumptions) if assumptions else 0)
                continue

            # Place pending assumptions, one decision level each.
            if len(self.trail_lim) < len(assumptions):
                a = assumptions[len(self.trail_lim)]
                val = self._value(a)
                if val == -1:
                    core = self._analyze_final(a, assumptions)
                    self._cancel_until(0)
                    return UnsatResult(core=core)
                self.trail_lim.append(len(self.trail))
                if val == 0:
                    self._enqueue(a, None)
                continue

            v = self._decide_var()
            if v == 0:
                model = {
                    u: self.assign[u] == 1 for u in range(1, self.n + 1)
                }
                self._self_check(model)
                self._cancel_until(0)
                return SatResult(assignment=model)
            phase = self.saved_phase[v] if self.config.phase_saving else self.config.default_phase
            self.trail_lim.append(len(self.trail))
            self._enqueue(v if phase else -v, None)

    def _assumption_core_from_conflict(self, confl: list[int],
                                       assumptions: list[int]) -> list[int]:
        seen = [False] * (self.n + 1)
        core_lits: set[int] = set()
        for q in confl:
            if self.level[abs(q)] > 0:
                seen[abs(q)] = True
        start = self.trail_lim[0] if self.trail_lim else 0
        for i in range(len(self.trail) - 1, start - 1, -1):
            x = self.trail[i]
            v = abs(x)
            if not seen[v]:
                continue
            if self.reason[v] is None:
                core_lits.add(x)
            else:
                for q in self.reason[v][1:]:
                    if self.level[abs(q)] > 0:
                        seen[abs(q)] = True
            seen[v] = False
        return self._core_indices(core_lits, assumptions)

    def _self_check(self, model: dict[int, bool]) -> None:
        for cl in self.clauses:
            if not any(model[abs(l)] == (l > 0) for l in cl):
                raise AssertionError(f"model does not satisfy clause {cl}")


# ---------------------------------------------------------------------------
# Top-level operations
# ---------------------------------------------------------------------------


def solve(cnf: CnfFormula, assumptions: list[int] | None = None,
          config: SolverConfig | None = None) -> SolveResult:
    return Solver.from_cnf(cnf, config).solve(assumptions)


def enumerate_models(cnf: CnfFormula, projection: list[int],
                     limit: int | None = None,
                     config: SolverConfig | None = None):
    """Yield assignments distinct on the projection variables.

    A blocking clause is added per model; order is deterministic given the
    fixed decision heuristic.
    """
    if limit is not None and limit <= 0:
        return
    solver = Solver.from_cnf(cnf, config)
    count = 0
    while True:
        result = solver.solve()
        if not result.sat:
            return
        projected = {v: result.assignment[v] for v in projection}
        yield projected
        count += 1
        if limit is not None and count >= limit:
            return
        block = [(-v if projected[v] else v) for v in projection]
        if not block:
            return
        solver.add_clause(block)
        if solver.unsat:
            return


def export_dimacs(cnf: CnfFormula) -> str:
    """Standard DIMACS text; byte-identical across runs for equal input."""
    lines = [f"p cnf {cnf.num_vars} {len(cnf.clauses)}"]
    for cl in cnf.clauses:
        lines.append(" ".join(str(l) for l in cl) + " 0")
    return "\n".join(lines) + "\n"
