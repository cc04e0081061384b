"""Trace detection between sentence axioms.

Each parsed sentence contributes an axiom ``Subject ⊑ Predicate`` whose
content concept is their conjunction. Between two axioms:

* conflicts — the content conjunction is unsatisfiable, judged against
  the ontology with role inclusions removed (concept-level knowledge
  only; role-mediated exclusions emerge later through trace reasoning);
* equals — mutual subsumption (role-free), suppressing the refines pair;
* refines — one-directional entailment that holds role-free;
* requires — one-directional entailment that holds only once role
  inclusions participate.
"""

from __future__ import annotations

from dataclasses import dataclass

from .concepts import Concept, and_
from .ontology import Ontology
from .tableau import Reasoner


@dataclass(frozen=True)
class SidpAxiom:
    subject: Concept
    predicate: Concept
    source: str  # location id of the sentence

    @property
    def content(self) -> Concept:
        return and_([self.subject, self.predicate])


@dataclass(frozen=True)
class Trace:
    relation: str  # conflicts | refines | requires | equals
    source: str
    target: str

    def key(self) -> tuple[str, str, str]:
        return (self.relation, self.source, self.target)


class TraceDetector:
    """Holds the two reasoner views (with and without role inclusions)."""

    def __init__(self, onto: Ontology, node_budget: int = 4000):
        self.full = Reasoner(onto, node_budget)
        self.plain = Reasoner(onto.without_role_inclusions(), node_budget)

    def detect(self, a1: SidpAxiom, a2: SidpAxiom) -> set[Trace]:
        out: set[Trace] = set()
        c1, c2 = a1.content, a2.content
        if not self.plain.is_satisfiable(and_([c1, c2])):
            out.add(Trace("conflicts", a1.source, a2.source))
            return out
        fwd_plain = self.plain.subsumes(c2, c1)  # c1 ⊑ c2 role-free
        bwd_plain = self.plain.subsumes(c1, c2)
        if fwd_plain and bwd_plain:
            out.add(Trace("equals", a1.source, a2.source))
            return out
        if fwd_plain:
            out.add(Trace("refines", a1.source, a2.source))
        elif self.full.subsumes(c2, c1):
            out.add(Trace("requires", a1.source, a2.source))
        if bwd_plain:
            out.add(Trace("refines", a2.source, a1.source))
        elif self.full.subsumes(c1, c2):
            out.add(Trace("requires", a2.source, a1.source))
        return out


def detect_trace(a1: SidpAxiom, a2: SidpAxiom, onto: Ontology) -> set[Trace]:
    return TraceDetector(onto).detect(a1, a2)
