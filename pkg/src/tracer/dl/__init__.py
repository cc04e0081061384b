"""Description-logic kernel: concepts, TBox, tableau, trace detection."""

from .concepts import (
    BOTTOM,
    TOP,
    And,
    Atomic,
    Bottom,
    Concept,
    Exists,
    Forall,
    Not,
    Or,
    Role,
    Top,
    and_,
    atom,
    nnf,
    not_,
    or_,
)
from .detect import SidpAxiom, Trace, TraceDetector, detect_trace
from .ontology import Ontology, parse_ontology
from .tableau import Reasoner

__all__ = [
    "Concept", "Top", "Bottom", "Atomic", "Not", "And", "Or", "Exists",
    "Forall", "Role", "TOP", "BOTTOM", "atom", "and_", "or_", "not_", "nnf",
    "Ontology", "parse_ontology", "Reasoner",
    "SidpAxiom", "Trace", "TraceDetector", "detect_trace",
]
