"""Exception taxonomy shared across the whole engine.

Every user-facing failure mode has its own class so the CLI and the HTTP
service can map errors to exit codes / status codes without string matching.
Diagnostics that carry a source position render as ``path:line:col: severity:
message``.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class TracerError(Exception):
    """Base class for all errors raised by this package."""


# ---------------------------------------------------------------------------
# Workspace / trace-model errors
# ---------------------------------------------------------------------------

class UnknownLocation(TracerError):
    pass


class UnknownSignature(TracerError):
    pass


class AbstractSignature(TracerError):
    """A location cannot be typed with an abstract signature."""


class SubsetSignature(TracerError):
    """A location cannot be typed with a subset signature.

    With one type per location and exact analysis bounds, the atom's
    membership in the subset's parents would be undetermined.
    """


class UntypedEndpoint(TracerError):
    pass


class ArityMismatch(TracerError):
    pass


class MalformedDocument(TracerError):
    """Workspace document failed to load; message carries a JSON pointer."""


class TypeViolation(TracerError):
    pass


# ---------------------------------------------------------------------------
# Spec-language errors
# ---------------------------------------------------------------------------

@dataclass
class SourcePos:
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class SpecError(TracerError):
    """A diagnostic anchored to a source position."""

    def __init__(self, message: str, pos: SourcePos | None = None):
        self.message = message
        self.pos = pos or SourcePos()
        super().__init__(message)

    def render(self, path: str = "<spec>", severity: str = "error") -> str:
        return f"{path}:{self.pos.line}:{self.pos.col}: {severity}: {self.message}"


class ForlSyntaxError(SpecError):
    """Raised by the lexer/parser; carries what was expected."""

    def __init__(self, message: str, pos: SourcePos | None = None, expected: str = ""):
        super().__init__(message, pos)
        self.expected = expected


class ArityError(SpecError):
    pass


class UnknownName(SpecError):
    pass


class NonBinaryClosure(SpecError):
    pass


class UnknownReasonTarget(SpecError):
    pass


@dataclass
class Diagnostic:
    """Non-fatal typecheck output (e.g. the EmptyJoin warning)."""

    message: str
    pos: SourcePos = field(default_factory=SourcePos)
    severity: str = "warning"

    def render(self, path: str = "<spec>") -> str:
        return f"{path}:{self.pos.line}:{self.pos.col}: {self.severity}: {self.message}"


# ---------------------------------------------------------------------------
# Bounds / analysis errors
# ---------------------------------------------------------------------------

class UnknownTarget(TracerError):
    pass


class TupleOutsideType(TracerError):
    pass


class InconsistentPremises(TracerError):
    """Inference is impossible: the selected facts are unsatisfiable.

    ``violated`` lists facts whose individual removal restores satisfiability
    (deletion-based localization; may be empty for multi-fault premises).
    """

    def __init__(self, message: str, violated: list[str] | None = None):
        super().__init__(message)
        self.violated = violated or []


class NonHornFact(TracerError):
    pass


class NoSuggestion(TracerError):
    """Discovery found no model even with fresh atoms available."""


class ResourceLimit(TracerError):
    """A configured budget (conflicts, tableau nodes) was exhausted."""


class UnknownLiteral(TracerError):
    """Flat-semantics literal that the DL translation does not recognize."""
