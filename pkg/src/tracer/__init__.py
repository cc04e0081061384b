"""Configurable traceability reasoning engine.

Users define trace types and their formal semantics in a restricted
first-order relational logic; the engine performs SAT-based consistency
checking, trace inference, and trace-element discovery over traceability
workspaces. A description-logic kernel plus a controlled-language parser
derive initial traces from natural-language artifacts.
"""

__version__ = "0.1.0"
