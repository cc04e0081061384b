"""Tokenizer for the spec language.

Total over arbitrary byte strings: every input yields a token stream or a
:class:`ForlSyntaxError` with a position — never an unhandled crash. Alloy
constructs outside the supported subset (integers, ``let``, predicates,
ordering, cardinality ``#``) are rejected here with a dedicated diagnostic
rather than producing confusing parse errors later.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ForlSyntaxError, SourcePos

KEYWORDS = {
    "sig", "abstract", "extends", "in", "fact",
    "all", "some", "no", "lone", "one", "set",
    "not", "and", "or", "implies", "iff",
    "univ", "iden", "none",
}

# Recognized so we can refuse them with a pointed message.
UNSUPPORTED = {
    "let": "let bindings",
    "pred": "predicates",
    "fun": "functions",
    "run": "commands",
    "check": "commands",
    "open": "modules",
    "module": "modules",
    "Int": "integer expressions",
    "int": "integer expressions",
    "seq": "sequences",
    "disj": "disjoint declarations",
    "ordering": "ordered signatures",
}

PUNCT = {
    "{": "lbrace", "}": "rbrace", "(": "lparen", ")": "rparen",
    ":": "colon", ",": "comma", "|": "bar", "@": "at",
    ".": "dot", "+": "plus", "&": "amp", "~": "tilde",
    "^": "caret", "*": "star", "=": "eq",
}


@dataclass(frozen=True)
class Token:
    kind: str   # name | keyword token text | punct name | arrow | implies | iff | minus | eof
    text: str
    pos: SourcePos


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def pos() -> SourcePos:
        return SourcePos(line, col)

    def advance(k: int = 1) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = source[i]
        if c in " \t\r\n":
            advance()
            continue
        if c == "/" and source[i:i + 2] == "//":
            while i < n and source[i] != "\n":
                advance()
            continue
        if c == "/" and source[i:i + 2] == "/*":
            start = pos()
            advance(2)
            while i < n and source[i:i + 2] != "*/":
                advance()
            if i >= n:
                raise ForlSyntaxError("unterminated block comment", start, expected="*/")
            advance(2)
            continue
        if c == "-":
            nxt = source[i + 1] if i + 1 < n else ""
            if nxt == ">":
                tokens.append(Token("arrow", "->", pos()))
                advance(2)
                continue
            if nxt == "-":
                while i < n and source[i] != "\n":
                    advance()
                continue
            tokens.append(Token("minus", "-", pos()))
            advance()
            continue
        if c == "=":
            if source[i + 1:i + 2] == ">":
                tokens.append(Token("implies", "=>", pos()))
                advance(2)
                continue
            tokens.append(Token("eq", "=", pos()))
            advance()
            continue
        if c == "<":
            if source[i + 1:i + 3] == "=>":
                tokens.append(Token("iff", "<=>", pos()))
                advance(3)
                continue
            raise ForlSyntaxError("unexpected character '<'", pos(), expected="<=>")
        if c in PUNCT:
            tokens.append(Token(PUNCT[c], c, pos()))
            advance()
            continue
        if c.isdigit():
            raise ForlSyntaxError(
                "integer literals are not supported by this language subset", pos()
            )
        if c == "#":
            raise ForlSyntaxError(
                "cardinality expressions are not supported by this language subset", pos()
            )
        if c.isalpha() or c == "_":
            start = pos()
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            advance(j - i)
            if word in UNSUPPORTED:
                raise ForlSyntaxError(
                    f"{UNSUPPORTED[word]} are not supported by this language subset "
                    f"('{word}')",
                    start,
                )
            kind = word if word in KEYWORDS else "name"
            tokens.append(Token(kind, word, start))
            continue
        raise ForlSyntaxError(f"unexpected character {c!r}", pos())

    tokens.append(Token("eof", "", pos()))
    return tokens
