"""Tokenizer for the domain-definition language.

Identifiers are kebab-friendly: a hyphen continues the identifier when the
next character starts a new letter segment ("fuel-level", "slow-burn"), so
binary minus must be written with surrounding space or before a digit
("t+dur-1" still lexes as dur MINUS 1). Trailing primes are part of the
identifier (loc'). `//` starts a line comment.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import SyntaxDiagnostic

# unicode aliases accepted on input, never emitted by unparse
ALIASES = {
    "∧": "&",  # and
    "∨": "|",  # or
    "¬": "!",  # not
    "→": "->",
    "↔": "<->",
    "≐": "==",  # approaches-the-limit, used for fluent assignment tests
    "≠": "!=",
    "≤": "<=",
    "≥": ">=",
    "∀": "forall",
    "∃": "exists",
}

PUNCT = [
    ":=",
    "->",
    "<->",
    "==",
    "!=",
    "<=",
    ">=",
    "(",
    ")",
    "[",
    "]",
    "<",
    ">",
    ",",
    ";",
    ":",
    "+",
    "-",
    "*",
    "/",
    "&",
    "|",
    "!",
    "^",
]


@dataclass(frozen=True)
class Token:
    kind: str  # HASH, IDENT, DOLLAR, NUMBER, STRING, PUNCT, EOF
    text: str
    line: int
    col: int

    def __repr__(self):
        return f"{self.kind}({self.text!r}@{self.line}:{self.col})"


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def tokenize(text: str, filename: str = "<input>") -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def here(kind, s, ln, cl):
        toks.append(Token(kind, s, ln, cl))

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in ALIASES:
            here("PUNCT" if ALIASES[ch] not in ("forall", "exists") else "IDENT",
                 ALIASES[ch], line, col)
            i += 1
            col += 1
            continue
        if ch == "#":
            start, ln, cl = i + 1, line, col
            j = start
            while j < n and _is_ident_char(text[j]):
                j += 1
            word = text[start:j]
            if not word:
                raise SyntaxDiagnostic("bare '#'", line, col, ["statement keyword"],
                                       filename)
            here("HASH", word, ln, cl)
            col += j - i
            i = j
            continue
        if ch == "$":
            start, ln, cl = i + 1, line, col
            j = start
            while j < n and (_is_ident_char(text[j]) or
                             (text[j] == "-" and j + 1 < n and _is_ident_start(text[j + 1]))):
                j += 1
            word = text[start:j]
            if not word:
                raise SyntaxDiagnostic("bare '$'", line, col, ["aspect name"], filename)
            here("DOLLAR", word, ln, cl)
            col += j - i
            i = j
            continue
        if ch == '"':
            ln, cl = line, col
            j = i + 1
            buf = []
            while j < n and text[j] != '"':
                if text[j] == "\n":
                    raise SyntaxDiagnostic("unterminated string", ln, cl, ['"'], filename)
                buf.append(text[j])
                j += 1
            if j >= n:
                raise SyntaxDiagnostic("unterminated string", ln, cl, ['"'], filename)
            here("STRING", "".join(buf), ln, cl)
            col += j + 1 - i
            i = j + 1
            continue
        if ch.isdigit():
            ln, cl = line, col
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            here("NUMBER", text[i:j], ln, cl)
            col += j - i
            i = j
            continue
        if _is_ident_start(ch):
            ln, cl = line, col
            j = i
            while j < n:
                if _is_ident_char(text[j]):
                    j += 1
                elif text[j] == "-" and j + 1 < n and _is_ident_start(text[j + 1]):
                    j += 1
                else:
                    break
            while j < n and text[j] == "'":
                j += 1
            here("IDENT", text[i:j], ln, cl)
            col += j - i
            i = j
            continue
        matched = None
        for p in PUNCT:
            if text.startswith(p, i):
                matched = p
                break
        if matched is None:
            raise SyntaxDiagnostic(f"unexpected character {ch!r}", line, col, [], filename)
        here("PUNCT", matched, line, col)
        i += len(matched)
        col += len(matched)

    toks.append(Token("EOF", "", line, col))
    return toks
