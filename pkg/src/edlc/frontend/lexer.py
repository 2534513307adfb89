"""Tokenizer for EDL source text.

Index suffixes (``v_i``, ``delta^ij``) are left to the parser: the lexer
emits ``_`` and ``^`` as operator tokens.  A run of digits, a slash and more
digits with no intervening whitespace (``1/2``) is a single rational literal, unless it directly follows ``/``, ``**`` or
``^``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from edlc.errors import SourceSpan, UnrecognizedCharacter, UnterminatedString

KEYWORDS = frozenset({"begin", "end", "group", "parameters", "calculation", "derivatives"})

# longest operators first
OPERATORS = ("**", "=", "+", "-", "*", "/", "(", ")", "[", "]", ",", ":", "^", "_")

_NUMBER = re.compile(r"(\d+/\d+(?![\d.]))|(\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+)")
_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9]*")


@dataclass(frozen=True)
class Token:
    kind: str  # "kw", "ident", "num", "str", "op"
    text: str
    span: SourceSpan
    value: object = None

    def __repr__(self) -> str:
        return f"{self.kind}({self.text})"


def tokenize(source: str, file: str = "<input>") -> list[Token]:
    """Split *source* into tokens; comments and whitespace are dropped."""
    tokens: list[Token] = []
    line, col = 1, 1
    i, n = 0, len(source)

    def span(start_line: int, start_col: int, length: int) -> SourceSpan:
        return SourceSpan(file, start_line, start_col, start_line, start_col + max(length, 1) - 1)

    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r\f\v":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch == '"':
            j = i + 1
            while j < n and source[j] not in '"\n':
                j += 1
            if j >= n or source[j] != '"':
                raise UnterminatedString("unterminated string literal", span(line, col, j - i))
            text = source[i : j + 1]
            tokens.append(Token("str", text, span(line, col, len(text)), source[i + 1 : j]))
            col += len(text)
            i = j + 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            m = _NUMBER.match(source, i)
            text = m.group(0)
            if m.group(1) and tokens and tokens[-1].kind == "op" and tokens[-1].text in ("/", "**", "^"):
                # `x/1/2` is (x/1)/2 and `x**2/3` is (x**2)/3
                text = text.split("/")[0]
                tokens.append(Token("num", text, span(line, col, len(text)), Fraction(text)))
                col += len(text)
                i += len(text)
                continue
            if m.group(1):
                num, den = text.split("/")
                value = Fraction(int(num), int(den)) if int(den) else None
                if value is None:
                    raise UnrecognizedCharacter("zero denominator in rational literal", span(line, col, len(text)))
            else:
                value = Fraction(text)
            tokens.append(Token("num", text, span(line, col, len(text)), value))
            col += len(text)
            i += len(text)
            continue
        if ch.isalpha():
            m = _IDENT.match(source, i)
            text = m.group(0)
            kind = "kw" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, span(line, col, len(text))))
            col += len(text)
            i += len(text)
            continue
        for op in OPERATORS:
            if source.startswith(op, i):
                tokens.append(Token("op", op, span(line, col, len(op))))
                col += len(op)
                i += len(op)
                break
        else:
            raise UnrecognizedCharacter(f"unrecognized character {ch!r}", span(line, col, 1))
    return tokens
