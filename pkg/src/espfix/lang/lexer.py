"""Tokenizer for the Java subset.

Lexing never fails: characters that cannot start a token are grouped into
``invalid`` tokens and left for the parser to report.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class Origin(str, Enum):
    QUESTION = "question-snippet"
    ANSWER = "answer-snippet"
    PATTERN = "pattern"
    DEVELOPER = "developer-code"


@dataclass(frozen=True)
class SourceText:
    text: str
    origin: Origin = Origin.DEVELOPER

    def lines(self) -> list[str]:
        return self.text.split("\n")

    def line_count(self) -> int:
        return self.text.count("\n") + 1 if self.text else 0


KEYWORDS = frozenset(
    """
    abstract boolean break byte case catch char class continue default do double
    else extends final finally float for if implements import instanceof int
    interface long native new package private protected public return short
    static super synchronized this throw throws transient try void volatile while
    true false null
    """.split()
)

PRIMITIVES = frozenset("boolean byte char short int long float double void".split())

MODIFIERS = frozenset(
    "public private protected static final abstract native synchronized transient volatile".split()
)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, keyword, int, float, string, char, op, invalid, eof
    text: str
    line: int
    col: int
    start: int
    end: int

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


_OPERATORS = sorted(
    """
    >>>= <<= >>= ... -> :: ++ -- && || == != <= >= += -= *= /= %= &= |= ^= <<
    ( ) { } [ ] ; , . @ = > < ! ~ ? : + - * / & | ^ %
    """.split(),
    key=len,
    reverse=True,
)
# ">>" is deliberately absent: generic closers must stay separate tokens.
_OPERATORS = [op for op in _OPERATORS if op not in ("...", "->", "::", ">>>=", ">>=")]

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n\f]+)
  | (?P<lcomment>//[^\n]*)
  | (?P<bcomment>/\*.*?\*/)
  | (?P<ellipsis>\.\.\.+)
  | (?P<float>(?:\d[\d_]*\.\d*|\.\d+)(?:[eE][+-]?\d+)?[fFdD]?|\d[\d_]*(?:[eE][+-]?\d+)[fFdD]?|\d[\d_]*[fFdD])
  | (?P<int>0[xX][0-9a-fA-F_]+[lL]?|\d[\d_]*[lL]?)
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<char>'(?:[^'\\\n]|\\.)+')
  | (?P<op>"""
    + "|".join(re.escape(op) for op in _OPERATORS)
    + r""")
    """,
    re.VERBOSE | re.DOTALL,
)


def tokenize(src: SourceText | str) -> list[Token]:
    """Split source into tokens; the list always ends with an ``eof`` token."""
    text = src.text if isinstance(src, SourceText) else src
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    bad_start = -1

    def flush_bad(upto: int) -> None:
        nonlocal bad_start
        if bad_start >= 0:
            chunk = text[bad_start:upto]
            bl = text.count("\n", 0, bad_start) + 1
            bcol = bad_start - (text.rfind("\n", 0, bad_start) + 1) + 1
            tokens.append(Token("invalid", chunk, bl, bcol, bad_start, upto))
            bad_start = -1

    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            if text[pos] in " \t\r\n\f":
                flush_bad(pos)
            elif bad_start < 0:
                bad_start = pos
            if text[pos] == "\n":
                line += 1
                line_start = pos + 1
            pos += 1
            continue
        flush_bad(pos)
        kind = m.lastgroup
        value = m.group()
        if kind in ("ws", "lcomment", "bcomment"):
            pass
        else:
            col = pos - line_start + 1
            if kind == "ellipsis":
                kind = "invalid"
            elif kind == "ident" and value in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, value, line, col, pos, m.end()))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    flush_bad(n)
    tokens.append(Token("eof", "", line, n - line_start + 1, n, n))
    return tokens
