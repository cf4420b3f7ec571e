from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from espfix.lang.lexer import SourceText, Token


@dataclass(eq=False)
class Node:
    """A syntax tree node spanning tokens ``[start, end)``."""

    kind: str
    start: int
    end: int
    children: list["Node"] = field(default_factory=list)
    attrs: dict = field(default_factory=dict)

    def walk(self) -> Iterator["Node"]:
        yield self
        for child in self.children:
            yield from child.walk()

    def __repr__(self) -> str:
        return f"Node({self.kind}, {self.start}:{self.end}, {self.attrs})"


@dataclass(eq=False)
class SyntaxTree:
    root: Node
    tokens: list[Token]
    source: SourceText

    def text(self, node: Node) -> str:
        """Exact source slice covered by ``node``."""
        a, b = self.char_span(node)
        return self.source.text[a:b]

    def char_span(self, node: Node) -> tuple[int, int]:
        if node.end <= node.start:
            pos = self.tokens[node.start].start if node.start < len(self.tokens) else len(self.source.text)
            return pos, pos
        return self.tokens[node.start].start, self.tokens[node.end - 1].end

    def lines(self, node: Node) -> tuple[int, int]:
        if node.end <= node.start:
            line = self.tokens[min(node.start, len(self.tokens) - 1)].line
            return line, line
        return self.tokens[node.start].line, self.tokens[node.end - 1].line

    def render(self, node: Node | None = None) -> list[str]:
        """Token texts covered by ``node`` (the whole tree by default)."""
        node = node or self.root
        return [t.text for t in self.tokens[node.start:node.end] if t.kind != "eof"]


class ErrorCategory(str, Enum):
    INVALID = "invalid-token"
    MISSING = "missing-token"
    EXTRA = "extra-token"


@dataclass(frozen=True)
class ParseError:
    category: ErrorCategory
    token: str
    line: int
    col: int
    expected: str | None = None  # "symbol:;" or "rule:catch-or-finally"
    context: str = "statement"  # "expression" or "statement"
    offset: int = 0  # character offset the fix applies at
    end: int = 0  # end offset of the offending element (deletions)
    hint: str | None = None  # declared type when the error sits in an initializer

    @property
    def position(self) -> tuple[int, int]:
        return (self.line, self.col)

    def __str__(self) -> str:
        exp = f" (expected {self.expected})" if self.expected else ""
        return f"{self.line}:{self.col}: {self.category.value} {self.token!r}{exp}"
