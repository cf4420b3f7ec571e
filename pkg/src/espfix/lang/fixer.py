"""Error-driven repair of unparsable snippets.

Each round fixes the earliest parse error with one rewriting rule and
re-parses; the loop keeps going only while the error count shrinks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from espfix.lang.lexer import SourceText
from espfix.lang.parser import parse
from espfix.lang.syntax import ErrorCategory, ParseError

NUMERIC = frozenset("int long short byte double float char".split())

DEFAULT_CONCRETE = {
    "List": "ArrayList",
    "Set": "HashSet",
    "Map": "HashMap",
    "Collection": "ArrayList",
    "Queue": "LinkedList",
}

MISSING_RULE_TEXT = {
    "catch-or-finally": " catch (Exception e) { }",
    "block": " { }",
    "statement": " { }",
    "identifier": " x",
    "type": " Object",
}


def default_initializer(type_text: str | None) -> str:
    """A well-formed initializer expression for a declared type."""
    if not type_text:
        return "null"
    t = type_text.strip()
    if t.endswith("[]"):
        return f"new {t[:-2]}[0]"
    base = t.split("<", 1)[0]
    simple = base.rsplit(".", 1)[-1]
    if simple in NUMERIC:
        return "0"
    if simple == "boolean":
        return "false"
    if simple == "String":
        return '""'
    generic = "<>" if "<" in t else ""
    if simple in DEFAULT_CONCRETE:
        return f"new {DEFAULT_CONCRETE[simple]}<>()"
    if simple == "void" or simple == "?":
        return "null"
    return f"new {base}{generic}()"


class RepairStatus(str, Enum):
    PARSABLE = "parsable"
    ABANDONED = "abandoned"


@dataclass(frozen=True)
class RepairStep:
    error: ParseError
    fix: str
    errors_after: int


@dataclass
class RepairTrace:
    steps: list[RepairStep] = field(default_factory=list)
    final: RepairStatus = RepairStatus.PARSABLE
    initial_errors: int = 0

    @property
    def counts(self) -> list[int]:
        return [self.initial_errors] + [s.errors_after for s in self.steps]


def _delete(text: str, err: ParseError) -> str:
    start, end = err.offset, err.end
    rest = text[end:]
    if not rest.strip(" \t").startswith(("\n", "\r")) and rest.strip(" \t"):
        return text[:start] + rest
    # token ends its line: drop the whitespace that led up to it as well
    while start > 0 and text[start - 1] in " \t":
        start -= 1
    return text[:start] + rest


def apply_rule(text: str, err: ParseError) -> tuple[str, str]:
    """Rewrite ``text`` for one error; returns the new text and a description."""
    cat = err.category
    if cat == ErrorCategory.INVALID:
        if err.context == "expression":
            valid = default_initializer(err.hint)
            return text[: err.offset] + valid + text[err.end :], f"replace {err.token!r} with {valid!r}"
        return _delete(text, err), f"delete {err.token!r}"
    if cat == ErrorCategory.EXTRA:
        return _delete(text, err), f"delete {err.token!r}"
    expected = err.expected or ""
    kind, _, what = expected.partition(":")
    if kind == "symbol":
        insert = what
    elif what == "expression":
        insert = default_initializer(err.hint)
        if err.offset > 0 and text[err.offset - 1 : err.offset] not in (" ", "(", "[", "\n", "\t"):
            insert = " " + insert
    else:
        insert = MISSING_RULE_TEXT.get(what, ";")
    return text[: err.offset] + insert + text[err.offset :], f"insert {insert.strip()!r}"


def repair_snippet(src: SourceText | str) -> tuple[SourceText, RepairTrace]:
    """Make a snippet parsable by iteratively fixing its earliest parse error."""
    if isinstance(src, str):
        src = SourceText(src)
    errors = parse(src).errors
    trace = RepairTrace(initial_errors=len(errors))
    text = src.text
    while errors:
        err = errors[0]
        candidate, desc = apply_rule(text, err)
        new_errors = parse(SourceText(candidate, src.origin)).errors
        if len(new_errors) >= len(errors):
            trace.final = RepairStatus.ABANDONED
            break
        trace.steps.append(RepairStep(err, desc, len(new_errors)))
        text, errors = candidate, new_errors
    return SourceText(text, src.origin), trace
