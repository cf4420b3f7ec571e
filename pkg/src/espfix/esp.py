"""Exception scenario patterns: parsing, matching and on-disk libraries."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from espfix.align import TOKEN_RE, Binding, SimilarityScore, is_abstract, is_wildcard, similarity
from espfix.apg import Apg, build_method_apg
from espfix.lang.lexer import Origin, SourceText, tokenize
from espfix.lang.parser import parse

ABSTRACT_NAME_RE = re.compile(r"_ABSTRACT_[1-9]+")
MANIFEST = "manifest.tsv"
STATE = "mining_state.json"


class PatternError(ValueError):
    """A pattern source that does not satisfy the pattern grammar."""


class LibraryError(ValueError):
    """A library directory that cannot be loaded."""


@dataclass(eq=False)
class Esp:
    name: str
    re_type: str
    source_post_id: int | None
    source: SourceText
    body: Apg
    abstract_defs: dict[str, frozenset[str]]
    wildcard_ids: frozenset[str]
    pattern_vars: frozenset[str]
    file_name: str = ""

    def __len__(self) -> int:
        return len(self.body)

    def signature(self) -> tuple:
        return (self.name, self.re_type, self.source_post_id, self.source.text)


def _value_set(raw: str) -> frozenset[str]:
    items = [v.strip() for v in raw.strip().strip("{}").split(",")]
    items = [v for v in items if v]
    if any("..." in v for v in items):
        raise PatternError("abstract value sets must be enumerated explicitly, '...' is not allowed")
    return frozenset(items)


def parse_pattern(
    src: SourceText | str,
    name: str = "",
    re_type: str = "",
    source_post_id: int | None = None,
) -> Esp:
    """Parse a pattern file: optional @Abstract annotations and one method."""
    if isinstance(src, str):
        src = SourceText(src, Origin.PATTERN)
    res = parse(src, annotations=True)
    if not res.ok:
        raise PatternError(f"pattern does not parse: {res.errors[0]}")
    methods = [n for n in res.tree.root.walk() if n.kind == "method"]
    if len(methods) != 1:
        raise PatternError(f"expected exactly one method, found {len(methods)}")
    method = methods[0]

    defs: dict[str, frozenset[str]] = {}
    for ann in method.attrs.get("annotations", []):
        if ann.attrs["name"] != "Abstract":
            raise PatternError(f"unsupported annotation @{ann.attrs['name']}")
        args = ann.attrs.get("args", {})
        key = args.get("name", "")
        if not ABSTRACT_NAME_RE.fullmatch(key):
            raise PatternError(f"bad abstract name {key!r}")
        if key in defs:
            raise PatternError(f"duplicate annotation for {key}")
        values = _value_set(args.get("val", ""))
        if not values:
            raise PatternError(f"{key} has an empty value set")
        defs[key] = values

    block = method.children[0] if method.children else None
    if block is None or not block.children:
        raise PatternError("pattern body is empty")

    toks = tokenize(SourceText(res.tree.text(block)))
    found = {m for t in toks if t.kind == "ident" for m in TOKEN_RE.findall(t.text)}
    for tok in sorted(found):
        if is_abstract(tok) and tok not in defs:
            raise PatternError(f"{tok} is used but not defined by an @Abstract annotation")

    body = build_method_apg(res.tree, method)
    body.abstracts = dict(defs)
    return Esp(
        name=name or method.attrs["name"],
        re_type=re_type,
        source_post_id=source_post_id,
        source=src,
        body=body,
        abstract_defs=defs,
        wildcard_ids=frozenset(t for t in found if is_wildcard(t)),
        pattern_vars=frozenset(t for t in found if t.startswith("$v")),
    )


def match_pattern(p: Esp, snippet: Apg) -> tuple[SimilarityScore, Binding]:
    score = similarity(p.body, snippet)
    return score, score.binding


@dataclass(eq=False)
class PatternLibrary:
    entries: list[Esp] = field(default_factory=list)
    visited: dict[str, set[int]] = field(default_factory=dict)
    clusters: dict[str, list[int]] = field(default_factory=dict)
    streaks: dict[str, int] = field(default_factory=dict)

    def add(self, esp: Esp) -> None:
        if any(e.name == esp.name for e in self.entries):
            raise ValueError(f"pattern name {esp.name!r} already in library")
        self.entries.append(esp)

    def get(self, name: str) -> Esp:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def by_type(self, re_type: str) -> list[Esp]:
        return [e for e in self.entries if e.re_type == re_type]

    def visited_for(self, re_type: str) -> set[int]:
        return self.visited.setdefault(re_type, set())

    def signature(self) -> tuple:
        return (
            tuple(e.signature() for e in self.entries),
            {k: frozenset(v) for k, v in self.visited.items()},
            {k: tuple(v) for k, v in self.clusters.items()},
            dict(self.streaks),
        )

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PatternLibrary) and self.signature() == other.signature()


def save_library(lib: PatternLibrary, path: str | Path) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    lines = []
    for e in lib.entries:
        fname = e.file_name or f"{e.name}.java"
        e.file_name = fname
        (root / fname).write_text(e.source.text, encoding="utf-8")
        post = "" if e.source_post_id is None else str(e.source_post_id)
        lines.append(f"{e.name}\t{e.re_type}\t{post}\t{fname}\n")
    (root / MANIFEST).write_text("".join(lines), encoding="utf-8")
    state = {
        "visited": {k: sorted(v) for k, v in sorted(lib.visited.items())},
        "clusters": {k: list(v) for k, v in sorted(lib.clusters.items())},
        "streaks": dict(sorted(lib.streaks.items())),
    }
    (root / STATE).write_text(json.dumps(state, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def load_library(path: str | Path) -> PatternLibrary:
    root = Path(path)
    if not root.is_dir():
        raise LibraryError(f"{root}: not a library directory")
    lib = PatternLibrary()
    manifest = root / MANIFEST
    if manifest.exists():
        for lineno, line in enumerate(manifest.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise LibraryError(f"{manifest}:{lineno}: expected 4 tab-separated fields")
            name, re_type, post, fname = fields
            if any(e.name == name for e in lib.entries):
                raise LibraryError(f"{manifest}:{lineno}: duplicate pattern name {name!r}")
            try:
                post_id = int(post) if post else None
            except ValueError:
                raise LibraryError(f"{manifest}:{lineno}: bad post id {post!r} for {name!r}") from None
            try:
                text = (root / fname).read_text(encoding="utf-8")
                esp = parse_pattern(SourceText(text, Origin.PATTERN), name, re_type, post_id)
            except (OSError, PatternError) as exc:
                raise LibraryError(f"{manifest}:{lineno}: pattern {name!r}: {exc}") from None
            esp.file_name = fname
            lib.entries.append(esp)
    state_file = root / STATE
    if state_file.exists():
        try:
            state = json.loads(state_file.read_text(encoding="utf-8") or "{}")
            lib.visited = {k: set(map(int, v)) for k, v in state.get("visited", {}).items()}
            lib.clusters = {k: [int(i) for i in v] for k, v in state.get("clusters", {}).items()}
            lib.streaks = {k: int(v) for k, v in state.get("streaks", {}).items()}
        except (ValueError, TypeError, AttributeError) as exc:
            raise LibraryError(f"{state_file}: malformed mining state: {exc}") from None
    return lib
