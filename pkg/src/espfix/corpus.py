"""Q&A post ingestion: selection, snippet extraction and repair, persistence."""

from __future__ import annotations

import html
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable

from espfix.apg import Apg, build_apg
from espfix.lang.fixer import RepairStatus, RepairStep, RepairTrace, repair_snippet
from espfix.lang.lexer import Origin, SourceText
from espfix.lang.parser import parse
from espfix.lang.syntax import ErrorCategory, ParseError

log = logging.getLogger(__name__)

EXCEPTION_TYPES = (
    "ClassCastException",
    "ConcurrentModificationException",
    "IllegalArgumentException",
    "IllegalStateException",
    "IndexOutOfBoundsException",
    "NullPointerException",
    "ArithmeticException",
    "NoSuchElementException",
    "RejectedExecutionException",
    "SecurityException",
    "UnsupportedOperationException",
    "EmptyStackException",
    "NegativeArraySizeException",
    "ArrayStoreException",
    "BufferOverflowException",
    "BufferUnderflowException",
    "CMMException",
    "IllegalMonitorStateException",
    "MissingResourceException",
)
LANGUAGE_TAGS = frozenset({"java", "android"})

STORE_FORMAT = "espfix-corpus"
STORE_VERSION = 1
POSTS_FILE = "posts.ndjson"
STATS_FILE = "stats.tsv"

_FENCE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_PRE = re.compile(r"<pre[^>]*>\s*<code[^>]*>(.*?)</code>\s*</pre>", re.DOTALL | re.IGNORECASE)


# -- records ------------------------------------------------------------------


@dataclass
class RawAnswer:
    id: int
    votes: int
    body: str


@dataclass
class RawPost:
    id: int
    title: str
    tags: list[str]
    votes: int
    question_body: str
    answers: list[RawAnswer]

    @classmethod
    def from_dict(cls, d: dict) -> "RawPost":
        """Validate one input record; raises ValueError on a malformed one."""
        try:
            answers = [RawAnswer(int(a["id"]), int(a.get("votes", 0)), str(a.get("body", ""))) for a in d.get("answers", [])]
            tags = d.get("tags", [])
            if not isinstance(tags, list):
                raise ValueError("tags must be a list")
            return cls(int(d["id"]), str(d["title"]), [str(t) for t in tags], int(d.get("votes", 0)), str(d.get("question_body", "")), answers)
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValueError(f"malformed post record: {exc!r}") from None


@dataclass
class Snippet:
    original: str
    source: SourceText  # text after repair
    parsable: bool
    trace: RepairTrace

    @property
    def readily_parsable(self) -> bool:
        return self.trace.initial_errors == 0


@dataclass
class CorpusAnswer:
    id: int
    votes: int
    snippets: list[Snippet]

    def parsable_snippets(self) -> list[Snippet]:
        return [s for s in self.snippets if s.parsable]


@dataclass
class CorpusPost:
    id: int
    title: str
    re_type: str
    tags: list[str]
    votes: int
    question_snippets: list[Snippet]
    answers: list[CorpusAnswer]

    def parsable_questions(self) -> list[Snippet]:
        return [s for s in self.question_snippets if s.parsable]

    def answer(self, answer_id: int) -> CorpusAnswer | None:
        return next((a for a in self.answers if a.id == answer_id), None)


@dataclass
class CorpusStats:
    total_posts: int = 0
    accepted_posts: int = 0
    total_snippets: int = 0
    readily_parsable: int = 0
    repaired_parsable: int = 0
    malformed: int = 0

    def percent(self, count: int) -> float:
        return 100.0 * count / self.total_snippets if self.total_snippets else 0.0


@dataclass
class Corpus:
    by_type: dict[str, list[CorpusPost]] = field(default_factory=dict)

    def add(self, post: CorpusPost) -> None:
        self.by_type.setdefault(post.re_type, []).append(post)

    def posts(self, re_type: str | None = None) -> list[CorpusPost]:
        if re_type is not None:
            return list(self.by_type.get(re_type, []))
        return [p for t in sorted(self.by_type) for p in self.by_type[t]]

    def get(self, post_id: int) -> CorpusPost:
        for p in self.posts():
            if p.id == post_id:
                return p
        raise KeyError(post_id)

    def __len__(self) -> int:
        return sum(len(v) for v in self.by_type.values())


@lru_cache(maxsize=4096)
def _apg_of_text(text: str) -> Apg | None:
    res = parse(text)
    return build_apg(res.tree) if res.ok else None


def snippet_apg(snippet: Snippet) -> Apg | None:
    """APG of a repaired snippet, shared between callers; do not mutate it."""
    return _apg_of_text(snippet.source.text) if snippet.parsable else None


# -- selection ----------------------------------------------------------------


def extract_snippets(body: str) -> list[str]:
    """Code blocks of a post body in document order, entities decoded."""
    found = [(m.start(), m.group(1)) for m in _FENCE.finditer(body)]
    found += [(m.start(), m.group(1)) for m in _PRE.finditer(body)]
    out = []
    for _, text in sorted(found, key=lambda f: f[0]):
        text = html.unescape(text)
        out.append(text[:-1] if text.endswith("\n") else text)
    return out


def exception_type_in(title: str, types: Iterable[str] = EXCEPTION_TYPES) -> str | None:
    """The earliest recognized exception simple name in ``title``."""
    best = None
    for name in types:
        m = re.search(rf"\b{re.escape(name)}\b", title)
        if m and (best is None or m.start() < best[0]):
            best = (m.start(), name)
    return best[1] if best else None


def prepare_snippet(text: str, origin: Origin) -> Snippet:
    repaired, trace = repair_snippet(SourceText(text, origin))
    return Snippet(text, repaired, trace.final == RepairStatus.PARSABLE and parse(repaired).ok, trace)


def process_post(raw: RawPost, types: Iterable[str] = EXCEPTION_TYPES) -> tuple[CorpusPost | None, list[Snippet]]:
    """Repair every snippet of one post; the post is None unless it qualifies."""
    questions = [prepare_snippet(s, Origin.QUESTION) for s in extract_snippets(raw.question_body)]
    answers = [
        CorpusAnswer(a.id, a.votes, [prepare_snippet(s, Origin.ANSWER) for s in extract_snippets(a.body)])
        for a in raw.answers
    ]
    snippets = questions + [s for a in answers for s in a.snippets]
    re_type = exception_type_in(raw.title, types)
    tagged = bool(LANGUAGE_TAGS & {t.lower() for t in raw.tags})
    if re_type is None or not tagged or not answers or not any(s.parsable for s in questions):
        return None, snippets
    return CorpusPost(raw.id, raw.title, re_type, list(raw.tags), raw.votes, questions, answers), snippets


def qualifies(post: CorpusPost, types: Iterable[str] = EXCEPTION_TYPES) -> bool:
    """Re-check the selection criteria on an accepted post."""
    return (
        post.re_type in types
        and exception_type_in(post.title, [post.re_type]) == post.re_type
        and bool(LANGUAGE_TAGS & {t.lower() for t in post.tags})
        and bool(post.answers)
        and bool(post.parsable_questions())
    )


def ingest_posts(
    records: Iterable[dict | RawPost],
    types: Iterable[str] = EXCEPTION_TYPES,
    workers: int = 1,
) -> tuple[Corpus, CorpusStats]:
    """Select and repair posts; malformed records are skipped and counted."""
    types = tuple(types)
    stats = CorpusStats()
    raws: list[RawPost] = []
    seen: set[int] = set()
    for i, rec in enumerate(records):
        try:
            raw = rec if isinstance(rec, RawPost) else RawPost.from_dict(rec)
        except ValueError as exc:
            log.warning("record %d skipped: %s", i, exc)
            stats.malformed += 1
            continue
        if raw.id in seen:
            log.warning("record %d skipped: duplicate post id %d", i, raw.id)
            stats.malformed += 1
            continue
        seen.add(raw.id)
        raws.append(raw)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            processed = list(pool.map(lambda r: process_post(r, types), raws))
    else:
        processed = [process_post(r, types) for r in raws]

    corpus = Corpus()
    for post, snippets in processed:
        stats.total_posts += 1
        stats.total_snippets += len(snippets)
        stats.readily_parsable += sum(s.readily_parsable for s in snippets)
        stats.repaired_parsable += sum(s.parsable for s in snippets)
        if post is not None:
            stats.accepted_posts += 1
            corpus.add(post)
    for posts in corpus.by_type.values():
        posts.sort(key=lambda p: p.id)
    return corpus, stats


def read_ndjson(path: str | Path) -> Iterable[dict]:
    """Input records; a line that is not a JSON object yields an empty dict."""
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                rec = {}
            yield rec if isinstance(rec, dict) else {}


# -- persistence --------------------------------------------------------------


class CorpusError(ValueError):
    """A corpus store that cannot be read."""


class VersionMismatchError(CorpusError):
    pass


class TruncatedCorpusError(CorpusError):
    pass


class CorruptRecordError(CorpusError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"corrupted record {index}: {reason}")
        self.index = index


def _snippet_to_dict(s: Snippet) -> dict:
    return {
        "original": s.original,
        "text": s.source.text,
        "origin": s.source.origin.value,
        "parsable": s.parsable,
        "trace": {
            "initial_errors": s.trace.initial_errors,
            "final": s.trace.final.value,
            "steps": [{"error": asdict(st.error), "fix": st.fix, "errors_after": st.errors_after} for st in s.trace.steps],
        },
    }


def _snippet_from_dict(d: dict) -> Snippet:
    t = d["trace"]
    steps = []
    for st in t["steps"]:
        err = dict(st["error"])
        err["category"] = ErrorCategory(err["category"])
        steps.append(RepairStep(ParseError(**err), st["fix"], int(st["errors_after"])))
    trace = RepairTrace(steps, RepairStatus(t["final"]), int(t["initial_errors"]))
    return Snippet(d["original"], SourceText(d["text"], Origin(d["origin"])), bool(d["parsable"]), trace)


def post_to_dict(p: CorpusPost) -> dict:
    return {
        "id": p.id,
        "title": p.title,
        "re_type": p.re_type,
        "tags": p.tags,
        "votes": p.votes,
        "question_snippets": [_snippet_to_dict(s) for s in p.question_snippets],
        "answers": [{"id": a.id, "votes": a.votes, "snippets": [_snippet_to_dict(s) for s in a.snippets]} for a in p.answers],
    }


def post_from_dict(d: dict) -> CorpusPost:
    return CorpusPost(
        int(d["id"]),
        d["title"],
        d["re_type"],
        list(d["tags"]),
        int(d["votes"]),
        [_snippet_from_dict(s) for s in d["question_snippets"]],
        [CorpusAnswer(int(a["id"]), int(a["votes"]), [_snippet_from_dict(s) for s in a["snippets"]]) for a in d["answers"]],
    )


def save_corpus(corpus: Corpus, path: str | Path, stats: CorpusStats | None = None) -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    posts = corpus.posts()
    header = {"format": STORE_FORMAT, "version": STORE_VERSION, "count": len(posts)}
    with open(root / POSTS_FILE, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for p in posts:
            fh.write(json.dumps(post_to_dict(p), sort_keys=True) + "\n")
    if stats is not None:
        rows = [(k, v) for k, v in asdict(stats).items()]
        (root / STATS_FILE).write_text("".join(f"{k}\t{v}\n" for k, v in rows), encoding="utf-8")


def load_corpus(path: str | Path) -> Corpus:
    """Read a store written by ``save_corpus``; an empty file is an empty corpus."""
    root = Path(path)
    file = root / POSTS_FILE if root.is_dir() else root
    try:
        text = file.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"{file}: {exc.strerror}") from None
    if not text.strip():
        return Corpus()
    lines = text.split("\n")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError:
        raise CorpusError(f"{file}: missing store header") from None
    if not isinstance(header, dict) or header.get("format") != STORE_FORMAT:
        raise CorpusError(f"{file}: not a corpus store")
    if header.get("version") != STORE_VERSION:
        raise VersionMismatchError(f"{file}: store version {header.get('version')}, expected {STORE_VERSION}")
    count = int(header.get("count", 0))
    body = lines[1:]
    complete = text.endswith("\n")
    if body and body[-1] == "":
        body = body[:-1]
    corpus = Corpus()
    for i, line in enumerate(body):
        last = i == len(body) - 1
        try:
            corpus.add(post_from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            if last and not complete:
                raise TruncatedCorpusError(f"{file}: truncated after {i} of {count} records") from None
            raise CorruptRecordError(i, str(exc) or type(exc).__name__) from None
    if len(body) < count or not complete:
        raise TruncatedCorpusError(f"{file}: truncated after {len(body)} of {count} records")
    if len(body) > count:
        raise CorruptRecordError(count, "more records than the header declares")
    return corpus


def load_stats(path: str | Path) -> CorpusStats:
    values = {}
    for line in (Path(path) / STATS_FILE).read_text(encoding="utf-8").splitlines():
        key, _, val = line.partition("\t")
        values[key] = int(val)
    return CorpusStats(**values)
