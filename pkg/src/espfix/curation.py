"""Pattern mining sessions and pattern-relative ranking of posts."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable

from espfix.align import align_apgs, similarity, snippet_distance
from espfix.apg import Apg
from espfix.corpus import Corpus, CorpusPost, snippet_apg
from espfix.esp import Esp, PatternError, PatternLibrary, parse_pattern
from espfix.lang.lexer import Origin, SourceText

log = logging.getLogger(__name__)

UNVIABLE = "unviable"


# -- suggestion ---------------------------------------------------------------


def representative_apg(post: CorpusPost) -> Apg | None:
    """APG of the post's first parsable question snippet."""
    for s in post.parsable_questions():
        apg = snippet_apg(s)
        if apg is not None:
            return apg
    return None


def mean_distance(post: CorpusPost, esps: list[Esp]) -> Fraction:
    """Average distance of the post from existing patterns; 1 for an empty pool."""
    apg = representative_apg(post)
    if not esps or apg is None:
        return Fraction(1)
    return sum((snippet_distance(apg, e.body) for e in esps), Fraction(0)) / len(esps)


def suggest_next_post(corpus: Corpus, library: PatternLibrary, re_type: str) -> CorpusPost | None:
    """Most-voted unvisited post, preferring ones unlike existing patterns."""
    visited = library.visited_for(re_type)
    candidates = [p for p in corpus.posts(re_type) if p.id not in visited]
    if not candidates:
        return None
    top = max(p.votes for p in candidates)
    tied = [p for p in candidates if p.votes == top]
    if len(tied) == 1:
        return tied[0]
    esps = library.by_type(re_type)
    return min(tied, key=lambda p: (-mean_distance(p, esps), p.id))


def question_score(esp: Esp, post: CorpusPost) -> Fraction:
    """Best pattern similarity over the post's parsable question snippets."""
    best = Fraction(0)
    for s in post.parsable_questions():
        apg = snippet_apg(s)
        if apg is not None:
            best = max(best, similarity(esp.body, apg).value)
    return best


def cluster_posts(corpus: Corpus, esp: Esp, re_type: str, library: PatternLibrary | None = None) -> list[int]:
    """Ids of posts with a question snippet matching ``esp`` perfectly.

    With a library, the ids are marked visited and merged into the
    pattern's stored cluster.
    """
    ids = [p.id for p in corpus.posts(re_type) if question_score(esp, p) == 1]
    if library is not None:
        library.visited_for(re_type).update(ids)
        merged = set(library.clusters.get(esp.name, [])) | set(ids)
        library.clusters[esp.name] = sorted(merged)
    return ids


def highlighted_lines(post: CorpusPost) -> list[set[int]]:
    """Per question snippet, lines whose nodes align to some answer node."""
    answers = [snippet_apg(s) for a in post.answers for s in a.parsable_snippets()]
    answers = [a for a in answers if a is not None]
    out = []
    for s in post.question_snippets:
        q = snippet_apg(s)
        lines: set[int] = set()
        if q is not None:
            for a in answers:
                lines |= {x.line for x, _ in align_apgs(q, a).pairs}
        out.append(lines)
    return out


def format_suggestion(post: CorpusPost) -> str:
    """Terminal block shown to the pattern author; '>' marks relevant lines."""
    out = [f"post {post.id} ({post.votes} votes): {post.title}"]
    for i, (snip, marks) in enumerate(zip(post.question_snippets, highlighted_lines(post)), 1):
        state = "parsable" if snip.parsable else "unparsable"
        out.append(f"-- question snippet {i} ({state})")
        for n, line in enumerate(snip.source.text.split("\n"), 1):
            out.append(f"{'>' if n in marks else ' '} {n:3d} | {line}")
    for ans in post.answers:
        for j, snip in enumerate(ans.snippets, 1):
            out.append(f"-- answer {ans.id} ({ans.votes} votes) snippet {j}")
            out.extend(f"      | {line}" for line in snip.source.text.split("\n"))
    return "\n".join(out)


# -- mining session -----------------------------------------------------------


@dataclass
class MiningState:
    re_type: str
    visited: set[int] = field(default_factory=set)
    unviable_streak: int = 0
    clusters: dict[str, list[int]] = field(default_factory=dict)
    suggested: list[int] = field(default_factory=list)
    added: list[str] = field(default_factory=list)
    ended_by: str = ""  # "exhausted", "unviable-streak" or "eof"


# Called with the suggested post and its display block; returns a pattern
# file path, the word "unviable", or None at end of input.
PatternProvider = Callable[[CorpusPost, str], "str | None"]


def _unique_name(library: PatternLibrary, stem: str) -> str:
    taken = {e.name for e in library.entries}
    if stem not in taken:
        return stem
    n = 2
    while f"{stem}_{n}" in taken:
        n += 1
    return f"{stem}_{n}"


def run_mining_session(
    corpus: Corpus,
    library: PatternLibrary,
    re_type: str,
    provider: PatternProvider,
    u: int = 3,
    notify: Callable[[str], None] = lambda msg: None,
) -> MiningState:
    """Suggest posts until ``u`` consecutive unviable verdicts or no posts remain."""
    if u < 1:
        raise ValueError("u must be at least 1")
    for esp in library.by_type(re_type):
        ids = cluster_posts(corpus, esp, re_type, library)
        if ids:
            notify(f"initial clustering: {esp.name} -> {ids}")
    state = MiningState(re_type)
    while True:
        if state.unviable_streak >= u:
            state.ended_by = "unviable-streak"
            break
        post = suggest_next_post(corpus, library, re_type)
        if post is None:
            state.ended_by = "exhausted"
            break
        state.suggested.append(post.id)
        block = format_suggestion(post)
        verdict = None
        while True:
            reply = provider(post, block)
            if reply is None:
                state.ended_by = "eof"
                break
            reply = reply.strip()
            if reply == UNVIABLE:
                verdict = UNVIABLE
                break
            path = Path(reply)
            try:
                text = path.read_text(encoding="utf-8")
                esp = parse_pattern(SourceText(text, Origin.PATTERN), _unique_name(library, path.stem), re_type, post.id)
            except OSError as exc:
                notify(f"cannot read pattern file {reply!r}: {exc.strerror}")
                continue
            except PatternError as exc:
                notify(f"invalid pattern {reply!r}: {exc}")
                continue
            verdict = esp
            break
        if state.ended_by == "eof":
            break
        library.visited_for(re_type).add(post.id)
        if verdict == UNVIABLE:
            state.unviable_streak += 1
        else:
            library.add(verdict)
            ids = cluster_posts(corpus, verdict, re_type, library)
            state.added.append(verdict.name)
            state.unviable_streak = 0
            notify(f"pattern {verdict.name} clusters posts {ids}")
    library.streaks[re_type] = state.unviable_streak
    state.visited = set(library.visited_for(re_type))
    state.clusters = {e.name: list(library.clusters.get(e.name, [])) for e in library.by_type(re_type)}
    return state


# -- indexing -----------------------------------------------------------------


@dataclass(frozen=True)
class IndexEntry:
    post_id: int
    best_answer_id: int | None
    score: Fraction


# pattern name -> ranked entries
PostIndex = dict[str, list[IndexEntry]]


def index_cluster(corpus: Corpus, esp: Esp, cluster_ids: list[int]) -> list[IndexEntry]:
    """Rank posts by how well their best answer snippet matches the pattern."""
    rows = []
    for pid in cluster_ids:
        try:
            post = corpus.get(pid)
        except KeyError:
            log.warning("post %d of cluster %s is not in the corpus", pid, esp.name)
            continue
        best_key, best_id = None, None  # key: (score, answer votes, -answer id)
        for ans in post.answers:
            for s in ans.parsable_snippets():
                apg = snippet_apg(s)
                if apg is None:
                    continue
                key = (similarity(esp.body, apg).value, ans.votes, -ans.id)
                if best_key is None or key > best_key:
                    best_key, best_id = key, ans.id
        score = best_key[0] if best_key else Fraction(0)
        rows.append((IndexEntry(pid, best_id, score), post.votes))
    rows.sort(key=lambda r: (-r[0].score, -r[1], r[0].post_id))
    return [entry for entry, _ in rows]


def index_library(corpus: Corpus, library: PatternLibrary) -> dict[str, dict[str, list[IndexEntry]]]:
    """Per exception type, per pattern, the ranked posts of its cluster."""
    out: dict[str, dict[str, list[IndexEntry]]] = {}
    for esp in library.entries:
        ids = library.clusters.get(esp.name)
        if ids is None:
            log.warning("pattern %s has no cluster data; clustering now", esp.name)
            ids = cluster_posts(corpus, esp, esp.re_type, library)
        out.setdefault(esp.re_type, {})[esp.name] = index_cluster(corpus, esp, ids)
    return out


def format_score(score: Fraction) -> str:
    return f"{float(score):.6f}"


def save_index(index: dict[str, dict[str, list[IndexEntry]]], path: str | Path) -> list[Path]:
    """One TSV per exception type; returns the files written."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    written = []
    for re_type in sorted(index):
        lines = []
        for name in sorted(index[re_type]):
            for e in index[re_type][name]:
                answer = "" if e.best_answer_id is None else str(e.best_answer_id)
                lines.append(f"{name}\t{e.post_id}\t{answer}\t{format_score(e.score)}\n")
        file = root / f"{re_type}.tsv"
        file.write_text("".join(lines), encoding="utf-8")
        written.append(file)
    return written


def load_index(path: str | Path) -> PostIndex:
    root = Path(path)
    if not root.is_dir():
        raise ValueError(f"{root}: not an index directory")
    out: PostIndex = {}
    for file in sorted(root.glob("*.tsv")):
        for lineno, line in enumerate(file.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ValueError(f"{file}:{lineno}: expected 4 tab-separated fields")
            name, post, answer, score = fields
            try:
                entry = IndexEntry(int(post), int(answer) if answer else None, Fraction(score))
            except ValueError:
                raise ValueError(f"{file}:{lineno}: malformed entry") from None
            out.setdefault(name, []).append(entry)
    return out
