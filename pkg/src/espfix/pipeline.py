"""Real-time repair: pick a pattern, walk its ranked posts, transfer their fixes."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from espfix.align import similarity
from espfix.apg import Apg, ApgNode, build_method_apg, prune_apg
from espfix.corpus import Corpus, CorpusAnswer, CorpusPost, Snippet, snippet_apg
from espfix.curation import IndexEntry, PostIndex
from espfix.edits import (
    MIN_NODE_AGREEMENT,
    ApplyError,
    EditScript,
    adapt_edit_script,
    apply_script,
    derive_edit_script,
    is_valid_apg,
    triangulate,
)
from espfix.esp import Esp, PatternLibrary
from espfix.lang.lexer import Origin, SourceText
from espfix.lang.parser import parse
from espfix.render import RenderError, render_patch


class FixError(ValueError):
    """The buggy source or failure location cannot be worked on."""


@dataclass(frozen=True)
class ExceptionInfo:
    re_type: str
    failing_line: int


@dataclass(frozen=True)
class FixConfig:
    k: int = 3
    z: int = 15
    tau: float = 0.5
    workers: int = 1
    pair_cap: int = 6

    def __post_init__(self):
        if self.k < 1 or self.z < 1:
            raise ValueError("k and z must be at least 1")
        if not 0 < self.tau <= 1:
            raise ValueError("tau must be in (0, 1]")
        if self.workers < 1 or self.pair_cap < 1:
            raise ValueError("workers and pair_cap must be at least 1")


@dataclass
class Candidate:
    diff: str
    patched: SourceText
    post_id: int
    esp_name: str
    answer_id: int
    script: EditScript


@dataclass
class RepairOutcome:
    results: list[Candidate] = field(default_factory=list)
    fallback_post: int | None = None
    diagnostics: list[str] = field(default_factory=list)
    elapsed: float = 0.0
    posts_analyzed: int = 0
    pattern: str | None = None
    pattern_score: Fraction | None = None


# -- buggy code ---------------------------------------------------------------


def extract_buggy_window(source: SourceText, info: ExceptionInfo) -> tuple[Apg, ApgNode]:
    """APG of the smallest method around the failing line and its node there."""
    res = parse(source)
    if not res.ok:
        raise FixError(f"buggy source does not parse: {res.errors[0]}")
    lines = source.text.split("\n")
    if not 1 <= info.failing_line <= len(lines):
        raise FixError(f"line {info.failing_line} is outside the file (1-{len(lines)})")
    if not lines[info.failing_line - 1].strip():
        raise FixError(f"line {info.failing_line} is blank")
    methods = []
    for node in res.tree.root.walk():
        if node.kind == "method":
            first, last = res.tree.lines(node)
            if first <= info.failing_line <= last:
                methods.append((last - first, first, node))
    if not methods:
        raise FixError(f"line {info.failing_line} is not inside a method")
    method = min(methods, key=lambda m: (m[0], -m[1]))[2]
    apg = build_method_apg(res.tree, method)
    at_line = [n for n in apg.nodes() if n.line == info.failing_line]
    if not at_line:
        raise FixError(f"line {info.failing_line} holds no statement")
    return apg, at_line[0]


def find_best_pattern(
    library: PatternLibrary, buggy: Apg, info: ExceptionInfo, tau: float = 0.5
) -> tuple[Esp | None, Fraction, list[str]]:
    """Best-scoring pattern of the exception type whose match covers the failing line."""
    notes = []
    ranked = []
    for esp in library.by_type(info.re_type):
        score = similarity(esp.body, buggy)
        fwd = score.alignment.forward() if score.alignment else {}
        covered = {
            fwd[id(p)].line for p, frac in score.per_node if frac >= MIN_NODE_AGREEMENT and id(p) in fwd
        }
        if info.failing_line not in covered:
            notes.append(f"pattern {esp.name}: score {float(score.value):.3f}, does not cover line {info.failing_line}")
            continue
        notes.append(f"pattern {esp.name}: score {float(score.value):.3f}")
        ranked.append((-score.value, -len(esp), esp.name, esp))
    if not ranked:
        return None, Fraction(0), notes
    ranked.sort(key=lambda r: r[:3])
    best = ranked[0]
    if -best[0] < tau:
        notes.append(f"best pattern {best[2]} scores below tau {tau}")
        return None, -best[0], notes
    return best[3], -best[0], notes


# -- posts --------------------------------------------------------------------


def qa_pairs(post: CorpusPost, best_answer_id: int | None, cap: int = 6) -> list[tuple[Snippet, CorpusAnswer, Snippet]]:
    """Question/answer snippet pairs: best answer first, then by votes."""
    answers = sorted(post.answers, key=lambda a: (a.id != best_answer_id, -a.votes, a.id))
    out = []
    for ans in answers:
        for a_snip in ans.parsable_snippets():
            for q_snip in post.parsable_questions():
                out.append((q_snip, ans, a_snip))
                if len(out) == cap:
                    return out
    return out


@dataclass
class _Context:
    source: SourceText
    buggy: Apg
    esp: Esp
    file_name: str


def transfer_fix(ctx: _Context, q: Apg, a: Apg) -> tuple[tuple[SourceText, str, EditScript] | None, str]:
    """Carry one answer's fix over to the buggy code; returns (patch, note)."""
    tri = triangulate(q, a, ctx.esp.body)
    if not tri.relevant:
        return None, "question does not instantiate the pattern"
    q_pruned, a_pruned = prune_apg(q, tri.ques_lines), prune_apg(a, tri.ans_lines)
    concrete = derive_edit_script(q_pruned, a_pruned)
    if not concrete.ops:
        return None, "answer makes no change to the relevant lines"
    general = adapt_edit_script(concrete, q_pruned, ctx.esp.body)
    specific = adapt_edit_script(general, ctx.esp.body, ctx.buggy)
    dropped = len(concrete.ops) - len(specific.ops)
    if not specific.ops:
        return None, f"all {len(concrete.ops)} edits dropped during adaptation"
    try:
        patched_apg = apply_script(ctx.buggy, specific)
    except ApplyError as exc:
        return None, f"script does not apply: {exc}"
    if not is_valid_apg(patched_apg):
        return None, "patched APG is not well formed"
    try:
        patched, diff = render_patch(ctx.source, ctx.buggy, patched_apg, ctx.file_name)
    except RenderError as exc:
        return None, f"rejected: {exc}"
    if not diff:
        return None, "patch leaves the code unchanged"
    note = f"patch with {len(specific.ops)} edits" + (f", {dropped} dropped" if dropped else "")
    return (patched, diff, specific), note


def analyze_post(ctx: _Context, post: CorpusPost, entry: IndexEntry, cfg: FixConfig) -> list[tuple[Candidate | None, str]]:
    """Every candidate patch of one post, in pair order, with a note per pair."""
    out = []
    pairs = qa_pairs(post, entry.best_answer_id, cfg.pair_cap)
    if not pairs:
        return [(None, f"post {post.id}: no parsable question/answer pair")]
    for i, (q_snip, ans, a_snip) in enumerate(pairs, 1):
        q, a = snippet_apg(q_snip), snippet_apg(a_snip)
        label = f"post {post.id} pair {i} (answer {ans.id})"
        if q is None or a is None:
            out.append((None, f"{label}: snippet has no APG"))
            continue
        got, note = transfer_fix(ctx, q, a)
        cand = None
        if got is not None:
            patched, diff, script = got
            cand = Candidate(diff, patched, post.id, ctx.esp.name, ans.id, script)
        out.append((cand, f"{label}: {note}"))
    return out


def fix(
    source: SourceText | str,
    info: ExceptionInfo,
    library: PatternLibrary,
    index: PostIndex,
    corpus: Corpus,
    cfg: FixConfig = FixConfig(),
    file_name: str = "Main.java",
) -> RepairOutcome:
    """Up to ``cfg.k`` distinct patches from at most ``cfg.z`` ranked posts."""
    start = time.perf_counter()
    if isinstance(source, str):
        source = SourceText(source, Origin.DEVELOPER)
    buggy, _ = extract_buggy_window(source, info)
    out = RepairOutcome()
    esp, score, notes = find_best_pattern(library, buggy, info, cfg.tau)
    out.diagnostics.extend(notes)
    if esp is None:
        out.diagnostics.append(f"no pattern of {info.re_type} matches line {info.failing_line}")
        out.elapsed = time.perf_counter() - start
        return out
    out.pattern, out.pattern_score = esp.name, score
    ranked = index.get(esp.name, [])
    if not ranked:
        out.diagnostics.append(f"pattern {esp.name} has no indexed posts")
    ctx = _Context(source, buggy, esp, file_name)
    prefix = ranked[: cfg.z]

    def work(entry: IndexEntry) -> list[tuple[Candidate | None, str]]:
        try:
            post = corpus.get(entry.post_id)
        except KeyError:
            return [(None, f"post {entry.post_id}: not in the corpus")]
        return analyze_post(ctx, post, entry, cfg)

    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        futures = [pool.submit(work, e) for e in prefix] if pool else None
        seen: dict[str, int] = {}
        for i, entry in enumerate(prefix):
            analyses = futures[i].result() if futures else work(entry)
            out.posts_analyzed += 1
            for cand, note in analyses:
                if cand is not None and len(out.results) < cfg.k:
                    if cand.diff in seen:
                        note += f" (duplicate of post {seen[cand.diff]}, skipped)"
                    else:
                        seen[cand.diff] = cand.post_id
                        out.results.append(cand)
                out.diagnostics.append(note)
            if len(out.results) >= cfg.k:
                break
    finally:
        if pool:
            pool.shutdown(wait=False, cancel_futures=True)
    if not out.results and ranked:
        out.fallback_post = ranked[0].post_id
        out.diagnostics.append(f"no patch produced; falling back to post {ranked[0].post_id}")
    out.elapsed = time.perf_counter() - start
    return out
