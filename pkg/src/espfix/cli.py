"""Command-line entry points: prepare, mine, index and fix."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from espfix.corpus import EXCEPTION_TYPES, CorpusError, ingest_posts, load_corpus, read_ndjson, save_corpus
from espfix.curation import format_score, index_library, load_index, run_mining_session, save_index
from espfix.esp import LibraryError, PatternLibrary, load_library, save_library
from espfix.lang.lexer import Origin, SourceText
from espfix.pipeline import ExceptionInfo, FixConfig, FixError, fix

EXIT_OK, EXIT_ERROR, EXIT_EMPTY = 0, 1, 2

ENV_CORPUS = "ESPFIX_CORPUS"
ENV_LIBRARY = "ESPFIX_LIBRARY"
ENV_INDEX = "ESPFIX_INDEX"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # bad flags are input errors (exit 1), not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _tau(text: str) -> float:
    value = float(text)
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError("must be in (0, 1]")
    return value


def _path_flag(p: argparse.ArgumentParser, name: str, env: str, what: str) -> None:
    p.add_argument(f"--{name}", default=os.environ.get(env), help=f"{what} (default: ${env})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="espfix", description="Repair runtime exceptions using patterns mined from Q&A posts.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("prepare", help="select and repair posts into a corpus store")
    p.add_argument("--in", dest="input", required=True, help="newline-delimited JSON posts")
    p.add_argument("--out", default=os.environ.get(ENV_CORPUS), help=f"corpus directory (default: ${ENV_CORPUS})")
    p.add_argument("--re-types", help="file listing recognized exception names, one per line")
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--format", choices=("text", "structured"), default="text")

    p = sub.add_parser("mine", help="interactive pattern authoring session")
    p.add_argument("--re-type", required=True)
    _path_flag(p, "corpus", ENV_CORPUS, "corpus directory")
    _path_flag(p, "library", ENV_LIBRARY, "pattern library directory")
    p.add_argument("--u", type=_positive, default=3, help="consecutive unviable posts that end the session")

    p = sub.add_parser("index", help="rank clustered posts per pattern")
    _path_flag(p, "corpus", ENV_CORPUS, "corpus directory")
    _path_flag(p, "library", ENV_LIBRARY, "pattern library directory")
    _path_flag(p, "index", ENV_INDEX, "index output directory")

    p = sub.add_parser("fix", help="suggest patches for a runtime exception")
    p.add_argument("--source", required=True, help="buggy Java file")
    p.add_argument("--line", type=_positive, required=True, help="failing line (1-based)")
    p.add_argument("--re-type", required=True, help="exception simple name")
    _path_flag(p, "corpus", ENV_CORPUS, "corpus directory")
    _path_flag(p, "library", ENV_LIBRARY, "pattern library directory")
    _path_flag(p, "index", ENV_INDEX, "index directory")
    p.add_argument("--k", type=_positive, default=3, help="maximum patches")
    p.add_argument("--z", type=_positive, default=15, help="maximum posts to analyze")
    p.add_argument("--tau", type=_tau, default=0.5, help="minimum pattern score")
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--verbose", action="store_true", help="print per-post diagnostics")
    return parser


def _need(args, *names: str) -> None:
    for name in names:
        if not getattr(args, name):
            raise UsageError(f"--{name} is required (or set the environment variable)")


def cmd_prepare(args) -> int:
    _need(args, "out")
    types = EXCEPTION_TYPES
    if args.re_types:
        types = tuple(t.strip() for t in Path(args.re_types).read_text(encoding="utf-8").splitlines() if t.strip())
    corpus, stats = ingest_posts(read_ndjson(args.input), types, args.workers)
    save_corpus(corpus, args.out, stats)
    if args.format == "structured":
        print(json.dumps({"type": "stats", **vars(stats)}))
        return EXIT_OK
    print(f"posts: {stats.total_posts} read, {stats.accepted_posts} accepted, {stats.malformed} malformed")
    print(
        f"snippets: {stats.total_snippets}, readily parsable {stats.readily_parsable} "
        f"({stats.percent(stats.readily_parsable):.1f}%), after repair {stats.repaired_parsable} "
        f"({stats.percent(stats.repaired_parsable):.1f}%)"
    )
    for re_type in sorted(corpus.by_type):
        print(f"  {re_type}: {len(corpus.by_type[re_type])} posts")
    return EXIT_OK


def _open_library(path: str) -> PatternLibrary:
    return load_library(path) if Path(path).is_dir() else PatternLibrary()


def cmd_mine(args) -> int:
    _need(args, "corpus", "library")
    corpus = load_corpus(args.corpus)
    library = _open_library(args.library)

    def provider(post, block):
        print(block)
        print("pattern file path or 'unviable'> ", end="", flush=True)
        line = sys.stdin.readline()
        if not line:
            print()
            return None
        return line.strip()

    state = run_mining_session(corpus, library, args.re_type, provider, args.u, notify=print)
    save_library(library, args.library)
    print(f"session ended ({state.ended_by}) after {len(state.suggested)} suggestions")
    for name, ids in sorted(state.clusters.items()):
        print(f"cluster {name}: {' '.join(map(str, ids)) or '-'}")
    return EXIT_OK


def cmd_index(args) -> int:
    _need(args, "corpus", "library", "index")
    corpus = load_corpus(args.corpus)
    library = _open_library(args.library)
    index = index_library(corpus, library)
    save_index(index, args.index)
    for re_type in sorted(index):
        for name in sorted(index[re_type]):
            entries = index[re_type][name]
            top = f", top post {entries[0].post_id} ({format_score(entries[0].score)})" if entries else ""
            print(f"{re_type} {name}: {len(entries)} posts{top}")
    return EXIT_OK


def cmd_fix(args) -> int:
    _need(args, "corpus", "library", "index")
    text = Path(args.source).read_text(encoding="utf-8")
    cfg = FixConfig(k=args.k, z=args.z, tau=args.tau, workers=args.workers)
    out = fix(
        SourceText(text, Origin.DEVELOPER),
        ExceptionInfo(args.re_type, args.line),
        load_library(args.library),
        load_index(args.index),
        load_corpus(args.corpus),
        cfg,
        Path(args.source).name,
    )
    if args.format == "structured":
        for rank, c in enumerate(out.results, 1):
            rec = {"type": "patch", "rank": rank, "post_id": c.post_id, "pattern": c.esp_name, "answer_id": c.answer_id, "diff": c.diff}
            print(json.dumps(rec))
        if out.fallback_post is not None:
            print(json.dumps({"type": "fallback", "post_id": out.fallback_post}))
        score = None if out.pattern_score is None else float(out.pattern_score)
        summary = {
            "type": "summary",
            "pattern": out.pattern,
            "pattern_score": score,
            "patches": len(out.results),
            "posts_analyzed": out.posts_analyzed,
            "elapsed": round(out.elapsed, 6),
            "diagnostics": out.diagnostics,
        }
        print(json.dumps(summary))
    else:
        for rank, c in enumerate(out.results, 1):
            print(f"#{rank} post {c.post_id} answer {c.answer_id} pattern {c.esp_name}")
            print(c.diff, end="")
        if out.fallback_post is not None:
            print(f"no patch; see post {out.fallback_post}")
        if not out.results and out.fallback_post is None:
            print("no patch and no related post found")
        if args.verbose:
            for note in out.diagnostics:
                print(f"  {note}", file=sys.stderr)
    return EXIT_OK if out.results or out.fallback_post is not None else EXIT_EMPTY


COMMANDS = {"prepare": cmd_prepare, "mine": cmd_mine, "index": cmd_index, "fix": cmd_fix}


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_ERROR
    except (OSError, CorpusError, LibraryError, FixError, ValueError) as exc:
        print(f"espfix: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
