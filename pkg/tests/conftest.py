import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from espfix.corpus import ingest_posts, read_ndjson  # noqa: E402
from espfix.curation import cluster_posts, index_library  # noqa: E402
from espfix.esp import PatternLibrary, parse_pattern  # noqa: E402

DATA = Path(__file__).resolve().parents[1] / "src" / "espfix" / "data"

CAST_QUESTION = "ArrayList<String> image_urls;\nString[] listofurls;\nlistofurls = (String[]) image_urls.toArray();"
CAST_ANSWER = "listofurls = image_urls.toArray(new String[image_urls.size()]);"

PATTERNS = {
    "cce_toarray_cast": "ClassCastException",
    "cme_foreach_remove": "ConcurrentModificationException",
}


def pattern_text(name: str) -> str:
    return (DATA / "patterns" / f"{name}.java").read_text(encoding="utf-8")


def buggy_text(name: str) -> str:
    return (DATA / "buggy" / name).read_text(encoding="utf-8")


def mini_corpus():
    return ingest_posts(read_ndjson(DATA / "mini_posts.ndjson"))


def mini_library(corpus):
    lib = PatternLibrary()
    for name, re_type in PATTERNS.items():
        esp = parse_pattern(pattern_text(name), name, re_type)
        lib.add(esp)
        cluster_posts(corpus, esp, re_type, lib)
    return lib


def flat_index(corpus, lib):
    return {name: entries for per_type in index_library(corpus, lib).values() for name, entries in per_type.items()}


@pytest.fixture(scope="session")
def corpus():
    return mini_corpus()[0]


@pytest.fixture(scope="session")
def library(corpus):
    return mini_library(corpus)


@pytest.fixture(scope="session")
def index(corpus, library):
    return flat_index(corpus, library)


@pytest.fixture
def cast_pattern():
    return parse_pattern(pattern_text("cce_toarray_cast"), "cce_toarray_cast", "ClassCastException")


# acceptance results collected by test_acceptance and echoed in the summary
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
