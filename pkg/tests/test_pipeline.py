import pytest

from espfix.corpus import ingest_posts
from espfix.curation import cluster_posts, index_library
from espfix.esp import PatternLibrary, parse_pattern
from espfix.lang.lexer import SourceText
from espfix.pipeline import ExceptionInfo, FixConfig, FixError, extract_buggy_window, find_best_pattern, fix, qa_pairs

from conftest import CAST_QUESTION, buggy_text, pattern_text

CCE = "ClassCastException"
CAST_FIX_LINE = "URL[] array = urls.toArray(new URL[urls.size()]);"
BIG_PATTERN = """\
@Abstract(name="_ABSTRACT_1", val="ArrayList, List")
void p() {
  _ABSTRACT_1 $v1;
  $v1 = new _ABSTRACT_1<_WILDCARD_1>();
  _WILDCARD_1[] $v2 = (_WILDCARD_1[]) $v1.toArray();
}"""

GOOD_ANSWERS = [
    "listofurls = image_urls.toArray(new String[image_urls.size()]);",
    "listofurls = image_urls.toArray(new String[0]);",
    "listofurls = (String[]) image_urls.toArray(new String[image_urls.size()]);",
    "listofurls = image_urls.toArray(new String[image_urls.size() + 1]);",
    "listofurls = (String[]) image_urls.toArray(new String[0]);",
]
# an answer repeating the question line: derivation yields no edits
NO_OP_ANSWER = "listofurls = (String[]) image_urls.toArray();"


def _buggy():
    return SourceText(buggy_text("ExtensionService.java"))


def _info(line=40):
    return ExceptionInfo(CCE, line)


def _world(answers, votes=None):
    """Corpus, library and index where post i carries answers[i]."""
    votes = votes or [1000 - i for i in range(len(answers))]
    recs = [
        {
            "id": 100 + i,
            "title": f"ClassCastException case {i}",
            "tags": ["java"],
            "votes": votes[i],
            "question_body": f"```\n{CAST_QUESTION}\n```",
            "answers": [{"id": 5000 + i, "votes": 1, "body": f"```\n{a}\n```"}],
        }
        for i, a in enumerate(answers)
    ]
    corpus, _ = ingest_posts(recs)
    lib = PatternLibrary()
    esp = parse_pattern(pattern_text("cce_toarray_cast"), "cce_toarray_cast", CCE)
    lib.add(esp)
    cluster_posts(corpus, esp, CCE, lib)
    index = {name: entries for per in index_library(corpus, lib).values() for name, entries in per.items()}
    return corpus, lib, index


def test_window_of_toarray_cast_method():
    apg, node = extract_buggy_window(_buggy(), _info())
    assert node.line == 40 and node.kind == "varDecl"
    assert {37, 40, 41} <= apg.lines() and all(34 <= n <= 43 for n in apg.lines())


def test_window_single_statement_method():
    apg, node = extract_buggy_window(SourceText("class A {\n  void m() {\n    f();\n  }\n}"), _info(3))
    assert len(apg) == 1 and node.line == 3


@pytest.mark.parametrize(
    "src, line, message",
    [
        ("class A {\n  void m() {\n\n    f();\n  }\n}", 3, "blank"),
        ("class A {\n  int x;\n  void m() {\n    f();\n  }\n}", 2, "not inside a method"),
        ("class A {\n  void m() {\n    f();\n  }\n}", 9, "outside the file"),
        ("class A {\n  void m() {\n    f(\n  }\n}", 3, "does not parse"),
    ],
)
def test_window_errors(src, line, message):
    with pytest.raises(FixError, match=message):
        extract_buggy_window(SourceText(src), _info(line))


def test_best_pattern_toarray_cast(library):
    apg, _ = extract_buggy_window(_buggy(), _info())
    esp, score, _ = find_best_pattern(library, apg, _info())
    assert esp.name == "cce_toarray_cast" and score == 1


def test_best_pattern_none_for_other_type(library):
    apg, _ = extract_buggy_window(_buggy(), _info())
    esp, _, _ = find_best_pattern(library, apg, ExceptionInfo("ArithmeticException", 40))
    assert esp is None


def test_best_pattern_prefers_larger_on_tie():
    lib = PatternLibrary()
    small = parse_pattern(pattern_text("cce_toarray_cast"), "a_small", CCE)
    big = parse_pattern(BIG_PATTERN, "z_big", CCE)
    lib.add(small)
    lib.add(big)
    apg, _ = extract_buggy_window(_buggy(), _info())
    assert (len(small), len(big)) == (3, 5)
    esp, score, _ = find_best_pattern(lib, apg, _info())
    assert esp is big and score == 1
    twin = PatternLibrary()
    twin.add(parse_pattern(pattern_text("cce_toarray_cast"), "b", CCE))
    twin.add(parse_pattern(pattern_text("cce_toarray_cast"), "a", CCE))
    assert find_best_pattern(twin, apg, _info())[0].name == "a"


def test_best_pattern_must_cover_failing_line(library):
    apg, _ = extract_buggy_window(_buggy(), _info(41))
    esp, _, notes = find_best_pattern(library, apg, _info(41))
    assert esp is None and any("does not cover line 41" in n for n in notes)


def test_fix_toarray_cast(corpus, library, index):
    out = fix(_buggy(), _info(), library, index, corpus, FixConfig(), "ExtensionService.java")
    top = out.results[0]
    assert top.patched.text.split("\n")[39].strip() == CAST_FIX_LINE
    assert (top.post_id, top.answer_id, top.esp_name) == (15264182, 15264270, "cce_toarray_cast")
    assert out.fallback_post is None and len(out.results) <= 3


def test_fix_foreach_remove(corpus, library, index):
    src = buggy_text("OrderRepository.java")
    out = fix(src, ExceptionInfo("ConcurrentModificationException", 15), library, index, corpus)
    assert out.results[0].post_id == 11201193
    assert "+            orders.remove();" in out.results[0].diff


def test_no_pattern_gives_empty_outcome(corpus, library, index):
    out = fix(_buggy(), ExceptionInfo("NullPointerException", 40), library, index, corpus)
    assert out.results == [] and out.fallback_post is None and out.pattern is None
    assert any("no pattern" in d for d in out.diagnostics)


def test_fallback_when_no_post_yields_a_patch():
    corpus, lib, index = _world([NO_OP_ANSWER] * 4)
    out = fix(_buggy(), _info(), lib, index, corpus)
    assert out.results == [] and out.fallback_post == index["cce_toarray_cast"][0].post_id == 100
    assert out.posts_analyzed == 4


def test_pair_order_puts_best_answer_first(corpus):
    post = corpus.get(15264182)
    assert [a.id for _, a, _ in qa_pairs(post, 15264301)] == [15264301, 15264270]
    assert [a.id for _, a, _ in qa_pairs(post, None)] == [15264270, 15264301]


def test_z_bounds_analyzed_posts():
    # twenty posts without a usable fix ahead of one with a good fix
    answers = [NO_OP_ANSWER] * 20 + [GOOD_ANSWERS[0]]
    corpus, lib, index = _world(answers)
    for z in (1, 5, 15, 20):
        out = fix(_buggy(), _info(), lib, index, corpus, FixConfig(z=z))
        assert out.posts_analyzed == z and out.results == [] and out.fallback_post == 100
    out = fix(_buggy(), _info(), lib, index, corpus, FixConfig(z=21))
    assert out.posts_analyzed == 21 and len(out.results) == 1


def test_k_bounds_patches_and_dedup():
    corpus, lib, index = _world(GOOD_ANSWERS + GOOD_ANSWERS)
    for k in range(1, 8):
        out = fix(_buggy(), _info(), lib, index, corpus, FixConfig(k=k, z=15))
        assert len(out.results) == min(k, len(GOOD_ANSWERS))
        assert len({c.diff for c in out.results}) == len(out.results)
        assert out.posts_analyzed <= 15


def test_k_monotonicity():
    corpus, lib, index = _world(GOOD_ANSWERS)
    runs = [[c.diff for c in fix(_buggy(), _info(), lib, index, corpus, FixConfig(k=k)).results] for k in range(1, 6)]
    for shorter, longer in zip(runs, runs[1:]):
        assert longer[: len(shorter)] == shorter


def _signature(out):
    return ([(c.diff, c.post_id, c.answer_id, c.esp_name) for c in out.results], out.fallback_post, out.posts_analyzed, out.diagnostics)


def test_deterministic_across_runs_and_workers():
    corpus, lib, index = _world(GOOD_ANSWERS + [NO_OP_ANSWER] * 3 + GOOD_ANSWERS)
    first = _signature(fix(_buggy(), _info(), lib, index, corpus, FixConfig(k=4)))
    for i in range(10):
        cfg = FixConfig(k=4, workers=1 + i % 4)
        assert _signature(fix(_buggy(), _info(), lib, index, corpus, cfg)) == first


def test_config_validation():
    for bad in ({"k": 0}, {"z": 0}, {"tau": 0}, {"tau": 1.5}, {"workers": 0}):
        with pytest.raises(ValueError):
            FixConfig(**bad)
