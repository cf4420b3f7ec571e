import random
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from espfix.align import similarity, snippet_distance
from espfix.apg import Apg, ApgNode, apg_equal, apg_of, normalize_type, prune_apg

from conftest import CAST_QUESTION
from test_lang import programs
from trees import random_apg

CAST_OUTLINE = """\
varDecl[stmt] declaredType=String[] varName=listofurls @3
  classCast[init] targetType=String[] @3
    methodCall[operand] receiverName=image_urls receiverType=ArrayList<String> calleeName=toArray argCount=0 @3"""


def test_toarray_cast_question_outline():
    assert apg_of(CAST_QUESTION).outline() == CAST_OUTLINE


def test_while_and_for_normalize_to_the_same_loop():
    assert apg_equal(apg_of("while (c) f();"), apg_of("for (;c;) f();"))
    assert apg_equal(apg_of("while (c) { f(); }"), apg_of("do { f(); } while (c);"))


def test_empty_method_has_only_root():
    apg = apg_of("void m() { }")
    assert len(apg) == 0 and apg.root.children == []


def test_imports_are_dropped():
    assert apg_equal(apg_of("import java.util.List;\nf();"), apg_of("f();"))


def test_type_normalization():
    assert normalize_type("java.util.ArrayList<java.net.URL>") == "ArrayList"
    assert normalize_type("String[]") == "String[]"


def test_prune_to_cast_line():
    full = apg_of("ArrayList<String> image_urls = new ArrayList<String>();\nint n = 0;\nString[] s = (String[]) image_urls.toArray();")
    pruned = prune_apg(full, {3})
    assert {n.line for n in pruned.nodes()} == {3}
    assert [n.kind for n in pruned.nodes()] == ["varDecl", "classCast", "methodCall"]


def test_prune_all_lines_is_identity_and_empty_is_root_only():
    q = apg_of(CAST_QUESTION)
    assert apg_equal(prune_apg(q, {1, 2, 3}), q)
    assert len(prune_apg(q, set())) == 0


def test_prune_keeps_ancestors():
    apg = apg_of("for (String s : items) {\n    use(s);\n}")
    pruned = prune_apg(apg, {2})
    assert [n.kind for n in pruned.nodes()][0] == "loop"
    assert {n.line for n in pruned.nodes()} == {1, 2}


def test_similarity_toarray_cast(cast_pattern):
    assert similarity(cast_pattern.body, apg_of(CAST_QUESTION)).value == 1


def test_similarity_empty_snippet(cast_pattern):
    assert similarity(cast_pattern.body, Apg(ApgNode("root", role="root"))).value == 0


def test_similarity_renamed_callee(cast_pattern):
    # three pattern nodes: varDecl 2/2, classCast 1/1, methodCall 3/4 (calleeName differs)
    renamed = CAST_QUESTION.replace("toArray", "asList")
    got = similarity(cast_pattern.body, apg_of(renamed))
    assert got.value == (Fraction(1) + 1 + Fraction(3, 4)) / 3 == Fraction(11, 12)


def test_distance_examples(cast_pattern):
    q = apg_of(CAST_QUESTION)
    assert snippet_distance(q, q) == 0
    assert snippet_distance(q, apg_of("while (done) { }")) == 1
    assert snippet_distance(q, cast_pattern.body) == 0
    assert snippet_distance(cast_pattern.body, q) == 0


def test_distance_properties_on_random_trees():
    rng = random.Random(11)
    for _ in range(300):
        a, b = random_apg(rng, 7), random_apg(rng, 7)
        d = snippet_distance(a, b)
        assert 0 <= d <= 1
        assert d == snippet_distance(b, a)
        assert snippet_distance(a, a) == 0


@given(programs(), programs())
@settings(max_examples=40, deadline=None)
def test_distance_symmetric_on_programs(x, y):
    a, b = apg_of(x), apg_of(y)
    assert snippet_distance(a, b) == snippet_distance(b, a)


@given(programs())
@settings(max_examples=40, deadline=None)
def test_build_is_deterministic(src):
    assert apg_equal(apg_of(src), apg_of(src))
    assert apg_of(src).outline() == apg_of(src).outline()


@given(programs())
@settings(max_examples=40, deadline=None)
def test_preorder_follows_source_lines(src):
    lines = [n.line for n in apg_of(src).nodes()]
    assert lines == sorted(lines)
