import random

from hypothesis import given, settings
from hypothesis import strategies as st

from espfix.lang.fixer import RepairStatus, repair_snippet
from espfix.lang.lexer import SourceText, tokenize
from espfix.lang.parser import is_parsable, parse
from espfix.lang.syntax import ErrorCategory

from conftest import CAST_QUESTION


def texts(src):
    return [(t.kind, t.text) for t in tokenize(src) if t.kind != "eof"]


def test_tokenize_declaration():
    assert [t for _, t in texts("int x = 0;")] == ["int", "x", "=", "0", ";"]


def test_tokenize_ellipsis_is_invalid_placeholder():
    assert texts("List x = ...;") == [("ident", "List"), ("ident", "x"), ("op", "="), ("invalid", "..."), ("op", ";")]


def test_tokenize_empty():
    assert texts("") == []


def test_source_lines_are_one_based():
    src = SourceText("a();\nb();\n")
    assert src.lines()[0] == "a();" and src.line_count() == 3


def test_parse_toarray_cast_question_has_cast_assignment():
    res = parse(CAST_QUESTION)
    assert res.ok
    kinds = {n.kind for n in res.tree.root.walk()}
    assert "cast" in kinds and "assign" in kinds


def test_parse_reports_invalid_token_position():
    res = parse("List x = ...;")
    assert [(e.category, e.token, e.line, e.col) for e in res.errors] == [(ErrorCategory.INVALID, "...", 1, 10)]


def test_parse_reports_missing_catch():
    res = parse("try { f(); }")
    assert len(res.errors) == 1
    err = res.errors[0]
    assert err.category == ErrorCategory.MISSING and err.expected == "rule:catch-or-finally"


def test_parse_errors_are_position_ordered():
    res = parse("a(;\nb(;\nc(;")
    assert [e.position for e in res.errors] == sorted(e.position for e in res.errors)
    assert len(res.errors) >= 3


def test_repair_initializer():
    out, trace = repair_snippet("List x = ...;")
    assert out.text == "List x = new ArrayList<>();" and trace.final == RepairStatus.PARSABLE


def test_repair_missing_semicolon():
    out, trace = repair_snippet("f(a, b)")
    assert out.text == "f(a, b);" and is_parsable(out)


def test_repair_extra_brace():
    out, _ = repair_snippet("void m() { } }")
    assert out.text == "void m() { }" and is_parsable(out)


def test_repair_missing_catch():
    out, _ = repair_snippet("try { f(); }")
    assert is_parsable(out) and "catch (Exception e)" in out.text


def test_repair_fixpoint_on_parsable_input():
    out, trace = repair_snippet(CAST_QUESTION)
    assert out.text == CAST_QUESTION and trace.steps == []


BROKEN = [
    "List x = ...;",
    "f(a, b)",
    "void m() { } }",
    "try { f(); }",
    "int n = list.size()\nlist.clear();",
    "String s = ...;\nint n = s.length();",
    "Map m = ...;\nm.put(k, v);",
    "for (String s : items) {\n    print(s);",
    "if (x != null) {\n    x.run();\n}}",
    "Object o = get();\nString t = (String) o",
    "try {\n    in.close();\n}\nfinish();",
    "int[] a = ...;\na[0] = 1;",
    "while (it.hasNext()) {\n    it.next()\n}",
    "Caused by: java.lang.NullPointerException\n    at com.foo.Bar.run(Bar.java:10)",
    "public class A {\n    void m() {\n        int x = 1\n    }",
    "String[] arr = (String[]) list.toArray()\nuse(arr);",
    '<uses-permission android:name="android.permission.INTERNET"/>',
    'Log.d(TAG, "value: " + value);\n...\n}',
    "if (a) { b(); } else { c(); ",
    "@@@@ %%%% ####",
]


def test_broken_fixture_recovery_rate():
    recovered = sum(repair_snippet(s)[1].final == RepairStatus.PARSABLE for s in BROKEN)
    assert len(BROKEN) == 20
    assert recovered / len(BROKEN) >= 0.7


def test_traces_strictly_decrease():
    for s in BROKEN:
        counts = repair_snippet(s)[1].counts
        assert all(b < a for a, b in zip(counts, counts[1:])), s


STATEMENTS = [
    "int {v} = 0;",
    "String {v} = name.trim();",
    "{v} = (String[]) items.toArray();",
    "list.add({v});",
    "if ({v} != null) {{ {v}.run(); }}",
    "for (String s : {v}) {{ use(s); }}",
    "while ({v} > 0) {{ {v}--; }}",
    "try {{ f({v}); }} catch (Exception e) {{ log(e); }}",
    "return {v};",
    "Object[] arr = new Object[{v}.size()];",
]


@st.composite
def programs(draw):
    names = draw(st.lists(st.sampled_from(["a", "b", "urls", "items", "x1"]), min_size=1, max_size=6))
    return "\n".join(draw(st.sampled_from(STATEMENTS)).format(v=n) for n in names)


@given(programs())
@settings(max_examples=60, deadline=None)
def test_round_trip_render(src):
    res = parse(src)
    assert res.ok
    assert res.tree.render() == [t.text for t in tokenize(src) if t.kind != "eof"]


@given(programs())
@settings(max_examples=40, deadline=None)
def test_repair_idempotent_on_parsable(src):
    out, trace = repair_snippet(src)
    assert out.text == src and not trace.steps


@given(st.text(max_size=60))
@settings(max_examples=150, deadline=None)
def test_repair_is_total(text):
    out, trace = repair_snippet(text)
    counts = trace.counts
    assert all(b < a for a, b in zip(counts, counts[1:]))
    if trace.final == RepairStatus.PARSABLE:
        assert is_parsable(out)


def test_repair_on_mangled_programs():
    rng = random.Random(7)
    for _ in range(100):
        src = "\n".join(rng.choice(STATEMENTS).format(v="v") for _ in range(3))
        chars = list(src)
        for _ in range(2):
            del chars[rng.randrange(len(chars))]
        out, trace = repair_snippet("".join(chars))
        assert len(trace.steps) <= trace.initial_errors
        if trace.final == RepairStatus.PARSABLE:
            assert parse(out).ok
