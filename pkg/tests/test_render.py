import pytest

from espfix.apg import apg_of, clone_apg, prune_apg
from espfix.edits import EditOp, adapt_edit_script, apply_script, derive_edit_script, triangulate
from espfix.lang.lexer import SourceText
from espfix.lang.parser import parse
from espfix.pipeline import ExceptionInfo, FixConfig, extract_buggy_window, fix
from espfix.render import RenderError, render_patch, unified_diff

from conftest import CAST_ANSWER, CAST_QUESTION, buggy_text

CAST_DIFF = """\
--- a/ExtensionService.java
+++ b/ExtensionService.java
@@ -37,7 +37,7 @@
         urls = new ArrayList<URL>();
         searchJarAndMetaInf(urls, extDirectory);
         // sort so that extensions load in a stable order
-        URL[] array = (URL[]) urls.toArray();
+        URL[] array = urls.toArray(new URL[urls.size()]);
         Arrays.sort(array, URL_COMPARATOR);
         extensionClassLoader = new URLClassLoader(array, getClass().getClassLoader());
     }
"""


def _buggy(name, line, re_type):
    src = SourceText(buggy_text(name))
    window, _ = extract_buggy_window(src, ExceptionInfo(re_type, line))
    return src, window


def test_toarray_cast_patch(cast_pattern):
    src, buggy = _buggy("ExtensionService.java", 40, "ClassCastException")
    q, a = apg_of(CAST_QUESTION), apg_of(CAST_ANSWER)
    tri = triangulate(q, a, cast_pattern.body)
    qp, ap = prune_apg(q, tri.ques_lines), prune_apg(a, tri.ans_lines)
    script = adapt_edit_script(adapt_edit_script(derive_edit_script(qp, ap), qp, cast_pattern.body), cast_pattern.body, buggy)
    patched, diff = render_patch(src, buggy, apply_script(buggy, script), "ExtensionService.java")
    assert patched.text.split("\n")[39].strip() == "URL[] array = urls.toArray(new URL[urls.size()]);"
    assert diff == CAST_DIFF
    assert parse(patched).ok


def test_noop_gives_empty_diff():
    src, buggy = _buggy("ExtensionService.java", 40, "ClassCastException")
    patched, diff = render_patch(src, buggy, clone_apg(buggy))
    assert diff == "" and patched.text == src.text


def test_foreach_remove_patch(corpus, library, index):
    src = buggy_text("OrderRepository.java")
    out = fix(src, ExceptionInfo("ConcurrentModificationException", 15), library, index, corpus, FixConfig(), "OrderRepository.java")
    lines = out.results[0].patched.text.split("\n")
    assert lines[13].strip() == "for (Order order : new ArrayList<Order>(orders)) {"
    assert lines[14].strip() == "orders.remove();"


def test_diff_headers_and_context():
    diff = unified_diff("a\nb\nc\nd\ne\nf\ng\nh\n", "a\nb\nc\nd\nE\nf\ng\nh\n", "X.java")
    head = diff.splitlines()[:3]
    assert head == ["--- a/X.java", "+++ b/X.java", "@@ -2,7 +2,7 @@"]
    assert unified_diff("same\n", "same\n", "X.java") == ""


def test_unparsable_render_is_rejected():
    src, buggy = _buggy("ExtensionService.java", 40, "ClassCastException")
    call = next(n for n in buggy.nodes() if n.get("calleeName") == "sort")
    bad = call.with_components([("receiverName", "Arrays"), ("calleeName", "1 + ")])
    modified = apply_script(buggy, [EditOp("update", call.uid, bad)])
    with pytest.raises(RenderError):
        render_patch(src, buggy, modified)
