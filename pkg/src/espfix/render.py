"""Turn a modified APG back into source text and a unified diff.

Untouched nodes keep their original text. A changed node keeps its own text
where possible and only the spans of changed children are rewritten; anything
that cannot be spliced that way is pretty-printed from its components.
"""

from __future__ import annotations

import difflib

from espfix.apg import BODY_ROLES, Apg, ApgNode
from espfix.lang.lexer import Origin, SourceText
from espfix.lang.parser import parse

BLOCK_KINDS = frozenset({"loop", "condition", "tryCatch"})
STEP = "    "

Edit = tuple[int, int, str]


class RenderError(Exception):
    """The modified APG could not be turned into parsable source."""


def _apply(text: str, edits: list[Edit], base: int = 0) -> str:
    for a, b, new in sorted(edits, key=lambda e: (e[0], e[1]), reverse=True):
        text = text[: a - base] + new + text[b - base :]
    return text


def _lcs(xs: list, ys: list) -> list[tuple[int, int]]:
    n, m = len(xs), len(ys)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            table[i][j] = table[i + 1][j + 1] + 1 if xs[i] == ys[j] else max(table[i + 1][j], table[i][j + 1])
    out, i, j = [], 0, 0
    while i < n and j < m:
        if xs[i] == ys[j]:
            out.append((i, j))
            i, j = i + 1, j + 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1
    return out


class _Renderer:
    def __init__(self, text: str, original: Apg):
        self.text = text
        self.orig = {n.uid: n for n in original.nodes()}

    # -- helpers
    def original(self, w: ApgNode) -> ApgNode | None:
        o = self.orig.get(w.uid)
        return o if o is not None and o.span is not None else None

    def unchanged(self, w: ApgNode) -> bool:
        o = self.original(w)
        if o is None or o.kind != w.kind or o.own_components() != w.own_components():
            return False
        if len(o.children) != len(w.children):
            return False
        return all(oc.uid == wc.uid and self.unchanged(wc) for oc, wc in zip(o.children, w.children))

    def indent_at(self, pos: int) -> str:
        start = self.text.rfind("\n", 0, pos) + 1
        line = self.text[start:pos]
        return line[: len(line) - len(line.lstrip(" \t"))]

    def line_region(self, a: int, b: int) -> tuple[int, int]:
        """Grow [a, b) to whole lines when nothing else shares them."""
        start = self.text.rfind("\n", 0, a) + 1
        end = self.text.find("\n", b)
        end = len(self.text) if end < 0 else end
        if self.text[start:a].strip() or self.text[b:end].strip():
            return a, b
        return start, min(end + 1, len(self.text))

    # -- emission
    def emit(self, w: ApgNode, indent: str) -> str:
        o = self.original(w)
        if o is not None and self.unchanged(w):
            return self.text[o.span[0] : o.span[1]]
        if o is not None and o.kind == w.kind and o.own_components() == w.own_components():
            edits = self.child_edits(o, w)
            if edits is not None:
                return _apply(self.text[o.span[0] : o.span[1]], edits, o.span[0])
        return self.pretty(w, indent)

    def emit_stmt(self, w: ApgNode, indent: str) -> str:
        o = self.original(w)
        if o is not None and o.stmt_span is not None and self.unchanged(w):
            return self.text[o.stmt_span[0] : o.stmt_span[1]]
        text = self.emit(w, indent)
        return text if w.kind in BLOCK_KINDS else text + ";"

    def child_edits(self, o: ApgNode, w: ApgNode) -> list[Edit] | None:
        """Edits inside ``o``'s text that turn its children into ``w``'s."""
        edits: list[Edit] = []
        o_slots = [c for c in o.children if c.role not in BODY_ROLES]
        w_slots = [c for c in w.children if c.role not in BODY_ROLES]
        if [c.role for c in o_slots] != [c.role for c in w_slots]:
            return None
        indent = self.indent_at(o.span[0]) if o.span else ""
        for oc, wc in zip(o_slots, w_slots):
            if oc.span is None:
                return None
            if oc.uid == wc.uid and self.unchanged(wc):
                continue
            edits.append((oc.span[0], oc.span[1], self.emit(wc, indent)))
        roles = []
        for c in list(o.children) + list(w.children):
            if c.role in BODY_ROLES and c.role not in roles:
                roles.append(c.role)
        for role in roles:
            group = self.body_edits(
                [c for c in o.children if c.role == role],
                [c for c in w.children if c.role == role],
            )
            if group is None:
                return None
            edits.extend(group)
        return edits

    def body_edits(self, olds: list[ApgNode], news: list[ApgNode]) -> list[Edit] | None:
        if not olds:
            return None if news else []
        if any(o.stmt_span is None for o in olds):
            return None
        kept = _lcs([o.uid for o in olds], [n.uid for n in news])
        kept_old = {i for i, _ in kept}
        kept_new = dict((j, i) for i, j in kept)
        edits: list[Edit] = []
        for i, o in enumerate(olds):
            if i not in kept_old:
                edits.append((*self.line_region(*o.stmt_span), ""))
        for i, j in kept:
            if not self.unchanged(news[j]):
                o = olds[i]
                edits.append((o.span[0], o.span[1], self.emit(news[j], self.indent_at(o.stmt_span[0]))))
        # runs of inserted statements go after the previous kept one
        j = 0
        while j < len(news):
            if j in kept_new:
                j += 1
                continue
            run_start = j
            while j < len(news) and j not in kept_new:
                j += 1
            run = news[run_start:j]
            prev = kept_new.get(run_start - 1)
            if prev is not None:
                anchor = olds[prev]
                ind = self.indent_at(anchor.stmt_span[0])
                body = "".join("\n" + ind + self.emit_stmt(n, ind) for n in run)
                edits.append((anchor.stmt_span[1], anchor.stmt_span[1], body))
            else:
                nxt = next((kept_new[k] for k in range(j, len(news)) if k in kept_new), 0)
                anchor = olds[nxt]
                ind = self.indent_at(anchor.stmt_span[0])
                pos = self.text.rfind("\n", 0, anchor.stmt_span[0]) + 1
                body = "".join(ind + self.emit_stmt(n, ind) + "\n" for n in run)
                edits.append((pos, pos, body))
        return edits

    # -- pretty printing
    def block(self, stmts: list[ApgNode], indent: str) -> str:
        inner = indent + STEP
        return "{\n" + "".join(inner + self.emit_stmt(s, inner) + "\n" for s in stmts) + indent + "}"

    def pretty(self, w: ApgNode, indent: str) -> str:
        text = self._pretty(w, indent)
        parens = w.form.get("paren", 0)
        return "(" * parens + text + ")" * parens

    def _pretty(self, w: ApgNode, indent: str) -> str:
        e = lambda n: self.emit(n, indent)  # noqa: E731
        kids = lambda role: [c for c in w.children if c.role == role]  # noqa: E731
        one = lambda role: (kids(role) or [None])[0]  # noqa: E731
        k = w.kind
        if k == "methodCall":
            recv = w.get("receiverName")
            rnode = one("receiver")
            prefix = f"{recv}." if recv else (f"{e(rnode)}." if rnode is not None else "")
            args = ", ".join(e(a) for a in kids("arg"))
            return f"{prefix}{w.get('calleeName')}({args})"
        if k == "objectCreation":
            return f"new {w.get('targetType')}({', '.join(e(a) for a in kids('arg'))})"
        if k == "arrayCreation":
            ty = w.get("targetType") or "Object[]"
            base, ndims = ty, 0
            while base.endswith("[]"):
                base, ndims = base[:-2], ndims + 1
            elems = kids("elem")
            if w.form.get("bare_init"):
                return "{" + ", ".join(e(x) for x in elems) + "}"
            dims = kids("dim")
            if dims:
                return f"new {base}" + "".join(f"[{e(d)}]" for d in dims) + "[]" * max(0, ndims - len(dims))
            return f"new {base}{'[]' * max(1, ndims)}{{{', '.join(e(x) for x in elems)}}}"
        if k == "classCast":
            return f"({w.get('targetType')}) {e(one('operand'))}" if one("operand") is not None else f"({w.get('targetType')}) null"
        if k == "varDecl":
            init = one("init")
            name = w.get("varName")
            if w.form.get("assign") or w.form.get("shared_type"):
                return f"{name} = {e(init)}" if init is not None else name
            mods = " ".join(w.form.get("modifiers", []))
            head = f"{mods} " if mods else ""
            decl = f"{head}{w.get('declaredType') or 'Object'} {name}"
            return f"{decl} = {e(init)}" if init is not None else decl
        if k == "assignment":
            target = w.get("varName") or e(one("target"))
            value = one("value")
            return f"{target} {w.get('operator')} {e(value) if value is not None else 'null'}"
        if k == "binaryOp":
            op = w.get("operator")
            if op == "instanceof":
                return f"{e(one('left'))} instanceof {w.get('targetType')}"
            if op == "?:":
                return f"{e(one('cond'))} ? {e(one('left'))} : {e(one('right'))}"
            operand = one("operand")
            if operand is not None:
                return f"{e(operand)}{op}" if w.form.get("postfix") else f"{op}{e(operand)}"
            return f"{e(one('left'))} {op} {e(one('right'))}"
        if k == "literal":
            return w.get("value") or {"string": '""', "boolean": "false"}.get(w.get("literalKind"), "0")
        if k == "varRef":
            recv = one("receiver")
            return f"{e(recv)}.{w.get('varName')}" if recv is not None else w.get("varName")
        if k == "arrayAccess":
            recv = w.get("receiverName") or e(one("receiver"))
            return f"{recv}[{e(one('index'))}]"
        if k == "returnStmt":
            value = one("value")
            return f"return {e(value)}" if value is not None else "return"
        if k == "throwStmt":
            return f"throw {e(one('value'))}"
        if k == "loop":
            return self._loop(w, indent, e, kids, one)
        if k == "condition":
            text = f"if ({e(one('cond'))}) {self.block(kids('then'), indent)}"
            other = kids("else")
            if len(other) == 1 and other[0].kind == "condition":
                return f"{text} else {self.emit(other[0], indent)}"
            if other or w.form.get("has_else"):
                text += f" else {self.block(other, indent)}"
            return text
        if k == "tryCatch":
            catches = w.form.get("catches") or [([w.get("targetType") or "Exception"], "e")]
            text = f"try {self.block(kids('try'), indent)}"
            for i, (types, name) in enumerate(catches):
                stmts = kids("catch") if i == 0 else []
                text += f" catch ({' | '.join(types)} {name}) {self.block(stmts, indent)}"
            if kids("finally") or w.form.get("has_finally"):
                text += f" finally {self.block(kids('finally'), indent)}"
            return text
        raise RenderError(f"cannot print node kind {k!r}")

    def _loop(self, w, indent, e, kids, one) -> str:
        style = w.form.get("loop") or ("foreach" if w.get("iteratedName") else "while")
        body = self.block(kids("body"), indent)
        cond = one("cond")
        cond_text = e(cond) if cond is not None else "true"
        if style == "foreach":
            return f"for ({w.get('iteratedType')} {w.get('iteratedName')} : {e(one('iter'))}) {body}"
        if style == "for":
            init = ", ".join(e(c) for c in kids("init"))
            upd = ", ".join(e(c) for c in kids("update"))
            return f"for ({init}; {e(cond) if cond is not None else ''}; {upd}) {body}"
        if style == "do":
            return f"do {body} while ({cond_text});"
        return f"while ({cond_text}) {body}"


def unified_diff(old: str, new: str, file_name: str) -> str:
    """Plain unified diff with three context lines and no timestamps."""
    lines = difflib.unified_diff(
        old.splitlines(keepends=True),
        new.splitlines(keepends=True),
        fromfile=f"a/{file_name}",
        tofile=f"b/{file_name}",
        n=3,
    )
    return "".join(line if line.endswith("\n") else line + "\n" for line in lines)


def render_source(source: SourceText, original: Apg, modified: Apg) -> str:
    r = _Renderer(source.text, original)
    edits = r.child_edits(original.root, modified.root)
    if edits is None:
        raise RenderError("changes could not be placed in the method body")
    return _apply(source.text, edits)


def render_patch(
    source: SourceText, original: Apg, modified: Apg, file_name: str = "Main.java"
) -> tuple[SourceText, str]:
    """Patched source and its unified diff; raises RenderError if unparsable."""
    text = render_source(source, original, modified)
    res = parse(text)
    if not res.ok:
        raise RenderError(f"patched source does not parse: {res.errors[0]}")
    return SourceText(text, Origin.DEVELOPER), unified_diff(source.text, text, file_name)
