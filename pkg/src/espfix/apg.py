"""Abstracted program graphs.

An APG keeps one node per abstraction-relevant statement or expression. Each
node carries role-tagged components (callee name, declared type, ...) which
are what similarity and edit adaptation look at; surface syntax such as
``while`` vs ``for`` or parenthesization is folded into rendering hints.
"""

from __future__ import annotations

import copy
import itertools
import re
from dataclasses import dataclass, field
from typing import Hashable, Iterator

from espfix.lang.lexer import SourceText
from espfix.lang.syntax import Node, SyntaxTree

NODE_KINDS = (
    "methodCall",
    "classCast",
    "varDecl",
    "assignment",
    "loop",
    "condition",
    "arrayAccess",
    "objectCreation",
    "arrayCreation",
    "tryCatch",
    "throwStmt",
    "returnStmt",
    "literal",
    "varRef",
    "binaryOp",
)

TYPE_ROLES = frozenset({"receiverType", "targetType", "declaredType", "iteratedType"})
NAME_ROLES = frozenset({"receiverName", "varName", "iteratedName"})
DERIVED_ROLES = frozenset({"argCount", "argSummary"})
# roles whose absence on one side means "unknown" rather than "different"
OPTIONAL_ROLES = frozenset({"receiverType", "declaredType"})

BODY_ROLES = frozenset({"stmt", "body", "then", "else", "try", "catch", "finally"})

# kinds that need every listed role to be well-formed
REQUIRED_ROLES = {
    "methodCall": ("calleeName",),
    "classCast": ("targetType",),
    "varDecl": ("varName",),
    "objectCreation": ("targetType",),
    "arrayCreation": ("targetType",),
    "varRef": ("varName",),
    "binaryOp": ("operator",),
    "literal": ("literalKind",),
    "assignment": ("operator",),
}

Components = tuple[tuple[str, str], ...]


@dataclass(eq=False)
class ApgNode:
    kind: str
    components: Components = ()
    children: list["ApgNode"] = field(default_factory=list)
    role: str = "stmt"
    line: int = 0
    span: tuple[int, int] | None = None
    stmt_span: tuple[int, int] | None = None
    uid: Hashable = None
    inferred: frozenset = frozenset()
    form: dict = field(default_factory=dict)

    def get(self, role: str, default: str | None = None) -> str | None:
        for r, v in self.components:
            if r == role:
                return v
        return default

    def values(self, role: str) -> list[str]:
        return [v for r, v in self.components if r == role]

    def own_components(self) -> Components:
        return tuple((r, v) for r, v in self.components if r not in DERIVED_ROLES and r not in self.inferred)

    def with_components(self, comps) -> "ApgNode":
        clone = copy.copy(self)
        clone.components = tuple(comps)
        return clone

    def preorder(self) -> Iterator["ApgNode"]:
        yield self
        for c in self.children:
            yield from c.preorder()

    def label(self) -> str:
        comps = ", ".join(f"{r}={v}" for r, v in self.components)
        return f"{self.kind}({comps})"

    def __repr__(self) -> str:
        return f"<{self.label()} @{self.line}>"


@dataclass(eq=False)
class Apg:
    root: ApgNode
    source: SourceText | None = None
    abstracts: dict[str, frozenset[str]] = field(default_factory=dict)

    def nodes(self) -> list[ApgNode]:
        """All nodes except the synthetic root, in preorder."""
        return list(self.root.preorder())[1:]

    def __len__(self) -> int:
        return len(self.nodes())

    def by_uid(self) -> dict[Hashable, ApgNode]:
        return {n.uid: n for n in self.root.preorder()}

    def parents(self) -> dict[int, ApgNode]:
        out = {}
        for n in self.root.preorder():
            for c in n.children:
                out[id(c)] = n
        return out

    def lines(self) -> set[int]:
        return {n.line for n in self.nodes()}

    def outline(self) -> str:
        return render_outline(self)


# -- normalization ----------------------------------------------------------

_GENERIC_RE = re.compile(r"<[^<>]*>")
_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")


def strip_generics(text: str) -> str:
    prev = None
    while prev != text:
        prev = text
        text = _GENERIC_RE.sub("", text)
    return text


def normalize_type(text: str) -> str:
    """``java.util.ArrayList<URL>[]`` -> ``ArrayList[]``."""
    text = strip_generics(text).replace(" ", "")
    m = re.match(r"^([A-Za-z0-9_$.]+)(.*)$", text)
    if not m:
        return text
    base, rest = m.groups()
    return base.rsplit(".", 1)[-1] + rest


def normalize(role: str, value: str) -> str:
    return normalize_type(value) if role in TYPE_ROLES else value


def identifiers_in(value: str) -> list[str]:
    return _IDENT_RE.findall(value)


def summarize(node: ApgNode) -> str:
    if node.kind == "varRef" and not node.children:
        return node.get("varName") or "#varRef"
    if node.kind == "literal":
        return "#" + (node.get("literalKind") or "literal")
    return "#" + node.kind


def refresh_derived(node: ApgNode) -> None:
    """Recompute argument counts and summaries from a node's children."""
    for n in node.preorder():
        if n.kind in ("methodCall", "objectCreation"):
            args = [c for c in n.children if c.role == "arg"]
            base = [(r, v) for r, v in n.components if r not in DERIVED_ROLES]
            base.append(("argCount", str(len(args))))
            base.extend(("argSummary", summarize(a)) for a in args)
            n.components = tuple(base)


def structurally_equal(a: ApgNode, b: ApgNode) -> bool:
    """Kind, role, own components and children agree (inferred context ignored)."""
    if a.kind != b.kind or a.role != b.role:
        return False
    if a.own_components() != b.own_components():
        return False
    if len(a.children) != len(b.children):
        return False
    return all(structurally_equal(x, y) for x, y in zip(a.children, b.children))


def apg_equal(a: Apg, b: Apg) -> bool:
    return structurally_equal(a.root, b.root)


def clone_tree(node: ApgNode) -> ApgNode:
    new = copy.copy(node)
    new.form = dict(node.form)
    new.children = [clone_tree(c) for c in node.children]
    return new


def clone_apg(apg: Apg) -> Apg:
    return Apg(clone_tree(apg.root), apg.source, dict(apg.abstracts))


def render_outline(apg: Apg) -> str:
    """Stable plain-text outline used for golden tests and debugging."""
    out: list[str] = []

    def visit(n: ApgNode, depth: int) -> None:
        comps = " ".join(f"{r}={v}" for r, v in n.components)
        out.append(f"{'  ' * depth}{n.kind}[{n.role}] {comps} @{n.line}".rstrip())
        for c in n.children:
            visit(c, depth + 1)

    for c in apg.root.children:
        visit(c, 0)
    return "\n".join(out)


def prune_apg(apg: Apg, relevant_lines) -> Apg:
    """Keep nodes on ``relevant_lines`` plus the ancestors that connect them."""
    relevant = set(relevant_lines)

    def keep(n: ApgNode) -> ApgNode | None:
        kids = [k for k in (keep(c) for c in n.children) if k is not None]
        if n.kind == "root" or n.line in relevant or kids:
            new = copy.copy(n)
            new.form = dict(n.form)
            new.children = kids
            return new
        return None

    return Apg(keep(apg.root), apg.source, dict(apg.abstracts))


# -- building -----------------------------------------------------------------


class _Builder:
    def __init__(self, tree: SyntaxTree, env: dict[str, str]):
        self.tree = tree
        self.env = env
        self.counter = itertools.count(1)

    def make(self, kind, syn: Node, comps, children=(), role="stmt", inferred=(), **form) -> ApgNode:
        a, b = self.tree.char_span(syn)
        node = ApgNode(
            kind=kind,
            components=tuple((r, v) for r, v in comps if v),
            children=list(children),
            role=role,
            line=self.tree.lines(syn)[0],
            span=(a, b),
            uid=None,
            inferred=frozenset(inferred),
            form=form,
        )
        return node

    def type_of(self, name: str | None) -> str | None:
        if not name:
            return None
        if name.startswith("this."):
            name = name[5:]
        return self.env.get(name)

    # statements
    def statements(self, syn: Node, role: str) -> list[ApgNode]:
        k = syn.kind
        if k == "block":
            out: list[ApgNode] = []
            for c in syn.children:
                out.extend(self.statements(c, role))
            return out
        if k in ("empty", "break", "continue", "import", "package", "annotation", "class", "method"):
            return []
        nodes = self.statement(syn, role)
        span = self.tree.char_span(syn)
        text = self.tree.source.text
        for n in nodes:
            if n.stmt_span is None and len(nodes) == 1:
                n.stmt_span = span
            if n.kind in ("returnStmt", "throwStmt") and text[n.span[1] - 1 : n.span[1]] == ";":
                end = n.span[1] - 1
                while end > n.span[0] and text[end - 1].isspace():
                    end -= 1
                n.span = (n.span[0], end)
        return nodes

    def statement(self, syn: Node, role: str) -> list[ApgNode]:
        k = syn.kind
        if k == "localDecl":
            out = []
            for i, d in enumerate(syn.children):
                if not d.children:
                    # a bare declaration only feeds the type environment
                    continue
                ty = syn.attrs["type"] + d.attrs.get("dims", "")
                kids = [self.expr(d.children[0], "init")]
                start = syn if i == 0 else d
                node = self.make("varDecl", start, [("declaredType", ty), ("varName", d.attrs["name"])], kids, role, shared_type=i > 0, modifiers=syn.attrs.get("modifiers", []))
                a = self.tree.char_span(start)[0]
                node.span = (a, self.tree.char_span(d)[1])
                if len(syn.children) == 1:
                    node.stmt_span = self.tree.char_span(syn)
                out.append(node)
            return out
        if k == "exprStmt":
            e = syn.children[0]
            inner, parens = _unparen(e)
            if inner.kind == "assign" and inner.attrs["op"] == "=" and inner.children[0].kind == "name":
                name = inner.children[0].attrs["text"]
                value = self.expr(inner.children[1], "init")
                declared = self.type_of(name)
                comps = [("declaredType", declared), ("varName", name)]
                node = self.make("varDecl", e, comps, [value], role, inferred=("declaredType",), assign=True)
                return [node]
            return [self.expr(e, role)]
        if k == "if":
            cond = self.expr(syn.children[0], "cond")
            then = self.statements(syn.children[1], "then")
            kids = [cond] + then
            has_else = len(syn.children) > 2
            if has_else:
                kids += self.statements(syn.children[2], "else")
            return [self.make("condition", syn, [], kids, role, has_else=has_else)]
        if k == "while":
            cond = self.expr(syn.children[0], "cond")
            return [self.make("loop", syn, [], [cond] + self.statements(syn.children[1], "body"), role, loop="while")]
        if k == "doWhile":
            cond = self.expr(syn.children[1], "cond")
            return [self.make("loop", syn, [], [cond] + self.statements(syn.children[0], "body"), role, loop="do")]
        if k == "for":
            init_syn, cond_syn, upd_syn, body_syn = syn.children
            kids: list[ApgNode] = []
            for c in init_syn.children:
                if c.kind == "localDecl":
                    kids.extend(self.statement(c, "init"))
                else:
                    kids.append(self.expr(c, "init"))
            kids.extend(self.expr(c, "cond") for c in cond_syn.children)
            kids.extend(self.expr(c, "update") for c in upd_syn.children)
            kids.extend(self.statements(body_syn, "body"))
            return [self.make("loop", syn, [], kids, role, loop="for")]
        if k == "forEach":
            it = self.expr(syn.children[0], "iter")
            comps = [("iteratedName", syn.attrs["name"]), ("iteratedType", syn.attrs["type"])]
            return [self.make("loop", syn, comps, [it] + self.statements(syn.children[1], "body"), role, loop="foreach")]
        if k == "try":
            kids = self.statements(syn.children[0], "try")
            catches = []
            for c in syn.children[1:]:
                if c.kind == "catch":
                    catches.append((c.attrs["types"], c.attrs["name"]))
                    kids += self.statements(c.children[0], "catch")
                else:
                    kids += self.statements(c.children[0], "finally")
            caught = catches[0][0][0] if catches else None
            has_finally = any(c.kind == "finally" for c in syn.children[1:])
            return [self.make("tryCatch", syn, [("targetType", caught)], kids, role, catches=catches, has_finally=has_finally)]
        if k == "return":
            kids = [self.expr(syn.children[0], "value")] if syn.children else []
            return [self.make("returnStmt", syn, [], kids, role)]
        if k == "throw":
            return [self.make("throwStmt", syn, [], [self.expr(syn.children[0], "value")], role)]
        return []

    # expressions
    def dotted(self, syn: Node) -> str | None:
        if syn.kind == "name":
            return syn.attrs["text"]
        if syn.kind in ("this", "super"):
            return syn.kind
        if syn.kind == "field":
            base = self.dotted(syn.children[0])
            return f"{base}.{syn.attrs['name']}" if base else None
        return None

    def expr(self, syn: Node, role: str) -> ApgNode:
        inner, parens = _unparen(syn)
        node = self._expr(inner, role)
        if parens:
            node.form["paren"] = parens
            node.span = self.tree.char_span(syn)
        return node

    def _expr(self, syn: Node, role: str) -> ApgNode:
        k = syn.kind
        if k == "call":
            name = syn.attrs["name"]
            args = syn.children
            kids: list[ApgNode] = []
            comps: list[tuple[str, str | None]] = []
            inferred = ()
            if syn.attrs.get("has_receiver"):
                recv = args[0]
                args = args[1:]
                rname = self.dotted(recv)
                if rname is not None:
                    comps.append(("receiverName", rname))
                    rtype = self.type_of(rname)
                    if rtype:
                        comps.append(("receiverType", rtype))
                        inferred = ("receiverType",)
                else:
                    kids.append(self.expr(recv, "receiver"))
            comps.append(("calleeName", name))
            kids.extend(self.expr(a, "arg") for a in args)
            node = self.make("methodCall", syn, comps, kids, role, inferred=inferred)
            refresh_derived(node)
            return node
        if k == "new":
            kids = [self.expr(a, "arg") for a in syn.children]
            node = self.make("objectCreation", syn, [("targetType", syn.attrs["type"])], kids, role)
            refresh_derived(node)
            return node
        if k == "newArray":
            ty = syn.attrs["type"] + "[]" * syn.attrs["ndims"]
            kids = []
            for c in syn.children:
                if c.kind == "arrayInit":
                    kids.extend(self.expr(e, "elem") for e in c.children)
                else:
                    kids.append(self.expr(c, "dim"))
            return self.make("arrayCreation", syn, [("targetType", ty)], kids, role, has_init=syn.attrs["has_init"])
        if k == "arrayInit":
            kids = [self.expr(e, "elem") for e in syn.children]
            return self.make("arrayCreation", syn, [("targetType", "Object[]")], kids, role, bare_init=True, has_init=True)
        if k == "cast":
            return self.make("classCast", syn, [("targetType", syn.attrs["type"])], [self.expr(syn.children[0], "operand")], role)
        if k == "binary":
            left, right = syn.children
            return self.make("binaryOp", syn, [("operator", syn.attrs["op"])], [self.expr(left, "left"), self.expr(right, "right")], role)
        if k == "instanceof":
            return self.make("binaryOp", syn, [("operator", "instanceof"), ("targetType", syn.attrs["type"])], [self.expr(syn.children[0], "left")], role)
        if k == "unary":
            return self.make("binaryOp", syn, [("operator", syn.attrs["op"])], [self.expr(syn.children[0], "operand")], role, postfix=syn.attrs["postfix"])
        if k == "conditional":
            c, a, b = syn.children
            return self.make("binaryOp", syn, [("operator", "?:")], [self.expr(c, "cond"), self.expr(a, "left"), self.expr(b, "right")], role)
        if k == "assign":
            target, value = syn.children
            tname = self.dotted(target)
            kids = [] if tname is not None else [self.expr(target, "target")]
            kids.append(self.expr(value, "value"))
            return self.make("assignment", syn, [("varName", tname), ("operator", syn.attrs["op"])], kids, role)
        if k == "index":
            arr, idx = syn.children
            aname = self.dotted(arr)
            kids = [] if aname is not None else [self.expr(arr, "receiver")]
            kids.append(self.expr(idx, "index"))
            return self.make("arrayAccess", syn, [("receiverName", aname)], kids, role)
        if k == "literal":
            return self.make("literal", syn, [("literalKind", syn.attrs["lit"]), ("value", syn.attrs["text"])], [], role)
        if k in ("name", "this", "super"):
            return self.make("varRef", syn, [("varName", self.dotted(syn))], [], role)
        if k == "field":
            full = self.dotted(syn)
            if full is not None:
                return self.make("varRef", syn, [("varName", full)], [], role)
            return self.make("varRef", syn, [("varName", syn.attrs["name"])], [self.expr(syn.children[0], "receiver")], role, field=True)
        # invalid placeholders and anything else outside the subset
        return self.make("varRef", syn, [("varName", "?")], [], role)


def _unparen(syn: Node) -> tuple[Node, int]:
    n = 0
    while syn.kind == "paren":
        syn = syn.children[0]
        n += 1
    return syn, n


def collect_env(tree: SyntaxTree, scope: Node | None = None) -> dict[str, str]:
    """Declared types of locals, parameters and fields, first declaration wins."""
    env: dict[str, str] = {}
    roots = [tree.root] if scope is None else [scope]
    for root in roots:
        for n in root.walk():
            if n.kind == "method":
                for ptype, pname in n.attrs.get("params", []):
                    env.setdefault(pname, ptype)
            elif n.kind == "localDecl":
                for d in n.children:
                    env.setdefault(d.attrs["name"], n.attrs["type"] + d.attrs.get("dims", ""))
            elif n.kind == "forEach":
                env.setdefault(n.attrs["name"], n.attrs["type"])
            elif n.kind == "catch":
                env.setdefault(n.attrs["name"], n.attrs["types"][0])
    return env


def _number(root: ApgNode) -> None:
    for i, n in enumerate(root.preorder()):
        n.uid = i


def _unit_statements(b: _Builder, syn: Node) -> list[ApgNode]:
    out: list[ApgNode] = []
    for item in syn.children:
        if item.kind == "method":
            if item.children:
                out.extend(b.statements(item.children[0], "stmt"))
        elif item.kind == "class":
            out.extend(_unit_statements(b, item))
        else:
            out.extend(b.statements(item, "stmt"))
    return out


def build_apg(tree: SyntaxTree, abstracts: dict[str, frozenset[str]] | None = None) -> Apg:
    """APG of a whole snippet: statements of every method plus loose statements."""
    b = _Builder(tree, collect_env(tree))
    root = ApgNode("root", role="root", line=0)
    root.children = _unit_statements(b, tree.root)
    _number(root)
    return Apg(root, tree.source, dict(abstracts or {}))


def build_method_apg(tree: SyntaxTree, method: Node) -> Apg:
    """APG of a single method body, with fields of enclosing classes in scope."""
    env = collect_env(tree, method)
    for k, v in collect_env(tree).items():
        env.setdefault(k, v)
    b = _Builder(tree, env)
    root = ApgNode("root", role="root", line=0)
    if method.children:
        root.children = b.statements(method.children[0], "stmt")
    _number(root)
    return Apg(root, tree.source, {})


def apg_of(src: SourceText | str) -> Apg:
    """Parse and build in one step; raises ``ValueError`` when unparsable."""
    from espfix.lang.parser import parse

    res = parse(src)
    if not res.ok:
        raise ValueError(f"unparsable source: {res.errors[0]}")
    return build_apg(res.tree)
