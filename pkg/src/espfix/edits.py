"""Edit scripts over APGs: derivation, application and adaptation."""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from typing import Hashable

from espfix.align import TOKEN_RE, align_apgs, similarity, tree_mapping
from espfix.apg import (
    NAME_ROLES,
    REQUIRED_ROLES,
    TYPE_ROLES,
    Apg,
    ApgNode,
    clone_apg,
    clone_tree,
    identifiers_in,
    prune_apg,
    refresh_derived,
)
from espfix.lang.lexer import tokenize

OP_TYPES = ("add", "delete", "update", "replace")
_IDENT = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
# a question node counts as part of the scenario when it agrees with its
# pattern node on at least this share of components
MIN_NODE_AGREEMENT = 0.5
_ALWAYS_VALID = frozenset({"this", "super", "null", "true", "false", "length", "class"})


class ApplyError(Exception):
    def __init__(self, index: int, op: "EditOp", reason: str):
        super().__init__(f"op {index} ({op.type} @{op.anchor!r}): {reason}")
        self.index = index
        self.op = op


@dataclass
class EditOp:
    """One edit. ``pos`` is ("child", index) or ("parent", count) for adds.

    An add "as parent" inserts the payload in place of the anchor and adopts
    the anchor plus the following ``count - 1`` siblings, giving them
    ``adopted_roles``.
    """

    type: str
    anchor: Hashable
    payload: ApgNode | None = None
    pos: tuple[str, int] | None = None
    adopted_roles: tuple[str, ...] = ()
    line: int = 0

    def describe(self) -> str:
        where = f"line {self.line}" if self.line else "?"
        if self.type == "delete":
            return f"DELETE node {self.anchor!r} on {where}"
        label = self.payload.label() if self.payload is not None else ""
        if self.type == "add":
            how = f"as child {self.pos[1]} of" if self.pos[0] == "child" else f"as parent ({self.pos[1]}) of"
            return f"ADD {label} {how} {self.anchor!r} on {where}"
        return f"{self.type.upper()} {self.anchor!r} with {label} on {where}"


@dataclass
class EditScript:
    ops: list[EditOp] = field(default_factory=list)
    dropped: list[tuple[int, str]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def describe(self) -> str:
        return "\n".join(op.describe() for op in self.ops)


# -- application ------------------------------------------------------------


def _index(root: ApgNode) -> tuple[dict, dict]:
    by_uid: dict = {}
    parent: dict[int, ApgNode] = {}
    for n in root.preorder():
        by_uid[n.uid] = n
        for c in n.children:
            parent[id(c)] = n
    return by_uid, parent


def _fresh(payload: ApgNode, keep_children: bool) -> ApgNode:
    node = clone_tree(payload) if keep_children else copy.copy(payload)
    if not keep_children:
        node.children = []
        node.form = dict(payload.form)
    node.span = node.stmt_span = None
    for n in node.preorder():
        n.span = n.stmt_span = None
    return node


def _preceding_line(root: ApgNode, node: ApgNode) -> int:
    prev = 0
    for n in root.preorder():
        if n is node:
            return prev
        if n.kind != "root":
            prev = n.line
    return prev


def apply_op(root: ApgNode, op: EditOp, index: int = 0) -> None:
    """Apply one op in place."""
    by_uid, parent = _index(root)
    anchor = by_uid.get(op.anchor)
    if anchor is None:
        raise ApplyError(index, op, "anchor does not resolve")
    if op.type == "delete":
        par = parent.get(id(anchor))
        if par is None:
            raise ApplyError(index, op, "cannot delete the root")
        i = next(k for k, c in enumerate(par.children) if c is anchor)
        if len(anchor.children) == 1:
            anchor.children[0].role = anchor.role
        par.children[i : i + 1] = anchor.children
    elif op.type == "add":
        if op.payload is None or op.pos is None:
            raise ApplyError(index, op, "add needs a payload and a position")
        node = _fresh(op.payload, keep_children=False)
        if node.uid in by_uid:
            raise ApplyError(index, op, f"uid {node.uid!r} already present")
        how, k = op.pos
        if how == "child":
            k = max(0, min(k, len(anchor.children)))
            anchor.children.insert(k, node)
            node.line = node.line or max(anchor.line, _preceding_line(root, node))
        else:
            par = parent.get(id(anchor))
            if par is None:
                raise ApplyError(index, op, "cannot adopt the root")
            i = next(j for j, c in enumerate(par.children) if c is anchor)
            adopted = par.children[i : i + max(1, k)]
            for c, r in zip(adopted, op.adopted_roles):
                c.role = r
            node.children = adopted
            par.children[i : i + len(adopted)] = [node]
            node.line = adopted[0].line
    elif op.type == "update":
        if op.payload is None:
            raise ApplyError(index, op, "update needs a payload")
        own = op.payload.own_components()
        given = {r for r, _ in own}
        kept = [(r, v) for r, v in anchor.components if r in anchor.inferred and r not in given]
        anchor.components = tuple(own) + tuple(kept)
        anchor.inferred = frozenset(r for r, _ in kept)
        anchor.role = op.payload.role
        if anchor.kind != op.payload.kind:
            anchor.kind = op.payload.kind
    elif op.type == "replace":
        if op.payload is None:
            raise ApplyError(index, op, "replace needs a payload")
        par = parent.get(id(anchor))
        if par is None:
            raise ApplyError(index, op, "cannot replace the root")
        node = _fresh(op.payload, keep_children=True)
        for n in node.preorder():
            n.line = anchor.line
        i = next(k for k, c in enumerate(par.children) if c is anchor)
        par.children[i] = node
    else:
        raise ApplyError(index, op, f"unknown op type {op.type!r}")


def apply_script(apg: Apg, script: EditScript | list[EditOp]) -> Apg:
    """Apply ops in order to a copy of ``apg``."""
    out = clone_apg(apg)
    for i, op in enumerate(script):
        apply_op(out.root, op, i)
    refresh_derived(out.root)
    return out


# -- validity ----------------------------------------------------------------


def is_valid_apg(apg: Apg) -> bool:
    """Tree shape, unique uids, source-ordered lines, required components."""
    seen_ids: set[int] = set()
    seen_uids: set = set()
    stack = [apg.root]
    while stack:
        n = stack.pop()
        if id(n) in seen_ids or n.uid in seen_uids:
            return False
        seen_ids.add(id(n))
        seen_uids.add(n.uid)
        stack.extend(n.children)
    last = 0
    for n in apg.nodes():
        if n.line < last:
            return False
        last = n.line
        for role, value in n.components:
            if not isinstance(value, str) or not value.strip():
                return False
        for role in REQUIRED_ROLES.get(n.kind, ()):
            if not n.get(role):
                return False
    return True


# -- derivation --------------------------------------------------------------


def _raw_mapping(q: Apg, a: Apg) -> dict[int, ApgNode]:
    return {id(x): y for x, y in tree_mapping(q, a) if x is not None and y is not None}


def derive_edit_script(q: Apg, a: Apg) -> EditScript:
    """Edit script turning ``q`` into ``a`` (structurally).

    Unmatched Q subtrees with nothing matched inside are kept until the
    inserts run, so an unmatched A subtree landing in the same slot with a
    different kind can replace them in one op.
    """
    q_kind = {id(n): n.kind for n in q.root.preorder()}
    m = {k: v for k, v in _raw_mapping(q, a).items() if v.kind == q_kind[k]}
    mapped_a = {id(y) for y in m.values()}
    a_order = {id(n): i for i, n in enumerate(a.root.preorder())}
    a_parent = {id(c): n for n in a.root.preorder() for c in n.children}

    def a_desc(node: ApgNode | None, anc: ApgNode) -> bool:
        while node is not None:
            if node is anc:
                return True
            node = a_parent.get(id(node))
        return False

    def unmatched_subtree(n: ApgNode, mapped: set[int]) -> bool:
        return all(id(x) not in mapped for x in n.preorder())

    work = clone_apg(q)
    w_by_uid = {n.uid: n for n in work.root.preorder()}
    a2w: dict[int, ApgNode] = {}
    w2a: dict[int, ApgNode] = {}
    for qn in q.root.preorder():
        if id(qn) in m:
            a2w[id(m[id(qn)])] = w_by_uid[qn.uid]
            w2a[id(w_by_uid[qn.uid])] = m[id(qn)]
    ops: list[EditOp] = []

    def emit(op: EditOp) -> None:
        apply_op(work.root, op, len(ops))
        ops.append(op)

    def find(uid) -> ApgNode:
        return next(n for n in work.root.preorder() if n.uid == uid)

    # dead: maximal unmatched Q subtrees, removed only after the inserts
    dead: list[ApgNode] = []
    dead_ids: set[int] = set()
    for qn in q.nodes():
        if id(qn) in dead_ids:
            continue
        if unmatched_subtree(qn, set(m)):
            dead.append(qn)
            dead_ids.update(id(x) for x in qn.preorder())
    for qn in q.nodes():
        if id(qn) not in m and id(qn) not in dead_ids:
            emit(EditOp("delete", qn.uid, line=qn.line))

    replaced: set = set()
    covered: set[int] = set()
    dead_uids = {n.uid for n in dead}
    for an in a.root.preorder():
        if id(an) in mapped_a or id(an) in covered:
            continue
        w_parent = a2w[id(a_parent[id(an)])]
        kids = w_parent.children
        inside = [k for k, c in enumerate(kids) if id(c) in w2a and a_desc(w2a[id(c)], an)]
        if inside:
            payload = copy.copy(an)
            payload.children = []
            payload.uid = ("new", len(ops))
            payload.line = 0
            adopted = kids[inside[0] : inside[-1] + 1]
            roles = tuple(w2a[id(c)].role if id(c) in w2a else c.role for c in adopted)
            emit(EditOp("add", adopted[0].uid, payload, ("parent", len(adopted)), roles, line=adopted[0].line))
            w = find(payload.uid)
            a2w[id(an)] = w
            w2a[id(w)] = an
            continue
        live_before = [k for k, c in enumerate(kids) if id(c) in w2a and a_order[id(w2a[id(c)])] < a_order[id(an)]]
        k = live_before[-1] + 1 if live_before else 0
        gap_end = next((j for j in range(k, len(kids)) if id(kids[j]) in w2a), len(kids))
        victim = None
        if unmatched_subtree(an, mapped_a):
            victim = next(
                (c for c in kids[k:gap_end] if c.uid in dead_uids and c.uid not in replaced and c.kind != an.kind),
                None,
            )
        if victim is not None:
            i = len(ops)
            payload = clone_tree(an)
            for j, n in enumerate(payload.preorder()):
                n.uid = ("new", i, j)
            emit(EditOp("replace", victim.uid, payload, line=victim.line))
            replaced.add(victim.uid)
            for src, w in zip(an.preorder(), find(("new", i, 0)).preorder()):
                a2w[id(src)] = w
                w2a[id(w)] = src
                covered.add(id(src))
            continue
        payload = copy.copy(an)
        payload.children = []
        payload.uid = ("new", len(ops))
        payload.line = 0  # placed by apply_op from the surrounding context
        emit(EditOp("add", w_parent.uid, payload, ("child", k), line=w_parent.line))
        w = find(payload.uid)
        a2w[id(an)] = w
        w2a[id(w)] = an

    for root in dead:
        if root.uid in replaced:
            continue
        for qn in root.preorder():
            emit(EditOp("delete", qn.uid, line=qn.line))

    for qn in q.nodes():
        an = m.get(id(qn))
        if an is None:
            continue
        w = find(qn.uid)
        if w.own_components() != an.own_components() or w.role != an.role:
            payload = copy.copy(an)
            payload.children = []
            payload.components = an.own_components()
            payload.inferred = frozenset()
            emit(EditOp("update", qn.uid, payload, line=qn.line))

    return EditScript(ops)



# -- adaptation --------------------------------------------------------------


def _skeleton(value: str) -> str:
    return _IDENT.sub("#", value)


def _value_maps(corr) -> tuple[dict, dict, dict]:
    exact: dict[tuple[str, str], str] = {}
    any_role: dict[str, str] = {}
    idents: dict[str, str] = {}
    for role, xv, yv in corr:
        if role == "line":
            continue
        exact.setdefault((role, xv), yv)
        any_role.setdefault(xv, yv)
    # identifier-level pairs, exact skeleton matches first
    for role, xv, yv in corr:
        if role != "line" and _skeleton(xv) == _skeleton(yv):
            for a, b in zip(identifiers_in(xv), identifiers_in(yv)):
                idents.setdefault(a, b)
    for role, xv, yv in corr:
        if role != "line" and _skeleton(xv) != _skeleton(yv):
            xs, ys = identifiers_in(xv), identifiers_in(yv)
            if xs and ys:
                idents.setdefault(xs[0], ys[0])
    return exact, any_role, idents


def _rewrite(role: str, value: str, maps) -> str:
    exact, any_role, idents = maps
    if (role, value) in exact:
        return exact[(role, value)]
    if value in any_role and role not in ("literalKind", "operator", "value", "argCount"):
        return any_role[value]
    if role in ("literalKind", "operator", "value", "argCount"):
        return value
    return _IDENT.sub(lambda mm: idents.get(mm.group(), mm.group()), value)


def namespace(apg: Apg) -> set[str]:
    names: set[str] = set()
    for n in apg.nodes():
        for _, v in n.components:
            names.update(identifiers_in(v))
    if apg.source is not None:
        names.update(t.text for t in tokenize(apg.source) if t.kind == "ident")
    return names


def _payload_ok(payload: ApgNode, y_names: set[str], declared: set[str]) -> str | None:
    """Reason the payload leaks foreign identifiers, or None when it is fine."""
    for n in payload.preorder():
        for role, value in n.components:
            if role in TYPE_ROLES:
                for ident in identifiers_in(value):
                    if TOKEN_RE.fullmatch(ident) and ident not in y_names:
                        return f"{role} {value!r} keeps unbound {ident}"
            elif role in NAME_ROLES or role == "argSummary":
                if role == "argSummary" and value.startswith("#"):
                    continue
                for ident in identifiers_in(value):
                    if ident in y_names or ident in declared or ident in _ALWAYS_VALID:
                        continue
                    if ident[:1].isupper() and not TOKEN_RE.fullmatch(ident):
                        continue  # class reference such as System or Collections
                    return f"{role} {value!r} uses {ident}, unknown in the target"
            elif TOKEN_RE.search(value) and role != "value":
                for ident in TOKEN_RE.findall(value):
                    if ident not in y_names:
                        return f"{role} {value!r} keeps unbound {ident}"
    return None


def _declared_by(payload: ApgNode) -> set[str]:
    out = set()
    for n in payload.preorder():
        if n.kind == "varDecl" and n.get("varName"):
            out.add(n.get("varName"))
        if n.kind == "loop" and n.get("iteratedName"):
            out.add(n.get("iteratedName"))
    return out


def _translate_pos(op: EditOp, x_root: ApgNode, y_root: ApgNode, y_anchor_uid, uid_map: dict) -> tuple | None:
    """Position of an add in the target, found through matched siblings."""
    x_by, x_par = _index(x_root)
    y_by, y_par = _index(y_root)
    xa, ya = x_by.get(op.anchor), y_by.get(y_anchor_uid)
    if xa is None or ya is None:
        return op.pos
    how, k = op.pos
    if how == "child":
        y_pos = {id(c): j for j, c in enumerate(ya.children)}

        def y_index(xc: ApgNode) -> int | None:
            yc = y_by.get(uid_map.get(xc.uid))
            return y_pos.get(id(yc)) if yc is not None else None

        for xc in reversed(xa.children[:k]):
            j = y_index(xc)
            if j is not None:
                return ("child", j + 1)
        for xc in xa.children[k:]:
            j = y_index(xc)
            if j is not None:
                return ("child", j)
        return ("child", min(k, len(ya.children)) if xa.children else 0)
    xp, yp = x_par.get(id(xa)), y_par.get(id(ya))
    if xp is None or yp is None:
        return op.pos
    i = next(j for j, c in enumerate(xp.children) if c is xa)
    yi = next(j for j, c in enumerate(yp.children) if c is ya)
    count = 1
    for xc, yc in zip(xp.children[i + 1 : i + k], yp.children[yi + 1 :]):
        if uid_map.get(xc.uid) != yc.uid:
            break
        count += 1
    return ("parent", count)


def adapt_edit_script(t: EditScript, x: Apg, y: Apg) -> EditScript:
    """Re-anchor ``t`` (derived against ``x``) onto ``y`` and rewrite payloads.

    Both trees are edited alongside so that child positions of later ops are
    translated through the siblings they follow in the intermediate trees.
    """
    al = align_apgs(x, y)
    uid_map = {a.uid: b.uid for a, b in al.pairs}
    uid_map[x.root.uid] = y.root.uid
    maps = _value_maps(al.correspondence)
    y_names = namespace(y)
    declared: set[str] = set()
    for op in t.ops:
        if op.payload is not None:
            declared |= {_rewrite("varName", d, maps) for d in _declared_by(op.payload)}

    x_work, y_work = clone_tree(x.root), clone_tree(y.root)
    x_ok = True  # whether ``t`` still replays on x
    out = EditScript()
    for i, op in enumerate(t.ops):
        new_anchor = uid_map.get(op.anchor)
        reason = None
        if new_anchor is None:
            created = isinstance(op.anchor, tuple) and op.anchor[:1] == ("new",)
            reason = "anchor was created by a dropped op" if created else "anchor has no counterpart in the target"
        y_by, _ = _index(y_work)
        y_anchor = y_by.get(new_anchor)
        line = y_anchor.line if y_anchor is not None else 0
        payload = None
        if reason is None and op.payload is not None:
            payload = clone_tree(op.payload)
            for n in payload.preorder():
                n.components = tuple((r, _rewrite(r, v, maps)) for r, v in n.components)
                n.line = line if op.type != "add" else 0
            reason = _payload_ok(payload, y_names, declared)
        pos = op.pos
        if reason is None and op.type == "add" and x_ok:
            pos = _translate_pos(op, x_work, y_work, new_anchor, uid_map)
        if x_ok:
            try:
                apply_op(x_work, op, i)
            except ApplyError:
                x_ok = False
        if reason is None:
            adopted = op.adopted_roles[: pos[1]] if pos and pos[0] == "parent" else op.adopted_roles
            new_op = EditOp(op.type, new_anchor, payload, pos, adopted, line)
            try:
                apply_op(y_work, new_op, len(out.ops))
            except ApplyError as exc:
                reason = f"does not apply to the target: {exc}"
            else:
                if op.type == "add":
                    new_op.line = _index(y_work)[0][payload.uid].line
                out.ops.append(new_op)
                for n in payload.preorder() if payload is not None else ():
                    uid_map[n.uid] = n.uid
        if reason is not None:
            out.dropped.append((i, reason))
    return out


# -- triangulation ------------------------------------------------------------


@dataclass
class TriangulationResult:
    ques_lines: set[int]
    ans_lines: set[int]

    @property
    def relevant(self) -> bool:
        return bool(self.ques_lines)


def triangulate(q: Apg, a: Apg, p: Apg) -> TriangulationResult:
    """Lines of the question and answer that bear on the pattern's scenario.

    Question lines are those whose nodes align to the pattern; when some of
    them also reappear in the answer, only those are kept so that context the
    answer never mentions is not mistaken for something it deletes. Answer
    lines are those aligned to the relevant question nodes plus any line
    carrying a node the question lacks entirely (an inserted fix line).
    """
    score = similarity(p, q)
    fwd = score.alignment.forward() if score.alignment else {}
    matched = [fwd[id(pn)] for pn, frac in score.per_node if frac >= MIN_NODE_AGREEMENT and id(pn) in fwd]
    q_to_a = align_apgs(q, a)
    in_answer = q_to_a.forward()
    ques = {n.line for n in matched if id(n) in in_answer} or {n.line for n in matched}
    if not ques:
        return TriangulationResult(set(), set())
    pruned = prune_apg(q, ques)
    ans = {y.line for x, y in align_apgs(pruned, a).pairs if x.line in ques}
    full = q_to_a.backward()
    ans |= {n.line for n in a.nodes() if id(n) not in full}
    return TriangulationResult(ques, ans)
