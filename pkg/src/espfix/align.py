"""Tree alignment, component correspondence and similarity scores over APGs."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from espfix.apg import DERIVED_ROLES, OPTIONAL_ROLES, Apg, ApgNode, normalize

# Pairing nodes of different kinds costs the same as deleting one and
# inserting the other; the mapping search prefers delete+insert on that tie.
KIND_CHANGE = Fraction(2)

TOKEN_RE = re.compile(r"_WILDCARD_[1-9]+|_ABSTRACT_[1-9]+|\$v[0-9]+")
_CAPTURE = r"([A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)*)"


def is_wildcard(tok: str) -> bool:
    return tok.startswith("_WILDCARD_")


def is_abstract(tok: str) -> bool:
    return tok.startswith("_ABSTRACT_")


def has_pattern_token(value: str) -> bool:
    return TOKEN_RE.search(value) is not None


@dataclass
class Binding:
    wildcards: dict[str, str] = field(default_factory=dict)
    abstracts: dict[str, str] = field(default_factory=dict)
    vars: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_flat(cls, flat: dict[str, str]) -> "Binding":
        b = cls()
        for tok, val in flat.items():
            if is_wildcard(tok):
                b.wildcards[tok] = val
            elif is_abstract(tok):
                b.abstracts[tok] = val
            else:
                b.vars[tok] = val
        return b

    def flat(self) -> dict[str, str]:
        return {**self.wildcards, **self.abstracts, **self.vars}


def match_value(
    pattern_value: str,
    value: str,
    role: str,
    abstracts: dict[str, frozenset[str]],
    binding: dict[str, str] | None = None,
) -> dict[str, str] | None:
    """Match one pattern component value; returns the extended binding or None."""
    binding = {} if binding is None else binding
    pv, v = normalize(role, pattern_value), normalize(role, value)
    toks = TOKEN_RE.findall(pv)
    if not toks:
        return binding if pv == v else None
    m = re.fullmatch(_pattern_regex(pv), v)
    if m is None:
        return None
    out = dict(binding)
    for tok, got in zip(toks, m.groups()):
        if is_abstract(tok):
            allowed = {normalize(role, a) for a in abstracts.get(tok, ())}
            if got not in allowed:
                return None
        if out.get(tok, got) != got:
            return None
        out[tok] = got
    return out


def _pattern_regex(pv: str) -> str:
    parts: list[str] = []
    pos = 0
    for m in TOKEN_RE.finditer(pv):
        parts.append(re.escape(pv[pos : m.start()]))
        parts.append(_CAPTURE)
        pos = m.end()
    parts.append(re.escape(pv[pos:]))
    return "".join(parts)


def compatible(a: str, b: str, role: str, abstracts_a=None, abstracts_b=None) -> bool:
    """Binding-free compatibility, either side may carry pattern tokens."""
    if normalize(role, a) == normalize(role, b):
        return True
    if has_pattern_token(a) and match_value(a, b, role, abstracts_a or {}) is not None:
        return True
    return has_pattern_token(b) and match_value(b, a, role, abstracts_b or {}) is not None


def keyed_components(node: ApgNode, include_derived: bool) -> dict[tuple[str, int], str]:
    """Components keyed by (role, occurrence index) so repeated roles line up."""
    seen: Counter = Counter()
    out = {}
    for role, value in node.components:
        if not include_derived and role in DERIVED_ROLES:
            continue
        out[(role, seen[role])] = value
        seen[role] += 1
    return out


def component_match_fraction(x: ApgNode, y: ApgNode, abstracts_x=None, abstracts_y=None) -> Fraction:
    """Share of non-derived components on which two same-kind nodes agree."""
    if x.kind != y.kind:
        return Fraction(0)
    cx, cy = keyed_components(x, False), keyed_components(y, False)
    keys = set(cx) | set(cy)
    if not keys:
        return Fraction(1)
    hits = 0
    for key in keys:
        if key in cx and key in cy:
            hits += compatible(cx[key], cy[key], key[0], abstracts_x, abstracts_y)
        else:
            hits += key[0] in OPTIONAL_ROLES
    return Fraction(hits, len(keys))


def rename_cost(x: ApgNode, y: ApgNode, abstracts_x=None, abstracts_y=None) -> Fraction:
    if x.kind != y.kind:
        return KIND_CHANGE
    return 1 - component_match_fraction(x, y, abstracts_x, abstracts_y)


class _Postorder:
    """Postorder numbering (1-based) with leftmost-leaf indices and keyroots."""

    def __init__(self, root: ApgNode):
        self.nodes: list[ApgNode | None] = [None]
        self.leftmost: list[int] = [0]
        self._walk(root)
        seen: dict[int, int] = {}
        for i in range(1, len(self.nodes)):
            seen[self.leftmost[i]] = i
        self.keyroots = sorted(seen.values())

    def _walk(self, node: ApgNode) -> int:
        first = None
        for c in node.children:
            idx = self._walk(c)
            if first is None:
                first = self.leftmost[idx]
        self.nodes.append(node)
        self.leftmost.append(first if first is not None else len(self.nodes) - 1)
        return len(self.nodes) - 1


class _Mapper:
    """Zhang-Shasha ordered tree edit distance with mapping recovery."""

    def __init__(self, x: Apg, y: Apg):
        self.x, self.y = _Postorder(x.root), _Postorder(y.root)
        self.ax, self.ay = x.abstracts, y.abstracts
        self.costs: dict[tuple[int, int], Fraction] = {}
        n, m = len(self.x.nodes), len(self.y.nodes)
        self.tree = [[Fraction(0)] * m for _ in range(n)]
        for i in self.x.keyroots:
            for j in self.y.keyroots:
                self._forest(i, j)

    def rename(self, i: int, j: int) -> Fraction:
        key = (i, j)
        if key not in self.costs:
            a, b = self.x.nodes[i], self.y.nodes[j]
            if a.kind == "root" or b.kind == "root":
                # roots only ever map onto each other
                cost = Fraction(0) if a.kind == b.kind else Fraction(len(self.x.nodes) + len(self.y.nodes))
            else:
                cost = rename_cost(a, b, self.ax, self.ay)
            self.costs[key] = cost
        return self.costs[key]

    def _forest(self, i: int, j: int) -> dict[tuple[int, int], Fraction]:
        lx, ly = self.x.leftmost, self.y.leftmost
        li, lj = lx[i], ly[j]
        fd = {(li - 1, lj - 1): Fraction(0)}
        for a in range(li, i + 1):
            fd[(a, lj - 1)] = fd[(a - 1, lj - 1)] + 1
        for b in range(lj, j + 1):
            fd[(li - 1, b)] = fd[(li - 1, b - 1)] + 1
        for a in range(li, i + 1):
            for b in range(lj, j + 1):
                drop, add = fd[(a - 1, b)] + 1, fd[(a, b - 1)] + 1
                if lx[a] == li and ly[b] == lj:
                    fd[(a, b)] = min(drop, add, fd[(a - 1, b - 1)] + self.rename(a, b))
                    self.tree[a][b] = fd[(a, b)]
                else:
                    fd[(a, b)] = min(drop, add, fd[(lx[a] - 1, ly[b] - 1)] + self.tree[a][b])
        return fd

    def distance(self) -> Fraction:
        return self.tree[-1][-1]

    def mapping(self) -> list[tuple[ApgNode | None, ApgNode | None]]:
        lx, ly = self.x.leftmost, self.y.leftmost
        xs, ys = self.x.nodes, self.y.nodes
        out: list[tuple[ApgNode | None, ApgNode | None]] = []
        stack = [(len(xs) - 1, len(ys) - 1)]
        while stack:
            i, j = stack.pop()
            fd = self._forest(i, j)
            li, lj = lx[i], ly[j]
            a, b = i, j
            while a >= li or b >= lj:
                if a < li:
                    out.append((None, ys[b]))
                    b -= 1
                    continue
                if b < lj:
                    out.append((xs[a], None))
                    a -= 1
                    continue
                here = fd[(a, b)]
                whole = lx[a] == li and ly[b] == lj
                same_kind = xs[a].kind == ys[b].kind
                if whole and same_kind and here == fd[(a - 1, b - 1)] + self.rename(a, b):
                    out.append((xs[a], ys[b]))
                    a, b = a - 1, b - 1
                elif here == fd[(a - 1, b)] + 1:
                    out.append((xs[a], None))
                    a -= 1
                elif here == fd[(a, b - 1)] + 1:
                    out.append((None, ys[b]))
                    b -= 1
                elif whole:
                    out.append((xs[a], ys[b]))
                    a, b = a - 1, b - 1
                else:
                    stack.append((a, b))
                    a, b = lx[a] - 1, ly[b] - 1
        return out


def tree_mapping(x: Apg, y: Apg) -> list[tuple[ApgNode | None, ApgNode | None]]:
    """Optimal ordered tree mapping; None on one side marks an insert or delete."""
    return _Mapper(x, y).mapping()


@dataclass
class Alignment:
    """Result of aligning ``x`` onto ``y``.

    ``pairs`` holds same-kind matches, ``renamed`` the kind-changing ones;
    ``correspondence`` lists (role, x value, y value) for every agreeing
    component of a matched pair plus a ("line", x line, y line) entry.
    """

    pairs: list[tuple[ApgNode, ApgNode]]
    renamed: list[tuple[ApgNode, ApgNode]]
    deleted: list[ApgNode]
    inserted: list[ApgNode]
    correspondence: list[tuple[str, str, str]]
    cost: Fraction

    def forward(self) -> dict[int, ApgNode]:
        return {id(a): b for a, b in self.pairs}

    def backward(self) -> dict[int, ApgNode]:
        return {id(b): a for a, b in self.pairs}


def align_apgs(x: Apg, y: Apg) -> Alignment:
    """Minimum-cost ordered tree mapping between two APGs."""
    mapping = tree_mapping(x, y)
    order_x = {id(n): i for i, n in enumerate(x.root.preorder())}
    order_y = {id(n): i for i, n in enumerate(y.root.preorder())}
    pairs, renamed, deleted, inserted = [], [], [], []
    cost = Fraction(0)
    for a, b in mapping:
        if a is None:
            inserted.append(b)
            cost += 1
        elif b is None:
            deleted.append(a)
            cost += 1
        elif a.kind == "root":
            continue
        elif a.kind == b.kind:
            pairs.append((a, b))
            cost += rename_cost(a, b, x.abstracts, y.abstracts)
        else:
            renamed.append((a, b))
            cost += KIND_CHANGE
    pairs.sort(key=lambda p: order_x[id(p[0])])
    renamed.sort(key=lambda p: order_x[id(p[0])])
    deleted.sort(key=lambda n: order_x[id(n)])
    inserted.sort(key=lambda n: order_y[id(n)])
    corr: list[tuple[str, str, str]] = []
    for a, b in pairs:
        ca, cb = keyed_components(a, False), keyed_components(b, False)
        for key in ca:
            if key in cb and compatible(ca[key], cb[key], key[0], x.abstracts, y.abstracts):
                corr.append((key[0], ca[key], cb[key]))
        corr.append(("line", str(a.line), str(b.line)))
    return Alignment(pairs, renamed, deleted, inserted, corr, cost)


@dataclass
class SimilarityScore:
    value: Fraction
    per_node: list[tuple[ApgNode, Fraction]]
    binding: Binding
    alignment: Alignment | None = None

    def __float__(self) -> float:
        return float(self.value)

    @property
    def perfect(self) -> bool:
        return self.value == 1


def similarity(pattern: Apg, snippet: Apg, binding: Binding | None = None) -> SimilarityScore:
    """Pattern-normalized similarity with consistent token binding.

    Walks matched pairs in pattern preorder; each wildcard, abstract or
    pattern variable binds to the first value it meets and must agree after.
    """
    flat = dict(binding.flat()) if binding else {}
    nodes = pattern.nodes()
    if not nodes:
        return SimilarityScore(Fraction(0), [], Binding.from_flat(flat))
    al = align_apgs(pattern, snippet)
    fwd = al.forward()
    per_node: list[tuple[ApgNode, Fraction]] = []
    for p in nodes:
        s = fwd.get(id(p))
        if s is None:
            per_node.append((p, Fraction(0)))
            continue
        cp, cs = keyed_components(p, True), keyed_components(s, True)
        if not cp:
            per_node.append((p, Fraction(1)))
            continue
        hits = 0
        for key, pv in cp.items():
            if key not in cs:
                hits += key[0] in OPTIONAL_ROLES
                continue
            got = match_value(pv, cs[key], key[0], pattern.abstracts, flat)
            if got is not None:
                flat = got
                hits += 1
        per_node.append((p, Fraction(hits, len(cp))))
    value = sum((f for _, f in per_node), Fraction(0)) / len(nodes)
    return SimilarityScore(value, per_node, Binding.from_flat(flat), al)


def _directed_overlap(a: Apg, b: Apg) -> Fraction:
    al = align_apgs(a, b)
    return sum((component_match_fraction(x, y, a.abstracts, b.abstracts) for x, y in al.pairs), Fraction(0))


def snippet_distance(a: Apg, b: Apg) -> Fraction:
    """1 minus the matched-component mass normalized by the larger APG."""
    size = max(len(a), len(b))
    if size == 0:
        return Fraction(0)
    overlap = max(_directed_overlap(a, b), _directed_overlap(b, a))
    return 1 - overlap / size
