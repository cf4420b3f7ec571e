"""Alignment cost against an exhaustive search over all ordered tree mappings."""

import random
from fractions import Fraction

from espfix.align import KIND_CHANGE, align_apgs, rename_cost
from espfix.apg import apg_of, clone_apg

from conftest import CAST_QUESTION
from trees import random_apg


def _ancestors(root):
    anc = {}

    def walk(n, chain):
        anc[id(n)] = chain
        for c in n.children:
            walk(c, chain | {id(n)})

    walk(root, frozenset())
    return anc


def brute_force_distance(x, y) -> Fraction:
    """Minimum cost over every mapping preserving ancestry and sibling order."""
    xs, ys = x.nodes(), y.nodes()
    ax, ay = _ancestors(x.root), _ancestors(y.root)
    best = [Fraction(len(xs) + len(ys))]

    def cost_of(a, b):
        return KIND_CHANGE if a.kind != b.kind else rename_cost(a, b)

    def search(i, last_j, pairs, cost):
        # every matched pair saves one delete and one insert, so this bounds below
        left = min(len(xs) - i, len(ys) - last_j - 1)
        if cost + len(xs) + len(ys) - 2 * (len(pairs) + left) >= best[0]:
            return
        if i == len(xs):
            best[0] = cost + len(xs) + len(ys) - 2 * len(pairs)
            return
        a = xs[i]
        for j in range(last_j + 1, len(ys)):
            b = ys[j]
            if all((id(pa) in ax[id(a)]) == (id(pb) in ay[id(b)]) for pa, pb in pairs):
                search(i + 1, j, pairs + [(a, b)], cost + cost_of(a, b))
        search(i + 1, last_j, pairs, cost)

    search(0, -1, [], Fraction(0))
    return best[0]


def test_alignment_matches_brute_force():
    rng = random.Random(2024)
    checked = 0
    for _ in range(600):
        x, y = random_apg(rng, 6), random_apg(rng, 6)
        assert align_apgs(x, y).cost == brute_force_distance(x, y)
        checked += 1
    assert checked >= 500


def test_identity_alignment_costs_nothing():
    q = apg_of(CAST_QUESTION)
    al = align_apgs(q, clone_apg(q))
    assert al.cost == 0 and len(al.pairs) == len(q)


def test_toarray_cast_correspondence(cast_pattern):
    q = apg_of(CAST_QUESTION)
    al = align_apgs(q, cast_pattern.body)
    kinds = {(a.kind, b.kind) for a, b in al.pairs}
    assert ("varDecl", "varDecl") in kinds and ("methodCall", "methodCall") in kinds
    corr = set(al.correspondence)
    assert ("targetType", "String[]", "_WILDCARD_1[]") in corr
    assert ("receiverName", "image_urls", "$v1") in corr
    assert ("line", "3", "4") in corr


def test_mapping_is_a_valid_tree_mapping():
    rng = random.Random(5)
    for _ in range(200):
        x, y = random_apg(rng, 8), random_apg(rng, 8)
        al = align_apgs(x, y)
        pairs = al.pairs + al.renamed
        ax, ay = _ancestors(x.root), _ancestors(y.root)
        order_x = {id(n): i for i, n in enumerate(x.root.preorder())}
        order_y = {id(n): i for i, n in enumerate(y.root.preorder())}
        assert len({id(a) for a, _ in pairs}) == len(pairs) == len({id(b) for _, b in pairs})
        for a1, b1 in pairs:
            for a2, b2 in pairs:
                assert (id(a1) in ax[id(a2)]) == (id(b1) in ay[id(b2)])
                assert (order_x[id(a1)] < order_x[id(a2)]) == (order_y[id(b1)] < order_y[id(b2)])
