"""Random APG generation shared by the oracle tests."""

from __future__ import annotations

import random

from espfix.apg import Apg, ApgNode

KINDS = ("methodCall", "varDecl", "classCast", "loop", "varRef", "literal")
ROLES = ("stmt", "init", "arg", "body", "operand")
COMPONENTS = {
    "methodCall": ("calleeName", ("get", "put", "size", "toArray")),
    "varDecl": ("varName", ("a", "b", "c")),
    "classCast": ("targetType", ("String[]", "URL[]", "Object")),
    "loop": ("iteratedName", ("x", "y")),
    "varRef": ("varName", ("a", "b", "c", "d")),
    "literal": ("literalKind", ("int", "string")),
}


def random_node(rng: random.Random) -> ApgNode:
    kind = rng.choice(KINDS)
    role, values = COMPONENTS[kind]
    comps = [(role, rng.choice(values))]
    if kind == "methodCall" and rng.random() < 0.5:
        comps.insert(0, ("receiverName", rng.choice(("list", "map"))))
    return ApgNode(kind, tuple(comps), role=rng.choice(ROLES))


def random_apg(rng: random.Random, max_nodes: int) -> Apg:
    """Random tree with 0..max_nodes nodes under a synthetic root."""
    root = ApgNode("root", role="root")
    nodes = [root]
    for _ in range(rng.randint(0, max_nodes)):
        parent = rng.choice(nodes)
        child = random_node(rng)
        parent.children.insert(rng.randint(0, len(parent.children)), child)
        nodes.append(child)
    for i, n in enumerate(root.preorder()):
        n.uid = i
        n.line = i
    return Apg(root)
