"""Association tree of entity sets, grown incrementally.

Every inserted entity set becomes an inner node whose leaves are its
entities. A new set nests under the unique existing node it intersects;
when it intersects several, those nodes are detached and regrouped side by
side under their deepest common ancestor, so sets sharing entities end up
in one branch neighborhood. No node is ever dropped by regrouping.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .extraction import EntitySet, EntityType
from .palette import NEUTRAL_GRAY, TYPE_COLORS, mix_linear

log = logging.getLogger(__name__)

ROOT = "root"
MES = "mes"
ME = "me"

# Past this many inner nodes the view stops being readable.
NODE_WARN_LIMIT = 200


class TreeError(Exception):
    pass


@dataclass(eq=False)
class TreeNode:
    id: str
    kind: str
    color: str = NEUTRAL_GRAY
    entity: tuple[str, EntityType] | None = None  # me leaves
    entity_set_id: str | None = None  # mes nodes
    entity_keys: frozenset[tuple[str, EntityType]] = frozenset()
    counts_by_type: dict[EntityType, int] = field(default_factory=dict)
    children: list["TreeNode"] = field(default_factory=list)
    parent: "TreeNode | None" = None

    def attach(self, child: "TreeNode") -> None:
        child.parent = self
        self.children.append(child)

    def detach(self) -> None:
        if self.parent is None:
            raise TreeError(f"node {self.id} has no parent to detach from")
        self.parent.children.remove(self)
        self.parent = None

    def depth(self) -> int:
        d, node = 0, self
        while node.parent is not None:
            node = node.parent
            d += 1
        return d

    def ancestors_including_self(self) -> list["TreeNode"]:
        chain, node = [], self
        while node is not None:
            chain.append(node)
            node = node.parent
        return chain


@dataclass
class AssociationTree:
    root: TreeNode
    index: dict[str, TreeNode] = field(default_factory=dict)
    insertion_log: list[str] = field(default_factory=list)

    @classmethod
    def empty(cls) -> "AssociationTree":
        return cls(root=TreeNode(id=ROOT, kind=ROOT))

    def mes_nodes(self) -> list[TreeNode]:
        return [node for node in iter_preorder(self.root) if node.kind == MES]


def iter_preorder(root: TreeNode) -> Iterable[TreeNode]:
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(node.children))


def node_color(counts_by_type: dict[EntityType, int]) -> str:
    """Mixture color: type colors weighted by the set's per-type counts,
    averaged in linear RGB. An empty set gets the neutral gray sentinel."""
    items = [(etype, c) for etype, c in sorted(counts_by_type.items()) if c > 0]
    if not items:
        return NEUTRAL_GRAY
    return mix_linear([TYPE_COLORS[int(t)] for t, _ in items], [float(c) for _, c in items])


def _make_mes_node(mes: EntitySet) -> TreeNode:
    node = TreeNode(
        id=mes.id,
        kind=MES,
        color=node_color(mes.counts_by_type),
        entity_set_id=mes.id,
        entity_keys=frozenset(mes.entities),
        counts_by_type=dict(mes.counts_by_type),
    )
    for i, (normalized, etype) in enumerate(mes.entities):
        node.attach(
            TreeNode(
                id=f"{mes.id}.me{i}",
                kind=ME,
                color=TYPE_COLORS[int(etype)],
                entity=(normalized, etype),
            )
        )
    return node


def traverse_intersections(
    root: TreeNode, entities: Iterable[tuple[str, EntityType]]
) -> tuple[list[TreeNode], set[str]]:
    """Depth-first pre-order scan: inner nodes whose entity sets intersect
    the query, plus the set of all inner nodes checked."""
    query = frozenset(entities)
    intersecting: list[TreeNode] = []
    checked: set[str] = set()
    for node in iter_preorder(root):
        if node.kind != MES:
            continue
        checked.add(node.id)
        if query & node.entity_keys:
            intersecting.append(node)
    return intersecting, checked


def common_father(root: TreeNode, nodes: Sequence[TreeNode]) -> TreeNode:
    """Deepest node that is an ancestor of every input without being one of
    them (so a single node yields its parent); root when nothing deeper
    qualifies."""
    if not nodes:
        raise TreeError("common_father of an empty node list")
    chains = []
    for node in nodes:
        chain = node.ancestors_including_self()
        if chain[-1] is not root:
            raise TreeError(f"node {node.id} is not in the tree")
        chains.append(chain)
    common = set(id(n) for n in chains[0])
    for chain in chains[1:]:
        common &= set(id(n) for n in chain)
    excluded = {id(n) for n in nodes}
    candidates = [n for n in chains[0] if id(n) in common and id(n) not in excluded]
    if not candidates:
        return root
    return max(candidates, key=lambda n: n.depth())


def add_node(tree: AssociationTree, mes: EntitySet) -> AssociationTree:
    """Insert one entity set.

    Zero intersections: new child of root. One: nest under it. Several:
    compute their common father, detach them (subtrees intact), and attach
    them plus the new node as siblings under it (under root when the common
    father is root).
    """
    if mes.id in tree.index:
        raise TreeError(f"entity set {mes.id} already in tree")
    new_node = _make_mes_node(mes)
    intersecting, _checked = traverse_intersections(tree.root, mes.entities)

    if not intersecting:
        tree.root.attach(new_node)
    elif len(intersecting) == 1:
        intersecting[0].attach(new_node)
    else:
        father = common_father(tree.root, intersecting)
        target = tree.root if father is tree.root else father
        for node in intersecting:
            node.detach()
        for node in intersecting:
            target.attach(node)
        target.attach(new_node)

    tree.index[mes.id] = new_node
    tree.insertion_log.append(mes.id)
    if len(tree.index) > NODE_WARN_LIMIT:
        log.warning("association tree has %d inner nodes; view may be cluttered", len(tree.index))
    return tree


def build_tree(nodes_to_add: Sequence[EntitySet]) -> AssociationTree:
    """Fold :func:`add_node` over the sets in order, starting from a bare root."""
    seen: set[str] = set()
    for mes in nodes_to_add:
        if mes.id in seen:
            raise TreeError(f"duplicate entity set id {mes.id}")
        seen.add(mes.id)
    tree = AssociationTree.empty()
    for mes in nodes_to_add:
        add_node(tree, mes)
    return tree


@dataclass(frozen=True)
class RadialCoordinates:
    angle: dict[str, float]
    ring: dict[str, int]
    extent: dict[str, tuple[float, float]]


def _leaf_count(node: TreeNode) -> int:
    if not node.children:
        return 1
    return sum(_leaf_count(c) for c in node.children)


def radial_layout(tree: AssociationTree) -> RadialCoordinates:
    """Angular extent proportional to subtree leaf count, angle at the extent
    midpoint, ring equal to depth."""
    import math

    angle: dict[str, float] = {}
    ring: dict[str, int] = {}
    extent: dict[str, tuple[float, float]] = {}

    def place(node: TreeNode, start: float, end: float, depth: int) -> None:
        extent[node.id] = (start, end)
        angle[node.id] = (start + end) / 2.0
        ring[node.id] = depth
        total = _leaf_count(node)
        if not node.children:
            return
        cursor = start
        span = end - start
        for child in node.children:
            width = span * _leaf_count(child) / total
            place(child, cursor, cursor + width, depth + 1)
            cursor += width

    place(tree.root, 0.0, 2.0 * math.pi, 0)
    return RadialCoordinates(angle=angle, ring=ring, extent=extent)


def tree_to_dict(tree: AssociationTree, coords: RadialCoordinates | None = None) -> dict:
    """Nested export of the tree, optionally with radial coordinates."""

    def node_dict(node: TreeNode) -> dict:
        data: dict = {"id": node.id, "kind": node.kind, "color": node.color}
        if node.kind == ME and node.entity is not None:
            data["entity"] = {"normalized": node.entity[0], "type": node.entity[1].name}
        if node.kind == MES:
            data["entity_set_id"] = node.entity_set_id
            data["entities"] = [
                {"normalized": norm, "type": etype.name} for norm, etype in sorted(node.entity_keys)
            ]
        if coords is not None:
            data["angle"] = coords.angle[node.id]
            data["ring"] = coords.ring[node.id]
        data["children"] = [node_dict(c) for c in node.children]
        return data

    return node_dict(tree.root)


def shared_entity_components(sets: Sequence[EntitySet]) -> list[set[str]]:
    """Union-find oracle: groups of set ids connected by shared entities."""
    parent = {s.id: s.id for s in sets}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in itertools.combinations(sets, 2):
        if a.entity_keys() & b.entity_keys():
            ra, rb = find(a.id), find(b.id)
            if ra != rb:
                parent[ra] = rb
    groups: dict[str, set[str]] = {}
    for s in sets:
        groups.setdefault(find(s.id), set()).add(s.id)
    return list(groups.values())
