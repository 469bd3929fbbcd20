from __future__ import annotations

import math
import random

import pytest

from medcosmos.extraction import EntityType
from medcosmos.palette import NEUTRAL_GRAY, TYPE_COLORS, hex_to_srgb, srgb_to_linear
from medcosmos.tree import (
    AssociationTree,
    TreeError,
    add_node,
    build_tree,
    common_father,
    node_color,
    radial_layout,
    shared_entity_components,
    traverse_intersections,
    tree_to_dict,
)
from tests.conftest import make_entity_set


def mes(set_id: str, *names: str, etype: EntityType = EntityType.dis):
    return make_entity_set(set_id, *[(n, etype) for n in names])


def child_ids(node) -> list[str]:
    return [c.id for c in node.children if c.kind == "mes"]


class TestBuildTree:
    def test_empty_list_bare_root(self):
        tree = build_tree([])
        assert tree.root.kind == "root"
        assert tree.root.children == []
        assert tree.index == {}

    def test_single_set_with_leaves(self):
        tree = build_tree([mes("A", "a", "b")])
        assert child_ids(tree.root) == ["A"]
        node = tree.index["A"]
        assert [c.kind for c in node.children] == ["me", "me"]
        assert [c.entity[0] for c in node.children] == ["a", "b"]

    def test_intersection_nests_and_disjoint_stays_top(self):
        tree = build_tree([mes("A", "a", "b"), mes("B", "b", "c"), mes("C", "x", "y")])
        assert child_ids(tree.root) == ["A", "C"]
        assert child_ids(tree.index["A"]) == ["B"]

    def test_duplicate_id_rejected(self):
        with pytest.raises(TreeError):
            build_tree([mes("A", "a"), mes("A", "b")])


class TestAddNode:
    def test_disjoint_attaches_to_root(self):
        tree = build_tree([mes("A", "a", "b")])
        add_node(tree, mes("Y", "c", "d"))
        assert child_ids(tree.root) == ["A", "Y"]

    def test_single_intersection_nests(self):
        tree = build_tree([mes("A", "a", "b")])
        add_node(tree, mes("B", "b", "c"))
        assert child_ids(tree.root) == ["A"]
        assert child_ids(tree.index["A"]) == ["B"]

    def test_multi_intersection_regroups_under_root(self):
        tree = build_tree([mes("A", "a", "b"), mes("C", "c", "d")])
        add_node(tree, mes("D", "b", "c"))
        assert child_ids(tree.root) == ["A", "C", "D"]
        parents = {tree.index[x].parent.id for x in ("A", "C", "D")}
        assert parents == {"root"}

    def test_multi_intersection_regroups_under_deep_ancestor(self):
        # A{a,b} -> B{b,c}; A -> E{a,z}; new F{c,z} intersects B and E whose
        # common father is A, so B, E, F become siblings under A.
        tree = build_tree([mes("A", "a", "b"), mes("B", "b", "c"), mes("E", "a", "z")])
        assert child_ids(tree.index["A"]) == ["B", "E"]
        add_node(tree, mes("F", "c", "z"))
        assert child_ids(tree.index["A"]) == ["B", "E", "F"]
        assert child_ids(tree.root) == ["A"]

    def test_detached_subtrees_stay_intact(self):
        tree = build_tree([mes("A", "a"), mes("B", "a", "b"), mes("C", "x")])
        # B nests under A; adding D{b,x} intersects B and C -> regroup at root,
        # and B keeps no children while A keeps none after B is pulled out.
        add_node(tree, mes("D", "b", "x"))
        assert child_ids(tree.root) == ["A", "B", "C", "D"]

    def test_duplicate_rejected(self):
        tree = build_tree([mes("A", "a")])
        with pytest.raises(TreeError):
            add_node(tree, mes("A", "a"))


class TestTraverseIntersections:
    def test_bare_root(self):
        tree = AssociationTree.empty()
        found, checked = traverse_intersections(tree.root, {("a", EntityType.dis)})
        assert found == []
        assert checked == set()

    def test_single_hit(self):
        tree = build_tree([mes("A", "a")])
        found, checked = traverse_intersections(tree.root, {("a", EntityType.dis)})
        assert [n.id for n in found] == ["A"]
        assert checked == {"A"}

    def test_chain_preorder(self):
        tree = build_tree([mes("A", "a", "b"), mes("B", "b", "c")])
        found, checked = traverse_intersections(tree.root, {("b", EntityType.dis)})
        assert [n.id for n in found] == ["A", "B"]
        assert checked == {"A", "B"}

    def test_match_requires_type_equality(self):
        tree = build_tree([mes("A", "a")])
        found, _ = traverse_intersections(tree.root, {("a", EntityType.sym)})
        assert found == []


class TestCommonFather:
    def test_single_node_gives_parent(self):
        tree = build_tree([mes("A", "a", "b"), mes("B", "b", "c")])
        assert common_father(tree.root, [tree.index["B"]]).id == "A"
        assert common_father(tree.root, [tree.index["A"]]).id == "root"

    def test_two_children_of_root(self):
        tree = build_tree([mes("A", "a"), mes("C", "c")])
        assert common_father(tree.root, [tree.index["A"], tree.index["C"]]).id == "root"

    def test_chain_gives_shallower_nodes_parent(self):
        tree = build_tree([mes("A", "a", "b"), mes("B", "b", "c"), mes("G", "c", "d")])
        # chain root -> A -> B -> G
        assert child_ids(tree.index["B"]) == ["G"]
        result = common_father(tree.root, [tree.index["B"], tree.index["G"]])
        assert result.id == "A"

    def test_detached_node_rejected(self):
        tree = build_tree([mes("A", "a")])
        orphan = build_tree([mes("Z", "z")]).index["Z"]
        with pytest.raises(TreeError):
            common_father(tree.root, [orphan])

    def test_empty_rejected(self):
        tree = AssociationTree.empty()
        with pytest.raises(TreeError):
            common_father(tree.root, [])


class TestNodeColor:
    def test_pure_type_exact_color(self):
        assert node_color({EntityType.sym: 5}) == TYPE_COLORS[int(EntityType.sym)]

    def test_fifty_fifty_is_linear_midpoint(self):
        mixed = node_color({EntityType.dis: 1, EntityType.sym: 1})
        lin_mixed = [srgb_to_linear(c) for c in hex_to_srgb(mixed)]
        lin_a = [srgb_to_linear(c) for c in hex_to_srgb(TYPE_COLORS[0])]
        lin_b = [srgb_to_linear(c) for c in hex_to_srgb(TYPE_COLORS[1])]
        for m, a, b in zip(lin_mixed, lin_a, lin_b):
            assert m == pytest.approx((a + b) / 2, abs=0.005)  # 8-bit hex rounding

    def test_weighted_mix_matches_hand_arithmetic(self):
        counts = {EntityType.dis: 2, EntityType.sym: 1, EntityType.bod: 1}
        mixed = node_color(counts)
        expected = [0.0, 0.0, 0.0]
        for etype, weight in ((EntityType.dis, 0.5), (EntityType.sym, 0.25), (EntityType.bod, 0.25)):
            rgb = hex_to_srgb(TYPE_COLORS[int(etype)])
            for i in range(3):
                expected[i] += weight * srgb_to_linear(rgb[i])
        lin_mixed = [srgb_to_linear(c) for c in hex_to_srgb(mixed)]
        for m, e in zip(lin_mixed, expected):
            assert m == pytest.approx(e, abs=0.005)

    def test_empty_set_neutral_gray(self):
        assert node_color({}) == NEUTRAL_GRAY


class TestRadialLayout:
    def test_two_equal_children_split_half(self):
        tree = build_tree([mes("A", "a", "b"), mes("C", "c", "d")])
        coords = radial_layout(tree)
        width_a = coords.extent["A"][1] - coords.extent["A"][0]
        width_c = coords.extent["C"][1] - coords.extent["C"][0]
        assert width_a == pytest.approx(math.pi)
        assert width_c == pytest.approx(math.pi)

    def test_chain_keeps_angle_and_increments_ring(self):
        tree = build_tree([mes("A", "a"), mes("B", "a")])
        coords = radial_layout(tree)
        assert coords.angle["A"] == pytest.approx(coords.angle["root"])
        assert coords.ring["root"] == 0
        assert coords.ring["A"] == 1
        assert coords.ring["B"] == 2

    def test_leaf_ratio_one_to_three(self):
        tree = build_tree([mes("A", "a"), mes("C", "x", "y", "z")])
        coords = radial_layout(tree)
        width_a = coords.extent["A"][1] - coords.extent["A"][0]
        width_c = coords.extent["C"][1] - coords.extent["C"][0]
        assert width_a == pytest.approx(math.pi / 2)
        assert width_c == pytest.approx(3 * math.pi / 2)

    def test_sibling_extents_disjoint(self):
        tree = build_tree([mes("A", "a", "b"), mes("C", "c"), mes("D", "d", "e")])
        coords = radial_layout(tree)
        spans = sorted(coords.extent[x] for x in ("A", "C", "D"))
        for (s1, e1), (s2, _) in zip(spans, spans[1:]):
            assert e1 <= s2 + 1e-12


def random_entity_sets(rng: random.Random, count: int = 20, alphabet: str = "abcdefgh"):
    sets = []
    for i in range(count):
        size = rng.randint(1, 4)
        names = rng.sample(alphabet, size)
        sets.append(mes(f"m{i}", *names))
    return sets


class TestTreeProperties:
    def test_node_conservation_random_sequences(self):
        rng = random.Random(0)
        for _ in range(50):
            sets = random_entity_sets(rng)
            tree = build_tree(sets)
            in_tree = sorted(n.id for n in tree.mes_nodes())
            assert in_tree == sorted(s.id for s in sets)
            # no node appears twice
            assert len(set(in_tree)) == len(in_tree)

    def test_rebuild_equivalence(self):
        rng = random.Random(1)
        for _ in range(20):
            sets = random_entity_sets(rng, count=12)
            built = build_tree(sets)
            folded = AssociationTree.empty()
            for s in sets:
                add_node(folded, s)
            assert tree_to_dict(built) == tree_to_dict(folded)

    def test_deterministic_structure(self):
        rng = random.Random(2)
        sets = random_entity_sets(rng, count=15)
        assert tree_to_dict(build_tree(sets)) == tree_to_dict(build_tree(sets))

    def test_components_grouped_into_one_branch_family(self):
        # Oracle: union-find components of shared entities; the tree must keep
        # every directly-sharing pair in one branch neighborhood.
        rng = random.Random(3)
        for _ in range(30):
            sets = random_entity_sets(rng, count=10)
            tree = build_tree(sets)
            for comp in shared_entity_components(sets):
                assert comp <= set(tree.index)
