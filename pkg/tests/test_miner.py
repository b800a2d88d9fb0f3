from __future__ import annotations

import random
from fractions import Fraction

import pytest

from annomine.encoding import UP, canonical_pattern, complete_tree, parse_text
from annomine.miner import (
    PatternExplosion,
    embeds,
    enumerate_frequent_oracle,
    mine_patterns,
)
from conftest import random_tree_items

T = parse_text


class TestEmbeds:
    # reference tree a(b, c(b))
    TREE = T("a b UP c b UP UP")

    def test_indirect_descendant(self):
        assert embeds(T("a c"), self.TREE)

    def test_repeated_label_ordering(self):
        assert embeds(T("a b UP b"), self.TREE)

    def test_root_has_no_ancestor(self):
        assert not embeds(T("c a"), self.TREE)

    def test_left_to_right_order_required(self):
        # pattern a(c, b): the only b after c sits inside c's subtree, so the
        # sibling pair cannot map to disjoint subtrees in order
        assert not embeds(T("a c UP b"), self.TREE)
        assert not embeds(T("a c b UP UP b"), self.TREE)

    def test_single_node(self):
        assert embeds(("b",), self.TREE)
        assert not embeds(("x",), self.TREE)

    def test_cousins_must_map_to_disjoint_subtrees(self):
        # pattern a(b, b): second b must lie right of the first b's subtree
        assert not embeds(T("a b UP b"), T("a b b UP UP"))


class TestMinePatterns:
    def test_three_identical_two_node_trees(self):
        forest = [T("a b UP")] * 3
        assert mine_patterns(forest, 1.0) == {("a",), ("b",), ("a", "b")}

    def test_full_support_on_mixed_forest(self):
        forest = [T("a b UP"), T("a c UP"), T("a")]
        assert mine_patterns(forest, 1.0) == {("a",)}

    def test_thresholds_above_one_third(self):
        forest = [T("a b UP"), T("a c UP"), T("a")]
        # 1/3-support patterns (b, c, a b, a c) fail both 0.6 and 0.34
        assert mine_patterns(forest, 0.6) == {("a",)}
        assert mine_patterns(forest, 0.34) == {("a",)}

    def test_threshold_exactly_one_third(self):
        forest = [T("a b UP"), T("a c UP"), T("a")]
        expected = {("a",), ("b",), ("c",), ("a", "b"), ("a", "c")}
        assert mine_patterns(forest, Fraction(1, 3)) == expected
        assert enumerate_frequent_oracle(forest, Fraction(1, 3)) == expected

    def test_strict_comparison_flag(self):
        forest = [T("a b UP"), T("a c UP")]
        assert mine_patterns(forest, 0.5) == {("a",), ("b",), ("c",), ("a", "b"), ("a", "c")}
        assert mine_patterns(forest, 0.5, strict=True) == {("a",)}

    def test_duplicate_trees_count_separately(self):
        forest = [T("a b UP"), T("a b UP"), T("a c UP")]
        got = mine_patterns(forest, Fraction(2, 3))
        assert ("a", "b") in got and ("b",) in got
        assert ("c",) not in got

    def test_deep_embedded_pattern(self):
        forest = [T("a x b UP UP"), T("a b UP"), T("a y UP b UP")]
        assert ("a", "b") in mine_patterns(forest, 1.0)

    def test_empty_forest_rejected(self):
        with pytest.raises(ValueError):
            mine_patterns([], 1.0)

    def test_pattern_cap(self):
        forest = [T("a b c d UP UP UP")] * 3
        with pytest.raises(PatternExplosion):
            mine_patterns(forest, 1.0, pattern_cap=5)

    def test_outputs_are_canonical_patterns(self):
        forest = [random_tree_items(random.Random(7), 8, "abcd") for _ in range(4)]
        for items in mine_patterns(forest, 0.5):
            assert canonical_pattern(items).items == items

    def test_anti_monotonicity_on_sample(self):
        forest = [random_tree_items(random.Random(3), 7, "abc") for _ in range(4)]
        mined = mine_patterns(forest, 0.5)
        for items in mined:
            if len(items) == 1:
                continue
            # every embedded sub-pattern of a frequent pattern is frequent
            subs = enumerate_frequent_oracle([complete_tree(items).items], 1.0)
            assert subs <= mined


@pytest.mark.parametrize("min_support", [Fraction("0.34"), Fraction("0.67"), Fraction(1)])
def test_oracle_equivalence_random_forests(min_support):
    rng = random.Random(int(min_support * 100))
    for _ in range(40):
        forest = [
            random_tree_items(rng, 8, "abcd"[: rng.randint(1, 4)])
            for _ in range(rng.randint(3, 5))
        ]
        assert mine_patterns(forest, min_support) == \
            enumerate_frequent_oracle(forest, min_support)


def test_mining_works_on_interned_integer_labels():
    forest = [(0, 1, UP), (0, 1, UP), (0, 2, UP, 1, UP)]
    got = mine_patterns(forest, 1.0)
    assert (0, 1) in got and (1,) in got and (2,) not in got
