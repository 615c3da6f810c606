import math
import random

import numpy as np
import pytest

from ctrltree.errors import UnsupportedAtNodeLevel
from ctrltree.impurity import (
    Determinizer,
    DetMode,
    ImpurityMeasure,
    common_actions,
    determinize_preprocess,
    node_impurity,
    split_impurity,
)
from ctrltree.model import AxisAligned, Controller, NodeView, VariableMeta

import oracles
from conftest import random_controller

E = ImpurityMeasure.ENTROPY
G = ImpurityMeasure.GINI
MLE = ImpurityMeasure.MULTI_LABEL_ENTROPY
MLG = ImpurityMeasure.MULTI_LABEL_GINI

# frozen oracle values (computed with tests/oracles.py):
#   entropy_of_counts([1, 2, 1])            -> 1.5
#   gini_of_counts([1, 2, 1])               -> 0.625
#   entropy_of_counts([2, 1])               -> 0.9182958340544896
#   0.25 * 0 + 0.75 * 0.9182958340544896    -> 0.6887218755408672
ENTROPY_CRUISE_ROOT = 1.5
GINI_CRUISE_ROOT = 0.625
SPLIT_VO_LE_0 = 0.6887218755408672


def subview(controller: Controller, keys) -> NodeView:
    keys = {tuple(float(x) for x in k) for k in keys}
    idx = [i for i, s in enumerate(controller.states) if s in keys]
    return NodeView(controller, np.array(idx))


def two_state_ab() -> NodeView:
    c = Controller((VariableMeta("x"),), {(0.0,): {"a"}, (1.0,): {"b"}})
    return NodeView.full(c)


class TestNodeImpurity:
    def test_cruise_root_entropy(self, cruise):
        view = NodeView.full(cruise)
        assert oracles.entropy_of_counts([1, 2, 1]) == ENTROPY_CRUISE_ROOT
        assert node_impurity(view, E) == pytest.approx(ENTROPY_CRUISE_ROOT, abs=1e-12)

    def test_cruise_root_gini(self, cruise):
        view = NodeView.full(cruise)
        assert oracles.gini_of_counts([1, 2, 1]) == GINI_CRUISE_ROOT
        assert node_impurity(view, G) == pytest.approx(GINI_CRUISE_ROOT, abs=1e-12)

    def test_cruise_root_multi_label_entropy_is_zero(self, cruise):
        # neu occurs in all four rows, so the common-action case applies
        assert node_impurity(NodeView.full(cruise), MLE) == 0.0

    def test_two_state_mle(self):
        view = two_state_ab()
        assert oracles.multi_label_entropy([{"a"}, {"b"}]) == 1.0
        assert node_impurity(view, MLE) == pytest.approx(1.0, abs=1e-12)

    def test_two_state_mlgini(self):
        view = two_state_ab()
        assert oracles.multi_label_gini([{"a"}, {"b"}]) == 1.5
        assert node_impurity(view, MLG) == pytest.approx(1.5, abs=1e-12)

    def test_pure_view_scores_zero_everywhere(self, cruise):
        view = subview(cruise, [(2, 6, 10), (2, 6, 15)])
        for measure in (E, G, MLE, MLG, ImpurityMeasure.SUM_MINORITY,
                        ImpurityMeasure.MAX_MINORITY):
            assert node_impurity(view, measure) == 0.0

    def test_minorities_count_misclassified(self, cruise):
        view = NodeView.full(cruise)
        # most frequent set has 2 rows out of 4
        assert node_impurity(view, ImpurityMeasure.SUM_MINORITY) == 2.0
        assert node_impurity(view, ImpurityMeasure.MAX_MINORITY) == 2.0

    def test_split_only_measures_rejected(self, cruise):
        view = NodeView.full(cruise)
        with pytest.raises(UnsupportedAtNodeLevel):
            node_impurity(view, ImpurityMeasure.ENTROPY_RATIO)
        with pytest.raises(UnsupportedAtNodeLevel):
            node_impurity(view, ImpurityMeasure.TWOING)


class TestSplitImpurity:
    def test_cruise_vo_entropy(self, cruise):
        view = NodeView.full(cruise)
        got = split_impurity(AxisAligned(0, 0.0), view, E)
        assert got == pytest.approx(SPLIT_VO_LE_0, abs=1e-4)
        # against the independent oracle on the actual partition
        left = [{"neu"}]
        right = [{"dec", "neu", "acc"}, {"dec", "neu", "acc"}, {"dec", "neu"}]
        expected = oracles.weighted_split(
            [left, right], lambda p: oracles.entropy_of_counts(oracles.label_counts(p)))
        assert got == pytest.approx(expected, abs=1e-12)

    def test_grid_x_split_mle_is_zero(self, grid):
        view = NodeView.full(grid)
        assert split_impurity(AxisAligned(0, 1.5), view, MLE) == 0.0

    def test_grid_y_split_mle(self, grid):
        view = NodeView.full(grid)
        got = split_impurity(AxisAligned(1, 1.5), view, MLE)
        assert got == pytest.approx(2 / 6 * 1.0, abs=1e-12)

    def test_grid_x_split_twoing(self, grid):
        view = NodeView.full(grid)
        got = split_impurity(AxisAligned(0, 1.5), view, ImpurityMeasure.TWOING)
        # value = 0.5 * 0.5 * (2/3 + 1/3 + 2/3 + 1/3)^2 = 1.0; impurity = 1/value
        assert got == pytest.approx(1.0, abs=1e-9)

    def test_empty_branch_is_infinite(self, cruise):
        view = NodeView.full(cruise)
        assert split_impurity(AxisAligned(0, -100.0), view, E) == math.inf

    def test_twoing_rejects_multiway(self, colours_distinct):
        from ctrltree.predicates import categorical_grouping
        view = NodeView.full(colours_distinct)
        pred = categorical_grouping(view, 0, E, 0.0)
        assert pred.arity == 3
        assert split_impurity(pred, view, ImpurityMeasure.TWOING) == math.inf

    def test_entropy_ratio_normalizes(self, cruise):
        view = NodeView.full(cruise)
        ent = split_impurity(AxisAligned(0, 0.0), view, E)
        ratio = split_impurity(AxisAligned(0, 0.0), view, ImpurityMeasure.ENTROPY_RATIO)
        split_info = oracles.entropy_of_counts([1, 3])
        assert ratio == pytest.approx(ent / split_info, abs=1e-12)

    def test_sum_minority_is_unweighted(self, grid):
        # y <= 1.5: bottom {a},{b} -> minority 1; top 4 (2x{a,c}, 2x{b,c}) -> 2
        view = NodeView.full(grid)
        got = split_impurity(AxisAligned(1, 1.5), view, ImpurityMeasure.SUM_MINORITY)
        assert got == 3.0

    def test_max_minority_takes_worst_part(self, grid):
        view = NodeView.full(grid)
        got = split_impurity(AxisAligned(1, 1.5), view, ImpurityMeasure.MAX_MINORITY)
        assert got == 2.0

    def test_pure_parts_score_zero(self):
        c = Controller((VariableMeta("x"),),
                       {(0.0,): {"a"}, (1.0,): {"a"}, (2.0,): {"b"}, (3.0,): {"b"}})
        view = NodeView.full(c)
        for measure in (E, G, MLE, MLG):
            assert split_impurity(AxisAligned(0, 1.5), view, measure) == 0.0


class TestZeroIffHomogeneous:
    def test_random_views(self):
        rng = random.Random(3)
        for _ in range(60):
            c = random_controller(rng, max_states=30, max_vars=3, max_actions=4)
            view = NodeView.full(c)
            sets = [c.rows[s] for s in c.states]
            pure = len({frozenset(s) for s in sets}) == 1
            has_common = bool(frozenset.intersection(*sets))
            for measure in (E, G, ImpurityMeasure.SUM_MINORITY,
                            ImpurityMeasure.MAX_MINORITY):
                value = node_impurity(view, measure)
                assert value >= 0
                assert (value == 0) == pure
            for measure in (MLE, MLG):
                value = node_impurity(view, measure)
                assert value >= 0
                assert (value == 0) == has_common

    def test_uniform_two_label_constants(self):
        view = two_state_ab()
        assert node_impurity(view, E) == 1.0
        assert node_impurity(view, G) == 0.5


class TestCommonActions:
    def test_cruise_full(self, cruise):
        assert common_actions(NodeView.full(cruise)) == {"neu"}

    def test_grid_left_column(self, grid):
        view = subview(grid, [(1, 1), (1, 2), (1, 3)])
        assert common_actions(view) == {"a"}

    def test_disjoint_sets(self):
        assert common_actions(two_state_ab()) == frozenset()


class TestDeterminize:
    def test_grid_maxfreq_picks_global_favourite(self, grid):
        det = determinize_preprocess(grid, Determinizer(DetMode.PRE_MAXFREQ))
        for state in [(1.0, 2.0), (1.0, 3.0), (2.0, 2.0), (2.0, 3.0)]:
            assert det.rows[state] == {"c"}
        assert det.rows[(1.0, 1.0)] == {"a"}
        assert det.rows[(2.0, 1.0)] == {"b"}

    def test_deterministic_input_unchanged(self):
        c = Controller((VariableMeta("x"),), {(0.0,): {"a"}, (1.0,): {"b"}})
        for mode in (DetMode.PRE_MAXFREQ, DetMode.PRE_MINNORM):
            assert determinize_preprocess(c, Determinizer(mode)) == c
        assert determinize_preprocess(c, Determinizer(DetMode.PRE_RANDOM, 42)) == c

    def test_minnorm_composite_tokens(self):
        c = Controller((VariableMeta("x"),), {(0.0,): {"-2|0", "2|2"}})
        det = determinize_preprocess(c, Determinizer(DetMode.PRE_MINNORM))
        assert det.rows[(0.0,)] == {"-2|0"}

    def test_minnorm_non_numeric_falls_back_to_lexicographic(self):
        c = Controller((VariableMeta("x"),), {(0.0,): {"beta", "alpha"}})
        det = determinize_preprocess(c, Determinizer(DetMode.PRE_MINNORM))
        assert det.rows[(0.0,)] == {"alpha"}

    def test_random_is_seed_deterministic(self):
        rng = random.Random(9)
        for _ in range(10):
            c = random_controller(rng, max_states=30, max_vars=2)
            a = determinize_preprocess(c, Determinizer(DetMode.PRE_RANDOM, 7))
            b = determinize_preprocess(c, Determinizer(DetMode.PRE_RANDOM, 7))
            assert a == b

    def test_subset_and_singleton_property(self):
        rng = random.Random(13)
        for _ in range(25):
            c = random_controller(rng, max_states=40, max_vars=3)
            for det in (Determinizer(DetMode.PRE_MAXFREQ),
                        Determinizer(DetMode.PRE_MINNORM),
                        Determinizer(DetMode.PRE_RANDOM, 1)):
                d = determinize_preprocess(c, det)
                assert not d.permissive
                for state, actions in d.rows.items():
                    assert len(actions) == 1
                    assert actions <= c.rows[state]

    def test_maxfreq_tie_breaks_lexicographically(self):
        c = Controller((VariableMeta("x"),),
                       {(0.0,): {"b", "a"}, (1.0,): {"a"}, (2.0,): {"b"}})
        det = determinize_preprocess(c, Determinizer(DetMode.PRE_MAXFREQ))
        assert det.rows[(0.0,)] == {"a"}


class TestCompleteDeterminizationSuffices:
    """On small controllers, the minimum determinized split entropy over all
    determinizations is reached by a complete one (brute force both sides)."""

    def test_small_random_controllers(self):
        rng = random.Random(21)
        checked = 0
        for _ in range(12):
            c = random_controller(rng, max_states=5, max_vars=2, max_actions=3,
                                  categorical=False)
            view = NodeView.full(c)
            for var in c.numeric_indices():
                values = sorted({s[var] for s in c.states})
                for lo, hi in zip(values, values[1:]):
                    threshold = (lo + hi) / 2
                    parts = [[], []]
                    for s in c.states:
                        parts[s[var] <= threshold].append(c.rows[s])
                    if any(not p for p in parts):
                        continue
                    full = oracles.min_determinized_entropy(parts, complete=False)
                    complete = oracles.min_determinized_entropy(parts, complete=True)
                    assert full == complete
                    checked += 1
        assert checked > 10
