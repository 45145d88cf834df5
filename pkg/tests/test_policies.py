import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from partmon.acceptance import WATER_LEVELS, WATER_TREE, random_transfer_case
from partmon.bayes import Prior, initial_belief, optimal_action_posterior, posterior_update
from partmon.errors import CoverFailure, DisconnectedVt, IncompatiblePolicy, InvalidInput, StructureViolation
from partmon.game import NOTSPAM, SIG_SPAM, SPAM, UNKNOWN, spam_game, tangent_chain_game
from partmon.geometry import analyze
from partmon.policies import (
    Policy,
    TransferTree,
    anomalous,
    auto_gamma,
    build_tree,
    check_compatible,
    degenerate_parent_chain,
    forced_exploration_distribution,
    mario_distribution,
    parse_policy,
    policy_distribution,
    sample_action,
    transfer_violations,
    water_transfer,
    water_transfer_power,
)


def test_water_fixture_levels():
    tree = TransferTree.from_parents(WATER_TREE)
    assert tree.depth == (4, 3, 2, 1, 0, 1)
    once = water_transfer(WATER_LEVELS, tree)
    np.testing.assert_allclose(once * 6.5, [0.6, 1.45, 1.45, 1.8, 0.4, 0.8], atol=1e-12)
    twice = water_transfer(once, tree)
    np.testing.assert_allclose(twice * 6.5, [0.6, 1.275, 1.275, 1.275, 1.275, 0.8], atol=1e-12)
    assert anomalous(twice, tree) == []


def test_tree_rejects_cycles_and_bad_roots():
    with pytest.raises(StructureViolation):
        TransferTree(0, (None, 2, 1))
    with pytest.raises(StructureViolation):
        TransferTree(0, (None, None))


def test_tree_queries():
    tree = TransferTree.from_parents(WATER_TREE)
    assert tree.ancestors(0) == [0, 1, 2, 3, 4]
    assert tree.descendants(3) == {0, 1, 2}
    assert tree.max_ancestors() == 5


@given(st.integers(0, 2**32 - 1))
def test_transfer_lemma_clauses(seed):
    rng = np.random.default_rng(seed)
    P, tree, el = random_transfer_case(rng)
    Q = water_transfer_power(P, tree, tree.k)
    assert transfer_violations(P, Q, tree, el) == []
    assert np.array_equal(water_transfer(Q, tree), Q)
    assert Q.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(Q >= 0)


def test_spam_mario_tree_and_distribution():
    g = spam_game(0.25)
    geo = analyze(g)
    root = initial_belief(g, Prior.constant_mixture(2, 3))
    tree = build_tree(root, geo)
    assert tree.root == UNKNOWN
    assert tree.depth == (1, 1, 0)
    np.testing.assert_allclose(mario_distribution(root, geo, tree), [1 / 3] * 3, atol=1e-15)


def test_mario_after_revelation_is_greedy():
    g = spam_game(0.25)
    geo = analyze(g)
    post = posterior_update(initial_belief(g, Prior.constant_mixture(2, 3)), UNKNOWN, SIG_SPAM)
    np.testing.assert_allclose(mario_distribution(post, geo), [1.0, 0.0, 0.0])


def test_degenerate_chain_at_half_cost():
    g = spam_game(0.5)
    geo = analyze(g)
    root = initial_belief(g, Prior.constant_mixture(2, 2), "uniform")
    tree = degenerate_parent_chain(root, geo, (SPAM, NOTSPAM))
    assert tree.root == SPAM
    assert tree.parent == (None, UNKNOWN, SPAM)
    P, _ = policy_distribution(parse_policy("mario-degenerate"), root, geo)
    assert transfer_violations(optimal_action_posterior(root), P, tree, g.loss @ root.tables.wx) == []


def test_degenerate_chain_rejects_bad_covers():
    g = spam_game(0.5)
    geo = analyze(g)
    root = initial_belief(g, Prior.constant_mixture(2, 2))
    with pytest.raises(CoverFailure):
        degenerate_parent_chain(root, geo, (SPAM,))
    with pytest.raises(InvalidInput):
        degenerate_parent_chain(root, geo, (SPAM, NOTSPAM, UNKNOWN))


def test_structure_errors_with_broken_neighbourhoods():
    g = spam_game(0.5)
    geo = analyze(g)
    isolated = dataclasses.replace(geo, neighbourhood=tuple(frozenset({a}) for a in range(3)), neighbour_pairs=())
    tied = initial_belief(g, Prior.constant_mixture(2, 2))  # every action has expected loss 1/2
    with pytest.raises(DisconnectedVt):
        build_tree(tied, isolated)
    g = spam_game(0.25)
    geo = analyze(g)
    isolated = dataclasses.replace(geo, neighbourhood=tuple(frozenset({a}) for a in range(3)), neighbour_pairs=())
    with pytest.raises(StructureViolation):
        build_tree(initial_belief(g, Prior.constant_mixture(2, 2)), isolated)


def test_chain_game_ancestor_count():
    g = tangent_chain_game(7)
    geo = analyze(g)
    belief = initial_belief(g, Prior.constant_mixture(2, 1, weights=[2, 1]))
    tree = build_tree(belief, geo)
    assert tree.max_ancestors() == 5


def test_forced_exploration():
    g = spam_game(0.75)
    root = initial_belief(g, Prior.constant_mixture(2, 2), "pareto", analyze(g).pareto)
    np.testing.assert_allclose(forced_exploration_distribution(root, 0.3), [0.45, 0.45, 0.1])
    with pytest.raises(InvalidInput):
        forced_exploration_distribution(root, 0.0)
    gamma = auto_gamma(500, 3, 1.0)
    assert gamma == pytest.approx(500 ** (-1 / 3) * 3 ** (2 / 3) * (math.log(3) / 2) ** (1 / 3))
    assert auto_gamma(1, 3, 5.0) == 1.0


def test_parse_policy():
    assert parse_policy("thompson") == Policy("thompson")
    assert parse_policy("forced:0.3").gamma == 0.3
    assert parse_policy("forced:auto").auto
    assert parse_policy("fixed:0.5,0.5").dist == (0.5, 0.5)
    assert parse_policy("mario-degenerate").tie == "uniform"
    assert parse_policy("forced:auto").resolved(500, 3, 1.0).label == "forced:auto"
    for bad in ("mario:1", "forced:2", "forced:x", "greedy"):
        with pytest.raises(InvalidInput):
            parse_policy(bad)


def test_check_compatible():
    with pytest.raises(IncompatiblePolicy):
        check_compatible(parse_policy("mario"), analyze(spam_game(0.5)))
    with pytest.raises(IncompatiblePolicy):
        check_compatible(parse_policy("mario-degenerate"), analyze(spam_game(0.75)))
    check_compatible(parse_policy("mario-degenerate"), analyze(spam_game(0.5)))
    check_compatible(parse_policy("forced:auto"), analyze(spam_game(0.75)))


def test_sample_action_frequencies():
    rng = np.random.default_rng(3)
    dist = np.array([0.2, 0.0, 0.5, 0.3])
    counts = np.bincount([sample_action(dist, rng) for _ in range(20_000)], minlength=4)
    assert counts[1] == 0
    np.testing.assert_allclose(counts / counts.sum(), dist, atol=0.015)
