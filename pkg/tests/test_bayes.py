import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from partmon.acceptance import random_belief
from partmon.bayes import (
    HALF_TSALLIS,
    NEGENTROPY,
    Potential,
    Prior,
    children,
    conditional_expected_loss,
    conditional_posterior,
    expected_bregman_gain,
    expected_loss,
    information_per_action,
    initial_belief,
    mutual_information,
    optimal_action_posterior,
    optimal_action_table,
    posterior_update,
    prior_from_spec,
    signal_law,
)
from partmon.diagnostics import verify_martingale
from partmon.errors import InconsistentObservation, InvalidInput, ZeroProbabilityCondition
from partmon.game import NOTSPAM, OUT_SPAM, SIG_SPAM, SPAM, UNKNOWN, Game, bandit_game, spam_game


@pytest.fixture
def spam_root():
    return initial_belief(spam_game(0.25), Prior.constant_mixture(2, 3))


def test_symmetric_spam_prior(spam_root):
    np.testing.assert_allclose(optimal_action_posterior(spam_root), [0.5, 0.5, 0.0])
    np.testing.assert_allclose(expected_loss(spam_root), [0.5, 0.5, 0.25])
    np.testing.assert_allclose(conditional_expected_loss(spam_root), [0.0, 0.0, 0.0])
    np.testing.assert_allclose(information_per_action(spam_root), [0.0, 0.0, math.log(2)])
    assert signal_law(spam_root, UNKNOWN) == {1: 0.5, 2: 0.5}


def test_spam_update_reveals_everything(spam_root):
    post = posterior_update(spam_root, UNKNOWN, SIG_SPAM)
    np.testing.assert_array_equal(post.weights, [0.0, 1.0])
    np.testing.assert_allclose(optimal_action_posterior(post), [1.0, 0.0, 0.0])
    assert post.t == 2 and post.history == ((UNKNOWN, SIG_SPAM),)


def test_half_tsallis_gain_of_revealing_action(spam_root):
    gain = expected_bregman_gain(spam_root, [0, 0, 1], HALF_TSALLIS)
    assert gain == pytest.approx(2 * math.sqrt(2) - 2, abs=1e-12)
    assert expected_bregman_gain(spam_root, [0.5, 0.5, 0], HALF_TSALLIS) == 0.0


def test_inconsistent_observation(spam_root):
    post = posterior_update(spam_root, UNKNOWN, SIG_SPAM)
    with pytest.raises(InconsistentObservation):
        posterior_update(post, UNKNOWN, 1)


def test_conditional_posterior(spam_root):
    cond = conditional_posterior(spam_root, SPAM)
    np.testing.assert_allclose(cond.weights, [0.0, 1.0])
    with pytest.raises(ZeroProbabilityCondition):
        conditional_posterior(spam_root, UNKNOWN)


def test_tie_rules():
    g = Game(loss=np.array([[1.0, 0.0], [1.0, 0.0], [0.5, 0.5]]), signal=np.zeros((3, 2), dtype=int))
    prior = Prior.dirac([0, 0])
    assert optimal_action_table(g, prior, "lowest")[0].tolist() == [0, 0, 1]
    # the three tie at outcome sequence (0, 1)
    prior = Prior.dirac([0, 1])
    np.testing.assert_allclose(optimal_action_table(g, prior, "uniform")[0], [1 / 3] * 3)
    assert optimal_action_table(g, prior, "pareto", pareto=[True, True, False])[0].tolist() == [1, 0, 0]
    assert optimal_action_table(g, prior, "pareto", pareto=[False, False, True])[0].tolist() == [0, 0, 1]


def test_prior_generators():
    p = Prior.iid_product([0.25, 0.75], 3)
    assert p.size == 8
    assert p.weights[np.all(p.sequences == 1, axis=1)][0] == pytest.approx(0.75**3)
    assert Prior.constant_mixture(3, 2, [0, 2]).sequences.tolist() == [[0, 0], [2, 2]]
    with pytest.raises(InvalidInput):
        Prior.iid_product([0.5, 0.5], 25)
    with pytest.raises(InvalidInput):
        Prior(np.array([0.5, 0.4]), np.zeros((2, 1)))


def test_prior_specs_and_roundtrip(tmp_path):
    g = spam_game()
    assert prior_from_spec("dirac:const=1", g, 4).sequences.tolist() == [[1, 1, 1, 1]]
    assert prior_from_spec("dirac:0,1,1", g, 3).sequences.tolist() == [[0, 1, 1]]
    assert prior_from_spec("iid-product:0.5,0.5", g, 2).size == 4
    assert prior_from_spec("sampled-mixture:5", g, 3).size == 5
    b = prior_from_spec("sampled-mixture:7:bernoulli", bandit_game(2), 3)
    assert b.sequences.max() < 4
    for bad in ("dirac:0,1", "iid-product:1", "nope:1"):
        with pytest.raises(InvalidInput):
            prior_from_spec(bad, g, 3)
    p = Prior.iid_product([0.3, 0.7], 2)
    p.save(tmp_path / "p.json")
    q = Prior.load(tmp_path / "p.json")
    np.testing.assert_allclose(q.weights, p.weights)
    np.testing.assert_array_equal(q.sequences, p.sequences)


def test_potentials():
    assert NEGENTROPY.diameter(3) == pytest.approx(math.log(3))
    assert HALF_TSALLIS.diameter(1) == 0.0
    assert HALF_TSALLIS.diameter(4) == pytest.approx(2.0)
    k = 5
    u, e = np.full(k, 1 / k), np.eye(k)[0]
    assert HALF_TSALLIS.F(u) - HALF_TSALLIS.F(e) == pytest.approx(-HALF_TSALLIS.diameter(k))
    assert NEGENTROPY.F(e) - NEGENTROPY.F(u) == pytest.approx(NEGENTROPY.diameter(k))
    assert NEGENTROPY.divergence([1, 0], [0, 1]) == math.inf
    assert HALF_TSALLIS.divergence([0.5, 0.5], [0.5, 0.5]) == 0.0
    with pytest.raises(InvalidInput):
        Potential("other")


@given(st.integers(0, 10_000))
def test_bregman_divergence_matches_definition(seed):
    rng = np.random.default_rng(seed)
    p, q = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    grads = {"negentropy": np.log(q), "half-tsallis": -1.0 / np.sqrt(q)}
    for pot in (NEGENTROPY, HALF_TSALLIS):
        expected = pot.F(p) - pot.F(q) - grads[pot.kind] @ (p - q)
        assert pot.divergence(p, q) == pytest.approx(expected, rel=1e-9, abs=1e-12)


def _brute_force_posterior(game, prior, history):
    """Posterior weights by direct likelihood products, one atom at a time."""
    w = []
    for weight, seq in zip(prior.weights, prior.sequences):
        like = 1.0
        for t, (a, s) in enumerate(history):
            like *= float(game.signal[a, seq[t]] == s)
        w.append(weight * like)
    w = np.array(w)
    return w / w.sum()


def _brute_force_information(game, prior, weights, t, opt, b):
    """I(A*; Phi_t(b)) by summing over (a, s) pairs explicitly."""
    joint = {}
    for w, seq, row in zip(weights, prior.sequences, opt):
        s = game.signal[b, seq[t]]
        for a in range(game.k):
            joint[(a, s)] = joint.get((a, s), 0.0) + w * row[a]
    pa = {a: sum(v for (x, _), v in joint.items() if x == a) for a in range(game.k)}
    ps = {}
    for (_, s), v in joint.items():
        ps[s] = ps.get(s, 0.0) + v
    return sum(v * math.log(v / (pa[a] * ps[s])) for (a, s), v in joint.items() if v > 0)


@pytest.mark.parametrize("game", [spam_game(0.25), spam_game(0.5), bandit_game(2)], ids=["spam", "spam-half", "bandit"])
def test_exact_bayes_against_brute_force(game):
    rng = np.random.default_rng(1)
    for n in (1, 2, 3):
        prior = Prior.sampled_mixture(game.d, n, 6, rng, "bernoulli" if game.family == "bandit" else "dirichlet")
        root = initial_belief(game, prior)
        stack = [root]
        while stack:
            belief = stack.pop()
            w = _brute_force_posterior(game, prior, belief.history)
            np.testing.assert_allclose(belief.weights, w, atol=1e-12)
            info = information_per_action(belief)
            for b in range(game.k):
                ref = _brute_force_information(game, prior, w, belief.t - 1, belief.opt, b)
                assert info[b] == pytest.approx(ref, abs=1e-12)
            if belief.t < n:
                stack.extend(child for *_, child in children(belief))


@given(st.integers(0, 10_000))
def test_martingale_and_negentropy_identity(seed):
    rng = np.random.default_rng(seed)
    belief = random_belief(rng)
    for a in range(belief.game.k):
        assert verify_martingale(belief, a) <= 1e-10
    P = rng.dirichlet(np.ones(belief.game.k))
    assert expected_bregman_gain(belief, P, NEGENTROPY) == pytest.approx(mutual_information(belief, P), abs=1e-10)


def test_point_mass_has_no_information():
    g = spam_game(0.25)
    root = initial_belief(g, Prior.dirac([OUT_SPAM, OUT_SPAM]))
    assert verify_martingale(root, UNKNOWN) == 0.0
    assert mutual_information(root, [0, 0, 1]) == 0.0


def test_children_probabilities_sum_to_one():
    root = initial_belief(spam_game(0.25), Prior.iid_product([0.3, 0.7], 2))
    for a in (SPAM, NOTSPAM, UNKNOWN):
        assert sum(p for b, _, p, _ in children(root) if b == a) == pytest.approx(1.0)
