import math

import numpy as np
import pytest

from partmon.bayes import HALF_TSALLIS, NEGENTROPY, Prior, children, initial_belief, posterior_update
from partmon.diagnostics import (
    GameParams,
    RunResult,
    StepDiagnostics,
    check_cumulative_bound,
    check_step_inequality,
    compute_step,
    exhaustive_step_check,
    expected_instant_regret,
    potential_diameter,
    step_rhs,
    theorem_rhs,
    verify_martingale,
)
from partmon.errors import InvalidInput, UnknownPairing
from partmon.game import SIG_SPAM, UNKNOWN, ski_game, spam_game
from partmon.geometry import analyze
from partmon.observability import game_v
from partmon.policies import parse_policy


@pytest.fixture
def spam():
    g = spam_game(0.25)
    return g, analyze(g), initial_belief(g, Prior.constant_mixture(2, 3))


def test_instant_regret_examples(spam):
    g, _, root = spam
    assert expected_instant_regret(root, [0.5, 0.5, 0]) == pytest.approx(0.5)
    assert expected_instant_regret(root, [1 / 3] * 3) == pytest.approx(5 / 12)
    post = posterior_update(root, UNKNOWN, SIG_SPAM)
    assert expected_instant_regret(post, [1, 0, 0]) == 0.0


def test_mario_first_round_passes(spam):
    g, geo, root = spam
    params = GameParams(g.k, g.d)
    _, diag = compute_step(root, parse_policy("mario"), geo, params, debug=True)
    info = math.log(2) / 3
    assert diag.mutual_info == pytest.approx(info)
    assert diag.bound_rhs == pytest.approx(3 * 3**1.5 * math.sqrt(8 * info))
    assert diag.expected_instant_regret == pytest.approx(5 / 12)
    assert diag.passed and diag.max_ancestors == 2
    assert diag.bregman_gain["negentropy"] == pytest.approx(diag.mutual_info, abs=1e-12)


def test_thompson_on_spam_fails(spam):
    g, geo, root = spam
    _, diag = compute_step(root, parse_policy("thompson"), geo, GameParams(g.k, g.d))
    assert diag.mutual_info == 0.0
    assert not diag.passed
    assert diag.slack == pytest.approx(-0.5)


def test_degenerate_posterior_is_tight(spam):
    g, geo, root = spam
    post = posterior_update(root, UNKNOWN, SIG_SPAM)
    _, diag = compute_step(post, parse_policy("mario"), geo, GameParams(g.k, g.d))
    assert diag.expected_instant_regret == 0.0 and diag.bound_rhs == 0.0 and diag.passed


def test_unknown_pairings():
    diag = StepDiagnostics(1, 0.0, 0.0, {"negentropy": 0.0, "half-tsallis": 0.0})
    with pytest.raises(UnknownPairing):
        check_step_inequality(diag, parse_policy("fixed:1,0"), GameParams(2, 2))
    with pytest.raises(InvalidInput):
        step_rhs("forced", 0.1, {}, GameParams(3, 2))


def test_theorem_values():
    assert theorem_rhs("bandit", 100, 3) == pytest.approx(math.sqrt(600))
    assert theorem_rhs("cops", 100, 3) == pytest.approx(math.sqrt(200 * math.log(3)))
    assert theorem_rhs("mario", 50, 3, 2) == pytest.approx(3**1.5 * 3 * math.sqrt(400 * math.log(3)))
    assert theorem_rhs("forced", 500, 3, v=1.0) == pytest.approx(3 * 1500 ** (2 / 3) * (math.log(3) / 2) ** (1 / 3))
    assert theorem_rhs("ancestors", 10, 3, 2, m=2) == pytest.approx(2 * 3 * math.sqrt(240 * math.log(3)))
    assert theorem_rhs("general", 10, 3, alpha=0.1, beta=2.0, diameter=1.0) == pytest.approx(1 + math.sqrt(20))
    assert theorem_rhs("cops", 0, 3) == 0.0
    with pytest.raises(InvalidInput):
        theorem_rhs("minimax", 10, 3)


def test_cumulative_bound_uses_three_standard_errors():
    run = RunResult(n=10, seed=0, policy="thompson", regrets=np.array([1.0, 2.0, 3.0, 4.0]))
    assert run.standard_error == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    ok, upper, rhs = check_cumulative_bound(run, "bandit", 3)
    assert upper == pytest.approx(2.5 + 3 * run.standard_error)
    assert ok == (upper <= rhs)
    zero = RunResult(n=0, seed=0, policy="thompson", regrets=np.zeros(3))
    assert check_cumulative_bound(zero, "cops", 3)[0]


def test_potential_diameter():
    assert potential_diameter(NEGENTROPY, 3) == pytest.approx(math.log(3))
    assert potential_diameter(HALF_TSALLIS, 4) == pytest.approx(2.0) and 2.0 <= 2 * math.sqrt(4)
    with pytest.raises(InvalidInput):
        potential_diameter(NEGENTROPY, 0)


def test_martingale_spam_example(spam):
    _, _, root = spam
    assert verify_martingale(root, UNKNOWN) == 0.0


def _reachable(root):
    seen, stack = set(), [root]
    while stack:
        b = stack.pop()
        key = (b.t, b.alive.tobytes())
        if key in seen:
            continue
        seen.add(key)
        if b.t < b.prior.n:
            stack.extend(child for *_, child in children(b))
    return seen


def test_enumeration_visits_every_reachable_belief():
    g = spam_game(0.25)
    geo = analyze(g)
    root = initial_belief(g, Prior.iid_product([0.4, 0.6], 3))
    rep = exhaustive_step_check(root, parse_policy("mario"), geo, GameParams(g.k, g.d))
    assert rep.beliefs == len(_reachable(root))
    assert rep.failures == 0


def test_degenerate_mario_local_lemma_exhaustive():
    g = spam_game(0.5)
    geo = analyze(g)
    policy = parse_policy("mario-degenerate")
    v = game_v(g, local=True, report=geo).v
    for prior in (Prior.constant_mixture(2, 3), Prior.iid_product([0.3, 0.7], 3)):
        root = initial_belief(g, prior, policy.tie, geo.pareto)
        rep = exhaustive_step_check(root, policy, geo, GameParams(g.k, g.d, v=v))
        assert rep.failures == 0 and rep.min_slack >= -1e-8


def test_ski_mario_exhaustive():
    g = ski_game()
    geo = analyze(g)
    rng = np.random.default_rng(4)
    root = initial_belief(g, Prior.sampled_mixture(3, 3, 12, rng))
    rep = exhaustive_step_check(root, parse_policy("mario"), geo, GameParams(g.k, g.d))
    assert rep.failures == 0
