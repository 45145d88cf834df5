"""Monte Carlo experiments: seeding, replicate roll-outs, trace and summary output."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from partmon.bayes import HALF_TSALLIS, NEGENTROPY, Prior, belief_with_mask, initial_belief, prior_from_spec
from partmon.diagnostics import (
    GameParams,
    RunResult,
    check_cumulative_bound,
    check_telescoping,
    compute_step,
    exhaustive_step_check,
    lemma_for,
    theorem_for,
)
from partmon.errors import InvalidInput
from partmon.game import Game, builtin
from partmon.geometry import GeometryReport, analyze
from partmon.observability import anchored_v, game_v
from partmon.policies import Policy, check_compatible, parse_policy, sample_action

log = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
TRACE_COLUMNS = (
    "replicate,t,action,outcome,symbol,loss,exp_instant_regret,mutual_info,bregman_gain,bound_rhs,slack,pass"
).split(",")


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def replicate_rng(base_seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng(splitmix64((base_seed ^ r) & MASK64))


@dataclass
class ExperimentConfig:
    """One experiment.  ``game`` is a JSON path or a built-in name; ``prior`` a JSON path or generator spec."""

    game: str
    prior: str
    policy: str
    n: int
    replicates: int = 1
    seed: int = 0
    step_checks: bool = True
    exhaustive: bool = False
    debug: bool = False
    trace_path: str | None = None
    summary_path: str | None = None
    workers: int = 1
    theorem: str | None = None
    game_kwargs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInput("horizon n must be at least 1")
        if self.replicates < 1:
            raise InvalidInput("need at least one replicate")
        if not 0 <= self.seed <= MASK64:
            raise InvalidInput("seed must fit in 64 bits")


def load_game(spec: str, **kwargs) -> Game:
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        return Game.load(path)
    return builtin(spec, **kwargs)


def load_prior(spec: str, game: Game, n: int, seed: int) -> Prior:
    path = Path(spec)
    if path.suffix == ".json":
        prior = Prior.load(path)
        if prior.n != n:
            raise InvalidInput(f"prior horizon {prior.n} differs from n={n}")
    else:
        prior = prior_from_spec(spec, game, n, np.random.default_rng(splitmix64(seed ^ MASK64)))
    prior.check_game(game)
    return prior


@dataclass
class Setup:
    """Everything a replicate needs, built once per experiment."""

    game: Game
    prior: Prior
    geometry: GeometryReport
    policy: Policy
    params: GameParams
    theorem: str
    theorem_kw: dict

    def root(self):
        return initial_belief(self.game, self.prior, self.policy.tie, self.geometry.pareto)


def prepare(config: ExperimentConfig, game: Game | None = None, prior: Prior | None = None) -> Setup:
    game = game if game is not None else load_game(config.game, **config.game_kwargs)
    prior = prior if prior is not None else load_prior(config.prior, game, config.n, config.seed)
    if prior.n != config.n:
        raise InvalidInput(f"prior horizon {prior.n} differs from n={config.n}")
    prior.check_game(game)
    geometry = analyze(game)
    policy = parse_policy(config.policy)
    check_compatible(policy, geometry)

    v = None
    if policy.kind == "mario-degenerate":
        v = game_v(game, local=True, report=geometry).v
    elif policy.kind == "forced":
        v = anchored_v(game, geometry)
        policy = policy.resolved(config.n, game.k, v)
    params = GameParams(game.k, game.d, game.family, v, policy.gamma)
    theorem = config.theorem or theorem_for(policy, game.family)
    return Setup(game, prior, geometry, policy, params, theorem, {})


def _run_replicates(setup: Setup, config: ExperimentConfig, indices) -> list[dict]:
    game, prior = setup.game, setup.prior
    root = setup.root()
    totals = game.loss[:, prior.sequences].sum(axis=2).T  # (atoms, k)
    cache: dict = {}
    gain_key = "half-tsallis" if setup.params.family == "bandit" and setup.policy.kind == "thompson" else "negentropy"
    out = []
    for r in indices:
        rng = replicate_rng(config.seed, r)
        atom = sample_action(prior.weights, rng)
        seq = prior.sequences[atom]
        mask = np.ones(prior.size, dtype=bool)
        played = 0.0
        rec = {"r": r, "rows": [], "fails": 0, "steps": 0, "min_slack": math.inf, "m": 0, "gains": {}}
        gains = {"negentropy": 0.0, "half-tsallis": 0.0}
        for t in range(1, config.n + 1):
            key = (t, mask.tobytes())
            hit = cache.get(key)
            if hit is None:
                belief = belief_with_mask(root, t, mask)
                hit = compute_step(belief, setup.policy, setup.geometry, setup.params, config.step_checks, config.debug)
                cache[key] = hit
            P, diag = hit
            a = sample_action(P, rng)
            x = int(seq[t - 1])
            s = int(game.signal[a, x])
            loss = float(game.loss[a, x])
            played += loss
            mask &= game.signal[a, prior.sequences[:, t - 1]] == s
            for name in gains:
                gains[name] += diag.bregman_gain[name]
            rec["m"] = max(rec["m"], diag.max_ancestors)
            if config.step_checks:
                rec["steps"] += 1
                rec["fails"] += not diag.passed
                rec["min_slack"] = min(rec["min_slack"], diag.slack)
            if config.trace_path:
                rec["rows"].append(
                    (r, t, a, x, s, loss, diag.expected_instant_regret, diag.mutual_info,
                     diag.bregman_gain[gain_key], diag.bound_rhs, diag.slack, int(diag.passed))
                )
        rec["regret"] = played - float(totals[atom].min())
        rec["gains"] = gains
        out.append(rec)
    return out


def _worker(args):
    config, indices = args
    return _run_replicates(prepare(config), config, indices)


def run_experiment(config: ExperimentConfig, game: Game | None = None, prior: Prior | None = None) -> RunResult:
    """Roll the policy forward over ``config.replicates`` independent atoms and summarise.

    Output is identical for identical configs regardless of ``workers``.
    """
    setup = prepare(config, game, prior)
    R = config.replicates
    if config.workers > 1 and game is None and prior is None:
        chunks = [list(range(i, R, config.workers)) for i in range(config.workers)]
        with ProcessPoolExecutor(config.workers) as pool:
            parts = list(pool.map(_worker, [(config, c) for c in chunks]))
        recs = sorted((rec for part in parts for rec in part), key=lambda rec: rec["r"])
    else:
        recs = _run_replicates(setup, config, range(R))

    run = RunResult(
        n=config.n,
        seed=config.seed,
        policy=setup.policy.label,
        regrets=np.array([rec["regret"] for rec in recs]),
        gains={name: np.array([rec["gains"][name] for rec in recs]) for name in ("negentropy", "half-tsallis")},
        steps_checked=sum(rec["steps"] for rec in recs),
        step_failures=sum(rec["fails"] for rec in recs),
        min_slack=min((rec["min_slack"] for rec in recs), default=math.inf),
        max_ancestors=max(rec["m"] for rec in recs),
        rows=[row for rec in recs for row in rec["rows"]],
    )
    run.meta = summarise(run, setup, config)
    if config.trace_path:
        write_trace(run.rows, config.trace_path)
    if config.summary_path:
        Path(config.summary_path).write_text(summary_json(run.meta), encoding="utf-8")
    log.info("%s: regret %.4f +- %.4f over %d replicates", setup.policy.label, run.mean_regret, run.standard_error, R)
    return run


def summarise(run: RunResult, setup: Setup, config: ExperimentConfig) -> dict:
    game, params = setup.game, setup.params
    passed, upper, rhs = check_cumulative_bound(run, setup.theorem, game.k, game.d, params.v, **setup.theorem_kw)
    tele = {}
    for pot in (NEGENTROPY, HALF_TSALLIS):
        ok, lower, diam = check_telescoping(run, pot, game.k)
        tele[pot.kind] = {"passed": bool(ok), "mean_minus_3se": lower, "diameter": diam}
    summary = {
        "game": game.name or config.game,
        "classification": setup.geometry.classification.value,
        "policy": setup.policy.label,
        "gamma": setup.policy.gamma,
        "v": params.v,
        "prior": config.prior,
        "n": config.n,
        "replicates": run.replicates,
        "seed": config.seed,
        "regret": {"mean": run.mean_regret, "se": run.standard_error, "mean_plus_3se": upper},
        "bound": {"theorem": setup.theorem, "rhs": rhs, "passed": bool(passed)},
        "telescoping": tele,
        "max_ancestors": run.max_ancestors,
    }
    ok = passed and all(v["passed"] for v in tele.values())
    if config.step_checks:
        lemma = lemma_for(setup.policy, params.family)
        summary["step_checks"] = {
            "lemma": lemma,
            "checked": run.steps_checked,
            "failures": run.step_failures,
            "min_slack": run.min_slack if run.steps_checked else None,
            "passed": run.step_failures == 0,
        }
        ok = ok and run.step_failures == 0
    if config.exhaustive:
        rep = exhaustive_step_check(setup.root(), setup.policy, setup.geometry, params, debug=True)
        summary["exhaustive"] = {
            "beliefs": rep.beliefs,
            "failures": rep.failures,
            "min_slack": rep.min_slack,
            "max_ancestors": rep.max_ancestors,
            "passed": rep.failures == 0,
        }
        ok = ok and rep.failures == 0
    summary["passed"] = bool(ok)
    return summary


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def summary_json(summary: dict) -> str:
    return json.dumps(_clean(summary), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else f"{v:.12g}"
    return str(v)


def trace_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_trace(rows, path) -> None:
    Path(path).write_text(trace_csv(rows), encoding="utf-8")


def config_dict(config: ExperimentConfig) -> dict:
    return asdict(config)
