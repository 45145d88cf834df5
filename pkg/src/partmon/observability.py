"""Estimation functions for loss differences, observability, and their sup-norm bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from partmon import lp
from partmon.errors import BoundViolation, Infeasible, NotObservable, ResidualTooLarge
from partmon.game import Game

EPS_FEAS = 1e-8
EPS_EST = 1e-8
EPS_SVD = 1e-10


@dataclass(frozen=True)
class SignalMatrixStack:
    """0/1 signal matrices of a set of actions, stacked vertically.

    Row ``i`` corresponds to ``keys[i] = (action, symbol)``; column ``x`` to an
    outcome.  ``matrix[i, x] = 1`` iff the action emits that symbol under ``x``.
    """

    keys: tuple[tuple[int, int], ...]
    matrix: np.ndarray

    @classmethod
    def build(cls, game: Game, actions=None) -> "SignalMatrixStack":
        acts = range(game.k) if actions is None else sorted(actions)
        keys, rows = [], []
        for c in acts:
            for s in game.alphabet(c):
                keys.append((c, s))
                rows.append((game.signal[c] == s).astype(float))
        matrix = np.array(rows).reshape(len(rows), game.d)
        return cls(tuple(keys), matrix)

    def block(self, c: int) -> np.ndarray:
        idx = [i for i, (a, _) in enumerate(self.keys) if a == c]
        return self.matrix[idx]


@dataclass(frozen=True)
class EstimationFunction:
    pair: tuple[int, int]
    values: dict
    sup_norm: float

    @property
    def support(self) -> frozenset[int]:
        return frozenset(c for (c, _), v in self.values.items() if v != 0.0)

    def __call__(self, c: int, s: int) -> float:
        return self.values.get((c, s), 0.0)

    def evaluate(self, game: Game) -> np.ndarray:
        """Vector over outcomes of ``sum_c f(c, signal[c, x])``."""
        out = np.zeros(game.d)
        for (c, s), v in self.values.items():
            out += v * (game.signal[c] == s)
        return out

    def residual(self, game: Game) -> float:
        a, b = self.pair
        return float(np.max(np.abs(self.evaluate(game) - (game.loss[a] - game.loss[b]))))

    def negated(self) -> "EstimationFunction":
        return EstimationFunction((self.pair[1], self.pair[0]), {k: -v for k, v in self.values.items()}, self.sup_norm)

    def to_dict(self, game: Game) -> dict:
        a, b = self.pair
        return {
            "pair": [game.action_label(a), game.action_label(b)],
            "sup_norm": self.sup_norm,
            "values": [
                {"action": game.action_label(c), "symbol": game.symbol_label(s), "value": v}
                for (c, s), v in sorted(self.values.items())
            ],
        }


def _from_vector(pair, keys, w) -> EstimationFunction:
    values = {key: float(v) for key, v in zip(keys, w)}
    norm = float(np.max(np.abs(w))) if len(w) else 0.0
    return EstimationFunction(tuple(pair), values, norm)


def solve_min_supnorm(game: Game, a: int, b: int, support=None) -> EstimationFunction:
    """Minimum sup-norm ``f`` over ``support`` actions (all actions if None).

    LP: minimise t subject to ``|S^T w - (l_a - l_b)| <= EPS_FEAS`` and ``|w_i| <= t``.
    """
    stack = SignalMatrixStack.build(game, support)
    S = stack.matrix
    m = S.shape[0]
    target = game.loss[a] - game.loss[b]
    if m == 0:
        if np.max(np.abs(target)) <= EPS_FEAS:
            return EstimationFunction((a, b), {}, 0.0)
        raise Infeasible(f"pair ({a}, {b}) has no estimator on an empty support")
    # variables: w (free, m of them), t >= 0
    c = np.zeros(m + 1)
    c[-1] = 1.0
    St = S.T
    A_ub = np.vstack(
        [
            np.hstack([St, np.zeros((game.d, 1))]),
            np.hstack([-St, np.zeros((game.d, 1))]),
            np.hstack([np.eye(m), -np.ones((m, 1))]),
            np.hstack([-np.eye(m), -np.ones((m, 1))]),
        ]
    )
    b_ub = np.concatenate([target + EPS_FEAS, -target + EPS_FEAS, np.zeros(2 * m)])
    free = np.zeros(m + 1, dtype=bool)
    free[:m] = True
    res = lp.linprog(c, A_ub, b_ub, free=free, feas_tol=EPS_FEAS)
    if not res.success:
        raise Infeasible(f"loss difference of ({a}, {b}) is not in the span of the signals")
    # feasibility is decided with slack; polish the witness with exact equalities
    exact = lp.linprog(
        c,
        A_ub[2 * game.d :],
        b_ub[2 * game.d :],
        np.hstack([St, np.zeros((game.d, 1))]),
        target,
        free=free,
        feas_tol=1e-10,
    )
    if exact.success:
        res = exact
    w = res.x[:m]
    w = np.where(np.abs(w) < 1e-14, 0.0, w)
    return _from_vector((a, b), stack.keys, w)


def _support(game: Game, a: int, b: int, local: bool, report):
    if not local:
        return None
    if report is None:
        from partmon.geometry import analyze

        report = analyze(game)
    key = (a, b) if a < b else (b, a)
    if key not in report.n_ab:
        raise Infeasible(f"({a}, {b}) is not a neighbour pair; local estimators are undefined")
    return sorted(report.n_ab[key])


def min_supnorm_estimator(game: Game, a: int, b: int, local: bool = False, report=None) -> EstimationFunction:
    """Minimum sup-norm estimation function for the loss difference of ``a`` and ``b``.

    When ``local`` is set, ``f`` is restricted to the actions in ``N_ab``.
    Raises :class:`Infeasible` when no such function exists.
    """
    if np.array_equal(game.loss[a], game.loss[b]):
        return EstimationFunction((a, b), {}, 0.0)
    return solve_min_supnorm(game, a, b, _support(game, a, b, local, report))


def pseudoinverse(S: np.ndarray, eps: float = EPS_SVD) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD, zeroing singular values below ``eps``."""
    U, s, Vt = np.linalg.svd(S, full_matrices=False)
    inv = np.zeros_like(s)
    big = s > eps
    inv[big] = 1.0 / s[big]
    return (Vt.T * inv) @ U.T


def pseudoinverse_estimator(game: Game, a: int, b: int, local: bool = False, report=None) -> EstimationFunction:
    """Least-norm estimation function ``w = (S^T)^+ (l_a - l_b)``."""
    stack = SignalMatrixStack.build(game, _support(game, a, b, local, report))
    target = game.loss[a] - game.loss[b]
    w = pseudoinverse(stack.matrix.T) @ target
    f = _from_vector((a, b), stack.keys, w)
    r = f.residual(game)
    if r > EPS_EST:
        raise ResidualTooLarge(f"pair ({a}, {b}): residual {r:.3g} exceeds {EPS_EST}")
    return f


def v_bound(game: Game) -> float:
    """Signal-independent ceiling ``sqrt(d) (1 + k)^(d/2)`` on the minimal sup-norm."""
    return float(np.sqrt(game.d) * (1.0 + game.k) ** (game.d / 2))


@dataclass(frozen=True)
class VReport:
    v: float
    ceiling: float
    per_pair: dict
    local: bool


def game_v(game: Game, local: bool = False, report=None) -> VReport:
    """Largest minimal sup-norm over neighbour pairs, with its ceiling checked."""
    from partmon.geometry import Classification, analyze

    report = report if report is not None else analyze(game)
    norms = report.local_sup_norm if local else report.global_sup_norm
    if any(v is None for v in norms.values()):
        raise NotObservable(f"game is not {'locally' if local else 'globally'} observable")
    v = max(norms.values(), default=0.0)
    ceiling = v_bound(game)
    if v > ceiling + EPS_EST:
        raise BoundViolation(f"v = {v} exceeds sqrt(d)(1+k)^(d/2) = {ceiling}")
    if local and report.nondegenerate and report.classification is Classification.LOCAL:
        if v > game.d + 1 + EPS_EST:
            raise BoundViolation(f"v = {v} exceeds d + 1 = {game.d + 1} for a non-degenerate local game")
    return VReport(v=v, ceiling=ceiling, per_pair=dict(norms), local=local)


def anchored_v(game: Game, report) -> float:
    """Max over Pareto ``a`` of the minimal global sup-norm for ``l_a - l_anchor``.

    The anchor is the lowest-index Pareto action.  This is the norm the forced
    exploration analysis needs; it is at least the neighbour-pair ``v``.
    """
    pareto = [a for a, p in enumerate(report.pareto) if p]
    if not pareto:
        return 0.0
    anchor = pareto[0]
    worst = max(report.global_sup_norm.values(), default=0.0)
    if any(v is None for v in report.global_sup_norm.values()):
        raise NotObservable("game is not globally observable")
    for a in pareto[1:]:
        worst = max(worst, min_supnorm_estimator(game, a, anchor).sup_norm)
    return worst
