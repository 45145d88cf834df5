"""Exact Bayesian inference for finitely supported priors over outcome sequences.

A prior is a weighted list of atoms, each a full length-``n`` outcome
sequence.  Since signals are deterministic, every likelihood is 0 or 1 and
the posterior is the prior restricted to the atoms consistent with the
history.  All quantities at round ``t`` depend on the atoms only through the
outcome each atom assigns to round ``t``, so they are aggregated over
outcomes first (:class:`RoundTables`).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from partmon.errors import InconsistentObservation, InvalidInput, ZeroProbabilityCondition
from partmon.game import Game

DROP_WEIGHT = 1e-15
TIE_RULES = ("lowest", "uniform", "pareto")
MAX_ATOMS = 10**6


@dataclass(frozen=True, eq=False)
class Prior:
    """Finitely supported prior: ``weights[i]`` on outcome sequence ``sequences[i]``."""

    weights: np.ndarray
    sequences: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).ravel()
        seq = np.asarray(self.sequences)
        if seq.ndim != 2:
            raise InvalidInput("sequences must be a 2-d array (atoms x horizon)")
        if w.size == 0 or w.size != seq.shape[0]:
            raise InvalidInput("need at least one atom and one weight per atom")
        if seq.shape[1] < 1:
            raise InvalidInput("horizon must be positive")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise InvalidInput("atom weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise InvalidInput(f"atom weights sum to {w.sum()!r}, not 1")
        seq = seq.astype(np.int64)
        if seq.min() < 0:
            raise InvalidInput("outcome indices must be non-negative")
        w.setflags(write=False)
        seq.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "sequences", seq)

    @property
    def n(self) -> int:
        return self.sequences.shape[1]

    @property
    def size(self) -> int:
        return self.weights.size

    def check_game(self, game: Game) -> None:
        if self.sequences.max() >= game.d:
            raise InvalidInput(f"prior uses outcome {self.sequences.max()} but the game has d={game.d}")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "atoms": [{"weight": float(w), "sequence": s.tolist()} for w, s in zip(self.weights, self.sequences)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Prior":
        try:
            n = int(data["n"])
            atoms = data["atoms"]
            weights = [float(a["weight"]) for a in atoms]
            seqs = [list(a["sequence"]) for a in atoms]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed prior: {exc}") from exc
        if any(len(s) != n for s in seqs):
            raise InvalidInput(f"every atom sequence must have length n={n}")
        return cls(np.array(weights), np.array(seqs, dtype=np.int64).reshape(len(seqs), n))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Prior":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{path}: not valid JSON ({exc})") from exc

    # generators

    @classmethod
    def dirac(cls, sequence) -> "Prior":
        return cls(np.ones(1), np.asarray(sequence, dtype=np.int64)[None, :])

    @classmethod
    def mixture_of_diracs(cls, weights, sequences) -> "Prior":
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum(), np.asarray(sequences, dtype=np.int64))

    @classmethod
    def constant_mixture(cls, d: int, n: int, outcomes=None, weights=None) -> "Prior":
        """Mixture of Diracs on the constant sequences ``(x, x, ..., x)``."""
        outs = list(range(d)) if outcomes is None else list(outcomes)
        w = np.ones(len(outs)) if weights is None else np.asarray(weights, dtype=float)
        return cls.mixture_of_diracs(w, np.repeat(np.array(outs)[:, None], n, axis=1))

    @classmethod
    def iid_product(cls, law, n: int) -> "Prior":
        """Expand the i.i.d. law ``law`` over ``n`` rounds into explicit atoms."""
        law = np.asarray(law, dtype=float)
        if np.any(law < 0) or abs(law.sum() - 1.0) > 1e-9:
            raise InvalidInput("outcome law must be a probability vector")
        support = np.flatnonzero(law > 0)
        if float(support.size) ** n > MAX_ATOMS:
            raise InvalidInput(f"iid product would need {support.size}^{n} atoms (limit {MAX_ATOMS})")
        seqs = np.array(list(itertools.product(support, repeat=n)), dtype=np.int64).reshape(-1, n)
        w = np.prod(law[seqs], axis=1)
        return cls(w / w.sum(), seqs)

    @classmethod
    def sampled_mixture(cls, d: int, n: int, atoms: int, rng, law: str = "dirichlet") -> "Prior":
        """Uniform mixture of ``atoms`` sequences, each drawn i.i.d. from its own random law.

        ``law="bernoulli"`` treats outcome ``x`` as a binary loss vector (bit
        ``a`` of ``x``); each atom draws per-coordinate means uniformly.
        """
        if law == "dirichlet":
            laws = rng.dirichlet(np.ones(d), size=atoms)
            u = rng.random((atoms, n))
            seqs = np.minimum((u[:, :, None] > np.cumsum(laws, axis=1)[:, None, :]).sum(axis=2), d - 1)
        elif law == "bernoulli":
            k = int(round(np.log2(d)))
            if 2**k != d:
                raise InvalidInput("bernoulli law needs d to be a power of two")
            means = rng.random((atoms, k))
            bits = rng.random((atoms, n, k)) < means[:, None, :]
            seqs = (bits * (1 << np.arange(k))).sum(axis=2)
        else:
            raise InvalidInput(f"unknown law {law!r}")
        return cls(np.full(atoms, 1.0 / atoms), seqs.astype(np.int64))


def prior_from_spec(spec: str, game: Game, n: int, rng=None) -> Prior:
    """Build a prior from a generator spec string.

    ``dirac:x1,x2,...`` | ``dirac:const=x`` | ``mixture-of-diracs:constant[=x,y,...]`` |
    ``iid-product:p0,p1,...`` | ``sampled-mixture:M[:dirichlet|bernoulli]``
    """
    kind, _, arg = spec.partition(":")
    d = game.d
    if kind == "dirac":
        if arg.startswith("const="):
            return Prior.dirac([int(arg[6:])] * n)
        seq = [int(v) for v in arg.split(",")]
        if len(seq) != n:
            raise InvalidInput(f"dirac sequence has length {len(seq)}, horizon is {n}")
        return Prior.dirac(seq)
    if kind == "mixture-of-diracs":
        if arg in ("", "constant"):
            return Prior.constant_mixture(d, n)
        if arg.startswith("constant="):
            return Prior.constant_mixture(d, n, [int(v) for v in arg[9:].split(",")])
        raise InvalidInput("mixture-of-diracs supports 'constant' or 'constant=x,y'; use a prior file otherwise")
    if kind == "iid-product":
        law = [float(v) for v in arg.split(",")] if arg else [1.0 / d] * d
        if len(law) != d:
            raise InvalidInput(f"iid-product law has {len(law)} entries, game has d={d}")
        return Prior.iid_product(law, n)
    if kind == "sampled-mixture":
        parts = arg.split(":") if arg else ["32"]
        law = parts[1] if len(parts) > 1 else ("bernoulli" if game.family in ("bandit", "cops") else "dirichlet")
        rng = rng if rng is not None else np.random.default_rng(0)
        return Prior.sampled_mixture(d, n, int(parts[0]), rng, law)
    raise InvalidInput(f"unknown prior generator {kind!r}")


def optimal_action_table(game: Game, prior: Prior, tie: str = "lowest", pareto=None) -> np.ndarray:
    """Matrix ``(atoms, k)``: row i is the law of A* under atom i.

    ``lowest`` puts all mass on the lowest-index minimiser of total loss,
    ``uniform`` splits it over all minimisers, ``pareto`` prefers Pareto
    actions among minimisers and then the lowest index.
    """
    if tie not in TIE_RULES:
        raise InvalidInput(f"tie rule must be one of {TIE_RULES}")
    totals = game.loss[:, prior.sequences].sum(axis=2).T  # (atoms, k)
    tol = 1e-9 * max(1, prior.n)
    tied = totals <= totals.min(axis=1, keepdims=True) + tol
    table = np.zeros_like(totals)
    if tie == "uniform":
        table[tied] = 1.0
        table /= table.sum(axis=1, keepdims=True)
        return table
    if tie == "pareto":
        if pareto is None:
            raise InvalidInput("tie='pareto' needs the Pareto mask")
        pmask = np.asarray(pareto, dtype=bool)[None, :]
        preferred = tied & pmask
        tied = np.where(preferred.any(axis=1, keepdims=True), preferred, tied)
    table[np.arange(prior.size), np.argmax(tied, axis=1)] = 1.0
    return table


@dataclass(frozen=True)
class RoundTables:
    """Per-round aggregates over outcomes.

    ``wx[x]``: posterior probability that X_t = x.
    ``joint_ax[a, x]``: probability that A* = a and X_t = x.
    ``joint_sig[b, a, s]``: probability that A* = a and action b would emit s.
    ``sig[b, s]``: probability that action b would emit s.
    """

    wx: np.ndarray
    joint_ax: np.ndarray
    joint_sig: np.ndarray
    sig: np.ndarray

    @cached_property
    def pstar(self) -> np.ndarray:
        return self.joint_ax.sum(axis=1)


@dataclass(frozen=True, eq=False)
class BeliefState:
    """Posterior over the prior's atoms at the start of round ``t`` (1-based)."""

    game: Game
    prior: Prior
    opt: np.ndarray
    t: int
    weights: np.ndarray
    history: tuple = ()
    tie: str = "lowest"

    @property
    def outcomes(self) -> np.ndarray:
        """Outcome of round ``t`` under each atom."""
        if not 1 <= self.t <= self.prior.n:
            raise InvalidInput(f"round {self.t} outside 1..{self.prior.n}")
        return self.prior.sequences[:, self.t - 1]

    @property
    def alive(self) -> np.ndarray:
        return self.weights > 0

    @cached_property
    def tables(self) -> RoundTables:
        game = self.game
        x = self.outcomes
        d = game.d
        wx = np.bincount(x, weights=self.weights, minlength=d)
        onehot = np.zeros((x.size, d))
        onehot[np.arange(x.size), x] = 1.0
        joint_ax = (self.opt * self.weights[:, None]).T @ onehot
        oh = game.signal_onehot
        joint_sig = np.einsum("ax,bxs->bas", joint_ax, oh)
        sig = np.einsum("x,bxs->bs", wx, oh)
        return RoundTables(wx, joint_ax, joint_sig, sig)


def initial_belief(game: Game, prior: Prior, tie: str = "lowest", pareto=None) -> BeliefState:
    prior.check_game(game)
    opt = optimal_action_table(game, prior, tie, pareto)
    opt.setflags(write=False)
    return BeliefState(game, prior, opt, 1, prior.weights.copy(), (), tie)


def belief_with_mask(root: BeliefState, t: int, mask: np.ndarray) -> BeliefState:
    """Belief at round ``t`` whose posterior is the prior restricted to ``mask``."""
    w = root.prior.weights * mask
    total = w.sum()
    if total <= 0:
        raise InconsistentObservation("no atom is consistent with the history")
    return replace(root, t=t, weights=w / total, history=())


def _normalise(w: np.ndarray) -> np.ndarray:
    total = w.sum()
    if total <= 0:
        raise InconsistentObservation("no atom is consistent with the history")
    w = w / total
    w[w < DROP_WEIGHT] = 0.0
    return w / w.sum()


def posterior_update(belief: BeliefState, a: int, s: int) -> BeliefState:
    """Condition on action ``a`` having emitted symbol ``s`` in round ``t``; advance to ``t + 1``."""
    consistent = belief.game.signal[a, belief.outcomes] == s
    w = belief.weights * consistent
    if w.sum() <= 0:
        raise InconsistentObservation(f"action {a} cannot emit symbol {s} in round {belief.t}")
    return replace(belief, t=belief.t + 1, weights=_normalise(w), history=belief.history + ((a, s),))


def optimal_action_posterior(belief: BeliefState) -> np.ndarray:
    """``P*[a]`` = posterior probability that A* = a."""
    return belief.weights @ belief.opt


def expected_loss(belief: BeliefState, a: int | None = None):
    """One-step posterior expected loss of ``a`` (of every action when ``a`` is None)."""
    el = belief.game.loss @ belief.tables.wx
    return el if a is None else float(el[a])


def conditional_expected_loss(belief: BeliefState) -> np.ndarray:
    """``E_t[L_t(a) | A* = a]`` for each action (0 where ``P*[a] = 0``)."""
    tab = belief.tables
    num = (tab.joint_ax * belief.game.loss).sum(axis=1)
    ps = tab.pstar
    return np.divide(num, ps, out=np.zeros_like(num), where=ps > 0)


def conditional_posterior(belief: BeliefState, a: int) -> BeliefState:
    """Belief reweighted by the event A* = a."""
    w = belief.weights * belief.opt[:, a]
    if w.sum() <= 0:
        raise ZeroProbabilityCondition(f"P(A* = {a}) = 0")
    opt = np.zeros_like(belief.opt)
    opt[:, a] = 1.0
    opt.setflags(write=False)
    return replace(belief, weights=w / w.sum(), opt=opt)


def signal_law(belief: BeliefState, b: int) -> dict[int, float]:
    """Law of the symbol action ``b`` would emit this round, over its alphabet."""
    sig = belief.tables.sig[b]
    return {s: float(sig[s]) for s in belief.game.alphabet(b)}


def _kl_terms(joint: np.ndarray, pstar: np.ndarray, sig: np.ndarray) -> np.ndarray:
    """Per-action-b sum over (a, s) of ``joint log(joint / (pstar sig))``."""
    denom = pstar[None, :, None] * sig[:, None, :]
    pos = joint > 0
    if np.any(pos & (denom <= 0)):
        raise AssertionError("conditional signal law not absolutely continuous")
    ratio = np.divide(joint, denom, out=np.ones_like(joint), where=pos)
    return np.where(pos, joint * np.log(ratio), 0.0).sum(axis=(1, 2))


def information_per_action(belief: BeliefState) -> np.ndarray:
    """``sum_a P*_a KL(P_{Phi_t(b) | A*=a} || P_{Phi_t(b)})`` for each action ``b``."""
    tab = belief.tables
    return np.maximum(_kl_terms(tab.joint_sig, tab.pstar, tab.sig), 0.0)


def mutual_information(belief: BeliefState, P) -> float:
    """``I_t(A*; Phi_t(A_t), A_t)`` when ``A_t ~ P`` independently of the outcomes."""
    P = np.asarray(P, dtype=float)
    return float(max(P @ information_per_action(belief), 0.0))


@dataclass(frozen=True)
class Potential:
    """Convex potential on the simplex together with its Bregman divergence."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("negentropy", "half-tsallis"):
            raise InvalidInput(f"unknown potential {self.kind!r}")

    def F(self, p) -> float:
        p = np.asarray(p, dtype=float)
        if self.kind == "negentropy":
            pos = p > 0
            return float(np.sum(p[pos] * np.log(p[pos])) - p.sum())
        return float(-2.0 * np.sqrt(p).sum())

    def divergence(self, p, q) -> np.ndarray | float:
        """``D_F(p, q)``; broadcasts over leading axes of ``p``."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        qb = np.broadcast_to(q, p.shape)
        out = self._finite(p, qb)
        bad = ((p > 0) & (qb <= 0)).any(axis=-1)
        out = np.where(bad, np.inf, out)
        return float(out) if out.ndim == 0 else out

    def _finite(self, p, q):
        live = q > 0
        if self.kind == "negentropy":
            ratio = np.divide(p, q, out=np.ones_like(p), where=live & (p > 0))
            terms = np.where(p > 0, p * np.log(ratio), 0.0) - p + q
        else:
            sq = np.sqrt(np.where(live, q, 1.0))
            terms = np.where(live, (np.sqrt(p) - sq) ** 2 / sq, 0.0)
        return np.maximum(terms.sum(axis=-1), 0.0)

    def diameter(self, k: int) -> float:
        """Exact ``sup F - inf F`` over the probability simplex."""
        if self.kind == "negentropy":
            return float(np.log(k))
        return float(2.0 * np.sqrt(k) - 2.0)


NEGENTROPY = Potential("negentropy")
HALF_TSALLIS = Potential("half-tsallis")


def expected_bregman_gain(belief: BeliefState, P, potential: Potential = NEGENTROPY) -> float:
    """``E_t[D_F(P*_{t+1}, P*_t)]`` when ``A_t ~ P``."""
    P = np.asarray(P, dtype=float)
    tab = belief.tables
    pstar = tab.pstar
    total = 0.0
    for b in np.flatnonzero(P > 0):
        mass = tab.sig[b]
        live = np.flatnonzero(mass > 0)
        post = (tab.joint_sig[b][:, live] / mass[live]).T  # (symbols, k)
        total += P[b] * float(mass[live] @ potential.divergence(post, pstar))
    return total


def children(belief: BeliefState, actions=None):
    """Yield ``(a, s, probability, next_belief)`` for every observable continuation."""
    acts = range(belief.game.k) if actions is None else actions
    for a in acts:
        for s, p in signal_law(belief, a).items():
            if p > 0:
                yield a, s, p, posterior_update(belief, a, s)
