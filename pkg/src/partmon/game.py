"""Finite partial monitoring games and the bundled example instances."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from partmon.errors import InvalidInput

FAMILIES = ("finite", "bandit", "cops")


@dataclass(frozen=True, eq=False)
class Game:
    """A loss matrix and a signal matrix over ``k`` actions and ``d`` outcomes.

    ``loss[a, x]`` is the loss of action ``a`` under outcome ``x`` and
    ``signal[a, x]`` the symbol id the learner observes.  Symbol ids are
    per-action labels: the alphabet of action ``a`` is the set of distinct
    values in row ``a``.
    """

    loss: np.ndarray
    signal: np.ndarray
    symbol_names: dict[int, str] | None = None
    action_names: tuple[str, ...] | None = None
    outcome_names: tuple[str, ...] | None = None
    family: str = "finite"
    name: str = ""
    _onehot: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        loss = np.array(self.loss, dtype=float)
        signal = np.array(self.signal)
        if loss.ndim != 2 or loss.shape[0] < 1 or loss.shape[1] < 1:
            raise InvalidInput("loss must be a non-empty k x d matrix")
        if signal.shape != loss.shape:
            raise InvalidInput(f"signal shape {signal.shape} differs from loss shape {loss.shape}")
        if not np.all(np.isfinite(loss)) or loss.min() < 0.0 or loss.max() > 1.0:
            raise InvalidInput("loss entries must lie in [0, 1]")
        if not np.issubdtype(signal.dtype, np.integer):
            if not np.all(np.equal(np.mod(signal, 1), 0)):
                raise InvalidInput("signal entries must be integer symbol ids")
        signal = signal.astype(np.int64)
        if signal.min() < 0:
            raise InvalidInput("symbol ids must be non-negative")
        if self.family not in FAMILIES:
            raise InvalidInput(f"unknown game family {self.family!r}")
        k, d = loss.shape
        for names, size, what in ((self.action_names, k, "action"), (self.outcome_names, d, "outcome")):
            if names is not None and len(names) != size:
                raise InvalidInput(f"{what}_names has {len(names)} entries, expected {size}")
        loss.setflags(write=False)
        signal.setflags(write=False)
        object.__setattr__(self, "loss", loss)
        object.__setattr__(self, "signal", signal)
        onehot = np.zeros((k, d, int(signal.max()) + 1))
        onehot[np.arange(k)[:, None], np.arange(d)[None, :], signal] = 1.0
        onehot.setflags(write=False)
        object.__setattr__(self, "_onehot", onehot)

    @property
    def k(self) -> int:
        return self.loss.shape[0]

    @property
    def d(self) -> int:
        return self.loss.shape[1]

    @property
    def signal_onehot(self) -> np.ndarray:
        """Array of shape ``(k, d, n_symbols)`` with ``[a, x, s] = 1`` iff ``signal[a, x] == s``."""
        return self._onehot

    def alphabet(self, a: int) -> tuple[int, ...]:
        return tuple(sorted(set(int(s) for s in self.signal[a])))

    def action_label(self, a: int) -> str:
        return self.action_names[a] if self.action_names else str(a)

    def symbol_label(self, s: int) -> str:
        if self.symbol_names and s in self.symbol_names:
            return self.symbol_names[s]
        return str(s)

    def to_dict(self) -> dict:
        out = {
            "k": self.k,
            "d": self.d,
            "loss": self.loss.tolist(),
            "signals": self.signal.tolist(),
        }
        if self.symbol_names:
            out["symbol_names"] = {str(s): v for s, v in sorted(self.symbol_names.items())}
        if self.action_names:
            out["action_names"] = list(self.action_names)
        if self.outcome_names:
            out["outcome_names"] = list(self.outcome_names)
        if self.family != "finite":
            out["family"] = self.family
        if self.name:
            out["name"] = self.name
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Game":
        try:
            k, d = int(data["k"]), int(data["d"])
            loss, signals = data["loss"], data["signals"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"game is missing a required field: {exc}") from exc
        if k < 1 or d < 1:
            raise InvalidInput("k and d must be at least 1")
        for rows, what in ((loss, "loss"), (signals, "signals")):
            if not isinstance(rows, list) or len(rows) != k or any(
                not isinstance(r, list) or len(r) != d for r in rows
            ):
                raise InvalidInput(f"{what} must be a {k} x {d} list of lists")
        names = data.get("symbol_names")
        symbol_names = {int(s): str(v) for s, v in names.items()} if names else None
        an = data.get("action_names")
        on = data.get("outcome_names")
        return cls(
            loss=np.array(loss, dtype=float),
            signal=np.array(signals),
            symbol_names=symbol_names,
            action_names=tuple(an) if an else None,
            outcome_names=tuple(on) if on else None,
            family=data.get("family", "finite"),
            name=data.get("name", ""),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Game":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)


# action / outcome indices of the spam game
SPAM, NOTSPAM, UNKNOWN = 0, 1, 2
OUT_NOTSPAM, OUT_SPAM = 0, 1
BOTTOM, SIG_NOTSPAM, SIG_SPAM = 0, 1, 2


def spam_game(cost: float = 0.25) -> Game:
    """Spam filtering: classify as spam / not spam, or pay ``cost`` to see the label."""
    return Game(
        loss=np.array([[1.0, 0.0], [0.0, 1.0], [cost, cost]]),
        signal=np.array([[BOTTOM, BOTTOM], [BOTTOM, BOTTOM], [SIG_NOTSPAM, SIG_SPAM]]),
        symbol_names={BOTTOM: "⊥", SIG_NOTSPAM: "not spam", SIG_SPAM: "spam"},
        action_names=("SPAM", "NOTSPAM", "UNKNOWN"),
        outcome_names=("not spam", "spam"),
        name=f"spam(c={cost:g})",
    )


SKI, CLIMB, MATH, RAINDANCE = 0, 1, 2, 3


def ski_game() -> Game:
    """The four-action weather example: staying in for maths reveals nothing."""
    loss = np.array(
        [
            [0.75, 0.0, 1.0],
            [0.0, 0.75, 1.0],
            [0.5, 0.5, 0.25],
            [1.0, 1.0, 0.0],
        ]
    )
    signal = np.array([[1, 2, 3], [1, 2, 3], [0, 0, 0], [1, 2, 3]])
    return Game(
        loss=loss,
        signal=signal,
        symbol_names={0: "⊥", 1: "sun", 2: "snow", 3: "rain"},
        action_names=("SKI", "CLIMB", "MATH", "RAINDANCE"),
        outcome_names=("sun", "snow", "rain"),
        name="ski",
    )


def _bits(k: int) -> np.ndarray:
    """Row x holds the binary loss vector of outcome index x (bit a = loss of action a)."""
    idx = np.arange(2**k)
    return (idx[:, None] >> np.arange(k)[None, :]) & 1


def bandit_game(k: int) -> Game:
    """k-armed bandit over binary loss vectors: d = 2**k outcomes, the played loss is seen."""
    bits = _bits(k)
    return Game(
        loss=bits.T.astype(float),
        signal=bits.T.copy(),
        family="bandit",
        name=f"bandit(k={k})",
    )


def cops_game(k: int) -> Game:
    """Cops and robbers over binary loss vectors: every loss except the played one is seen."""
    bits = _bits(k)
    signal = np.zeros((k, 2**k), dtype=np.int64)
    for a in range(k):
        others = np.delete(bits, a, axis=1)
        signal[a] = (others << np.arange(k - 1)[None, :]).sum(axis=1)
    return Game(loss=bits.T.astype(float), signal=signal, family="cops", name=f"cops(k={k})")


def full_information_game(loss) -> Game:
    loss = np.asarray(loss, dtype=float)
    k, d = loss.shape
    return Game(loss=loss, signal=np.tile(np.arange(d), (k, 1)), name="full-information")


def tangent_chain_game(k: int = 7) -> Game:
    """Full-information game on two outcomes whose cells are ``k`` consecutive intervals.

    Loss rows are tangents of ``s(1 - s)`` at ``s = a / (k - 1)``, so the
    neighbourhood graph is the path ``0 - 1 - ... - k-1``.
    """
    s = np.arange(k) / (k - 1)
    loss = np.stack([s**2, (1 - s) ** 2], axis=1)
    game = full_information_game(loss)
    return Game(loss=game.loss, signal=game.signal, name=f"tangent-chain(k={k})")


def builtin(name: str, **kwargs) -> Game:
    makers = {
        "spam": lambda: spam_game(kwargs.get("cost", 0.25)),
        "ski": ski_game,
        "bandit": lambda: bandit_game(kwargs.get("k", 3)),
        "cops": lambda: cops_game(kwargs.get("k", 3)),
        "chain": lambda: tangent_chain_game(kwargs.get("k", 7)),
    }
    if name not in makers:
        raise InvalidInput(f"unknown built-in game {name!r}; choose from {sorted(makers)}")
    return makers[name]()
