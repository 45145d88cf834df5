"""Sampling rules: Thompson, Mario (water transfer on the greedy tree), forced exploration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from partmon.bayes import BeliefState, expected_loss, optimal_action_posterior
from partmon.errors import (
    CoverFailure,
    DisconnectedVt,
    IncompatiblePolicy,
    InvalidInput,
    StructureViolation,
)
from partmon.geometry import EPS_GEO, Classification, GeometryReport, convex_weight

EPS_EQ = 1e-9


@dataclass(frozen=True, eq=False)
class TransferTree:
    """Directed tree over actions in which every path leads to ``root``.

    ``parent[a]`` is None exactly at the root.  ``v_set`` and ``edges`` record
    the greedy-tied graph the tree was built from (empty for hand-made trees).
    """

    root: int
    parent: tuple
    v_set: frozenset = frozenset()
    edges: frozenset = frozenset()
    depth: tuple = field(init=False)
    _desc: tuple = field(init=False, repr=False)
    _order: tuple = field(init=False, repr=False)

    def __post_init__(self):
        k = len(self.parent)
        roots = [a for a in range(k) if self.parent[a] is None]
        if roots != [self.root]:
            raise StructureViolation(f"tree must have exactly the root {self.root}, found {roots}")
        depth: list = [None] * k
        depth[self.root] = 0
        for a in range(k):
            path, b = [], a
            while depth[b] is None:
                path.append(b)
                if len(path) > k:
                    raise StructureViolation("parent function has a cycle")
                b = self.parent[b]
            level = depth[b]
            for c in reversed(path):
                level += 1
                depth[c] = level
        desc = [[] for _ in range(k)]
        for a in range(k):
            b = self.parent[a]
            while b is not None:
                desc[b].append(a)
                b = self.parent[b]
        object.__setattr__(self, "depth", tuple(depth))
        object.__setattr__(self, "_desc", tuple(np.array(sorted(d), dtype=np.int64) for d in desc))
        object.__setattr__(self, "_order", tuple(sorted(range(k), key=lambda a: (-depth[a], a))))

    @classmethod
    def from_parents(cls, parent) -> "TransferTree":
        parent = tuple(None if p is None or p < 0 else int(p) for p in parent)
        return cls(parent.index(None), parent)

    @property
    def k(self) -> int:
        return len(self.parent)

    def ancestors(self, a: int) -> list[int]:
        """Path from ``a`` to the root, both included."""
        path = [a]
        while self.parent[path[-1]] is not None:
            path.append(self.parent[path[-1]])
        return path

    def descendants(self, a: int) -> frozenset[int]:
        return frozenset(int(b) for b in self._desc[a])

    def max_ancestors(self) -> int:
        return max(d + 1 for d in self.depth)


def build_tree(belief: BeliefState, geometry: GeometryReport, actions=None) -> TransferTree:
    """Greedy-rooted tree of the current round.

    The root is the lowest-index minimiser of one-step expected loss over
    ``actions`` (all actions by default).  Actions outside the greedy-tied set
    point to their cheapest neighbour; tied actions point to the neighbour
    closest to the root.
    """
    k = belief.game.k
    acts = list(range(k)) if actions is None else sorted(actions)
    el = expected_loss(belief)
    root = min(acts, key=lambda a: (el[a], a))
    v_set = [a for a in acts if el[a] <= el[root] + EPS_EQ]
    in_scope = set(acts)
    nbrs = {a: [b for b in geometry.neighbours_of(a) if b in in_scope] for a in acts}
    edges = frozenset((a, b) for a in v_set for b in v_set if a < b and geometry.are_neighbours(a, b))

    rho = {root: 0}
    frontier = [root]
    vs = set(v_set)
    while frontier:
        nxt = []
        for a in frontier:
            for b in nbrs[a]:
                if b in vs and b not in rho:
                    rho[b] = rho[a] + 1
                    nxt.append(b)
        frontier = sorted(nxt)
    if len(rho) != len(vs):
        raise DisconnectedVt(f"greedy-tied actions {sorted(vs)} are not connected through neighbours")

    parent: list = [None] * k
    for a in acts:
        if a == root:
            continue
        if a in vs:
            parent[a] = min((b for b in nbrs[a] if b in rho), key=lambda b: (rho[b], b))
        else:
            if not nbrs[a]:
                raise StructureViolation(f"action {a} has no neighbours")
            best = min(nbrs[a], key=lambda b: (el[b], b))
            if not el[best] < el[a]:
                raise StructureViolation(f"no neighbour of {a} has strictly smaller expected loss")
            parent[a] = best
    for a in range(k):
        if a not in in_scope:
            parent[a] = root  # only reached by callers that re-attach these actions
    return TransferTree(root, tuple(parent), frozenset(vs), edges)


def anomalous(P: np.ndarray, tree: TransferTree) -> list[int]:
    return [a for a in range(tree.k) if tree._desc[a].size and P[a] < P[tree._desc[a]].max()]


def water_transfer(P, tree: TransferTree) -> np.ndarray:
    """One application of the water transfer operator.

    Picks the deepest anomalous action (lowest index on ties) and levels it
    with the largest set of its heavier descendants whose average still
    exceeds every remaining descendant.
    """
    P = np.asarray(P, dtype=float)
    target = -1
    for a in tree._order:
        desc = tree._desc[a]
        if desc.size and P[a] < P[desc].max():
            target = a
            break
    if target < 0:
        return P.copy()
    desc = tree._desc[target]
    levels = P[desc]
    group = desc
    p_alpha = P[target]
    for alpha in np.unique(levels)[::-1]:
        inside = levels >= alpha
        group = desc[inside]
        p_alpha = (P[target] + P[group].sum()) / (1 + group.size)
        rest = levels[~inside]
        q_alpha = rest.max() if rest.size else -math.inf
        if p_alpha > q_alpha:
            break
    Q = P.copy()
    Q[group] = p_alpha
    Q[target] = p_alpha
    return Q


def water_transfer_power(P, tree: TransferTree, times: int) -> np.ndarray:
    Q = np.asarray(P, dtype=float)
    for _ in range(times):
        Q = water_transfer(Q, tree)
    return Q


def mario_distribution(belief: BeliefState, geometry: GeometryReport, tree: TransferTree | None = None) -> np.ndarray:
    """Thompson's ``P*`` reshaped by ``k`` applications of water transfer."""
    tree = tree if tree is not None else build_tree(belief, geometry)
    return water_transfer_power(optimal_action_posterior(belief), tree, belief.game.k)


def auto_gamma(n: int, k: int, v: float) -> float:
    """Exploration rate ``n^(-1/3) (k v)^(2/3) (log(k)/2)^(1/3)``, capped at 1."""
    if k < 2:
        return 1.0
    return min(1.0, n ** (-1 / 3) * (k * v) ** (2 / 3) * (math.log(k) / 2) ** (1 / 3))


def forced_exploration_distribution(belief: BeliefState, gamma: float) -> np.ndarray:
    if not 0.0 < gamma <= 1.0:
        raise InvalidInput(f"gamma must lie in (0, 1], got {gamma}")
    k = belief.game.k
    return (1.0 - gamma) * optimal_action_posterior(belief) + gamma / k


def default_cover(geometry: GeometryReport) -> tuple[int, ...]:
    """One Pareto representative (lowest index) per duplicate class."""
    chosen = []
    for cls in geometry.duplicate_classes:
        rep = cls[0]
        if geometry.pareto[rep]:
            chosen.append(rep)
    return tuple(sorted(chosen))


def check_cover(game, cover, samples: int = 2000, seed: int = 0) -> None:
    """Probe random points of the simplex; each must be optimal for some action in ``cover``."""
    rng = np.random.default_rng(seed)
    probes = np.vstack([rng.dirichlet(np.ones(game.d), size=samples), np.eye(game.d)])
    exp = probes @ game.loss.T
    best = exp.min(axis=1)
    ok = (exp[:, list(cover)] <= best[:, None] + EPS_GEO).any(axis=1)
    if not ok.all():
        raise CoverFailure(f"cells of {sorted(cover)} do not cover the simplex")


def _chain(game, a: int, b: int, cover: set) -> list[int]:
    """Ordered ``T_ab``: non-cover actions on the segment from ``l_a`` to ``l_b`` (alpha decreasing), then b."""
    found = []
    for c in range(game.k):
        if c in cover or c == b:
            continue
        alpha = convex_weight(game, c, a, b)
        if alpha is not None and alpha > 0:
            found.append((-alpha, c))
    return [c for _, c in sorted(found)] + [b]


def degenerate_parent_chain(belief: BeliefState, geometry: GeometryReport, cover=None) -> TransferTree:
    """Tree for degenerate games: base tree on ``cover``, with duplicates and
    combination actions spliced into the edges as chains.

    Actions in no chain (empty cells, or combinations along non-tree edges)
    hang directly off the final root; their expected loss is never below it.
    """
    game = belief.game
    cover = tuple(sorted(cover)) if cover is not None else default_cover(geometry)
    cover_set = set(cover)
    for c in cover:
        if geometry.degenerate[c]:
            raise InvalidInput(f"cover action {c} is degenerate")
    if len({game.loss[c].tobytes() for c in cover}) != len(cover):
        raise InvalidInput("cover contains duplicate actions")
    check_cover(game, cover)

    base = build_tree(belief, geometry, cover)
    k = game.k
    parent: list = [None] * k
    placed = set()
    for c in cover:
        if c == base.root:
            continue
        chain = _chain(game, c, base.parent[c], cover_set)
        chain = [x for x in chain if x not in placed or x == chain[-1]]
        prev = c
        for nxt in chain:
            parent[prev] = nxt
            placed.add(prev)
            prev = nxt
    root = base.root
    dups = [c for c in range(k) if c != root and c not in cover_set and np.array_equal(game.loss[c], game.loss[root])]
    prev = root
    for c in dups:
        parent[prev] = c
        placed.add(prev)
        prev = c
    final_root = prev
    parent[final_root] = None
    for c in range(k):
        if c != final_root and parent[c] is None:
            parent[c] = final_root
    return TransferTree(final_root, tuple(parent), base.v_set, base.edges)


def sample_action(dist, rng) -> int:
    """Inverse-CDF draw from ``dist`` using one uniform from ``rng``."""
    cdf = np.cumsum(np.asarray(dist, dtype=float))
    u = rng.random() * cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), cdf.size - 1))


@dataclass(frozen=True)
class Policy:
    """A sampling rule.  ``kind`` is one of thompson, mario, mario-degenerate, forced, fixed."""

    kind: str
    gamma: float | None = None
    auto: bool = False
    cover: tuple | None = None
    dist: tuple | None = None

    @property
    def tie(self) -> str:
        return {"mario-degenerate": "uniform", "forced": "pareto"}.get(self.kind, "lowest")

    @property
    def label(self) -> str:
        if self.kind == "forced":
            return "forced:auto" if self.auto else f"forced:{self.gamma:g}"
        return self.kind

    def resolved(self, n: int, k: int, v: float) -> "Policy":
        if self.kind == "forced" and self.auto:
            return Policy("forced", auto_gamma(n, k, v), True)
        return self


def parse_policy(spec: str) -> Policy:
    """Parse ``thompson | mario | mario-degenerate | forced:<gamma> | forced:auto | fixed:p0,p1,..``."""
    kind, _, arg = spec.partition(":")
    if kind in ("thompson", "mario", "mario-degenerate") and not arg:
        return Policy(kind)
    if kind == "forced":
        if arg == "auto":
            return Policy("forced", None, True)
        try:
            gamma = float(arg)
        except ValueError:
            raise InvalidInput(f"bad exploration rate in {spec!r}") from None
        if not 0.0 < gamma <= 1.0:
            raise InvalidInput("gamma must lie in (0, 1]")
        return Policy("forced", gamma)
    if kind == "fixed" and arg:
        p = tuple(float(v) for v in arg.split(","))
        return Policy("fixed", dist=p)
    raise InvalidInput(f"unknown policy {spec!r}")


def check_compatible(policy: Policy, geometry: GeometryReport) -> None:
    cls = geometry.classification
    if policy.kind == "mario":
        if cls not in (Classification.LOCAL, Classification.TRIVIAL) or not geometry.nondegenerate:
            raise IncompatiblePolicy("Mario sampling needs a non-degenerate locally observable game")
    elif policy.kind == "mario-degenerate":
        if cls not in (Classification.LOCAL, Classification.TRIVIAL):
            raise IncompatiblePolicy("degenerate Mario sampling needs a locally observable game")
    elif policy.kind == "forced":
        if cls is Classification.HOPELESS:
            raise IncompatiblePolicy("forced exploration needs a globally observable game")


def policy_distribution(policy: Policy, belief: BeliefState, geometry: GeometryReport):
    """Return ``(P, tree)`` for the current round; ``tree`` is None for tree-free policies."""
    if policy.kind == "thompson":
        return optimal_action_posterior(belief), None
    if policy.kind == "mario":
        tree = build_tree(belief, geometry)
        return mario_distribution(belief, geometry, tree), tree
    if policy.kind == "mario-degenerate":
        tree = degenerate_parent_chain(belief, geometry, policy.cover)
        return water_transfer_power(optimal_action_posterior(belief), tree, belief.game.k), tree
    if policy.kind == "forced":
        if policy.gamma is None:
            raise InvalidInput("resolve forced:auto against a horizon before use")
        return forced_exploration_distribution(belief, policy.gamma), None
    if policy.kind == "fixed":
        return np.asarray(policy.dist, dtype=float), None
    raise InvalidInput(f"unknown policy kind {policy.kind!r}")


def transfer_violations(P, Q, tree: TransferTree, el, tol: float = 1e-12) -> list[str]:
    """Which of the three water-transfer guarantees ``Q = W^k P`` breaks (empty if none).

    1. ``Q @ el <= P @ el``; 2. ``Q[a] <= Q[parent(a)]``; 3. ``Q[a] >= P[a] / k``.
    """
    P, Q, el = (np.asarray(v, dtype=float) for v in (P, Q, el))
    out = []
    if Q @ el > P @ el + tol:
        out.append(f"expected loss rose from {P @ el} to {Q @ el}")
    for a in range(tree.k):
        p = tree.parent[a]
        if p is not None and Q[a] > Q[p] + tol:
            out.append(f"Q[{a}]={Q[a]} exceeds its parent's {Q[p]}")
        if Q[a] < P[a] / tree.k - tol:
            out.append(f"Q[{a}]={Q[a]} below P[{a}]/k={P[a] / tree.k}")
    return out
