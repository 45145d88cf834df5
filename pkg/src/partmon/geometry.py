"""Cell decomposition of the outcome simplex and the action taxonomy built on it."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from partmon import lp
from partmon.errors import InvalidInput
from partmon.game import Game

EPS_GEO = 1e-9


class Classification(str, enum.Enum):
    TRIVIAL = "Trivial"
    LOCAL = "LocallyObservable"
    GLOBAL = "GloballyObservable"
    HOPELESS = "Hopeless"


Pair = tuple[int, int]


def _pair(a: int, b: int) -> Pair:
    return (a, b) if a < b else (b, a)


def _cell_constraints(game: Game, a: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows of ``(l_a - l_b) @ u <= 0`` for every other action b."""
    others = [b for b in range(game.k) if b != a]
    A = game.loss[a][None, :] - game.loss[others]
    return A, np.zeros(len(others))


def polytope_dimension(A_ub, b_ub, A_eq=None, b_eq=None, d: int | None = None, eps: float = EPS_GEO) -> int:
    """Affine dimension of ``{u in simplex : A_ub u <= b_ub, A_eq u = b_eq}``; -1 if empty.

    Collects affinely independent points greedily: for each coordinate
    direction (projected off the span found so far) the extreme points of the
    polytope along that direction are found by LP, and a point is kept when its
    displacement from the first point exceeds ``eps``.  A single pass suffices:
    a direction with zero width stays orthogonal to the polytope after later
    points are added.
    """
    A_ub = np.asarray(A_ub, dtype=float).reshape(-1, d)
    b_ub = np.asarray(b_ub, dtype=float).ravel()
    ones = np.ones((1, d))
    A_eq = ones if A_eq is None else np.vstack([np.asarray(A_eq, dtype=float).reshape(-1, d), ones])
    b_eq = np.array([1.0]) if b_eq is None else np.concatenate([np.asarray(b_eq, dtype=float).ravel(), [1.0]])

    first = lp.linprog(np.zeros(d), A_ub, b_ub, A_eq, b_eq, feas_tol=eps)
    if not first.success:
        return -1
    p0 = first.x
    basis = [ones.ravel() / np.sqrt(d)]
    found = 0
    for j in range(d):
        if found == d - 1:
            break
        g = np.zeros(d)
        g[j] = 1.0
        for q in basis:
            g -= (g @ q) * q
        norm = np.linalg.norm(g)
        if norm < 1e-12:
            continue
        g /= norm
        point = None
        for sign in (-1.0, 1.0):  # maximise, then minimise g @ u
            res = lp.linprog(sign * g, A_ub, b_ub, A_eq, b_eq, feas_tol=eps)
            if res.success and abs(g @ (res.x - p0)) > eps:
                point = res.x
                break
        if point is None:
            continue
        step = point - p0
        for q in basis:
            step -= (step @ q) * q
        basis.append(step / np.linalg.norm(step))
        found += 1
    return found


def cell_dimension(game: Game, a: int) -> int:
    """Affine dimension of the cell of action ``a`` (-1 when the cell is empty)."""
    if not 0 <= a < game.k:
        raise InvalidInput(f"action {a} out of range for k={game.k}")
    A, b = _cell_constraints(game, a)
    return polytope_dimension(A, b, d=game.d)


def intersection_dimension(game: Game, a: int, b: int) -> int:
    A, rhs = _cell_constraints(game, a)
    eq = (game.loss[a] - game.loss[b])[None, :]
    return polytope_dimension(A, rhs, eq, np.zeros(1), d=game.d)


def find_duplicates(game: Game) -> list[list[int]]:
    """Partition actions into classes with exactly equal loss rows."""
    classes: dict[bytes, list[int]] = {}
    for a in range(game.k):
        classes.setdefault(game.loss[a].tobytes(), []).append(a)
    return sorted(classes.values())


def _duplicates_of(game: Game, a: int) -> list[int]:
    return [c for c in range(game.k) if np.array_equal(game.loss[c], game.loss[a])]


def neighbours(game: Game, a: int, b: int, cell_dims=None) -> bool:
    """True iff Pareto, non-duplicate actions ``a`` and ``b`` share a (d-2)-dimensional face."""
    if cell_dims is not None:
        da, db = cell_dims[a], cell_dims[b]
    else:
        da, db = cell_dimension(game, a), cell_dimension(game, b)
    if da != game.d - 1 or db != game.d - 1:
        raise InvalidInput(f"actions {a} and {b} must both be Pareto optimal")
    if np.array_equal(game.loss[a], game.loss[b]):
        raise InvalidInput(f"actions {a} and {b} are duplicates")
    if game.d < 2:
        return False
    return intersection_dimension(game, a, b) == game.d - 2


def face_contained_in(game: Game, a: int, b: int, c: int, eps: float = EPS_GEO) -> bool:
    """Whether action ``c`` is optimal on the whole common face of ``a`` and ``b``.

    On that face ``a`` attains the minimum, so the test is
    ``max over C_a cap C_b of <l_c - l_a, u> <= eps``.
    """
    A, rhs = _cell_constraints(game, a)
    d = game.d
    eq = np.vstack([game.loss[a] - game.loss[b], np.ones(d)])
    res = lp.linprog(-(game.loss[c] - game.loss[a]), A, rhs, eq, np.array([0.0, 1.0]), feas_tol=eps)
    if not res.success:
        raise InvalidInput(f"cells of {a} and {b} do not meet")
    return -res.fun <= eps


def convex_weight(game: Game, c: int, a: int, b: int, tol: float = 1e-8) -> float | None:
    """Return alpha with ``l_c = alpha l_a + (1 - alpha) l_b`` if one exists in [0, 1]."""
    diff = game.loss[a] - game.loss[b]
    target = game.loss[c] - game.loss[b]
    denom = diff @ diff
    if denom == 0.0:
        return 1.0 if np.max(np.abs(target)) <= tol else None
    alpha = float(diff @ target / denom)
    if np.max(np.abs(alpha * diff - target)) > tol or not -tol <= alpha <= 1 + tol:
        return None
    return min(max(alpha, 0.0), 1.0)


def neighbourhood_set(game: Game, a: int, b: int, cell_dims=None) -> frozenset[int]:
    """Actions optimal on the entire common face of neighbours ``a`` and ``b``.

    Always contains ``a``, ``b`` and their duplicates; the other members are
    degenerate actions whose cell is exactly that face.  Actions with empty
    cells are never members.  Every member's loss is a convex combination of
    ``l_a`` and ``l_b``, which is asserted.
    """
    dims = cell_dims if cell_dims is not None else [cell_dimension(game, c) for c in range(game.k)]
    if not neighbours(game, a, b, dims):
        raise InvalidInput(f"actions {a} and {b} are not neighbours")
    members = set(_duplicates_of(game, a)) | set(_duplicates_of(game, b))
    for c in range(game.k):
        if c in members or dims[c] < 0:
            continue
        if face_contained_in(game, a, b, c):
            members.add(c)
    for c in members:
        if convex_weight(game, c, a, b) is None:
            raise AssertionError(f"action {c} in N_ab is not a convex combination of {a} and {b}")
    return frozenset(members)


@dataclass(frozen=True)
class GeometryReport:
    cell_dim: tuple[int, ...]
    pareto: tuple[bool, ...]
    duplicate_classes: tuple[tuple[int, ...], ...]
    degenerate: tuple[bool, ...]
    neighbour_pairs: tuple[Pair, ...]
    n_ab: dict
    neighbourhood: tuple[frozenset, ...]
    classification: Classification
    nondegenerate: bool
    local_sup_norm: dict
    global_sup_norm: dict

    def neighbours_of(self, a: int) -> list[int]:
        """Neighbours of ``a`` excluding ``a`` itself, ascending."""
        return sorted(b for b in self.neighbourhood[a] if b != a)

    def are_neighbours(self, a: int, b: int) -> bool:
        return _pair(a, b) in self.neighbour_pairs

    def to_dict(self, game: Game | None = None) -> dict:
        label = game.action_label if game is not None else str
        return {
            "classification": self.classification.value,
            "nondegenerate": self.nondegenerate,
            "cell_dim": list(self.cell_dim),
            "pareto": [label(a) for a, p in enumerate(self.pareto) if p],
            "degenerate": [label(a) for a, g in enumerate(self.degenerate) if g],
            "duplicate_classes": [[label(a) for a in cls] for cls in self.duplicate_classes],
            "neighbour_pairs": [[label(a), label(b)] for a, b in self.neighbour_pairs],
            "n_ab": {f"{label(a)}|{label(b)}": [label(c) for c in sorted(s)] for (a, b), s in self.n_ab.items()},
            "local_sup_norm": {f"{label(a)}|{label(b)}": v for (a, b), v in self.local_sup_norm.items()},
            "global_sup_norm": {f"{label(a)}|{label(b)}": v for (a, b), v in self.global_sup_norm.items()},
        }


def analyze(game: Game) -> GeometryReport:
    """Full static analysis of a game: cells, taxonomy, neighbourhoods and classification."""
    from partmon import observability

    k, d = game.k, game.d
    dims = tuple(cell_dimension(game, a) for a in range(k))
    pareto = tuple(dim == d - 1 for dim in dims)
    dup_classes = tuple(tuple(c) for c in find_duplicates(game))

    pairs = []
    for a in range(k):
        for b in range(a + 1, k):
            if pareto[a] and pareto[b] and not np.array_equal(game.loss[a], game.loss[b]):
                if neighbours(game, a, b, dims):
                    pairs.append((a, b))
    n_ab = {p: neighbourhood_set(game, *p, cell_dims=dims) for p in pairs}

    hood = []
    for a in range(k):
        members = {a}
        if dims[a] >= 0 and d >= 2:
            for b in range(k):
                if b != a and dims[b] >= 0 and intersection_dimension(game, a, b) >= d - 2:
                    members.add(b)
        hood.append(frozenset(members))

    local_norm, global_norm = {}, {}
    for p in pairs:
        for support, store in ((sorted(n_ab[p]), local_norm), (None, global_norm)):
            try:
                store[p] = observability.solve_min_supnorm(game, p[0], p[1], support).sup_norm
            except observability.Infeasible:
                store[p] = None

    if not pairs:
        cls = Classification.TRIVIAL
    elif all(v is not None for v in local_norm.values()):
        cls = Classification.LOCAL
    elif all(v is not None for v in global_norm.values()):
        cls = Classification.GLOBAL
    else:
        cls = Classification.HOPELESS

    degenerate = tuple(not p for p in pareto)
    nondegenerate = not any(degenerate) and all(len(c) == 1 for c in dup_classes)
    return GeometryReport(
        cell_dim=dims,
        pareto=pareto,
        duplicate_classes=dup_classes,
        degenerate=degenerate,
        neighbour_pairs=tuple(pairs),
        n_ab=n_ab,
        neighbourhood=tuple(hood),
        classification=cls,
        nondegenerate=nondegenerate,
        local_sup_norm=local_norm,
        global_sup_norm=global_norm,
    )


def covering_action(game: Game, u, actions=None, eps: float = EPS_GEO) -> int | None:
    """Some action among ``actions`` whose cell contains ``u`` (within ``eps``), else None."""
    u = np.asarray(u, dtype=float)
    acts = list(range(game.k)) if actions is None else list(actions)
    exp = game.loss @ u
    best = exp.min()
    for a in acts:
        if exp[a] <= best + eps:
            return a
    return None
