"""Discounted, average and total payoffs, and the metric bound checks.

The discounted value follows the classic one-step recursion
w <- (1-alpha) r + alpha pre(w), a contraction with factor alpha.  The
average value is approached through a discount sequence tending to 1; the
spread across the sequence is reported as an uncertainty estimate, not a
bound.  Total-reward values are returned as running Cesaro averages of the
undiscounted iterates so callers can inspect divergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import matching
from .errors import ContractError
from .games import CONCURRENT, GameStructure, MetricMatrix, Valuation, classify
from .linprog import simplex_min
from .metrics import MAX, SUM, MetricKind

DEFAULT_ALPHAS = (0.9, 0.99, 0.999)


@dataclass(frozen=True)
class PayoffSpec:
    reward: str
    alpha: float | None = None
    player: int = 1

    def __post_init__(self):
        if self.player not in (1, 2):
            raise ContractError("player must be 1 or 2")
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise ContractError("discount must lie in (0, 1)")

    def require_alpha(self) -> float:
        if self.alpha is None:
            raise ContractError("this payoff needs a discount factor")
        return self.alpha


@dataclass(frozen=True)
class MatrixGame:
    """Zero-sum matrix game; rows belong to the maximizing player."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.size == 0:
            raise ContractError("payoff matrix must be 2-D and nonempty")
        if not np.isfinite(m).all():
            raise ContractError("payoff matrix must be finite")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class MatrixGameSolution:
    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray


def _pure(n: int, i: int) -> np.ndarray:
    out = np.zeros(n)
    out[i] = 1.0
    return out


def _solve_matrix_lp(m: np.ndarray) -> MatrixGameSolution:
    rows, cols = m.shape
    shift = 1.0 - float(m.min())
    mp = m + shift
    # Row player: min sum(u) s.t. mp^T u >= 1.
    A = np.hstack([mp.T, -np.eye(cols)])
    b = np.ones(cols)
    c = np.concatenate([np.ones(rows), np.zeros(cols)])
    status, xu, _ = simplex_min(A, b, c)
    if status != 0:
        raise ContractError("matrix game LP failed")
    u = xu[:rows]
    total = u.sum()
    value = 1.0 / total
    x = u * value
    # Column player: max sum(w) s.t. mp w <= 1.
    A2 = np.hstack([mp, np.eye(rows)])
    b2 = np.ones(rows)
    c2 = np.concatenate([-np.ones(cols), np.zeros(rows)])
    status2, yw, _ = simplex_min(A2, b2, c2)
    if status2 != 0:
        raise ContractError("matrix game dual LP failed")
    w = yw[:cols]
    y = w / w.sum()
    return MatrixGameSolution(value - shift, x, y)


def matrix_game_value(game) -> MatrixGameSolution:
    """Minimax value and optimal mixed strategies of a matrix game."""
    m = game.matrix if isinstance(game, MatrixGame) else np.asarray(game, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise ContractError("payoff matrix must be 2-D and nonempty")
    rows, cols = m.shape
    if rows == 1 and cols == 1:
        return MatrixGameSolution(float(m[0, 0]), _pure(1, 0), _pure(1, 0))
    if rows == 1:
        j = int(np.argmin(m[0]))
        return MatrixGameSolution(float(m[0, j]), _pure(1, 0), _pure(cols, j))
    if cols == 1:
        i = int(np.argmax(m[:, 0]))
        return MatrixGameSolution(float(m[i, 0]), _pure(rows, i), _pure(1, 0))
    row_mins = m.min(axis=1)
    col_maxs = m.max(axis=0)
    maximin = row_mins.max()
    minimax = col_maxs.min()
    if maximin >= minimax - 1e-12:  # pure saddle point
        i = int(np.argmax(row_mins))
        j = int(np.argmin(col_maxs))
        return MatrixGameSolution(float(maximin), _pure(rows, i), _pure(cols, j))
    if rows == 2 and cols == 2:
        a, b = m[0]
        c, d = m[1]
        den = (a + d) - (b + c)
        value = (a * d - b * c) / den
        x = np.array([(d - c) / den, (a - b) / den])
        y = np.array([(d - b) / den, (a - c) / den])
        return MatrixGameSolution(float(value), x, y)
    return _solve_matrix_lp(m)


# -- the pre operator ------------------------------------------------------


def _kind(g: GameStructure) -> str:
    kind = g._cache.get("kind")
    if kind is None:
        kind = classify(g)
        g._cache["kind"] = kind
    return kind


def _concurrent_tensors(g: GameStructure) -> list[np.ndarray]:
    tensors = g._cache.get("tensors")
    if tensors is None:
        tensors = []
        for s in g.states:
            rows = [
                [g.dist(s, a, b) for b in g.moves2[s]] for a in g.moves1[s]
            ]
            tensors.append(np.array(rows))
        g._cache["tensors"] = tensors
    return tensors


def pre_array(g: GameStructure, k: np.ndarray, player: int) -> np.ndarray:
    """Vectorized pre over all states; k is in game state order."""
    out = np.empty(len(g.states))
    if _kind(g) != CONCURRENT:
        view = matching.active_view(g)
        for i in range(len(g.states)):
            vals = view.rows[i] @ k
            out[i] = vals.max() if view.owner[i] == player else vals.min()
        return out
    tensors = _concurrent_tensors(g)
    for i in range(len(g.states)):
        e = tensors[i] @ k
        if player == 2:
            e = e.T
        out[i] = matrix_game_value(e).value
    return out


def pre(g: GameStructure, k: Valuation, player: int = 1) -> Valuation:
    """One-step optimal expectation of k for the given player."""
    if player not in (1, 2):
        raise ContractError("player must be 1 or 2")
    arr = pre_array(g, k.as_array(g), player)
    return Valuation(dict(zip(g.states, arr.tolist())))


# -- payoff values ---------------------------------------------------------


def _reward_array(g: GameStructure, spec: PayoffSpec) -> np.ndarray:
    if spec.reward not in g.variables:
        raise ContractError(f"reward variable {spec.reward!r} not declared")
    r = g.var_array(spec.reward).copy()
    if spec.player == 2:
        r = -r
    return r


def discounted_value(g: GameStructure, spec: PayoffSpec, tol: float = 1e-6) -> Valuation:
    """Discounted value by one-step iteration; final error below tol."""
    alpha = spec.require_alpha()
    r = _reward_array(g, spec)
    w = r.copy()
    stop = tol * (1.0 - alpha)
    cap = max(64, math.ceil(math.log(max(stop / max(g.theta, tol), 1e-300))
                            / math.log(alpha)) + 16)
    for _ in range(cap):
        nxt = (1.0 - alpha) * r + alpha * pre_array(g, w, spec.player)
        delta = float(np.max(np.abs(nxt - w)))
        w = nxt
        if delta < stop:
            break
    return Valuation(dict(zip(g.states, w.tolist())))


@dataclass(frozen=True)
class AverageEstimate:
    values: Valuation
    spread: dict[str, float]
    alphas: tuple[float, ...]
    per_alpha: dict[float, Valuation]


def average_value_estimate(
    g: GameStructure,
    spec: PayoffSpec,
    alphas: tuple[float, ...] = DEFAULT_ALPHAS,
    tol: float = 1e-6,
) -> AverageEstimate:
    """Discounted values along an increasing discount sequence.

    The last entry is the reported estimate of the average value; the
    per-state spread across the sequence quantifies how settled the limit
    looks.  No convergence rate is claimed.
    """
    if not alphas or any(not 0.0 < a < 1.0 for a in alphas) or list(alphas) != sorted(alphas):
        raise ContractError("alphas must be an increasing sequence in (0, 1)")
    per_alpha = {}
    stack = []
    for a in alphas:
        val = discounted_value(g, PayoffSpec(spec.reward, a, spec.player), tol)
        per_alpha[a] = val
        stack.append(val.as_array(g))
    arr = np.stack(stack)
    spread = dict(zip(g.states, (arr.max(axis=0) - arr.min(axis=0)).tolist()))
    return AverageEstimate(per_alpha[alphas[-1]], spread, tuple(alphas), per_alpha)


def total_reward_iterates(g: GameStructure, spec: PayoffSpec, n: int) -> list[Valuation]:
    """The first n running averages T(i) of the undiscounted iterates
    u(i) = r + pre(u(i-1)); values are unbounded when the game diverges."""
    if n < 1:
        raise ContractError("need at least one step")
    r = _reward_array(g, spec)
    u = r.copy()
    acc = np.zeros_like(r)
    out = []
    for i in range(1, n + 1):
        u = r + pre_array(g, u, spec.player)
        acc += u
        out.append(Valuation(dict(zip(g.states, (acc / i).tolist()))))
    return out


# -- bound theorems as checks ----------------------------------------------


@dataclass(frozen=True)
class BoundViolation:
    rule: str
    s: str
    t: str
    lhs: float
    rhs: float


def check_bounds(
    g: GameStructure,
    spec: PayoffSpec,
    metric: MetricMatrix,
    kind: MetricKind,
    tol: float = 1e-6,
    total_steps: int = 30,
) -> list[BoundViolation]:
    """Evaluate the payoff-difference bounds the metric is supposed to give.

    Every ordered pair is checked, so the simulation (one-sided) and
    bisimulation (absolute) readings coincide.  For a max metric the
    discounted difference is compared at spec's discount, plus the average
    estimate when undiscounted; for a sum metric the matching-discount
    difference, plus the n-step total differences when undiscounted.
    An undiscounted max metric bounds all of these; a discounted max
    metric is expected to produce violations on some games.
    """
    if metric.states != g.states:
        raise ContractError("metric belongs to a different game")
    out: list[BoundViolation] = []
    m = metric.values

    def sweep(rule: str, vals: np.ndarray, allowance: np.ndarray | None = None):
        for i, s in enumerate(g.states):
            for j, t in enumerate(g.states):
                if i == j or not np.isfinite(m[i, j]):
                    continue
                bound = m[i, j] + tol
                if allowance is not None:
                    bound += allowance[i] + allowance[j]
                diff = vals[i] - vals[j]
                if diff > bound:
                    out.append(BoundViolation(rule, s, t, float(diff), float(m[i, j])))

    disc_alpha = spec.alpha if kind.combine == MAX else kind.alpha
    if disc_alpha is not None and disc_alpha < 1.0:
        w = discounted_value(g, PayoffSpec(spec.reward, disc_alpha, spec.player))
        sweep(f"discounted-diff@{disc_alpha:g}", w.as_array(g))

    if kind.alpha == 1.0:
        est = average_value_estimate(g, spec)
        allowance = np.array([est.spread[s] for s in g.states])
        sweep("average-diff", est.values.as_array(g), allowance)
        if kind.combine == SUM:
            for step, tval in enumerate(total_reward_iterates(g, spec, total_steps), 1):
                sweep(f"total-diff@n={step}", tval.as_array(g))
    return out
