"""Metric fixpoints and kernel algorithms for turn-based games and MDPs.

The transformer joins (max) or adds (sum) the propositional distance with
the discounted one-step shipping term; simulation uses it directly,
bisimulation symmetrizes every iterate.  Picard iteration from the zero
matrix converges monotonically to the least fixpoint.  Kernels avoid the
fixpoint entirely: they run exact feasibility refinements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .games import GameStructure, MetricMatrix
from . import matching

SIMULATION = "sim"
BISIMULATION = "bis"
MAX = "max"
SUM = "sum"

DIVERGENCE_FACTOR = 1e6
_GROWTH_WINDOW = 25


@dataclass(frozen=True)
class MetricKind:
    """Which metric: simulation or bisimulation base, max or sum combine,
    discount in (0, 1].  sum with alpha = 1 is the undiscounted total
    metric, the only variant that may diverge."""

    base: str = SIMULATION
    combine: str = MAX
    alpha: float = 1.0

    def __post_init__(self):
        if self.base not in (SIMULATION, BISIMULATION):
            raise ContractError(f"bad metric base {self.base!r}")
        if self.combine not in (MAX, SUM):
            raise ContractError(f"bad combine {self.combine!r}")
        if not 0.0 < self.alpha <= 1.0:
            raise ContractError("discount must lie in (0, 1]")


@dataclass(frozen=True)
class Partition:
    blocks: tuple[tuple[str, ...], ...]

    def block_of(self, state: str) -> tuple[str, ...]:
        for b in self.blocks:
            if state in b:
                return b
        raise KeyError(f"unknown state {state!r}")

    def same_block(self, s: str, t: str) -> bool:
        return self.block_of(s) is self.block_of(t)


@dataclass(frozen=True)
class Relation:
    pairs: frozenset[tuple[str, str]]

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.pairs


@dataclass(frozen=True)
class FixpointResult:
    metric: MetricMatrix
    status: str  # converged | iteration-limited | divergent
    iterations: int
    change: float
    divergent_pairs: tuple[tuple[str, str], ...] = ()


def _effective_costs(d: np.ndarray, kind: MetricKind, theta: float) -> np.ndarray:
    # Max metrics see test functions confined to the interval, so costs
    # beyond theta cannot be exploited; sum metrics keep them raw.
    if kind.combine == MAX:
        return np.minimum(d, theta)
    return d


class _Engine:
    """Evaluates the transformer, recomputing a pair's shipping term only
    when a cost entry its programs can see has changed."""

    def __init__(self, g: GameStructure):
        self.g = g
        self.view = matching.active_view(g)
        self.prop = g.prop_matrix()
        self.n = len(g.states)
        self.sup = np.zeros((self.n, self.n))
        self.prev_costs: np.ndarray | None = None

    def sup_values(self, costs: np.ndarray) -> np.ndarray:
        view = self.view
        if self.prev_costs is None:
            dirty = None
        else:
            with np.errstate(invalid="ignore"):
                dirty = costs != self.prev_costs
            if not dirty.any():
                return self.sup
        for i in range(self.n):
            ri = view.reach[i]
            for j in range(self.n):
                if i == j:
                    continue
                if dirty is not None and not dirty[np.ix_(ri, view.reach[j])].any():
                    continue
                self.sup[i, j] = matching.one_step_sup(view, i, j, costs)
        self.prev_costs = costs.copy()
        return self.sup


def _combine(prop: np.ndarray, sup: np.ndarray, kind: MetricKind) -> np.ndarray:
    if kind.combine == MAX:
        h = np.maximum(prop, kind.alpha * sup)
    else:
        h = prop + kind.alpha * sup
    if kind.base == BISIMULATION:
        h = np.maximum(h, h.T)
    np.fill_diagonal(h, 0.0)
    return h


def apply_transformer(g: GameStructure, d, kind: MetricKind) -> MetricMatrix:
    """One application of the metric transformer to the candidate d."""
    engine = _Engine(g)
    costs = _effective_costs(matching.as_costs(g, d), kind, g.theta)
    h = _combine(engine.prop, engine.sup_values(costs), kind)
    return MetricMatrix(g.states, h, divergent=bool(np.isinf(h).any()))


def default_max_iters(kind: MetricKind, theta: float, tol: float) -> int:
    if kind.alpha < 1.0:
        return 10 * max(1, math.ceil(math.log(max(theta, tol) / tol)
                                     / math.log(1.0 / kind.alpha)))
    return 5000


def fixpoint(
    g: GameStructure,
    kind: MetricKind,
    tol: float = 1e-6,
    max_iters: int | None = None,
) -> FixpointResult:
    """Picard iteration from the zero matrix.

    Stops on max-norm change below tol ("converged") or on the iteration
    cap ("iteration-limited"; the final iterate is then a lower bound on
    the metric, since iterates increase monotonically).  Under sum/alpha=1
    entries that pass theta*1e6 are flagged divergent and frozen at +inf;
    when the per-iteration increments become constant, the run fast
    forwards the affine tail instead of stepping a million times.
    """
    if tol <= 0:
        raise ContractError("tolerance must be positive")
    if max_iters is None:
        max_iters = default_max_iters(kind, g.theta, tol)
    engine = _Engine(g)
    n = len(g.states)
    theta = g.theta
    threshold = theta * DIVERGENCE_FACTOR
    total_undiscounted = kind.combine == SUM and kind.alpha == 1.0

    d = np.zeros((n, n))
    prev_growth = None
    stable = 0
    status = "iteration-limited"
    change = float("inf")
    iters = 0
    for iters in range(1, max_iters + 1):
        costs = _effective_costs(d, kind, theta)
        h = _combine(engine.prop, engine.sup_values(costs), kind)
        h = np.maximum(h, 0.0)
        finite = np.isfinite(h) & np.isfinite(d)
        growth = np.where(finite, h - d, 0.0)
        change = float(np.max(np.abs(growth))) if finite.any() else 0.0
        fresh_inf = bool((np.isinf(h) & np.isfinite(d)).any())

        if total_undiscounted:
            if prev_growth is not None and change > tol:
                scale = max(1.0, float(np.max(np.abs(growth))))
                if float(np.max(np.abs(growth - prev_growth))) <= 1e-11 * scale:
                    stable += 1
                else:
                    stable = 0
            prev_growth = growth
            if stable >= _GROWTH_WINDOW:
                growing = growth > max(tol, 1e-9)
                if growing.any():
                    k = np.ceil(np.max(
                        (1.05 * threshold - h[growing]) / growth[growing]
                    ))
                    if k > 0:
                        h = h + growth * k
                stable = 0
                prev_growth = None
            over = h > threshold
            if over.any():
                h = h.copy()
                h[over] = np.inf
        d = h
        if change < tol and not fresh_inf:
            status = "converged"
            break

    div_pairs = tuple(
        (g.states[i], g.states[j])
        for i in range(n)
        for j in range(n)
        if np.isinf(d[i, j])
    )
    if div_pairs:
        status = "divergent"
    metric = MetricMatrix(g.states, d, divergent=bool(div_pairs))
    return FixpointResult(metric, status, iters, change, div_pairs)


# -- kernels ---------------------------------------------------------------


def _prop_blocks(g: GameStructure, tol: float = 1e-9) -> list[list[int]]:
    prop = g.prop_matrix()
    blocks: list[list[int]] = []
    for i in range(len(g.states)):
        for block in blocks:
            if prop[i, block[0]] <= tol:
                block.append(i)
                break
        else:
            blocks.append([i])
    return blocks


def sim_kernel(g: GameStructure) -> Relation:
    """Greatest relation within propositional equivalence closed under
    zero-cost shipping: (s, t) survives iff every pure move ships into a
    mixed response using only related successor pairs."""
    view = matching.active_view(g)
    n = len(g.states)
    prop = g.prop_matrix()
    related = prop <= 1e-9
    for _ in range(n * n + 1):
        costs = np.where(related, 0.0, np.inf)
        new = related.copy()
        for i in range(n):
            for j in range(n):
                if i == j or not related[i, j]:
                    continue
                if view.owner[i] != view.owner[j]:
                    new[i, j] = False
                    continue
                new[i, j] = np.isfinite(matching.one_step_sup(view, i, j, costs))
        if (new == related).all():
            break
        related = new
    pairs = frozenset(
        (g.states[i], g.states[j]) for i in range(n) for j in range(n) if related[i, j]
    )
    return Relation(pairs)


def bis_kernel(g: GameStructure) -> Partition:
    """Partition refinement; two states stay together iff the class-mass
    matching system is feasible in both directions.  Splitting keeps a
    state with the lowest-indexed representative it is still equivalent
    to, which is sound because mutual feasibility at a fixed partition is
    an equivalence."""
    n = len(g.states)
    blocks = _prop_blocks(g)
    for _ in range(n * n + 1):
        current = Partition(tuple(tuple(g.states[i] for i in b) for b in blocks))
        new_blocks: list[list[int]] = []
        for block in blocks:
            subs: list[list[int]] = []
            for i in block:
                s = g.states[i]
                for sub in subs:
                    rep = g.states[sub[0]]
                    if matching.onebis_feasible(g, s, rep, current.blocks) and \
                       matching.onebis_feasible(g, rep, s, current.blocks):
                        sub.append(i)
                        break
                else:
                    subs.append([i])
            new_blocks.extend(subs)
        if len(new_blocks) == len(blocks):
            return current
        blocks = new_blocks
    raise ContractError("partition refinement failed to stabilize")
