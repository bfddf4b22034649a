"""One-step distance machinery for turn-based games and MDPs.

The one-step simulation distance between same-owner states s and t reduces
to, per pure move on one side, a minimum-cost trans-shipping problem whose
target marginal is itself a decision variable (a mixed move at the other
state).  This module builds and solves those programs, plus the per-move
class-mass feasibility systems used by partition refinement.

Conventions: the shipping plan lam[u, v] moves probability mass from
successor u of the source state onto successor v of the responding state,
at cost d(u, v); source-side rows always belong to the state written
first.  For player-1-owned pairs the pure move ranges over the moves of s
and the responder mixes at t; for player-2-owned pairs the roles flip (the
pure move ranges over the moves of t, the responder mixes at s), which is
what the change-of-variables argument for the minimizing player yields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, UnsupportedStructureError
from .games import (
    CONCURRENT,
    MDP1,
    MDP2,
    TURN_BASED,
    GameStructure,
    MetricMatrix,
    classify,
    prop_distance,
)
from .linprog import LpProblem, simplex_min

_EPS = 1e-12


# -- compiled per-game view ----------------------------------------------


@dataclass
class _ActiveView:
    kind: str
    owner: np.ndarray          # active player per state (1 or 2)
    moves: list[tuple[str, ...]]   # active player's moves per state
    rows: list[np.ndarray]     # stacked successor distributions per state
    reach: list[np.ndarray]    # union of successor supports per state
    theta: float


def active_view(g: GameStructure) -> _ActiveView:
    view = g._cache.get("active_view")
    if view is not None:
        return view
    kind = g._cache.get("kind")
    if kind is None:
        kind = classify(g)
        g._cache["kind"] = kind
    if kind == CONCURRENT:
        raise UnsupportedStructureError(
            "one-step matching needs a turn-based game or an MDP"
        )
    n = len(g.states)
    owner = np.ones(n, dtype=int)
    if kind == MDP2:
        owner[:] = 2
    elif kind == TURN_BASED:
        for i, s in enumerate(g.states):
            owner[i] = g.owner(s)
    moves = []
    rows = []
    reach = []
    for i, s in enumerate(g.states):
        if owner[i] == 1:
            act = g.moves1[s]
            passive = g.moves2[s][0]
            stack = np.stack([g.dist(s, a, passive) for a in act])
        else:
            act = g.moves2[s]
            passive = g.moves1[s][0]
            stack = np.stack([g.dist(s, passive, b) for b in act])
        moves.append(tuple(act))
        rows.append(stack)
        reach.append(np.flatnonzero(stack.sum(axis=0) > 0.0))
    view = _ActiveView(kind, owner, moves, rows, reach, g.theta)
    g._cache["active_view"] = view
    return view


def as_costs(g: GameStructure, d) -> np.ndarray:
    """Accept a MetricMatrix, a (s, t)->value mapping, or a raw array."""
    n = len(g.states)
    if isinstance(d, MetricMatrix):
        if d.states != g.states:
            raise ContractError("metric matrix belongs to a different game")
        return np.asarray(d.values, dtype=float)
    if isinstance(d, dict):
        return MetricMatrix.from_dict(g, d).values
    arr = np.asarray(d, dtype=float)
    if arr.shape != (n, n):
        raise ContractError("cost matrix has the wrong shape")
    return arr


# -- shipping solvers -----------------------------------------------------


def _masked_dot(weights: np.ndarray, costs_row: np.ndarray) -> float:
    nz = weights > 0.0
    return float(np.dot(weights[nz], costs_row[nz]))


def _solve_move_lp(
    costs: np.ndarray,
    src_rows: np.ndarray | None,
    src_vec: np.ndarray | None,
    tgt_rows: np.ndarray | None,
    tgt_vec: np.ndarray | None,
) -> float:
    """General form: ship(source -> target) where either side is a fixed
    distribution (vec) or a to-be-mixed stack of distributions (rows)."""
    if src_vec is not None:
        U = np.flatnonzero(src_vec > 0.0)
        src_mass = src_vec[U]
    else:
        U = np.flatnonzero(src_rows.sum(axis=0) > 0.0)
    if tgt_vec is not None:
        V = np.flatnonzero(tgt_vec > 0.0)
        tgt_mass = tgt_vec[V]
    else:
        V = np.flatnonzero(tgt_rows.sum(axis=0) > 0.0)

    cell_cost = costs[np.ix_(U, V)]
    finite = np.isfinite(cell_cost)
    cells = [(i, j) for i in range(len(U)) for j in range(len(V)) if finite[i, j]]
    n_lam = len(cells)
    n_x = 0 if src_rows is None else src_rows.shape[0]
    n_y = 0 if tgt_rows is None else tgt_rows.shape[0]
    nvars = n_lam + n_x + n_y
    nrows = len(U) + len(V) + (1 if n_x else 0) + (1 if n_y else 0)
    A = np.zeros((nrows, nvars))
    b = np.zeros(nrows)
    c = np.zeros(nvars)
    for k, (i, j) in enumerate(cells):
        c[k] = cell_cost[i, j]
        A[i, k] = 1.0
        A[len(U) + j, k] = 1.0
    if src_rows is None:
        b[: len(U)] = src_mass
    else:
        for m in range(n_x):
            A[: len(U), n_lam + m] = -src_rows[m, U]
    if tgt_rows is None:
        b[len(U): len(U) + len(V)] = tgt_mass
    else:
        for m in range(n_y):
            A[len(U): len(U) + len(V), n_lam + n_x + m] = -tgt_rows[m, V]
    r = len(U) + len(V)
    if n_x:
        A[r, n_lam: n_lam + n_x] = 1.0
        b[r] = 1.0
        r += 1
    if n_y:
        A[r, n_lam + n_x:] = 1.0
        b[r] = 1.0
    status, _, value = simplex_min(A, b, c)
    if status == 1:
        return float("inf")
    if status == 2:  # impossible for nonnegative costs
        raise ContractError("shipping program unbounded; bad cost matrix")
    return max(0.0, value)


def ship(p: np.ndarray, q: np.ndarray, costs: np.ndarray) -> float:
    """Minimum cost of shipping distribution p into distribution q."""
    U = np.flatnonzero(p > 0.0)
    V = np.flatnonzero(q > 0.0)
    if len(U) == 1:
        return _masked_dot(q, costs[U[0], :])
    if len(V) == 1:
        return _masked_dot(p, costs[:, V[0]])
    return _solve_move_lp(costs, None, p, None, q)


def _pure_source_value(p: np.ndarray, tgt_rows: np.ndarray, costs: np.ndarray) -> float:
    """inf over mixed target marginals of shipping p into the mix."""
    U = np.flatnonzero(p > 0.0)
    if len(U) == 1:
        row = costs[U[0], :]
        return min(_masked_dot(tr, row) for tr in tgt_rows)
    if tgt_rows.shape[0] == 1:
        return ship(p, tgt_rows[0], costs)
    return _solve_move_lp(costs, None, p, tgt_rows, None)


def _pure_target_value(src_rows: np.ndarray, q: np.ndarray, costs: np.ndarray) -> float:
    """inf over mixed source marginals of shipping the mix into q."""
    V = np.flatnonzero(q > 0.0)
    if len(V) == 1:
        col = costs[:, V[0]]
        return min(_masked_dot(sr, col) for sr in src_rows)
    if src_rows.shape[0] == 1:
        return ship(src_rows[0], q, costs)
    return _solve_move_lp(costs, src_rows, None, None, q)


def _both_mixed_value(src_rows: np.ndarray, tgt_rows: np.ndarray, costs: np.ndarray) -> float:
    if src_rows.shape[0] == 1:
        return _pure_source_value(src_rows[0], tgt_rows, costs)
    if tgt_rows.shape[0] == 1:
        return _pure_target_value(src_rows, tgt_rows[0], costs)
    return _solve_move_lp(costs, src_rows, None, tgt_rows, None)


def one_step_sup(view: _ActiveView, si: int, ti: int, costs: np.ndarray) -> float:
    """The optimal-transport term of the metric transformer at (si, ti).

    Same-owner pairs maximize over the pure side per the move conventions
    above.  Cross-owner pairs (turn-based only) follow the sup/inf shape
    of the difference of pre operators: a player-1 source against a
    player-2 target decomposes into a pure-vs-pure maximum, the opposite
    orientation into a single jointly-mixed program.
    """
    own_s, own_t = view.owner[si], view.owner[ti]
    if own_s == own_t:
        if own_s == 1:
            return max(
                _pure_source_value(p, view.rows[ti], costs) for p in view.rows[si]
            )
        return max(
            _pure_target_value(view.rows[si], q, costs) for q in view.rows[ti]
        )
    if own_s == 1:
        return max(
            ship(p, q, costs) for p in view.rows[si] for q in view.rows[ti]
        )
    return _both_mixed_value(view.rows[si], view.rows[ti], costs)


# -- public operations ----------------------------------------------------


def onestep_move(g: GameStructure, s: str, t: str, d, move: str) -> float:
    """Per-move one-step distance: the trans-shipping optimum.

    For player-1-owned pairs ``move`` is a move of ``s``; for
    player-2-owned pairs it is a move of ``t`` (the minimizing player mixes
    at the other state).
    """
    view = active_view(g)
    si, ti = g.index(s), g.index(t)
    if view.owner[si] != view.owner[ti]:
        raise ContractError(
            f"states {s!r} and {t!r} belong to different players"
        )
    costs = as_costs(g, d)
    if view.owner[si] == 1:
        try:
            mi = view.moves[si].index(move)
        except ValueError:
            raise ContractError(f"move {move!r} not available at {s!r}") from None
        return _pure_source_value(view.rows[si][mi], view.rows[ti], costs)
    try:
        mi = view.moves[ti].index(move)
    except ValueError:
        raise ContractError(f"move {move!r} not available at {t!r}") from None
    return _pure_target_value(view.rows[si], view.rows[ti][mi], costs)


def onestep(g: GameStructure, s: str, t: str, d) -> float:
    """One-step simulation distance: propositional distance joined with
    the worst per-move shipping cost.  Cross-player pairs sit at the full
    interval width.  Costs are capped at theta, matching test functions
    confined to the valuation interval, so the result never exceeds theta.
    """
    view = active_view(g)
    si, ti = g.index(s), g.index(t)
    if si == ti:
        return 0.0
    if view.owner[si] != view.owner[ti]:
        return view.theta
    costs = np.minimum(as_costs(g, d), view.theta)
    return max(prop_distance(g, s, t), one_step_sup(view, si, ti, costs))


# -- trans-shipping instances as explicit LPs ------------------------------


@dataclass(frozen=True)
class TransShipInstance:
    """A single per-move shipping program, restricted to relevant pairs.

    Rows are the successors of ``source`` under ``move``; columns are the
    states reachable from ``target`` under any of its moves.  ``to_lp``
    spells the program out for the generic solver, which the fast array
    path is cross-checked against in the tests.
    """

    source: str
    target: str
    move: str
    row_states: tuple[str, ...]
    col_states: tuple[str, ...]
    costs: np.ndarray
    source_mass: np.ndarray
    target_rows: np.ndarray
    target_moves: tuple[str, ...]

    def to_lp(self) -> LpProblem:
        lam = [
            f"ship[{u}->{v}]" for u in self.row_states for v in self.col_states
        ]
        ys = [f"y[{b}]" for b in self.target_moves]
        cons = []
        nv = len(self.col_states)
        for i, u in enumerate(self.row_states):
            coeffs = {lam[i * nv + j]: 1.0 for j in range(nv)}
            cons.append((coeffs, "=", float(self.source_mass[i])))
        for j, v in enumerate(self.col_states):
            coeffs = {lam[i * nv + j]: 1.0 for i in range(len(self.row_states))}
            for m, y in enumerate(ys):
                coeffs[y] = -float(self.target_rows[m, j])
            cons.append((coeffs, "=", 0.0))
        cons.append(({y: 1.0 for y in ys}, "=", 1.0))
        objective = {
            lam[i * nv + j]: float(self.costs[i, j])
            for i in range(len(self.row_states))
            for j in range(nv)
        }
        return LpProblem(tuple(lam + ys), objective, tuple(cons))


def transship_instance(g: GameStructure, s: str, t: str, move: str, d) -> TransShipInstance:
    """Build the explicit program for a player-1-owned pair."""
    view = active_view(g)
    si, ti = g.index(s), g.index(t)
    if view.owner[si] != 1 or view.owner[ti] != 1:
        raise ContractError("explicit instances are built for player-1 pairs")
    try:
        mi = view.moves[si].index(move)
    except ValueError:
        raise ContractError(f"move {move!r} not available at {s!r}") from None
    costs = as_costs(g, d)
    p = view.rows[si][mi]
    U = np.flatnonzero(p > 0.0)
    V = view.reach[ti]
    return TransShipInstance(
        s,
        t,
        move,
        tuple(g.states[u] for u in U),
        tuple(g.states[v] for v in V),
        costs[np.ix_(U, V)],
        p[U],
        view.rows[ti][:, V],
        view.moves[ti],
    )


# -- per-move class-mass feasibility (partition refinement) ----------------


def _class_masses(rows: np.ndarray, class_index: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((rows.shape[0], n_classes))
    for c in range(n_classes):
        out[:, c] = rows[:, class_index == c].sum(axis=1)
    return out


def onebis_feasible(g: GameStructure, s: str, t: str, partition) -> bool:
    """Can every pure move at s be matched, class mass by class mass, by a
    mixed move at t?  One feasibility program per move of s; all must hold.

    ``partition`` is an iterable of state blocks.  Both states must be
    owned by the same player.
    """
    view = active_view(g)
    si, ti = g.index(s), g.index(t)
    if view.owner[si] != view.owner[ti]:
        raise ContractError(f"states {s!r} and {t!r} belong to different players")
    blocks = [tuple(b) for b in partition]
    class_index = np.full(len(g.states), -1, dtype=int)
    for ci, block in enumerate(blocks):
        for st in block:
            class_index[g.index(st)] = ci
    if (class_index < 0).any():
        raise ContractError("partition does not cover the state space")
    n_classes = len(blocks)
    src = _class_masses(view.rows[si], class_index, n_classes)
    tgt = _class_masses(view.rows[ti], class_index, n_classes)
    nb = tgt.shape[0]
    for a_mass in src:
        # vars: x_b, then one surplus per class; rows: classes + simplex
        nvars = nb + n_classes
        A = np.zeros((n_classes + 1, nvars))
        b = np.zeros(n_classes + 1)
        for c in range(n_classes):
            A[c, :nb] = tgt[:, c]
            A[c, nb + c] = -1.0
            b[c] = a_mass[c]
        A[n_classes, :nb] = 1.0
        b[n_classes] = 1.0
        status, _, _ = simplex_min(A, b, np.zeros(nvars))
        if status != 0:
            return False
    return True
