"""Small dense linear-program solver.

Two-phase simplex on a dense tableau with Bland's anti-cycling rule.  All
problems in this package are tiny (tens of variables), so robustness and
determinism matter more than speed; the inner pivot loop is optionally
compiled with numba because the metric fixpoints solve many thousands of
these programs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-7
_MAX_PIVOTS = 100_000


def _simplex_kernel(A, b, c):
    """Solve min c.x s.t. A x = b (b >= 0), x >= 0.

    Returns (status, x, value) with status 0=optimal, 1=infeasible,
    2=unbounded.  Entering variable: smallest index with negative reduced
    cost; leaving: minimum ratio, ties broken by smallest basis index
    (Bland's rule, guarantees termination).
    """
    m, n = A.shape
    width = n + m + 1
    T = np.zeros((m + 1, width))
    basis = np.empty(m, dtype=np.int64)
    for i in range(m):
        for j in range(n):
            T[i, j] = A[i, j]
        T[i, n + i] = 1.0
        T[i, width - 1] = b[i]
        basis[i] = n + i
    # Phase-1 objective: minimize the artificial sum.
    for j in range(width):
        s = 0.0
        for i in range(m):
            s += T[i, j]
        T[m, j] = -s
    for i in range(m):
        T[m, n + i] = 0.0

    for phase in range(2):
        allowed = n + m if phase == 0 else n
        pivots = 0
        while True:
            enter = -1
            for j in range(allowed):
                if T[m, j] < -_PIVOT_TOL:
                    enter = j
                    break
            if enter < 0:
                break
            leave = -1
            best = np.inf
            for i in range(m):
                a = T[i, enter]
                if a > _PIVOT_TOL:
                    r = T[i, width - 1] / a
                    if r < best - 1e-12:
                        best = r
                        leave = i
                    elif r <= best + 1e-12 and leave >= 0 and basis[i] < basis[leave]:
                        leave = i
            if leave < 0:
                if phase == 0:
                    return 1, np.zeros(n), 0.0
                return 2, np.zeros(n), 0.0
            piv = T[leave, enter]
            T[leave, :] /= piv
            for i in range(m + 1):
                if i != leave:
                    f = T[i, enter]
                    if f != 0.0:
                        T[i, :] -= f * T[leave, :]
            basis[leave] = enter
            pivots += 1
            if pivots > _MAX_PIVOTS:
                return 1, np.zeros(n), 0.0
        if phase == 0:
            if -T[m, width - 1] > _FEAS_TOL:
                return 1, np.zeros(n), 0.0
            # Install the real objective, expressed through the basis.
            for j in range(width):
                T[m, j] = 0.0
            for j in range(n):
                T[m, j] = c[j]
            for i in range(m):
                bj = basis[i]
                cost = c[bj] if bj < n else 0.0
                if cost != 0.0:
                    for j in range(width):
                        T[m, j] -= cost * T[i, j]

    x = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = T[i, width - 1]
    value = 0.0
    for j in range(n):
        value += c[j] * x[j]
    return 0, x, value


try:  # pragma: no cover - exercised whenever numba is importable
    from numba import njit

    _simplex_compiled = njit(cache=True)(_simplex_kernel)
except Exception:  # pragma: no cover
    _simplex_compiled = _simplex_kernel


def simplex_min(A: np.ndarray, b: np.ndarray, c: np.ndarray):
    """Standard-form solve; thin wrapper around the compiled kernel."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    c = np.ascontiguousarray(c, dtype=np.float64)
    if A.shape[0] == 0:
        return 0, np.zeros(A.shape[1]), 0.0
    return _simplex_compiled(A, b, c)


@dataclass(frozen=True)
class LpProblem:
    """A named linear program, to be minimized.

    ``constraints`` is a sequence of (coefficients, relation, rhs) with
    relation one of ``"<="``, ``"="``, ``">="``.  Default variable bounds
    are [0, +inf); pass ``None`` for an unbounded side.
    """

    variables: tuple[str, ...]
    objective: Mapping[str, float] = field(default_factory=dict)
    constraints: Sequence[tuple[Mapping[str, float], str, float]] = ()
    bounds: Mapping[str, tuple[float | None, float | None]] = field(default_factory=dict)

    def __post_init__(self):
        declared = set(self.variables)
        if len(declared) != len(self.variables):
            raise ContractError("duplicate variable names")
        for name, coef in self.objective.items():
            if name not in declared:
                raise ContractError(f"objective references undeclared variable {name!r}")
            if not math.isfinite(coef):
                raise ContractError(f"non-finite objective coefficient for {name!r}")
        for idx, (coeffs, rel, rhs) in enumerate(self.constraints):
            if rel not in ("<=", "=", ">="):
                raise ContractError(f"constraint {idx}: bad relation {rel!r}")
            if not math.isfinite(rhs):
                raise ContractError(f"constraint {idx}: non-finite rhs")
            for name, coef in coeffs.items():
                if name not in declared:
                    raise ContractError(
                        f"constraint {idx} references undeclared variable {name!r}"
                    )
                if not math.isfinite(coef):
                    raise ContractError(f"constraint {idx}: non-finite coefficient")
        for name in self.bounds:
            if name not in declared:
                raise ContractError(f"bounds reference undeclared variable {name!r}")


@dataclass(frozen=True)
class LpOutcome:
    status: str
    value: float | None = None
    point: dict[str, float] | None = None


def _standardize(p: LpProblem):
    """Rewrite to min c.x, A x = b, x >= 0 with b >= 0.

    Returns (A, b, c, offset, recover) where recover maps a standard-form
    solution vector back to named variable values.
    """
    cols: list[tuple[str, str, float]] = []  # (kind, var, shift-or-bound)
    col_of: dict[str, list[int]] = {}
    extra_rows: list[tuple[dict[str, float], str, float]] = []
    for v in p.variables:
        lo, hi = p.bounds.get(v, (0.0, None))
        lo = -np.inf if lo is None else float(lo)
        hi = np.inf if hi is None else float(hi)
        if lo > hi:
            raise ContractError(f"empty bound interval for {v!r}")
        if lo > -np.inf:
            col_of[v] = [len(cols)]
            cols.append(("shift", v, lo))
            if hi < np.inf:
                extra_rows.append(({v: 1.0}, "<=", hi))
        elif hi < np.inf:
            col_of[v] = [len(cols)]
            cols.append(("neg", v, hi))
        else:
            col_of[v] = [len(cols), len(cols) + 1]
            cols.append(("pos", v, 0.0))
            cols.append(("min", v, 0.0))

    all_rows = list(p.constraints) + extra_rows
    n0 = len(cols)
    n_slack = sum(1 for _, rel, _ in all_rows if rel != "=")
    n = n0 + n_slack
    m = len(all_rows)
    A = np.zeros((m, n))
    b = np.zeros(m)
    c = np.zeros(n)
    offset = 0.0

    def put(row: np.ndarray, var: str, coef: float) -> float:
        """Write coef*var into row in transformed coordinates; returns the
        constant produced by the transform."""
        const = 0.0
        for ci in col_of[var]:
            kind, _, val = cols[ci]
            if kind == "shift":
                row[ci] += coef
                const += coef * val
            elif kind == "neg":
                row[ci] -= coef
                const += coef * val
            elif kind == "pos":
                row[ci] += coef
            else:
                row[ci] -= coef
        return const

    crow = np.zeros(n)
    for var, coef in p.objective.items():
        offset += put(crow, var, coef)
    c[:] = crow

    slack = n0
    for i, (coeffs, rel, rhs) in enumerate(all_rows):
        const = 0.0
        for var, coef in coeffs.items():
            const += put(A[i], var, coef)
        b[i] = rhs - const
        if rel == "<=":
            A[i, slack] = 1.0
            slack += 1
        elif rel == ">=":
            A[i, slack] = -1.0
            slack += 1
        if b[i] < 0:
            A[i, :] *= -1.0
            b[i] *= -1.0

    def recover(x: np.ndarray) -> dict[str, float]:
        out = {}
        for v in p.variables:
            acc = 0.0
            for ci in col_of[v]:
                kind, _, val = cols[ci]
                if kind == "shift":
                    acc += x[ci] + val
                elif kind == "neg":
                    acc += val - x[ci]
                elif kind == "pos":
                    acc += x[ci]
                else:
                    acc -= x[ci]
            out[v] = acc
        return out

    return A, b, c, offset, recover


def solve(p: LpProblem) -> LpOutcome:
    """Optimize the problem; deterministic for identical input."""
    A, b, c, offset, recover = _standardize(p)
    status, x, value = simplex_min(A, b, c)
    if status == 1:
        return LpOutcome(INFEASIBLE)
    if status == 2:
        return LpOutcome(UNBOUNDED)
    return LpOutcome(OPTIMAL, value + offset, recover(x))


def feasible(p: LpProblem) -> tuple[bool, dict[str, float] | None]:
    """Phase-1 only: is the constraint set nonempty, and a witness point."""
    stripped = LpProblem(p.variables, {}, p.constraints, p.bounds)
    out = solve(stripped)
    if out.status != OPTIMAL:
        return False, None
    return True, out.point
