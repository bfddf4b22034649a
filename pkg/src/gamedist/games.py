"""Game structures: validation, classification, one-step expectation.

A structure holds finitely many states, a valuation interval [theta1,
theta2], per-state variable valuations, per-player move sets and a
probabilistic transition function delta(s, a, b).  Everything is an
immutable value after construction, so all operations here are pure
functions and safe to call concurrently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import ContractError, FormatError

PROB_TOL = 1e-9

MDP1 = "MDP1"
MDP2 = "MDP2"
TURN_BASED = "TurnBased"
CONCURRENT = "Concurrent"

TURN_VARIABLE = "turn"


@dataclass(frozen=True)
class Valuation:
    """Per-state real values.  Interval membership is checked on demand,
    not on construction: payoff iterates legitimately leave the interval."""

    values: dict[str, float]

    def __getitem__(self, state: str) -> float:
        return self.values[state]

    def as_array(self, g: "GameStructure") -> np.ndarray:
        return np.array([self.values[s] for s in g.states], dtype=float)

    def within_interval(self, g: "GameStructure", tol: float = PROB_TOL) -> bool:
        lo, hi = g.interval
        return all(lo - tol <= v <= hi + tol for v in self.values.values())


@dataclass(frozen=True)
class MixedMove:
    """Probability distribution over a state's pure moves."""

    weights: dict[str, float]

    def __post_init__(self):
        if any(w < -PROB_TOL for w in self.weights.values()):
            raise ContractError("mixed move has a negative weight")
        total = sum(self.weights.values())
        if abs(total - 1.0) > PROB_TOL:
            raise ContractError(f"mixed move weights sum to {total}, not 1")

    @classmethod
    def pure(cls, move: str) -> "MixedMove":
        return cls({move: 1.0})

    def support(self) -> tuple[str, ...]:
        return tuple(m for m, w in self.weights.items() if w > 0.0)


@dataclass(frozen=True)
class GameStructure:
    states: tuple[str, ...]
    interval: tuple[float, float]
    variables: dict[str, dict[str, float]]
    moves1: dict[str, tuple[str, ...]]
    moves2: dict[str, tuple[str, ...]]
    trans: dict[tuple[str, str, str], dict[str, float]]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.states)) != len(self.states):
            raise FormatError("duplicate state names")
        t1, t2 = self.interval
        if not t1 < t2:
            raise FormatError("interval must satisfy theta1 < theta2")

    # -- basic queries -------------------------------------------------

    @property
    def theta(self) -> float:
        """Width of the valuation interval, the maximal metric distance."""
        return self.interval[1] - self.interval[0]

    def index(self, state: str) -> int:
        idx = self._cache.get("index")
        if idx is None:
            idx = {s: i for i, s in enumerate(self.states)}
            self._cache["index"] = idx
        try:
            return idx[state]
        except KeyError:
            raise KeyError(f"unknown state {state!r}") from None

    def var_array(self, name: str) -> np.ndarray:
        key = ("var", name)
        arr = self._cache.get(key)
        if arr is None:
            try:
                per_state = self.variables[name]
            except KeyError:
                raise KeyError(f"unknown variable {name!r}") from None
            arr = np.array([per_state[s] for s in self.states], dtype=float)
            self._cache[key] = arr
        return arr

    def dist(self, state: str, m1: str, m2: str) -> np.ndarray:
        """delta(state, m1, m2) as a dense probability vector."""
        key = ("dist", state, m1, m2)
        vec = self._cache.get(key)
        if vec is None:
            try:
                d = self.trans[(state, m1, m2)]
            except KeyError:
                raise KeyError(f"no transition for {(state, m1, m2)!r}") from None
            vec = np.zeros(len(self.states))
            for target, prob in d.items():
                vec[self.index(target)] = prob
            vec.setflags(write=False)
            self._cache[key] = vec
        return vec

    def prop_matrix(self) -> np.ndarray:
        """Pairwise propositional distances, max over all variables."""
        mat = self._cache.get("prop")
        if mat is None:
            n = len(self.states)
            mat = np.zeros((n, n))
            for name in self.variables:
                col = self.var_array(name)
                mat = np.maximum(mat, np.abs(col[:, None] - col[None, :]))
            mat.setflags(write=False)
            self._cache["prop"] = mat
        return mat

    def owner(self, state: str) -> int:
        """Active player at a state of a turn-based structure (1 or 2)."""
        turn = self.variables.get(TURN_VARIABLE)
        if turn is None:
            raise ContractError("structure has no turn variable")
        return 1 if turn[state] == self.interval[0] else 2


def validate(g: GameStructure) -> list[str]:
    """Check every structural invariant; violations are data, not errors.

    Returns one human-readable message per violation, each naming the
    offending state, move pair or variable.
    """
    out: list[str] = []
    t1, t2 = g.interval
    states = set(g.states)

    for name, per_state in g.variables.items():
        for s in g.states:
            if s not in per_state:
                out.append(f"variable {name!r} has no value at state {s!r}")
            else:
                v = per_state[s]
                if not (t1 - PROB_TOL <= v <= t2 + PROB_TOL):
                    out.append(
                        f"variable {name!r} at state {s!r} is {v}, outside "
                        f"[{t1}, {t2}]"
                    )
        for s in per_state:
            if s not in states:
                out.append(f"variable {name!r} mentions unknown state {s!r}")

    for player, moves in ((1, g.moves1), (2, g.moves2)):
        for s in g.states:
            if not moves.get(s):
                out.append(f"player {player} has no moves at state {s!r}")

    for s in g.states:
        for a in g.moves1.get(s, ()):
            for b in g.moves2.get(s, ()):
                d = g.trans.get((s, a, b))
                if d is None:
                    out.append(f"missing transition at ({s!r}, {a!r}, {b!r})")
                    continue
                total = 0.0
                for target, prob in d.items():
                    if target not in states:
                        out.append(
                            f"transition at ({s!r}, {a!r}, {b!r}) targets "
                            f"unknown state {target!r}"
                        )
                    if prob < -PROB_TOL:
                        out.append(
                            f"negative probability {prob} at ({s!r}, {a!r}, {b!r})"
                        )
                    total += prob
                if abs(total - 1.0) > PROB_TOL:
                    out.append(
                        f"distribution at ({s!r}, {a!r}, {b!r}) sums to {total}"
                    )
    for (s, a, b) in g.trans:
        if s not in states:
            out.append(f"transition from unknown state {s!r}")
        elif a not in g.moves1.get(s, ()) or b not in g.moves2.get(s, ()):
            out.append(f"transition ({s!r}, {a!r}, {b!r}) uses unavailable moves")

    out.extend(_check_turn_discipline(g))
    return out


def _check_turn_discipline(g: GameStructure) -> list[str]:
    """Turn-based-shaped structures must carry a well-formed turn variable."""
    if _is_mdp(g, 1) or _is_mdp(g, 2):
        return []
    exclusive = all(
        len(g.moves1.get(s, ())) == 1 or len(g.moves2.get(s, ())) == 1
        for s in g.states
    )
    if not exclusive:
        return []  # genuinely concurrent
    turn = g.variables.get(TURN_VARIABLE)
    if turn is None:
        return ["turn-based move structure but no `turn` variable"]
    t1, t2 = g.interval
    out = []
    for s in g.states:
        v = turn.get(s)
        if v == t1:
            if len(g.moves2.get(s, ())) != 1:
                out.append(f"player-1 state {s!r} gives player 2 a move choice")
        elif v == t2:
            if len(g.moves1.get(s, ())) != 1:
                out.append(f"player-2 state {s!r} gives player 1 a move choice")
        else:
            out.append(f"turn variable at state {s!r} is {v}, neither bound")
    return out


def _is_mdp(g: GameStructure, player: int) -> bool:
    opponent_moves = g.moves2 if player == 1 else g.moves1
    return all(len(opponent_moves.get(s, ())) == 1 for s in g.states)


def classify(g: GameStructure) -> str:
    """One of MDP1, MDP2, TurnBased, Concurrent.

    Degenerate structures satisfy several definitions; ties break in the
    listed order, so a single-move game is an MDP1.
    """
    problems = validate(g)
    if problems:
        raise ContractError("invalid structure: " + "; ".join(problems[:3]))
    if _is_mdp(g, 1):
        return MDP1
    if _is_mdp(g, 2):
        return MDP2
    turn = g.variables.get(TURN_VARIABLE)
    if turn is not None and not _check_turn_discipline(g):
        t1, t2 = g.interval
        if all(turn[s] in (t1, t2) for s in g.states):
            return TURN_BASED
    return CONCURRENT


def prop_distance(g: GameStructure, s: str, t: str) -> float:
    """Maximum difference in any variable's valuation at s versus t."""
    return float(g.prop_matrix()[g.index(s), g.index(t)])


def extended_dist(
    g: GameStructure, s: str, x1: MixedMove, x2: MixedMove
) -> np.ndarray:
    """delta(s, x1, x2): the transition function extended bilinearly."""
    for x, moves, player in ((x1, g.moves1, 1), (x2, g.moves2, 2)):
        avail = moves.get(s, ())
        for m in x.support():
            if m not in avail:
                raise ContractError(
                    f"move {m!r} not available to player {player} at {s!r}"
                )
    vec = np.zeros(len(g.states))
    for a, wa in x1.weights.items():
        if wa == 0.0:
            continue
        for b, wb in x2.weights.items():
            if wb == 0.0:
                continue
            vec += wa * wb * g.dist(s, a, b)
    return vec


def expectation(
    g: GameStructure, s: str, x1: MixedMove, x2: MixedMove, k: Valuation
) -> float:
    """One-step expectation of k from s under the mixed move pair."""
    vec = extended_dist(g, s, x1, x2)
    kv = k.as_array(g)
    return float(vec @ kv)


@dataclass(frozen=True)
class MetricMatrix:
    """A directed-metric candidate over the state space.

    Entries may be +inf when the undiscounted total metric diverges, in
    which case ``divergent`` is set.  ``validate_metric`` checks the
    directed-metric laws for matrices claimed to be converged fixpoints.
    """

    states: tuple[str, ...]
    values: np.ndarray
    divergent: bool = False

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != (len(self.states), len(self.states)):
            raise ContractError("metric matrix shape does not match states")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @classmethod
    def zeros(cls, g: "GameStructure") -> "MetricMatrix":
        return cls(g.states, np.zeros((len(g.states), len(g.states))))

    @classmethod
    def from_dict(cls, g: "GameStructure", entries: Mapping[tuple[str, str], float],
                  default: float = 0.0) -> "MetricMatrix":
        n = len(g.states)
        arr = np.full((n, n), float(default))
        np.fill_diagonal(arr, 0.0)
        for (s, t), v in entries.items():
            arr[g.index(s), g.index(t)] = v
        return cls(g.states, arr, divergent=bool(np.isinf(arr).any()))

    def _idx(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise KeyError(f"unknown state {state!r}") from None

    def __getitem__(self, pair: tuple[str, str]) -> float:
        s, t = pair
        return float(self.values[self._idx(s), self._idx(t)])

    def as_dict(self) -> dict[tuple[str, str], float]:
        return {
            (s, t): float(self.values[i, j])
            for i, s in enumerate(self.states)
            for j, t in enumerate(self.states)
        }

    def validate_metric(self, tol: float = 1e-6) -> list[str]:
        """Violations of: nonnegativity, zero diagonal, triangle inequality."""
        out = []
        v = self.values
        n = len(self.states)
        for i in range(n):
            if abs(v[i, i]) > tol:
                out.append(f"d({self.states[i]}, {self.states[i]}) = {v[i, i]} != 0")
        if (v < -tol).any():
            out.append("negative entries present")
        for i in range(n):
            for j in range(n):
                through = v[i, :] + v[:, j]
                if v[i, j] > np.min(through) + tol:
                    k = int(np.argmin(through))
                    out.append(
                        f"triangle violated: d({self.states[i]},{self.states[j]}) "
                        f"> d(.,{self.states[k]}) sum"
                    )
        return out


# -- game file format ---------------------------------------------------

_TOP_KEYS = {"interval", "states", "variables", "moves1", "moves2", "trans"}
_TRANS_KEYS = {"state", "m1", "m2", "dist"}
_DEFAULT_MOVE = "-"


def parse_game(text: str, where: str = "<string>") -> GameStructure:
    """Parse the JSON game format.  Unknown keys are rejected."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"{where}: not valid JSON ({e})") from None
    if not isinstance(raw, dict):
        raise FormatError(f"{where}: top level must be an object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise FormatError(f"{where}: unknown top-level keys {sorted(unknown)}")
    for key in ("interval", "states", "trans"):
        if key not in raw:
            raise FormatError(f"{where}: missing required key {key!r}")

    interval = raw["interval"]
    if (
        not isinstance(interval, list)
        or len(interval) != 2
        or not all(isinstance(x, (int, float)) for x in interval)
    ):
        raise FormatError(f"{where}: interval must be a pair of numbers")
    states = raw["states"]
    if not isinstance(states, list) or not all(isinstance(s, str) for s in states):
        raise FormatError(f"{where}: states must be a list of names")

    variables = {}
    for name, per_state in (raw.get("variables") or {}).items():
        if not isinstance(per_state, dict):
            raise FormatError(f"{where}: variable {name!r} must map state to value")
        variables[name] = {s: float(v) for s, v in per_state.items()}

    def read_moves(key):
        given = raw.get(key) or {}
        if not isinstance(given, dict):
            raise FormatError(f"{where}: {key} must map state to a move list")
        out = {}
        for s in states:
            entry = given.get(s)
            if entry is None:
                out[s] = (_DEFAULT_MOVE,)
            elif isinstance(entry, list) and entry and all(isinstance(m, str) for m in entry):
                out[s] = tuple(entry)
            else:
                raise FormatError(f"{where}: {key}[{s!r}] must be a nonempty move list")
        for s in given:
            if s not in states:
                raise FormatError(f"{where}: {key} mentions unknown state {s!r}")
        return out

    moves1 = read_moves("moves1")
    moves2 = read_moves("moves2")

    trans = {}
    if not isinstance(raw["trans"], list):
        raise FormatError(f"{where}: trans must be a list")
    for i, entry in enumerate(raw["trans"]):
        if not isinstance(entry, dict):
            raise FormatError(f"{where}: trans[{i}] must be an object")
        unknown = set(entry) - _TRANS_KEYS
        if unknown:
            raise FormatError(f"{where}: trans[{i}] has unknown keys {sorted(unknown)}")
        if "state" not in entry or "dist" not in entry:
            raise FormatError(f"{where}: trans[{i}] needs `state` and `dist`")
        s = entry["state"]
        m1 = entry.get("m1", _DEFAULT_MOVE)
        m2 = entry.get("m2", _DEFAULT_MOVE)
        d = entry["dist"]
        if not isinstance(d, dict) or not d:
            raise FormatError(f"{where}: trans[{i}].dist must be a nonempty object")
        key = (s, m1, m2)
        if key in trans:
            raise FormatError(f"{where}: duplicate transition for {key!r}")
        trans[key] = {target: float(p) for target, p in d.items()}

    return GameStructure(tuple(states), (float(interval[0]), float(interval[1])),
                         variables, moves1, moves2, trans)


def load_game(path: str) -> GameStructure:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise FormatError(f"{path}: cannot read ({e.strerror})") from None
    return parse_game(text, where=path)


def _fmt9(x: float):
    """Round-trip floats through 9 significant digits."""
    return float(f"{float(x):.9g}")


def dump_game(g: GameStructure) -> str:
    """Serialize back to the file format (9 significant digits)."""
    doc = {
        "interval": [_fmt9(g.interval[0]), _fmt9(g.interval[1])],
        "states": list(g.states),
        "variables": {
            name: {s: _fmt9(per_state[s]) for s in g.states}
            for name, per_state in g.variables.items()
        },
        "moves1": {s: list(g.moves1[s]) for s in g.states},
        "moves2": {s: list(g.moves2[s]) for s in g.states},
        "trans": [
            {
                "state": s,
                "m1": a,
                "m2": b,
                "dist": {t: _fmt9(p) for t, p in dist.items()},
            }
            for (s, a, b), dist in g.trans.items()
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def save_game(g: GameStructure, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_game(g))


def build_game(
    states: Iterable[str],
    interval: tuple[float, float],
    variables: Mapping[str, Mapping[str, float]],
    moves1: Mapping[str, Iterable[str]],
    trans: Mapping[tuple[str, str, str], Mapping[str, float]],
    moves2: Mapping[str, Iterable[str]] | None = None,
) -> GameStructure:
    """Convenience constructor; omitted moves2 defaults to the singleton
    passive move, mirroring the file-format shorthand."""
    states = tuple(states)
    m2 = {s: (_DEFAULT_MOVE,) for s in states}
    if moves2:
        for s, ms in moves2.items():
            m2[s] = tuple(ms)
    return GameStructure(
        states,
        (float(interval[0]), float(interval[1])),
        {n: dict(v) for n, v in variables.items()},
        {s: tuple(ms) for s, ms in moves1.items()},
        m2,
        {k: dict(v) for k, v in trans.items()},
    )
