"""Small built-in game structures used by tests, demos and docs."""

from __future__ import annotations

from .games import GameStructure, build_game


def split_mdp_pair(epsilon: float = 0.1) -> GameStructure:
    """Disjoint union of two reward-free MDPs over [0, 1].

    The unprimed chain s -> t branches into absorbing u, v; in the primed
    copy the probabilistic split is perturbed by ``epsilon``.  Same-letter
    states share a color variable, so their propositional distance is 0,
    and every cross-color pair is at distance 1.  At epsilon = 0.1 this is
    the standard worked example for trans-shipping costs.
    """
    e = float(epsilon)
    states = ["s", "t", "u", "v", "s1", "t1", "w1", "u1", "v1"]
    colors = {
        "cs": ["s", "s1"],
        "ct": ["t", "t1", "w1"],
        "cu": ["u", "u1"],
        "cv": ["v", "v1"],
    }
    variables = {
        name: {s: (1.0 if s in members else 0.0) for s in states}
        for name, members in colors.items()
    }
    moves1 = {
        "s": ["a"],
        "t": ["b", "c", "f"],
        "u": ["stay"],
        "v": ["stay"],
        "s1": ["a", "b"],
        "t1": ["c"],
        "w1": ["e", "f"],
        "u1": ["stay"],
        "v1": ["stay"],
    }
    trans = {
        ("s", "a", "-"): {"t": 1.0},
        ("t", "b", "-"): {"v": 1.0},
        ("t", "c", "-"): {"u": 1.0},
        ("t", "f", "-"): {"u": 0.5, "v": 0.5},
        ("u", "stay", "-"): {"u": 1.0},
        ("v", "stay", "-"): {"v": 1.0},
        ("s1", "a", "-"): {"w1": 1.0},
        ("s1", "b", "-"): {"t1": 1.0},
        ("t1", "c", "-"): {"u1": 0.5 - e, "v1": 0.5 + e},
        ("w1", "e", "-"): {"u1": 1.0 - e, "v1": e},
        ("w1", "f", "-"): {"u1": e, "v1": 1.0 - e},
        ("u1", "stay", "-"): {"u1": 1.0},
        ("v1", "stay", "-"): {"v1": 1.0},
    }
    if e == 0.0:
        trans[("t1", "c", "-")] = {"u1": 0.5, "v1": 0.5}
        trans[("w1", "e", "-")] = {"u1": 1.0}
        trans[("w1", "f", "-")] = {"v1": 1.0}
    return build_game(states, (0.0, 1.0), variables, moves1, trans)


def mixed_move_mdp_pair() -> GameStructure:
    """Two tiny MDPs where one state owns a genuinely probabilistic move.

    State s has moves b, c and e with e splitting evenly between the
    absorbing states u and v; state t only has the deterministic b and c,
    so matching e requires mixing.  Used for expectation and matching
    examples.
    """
    states = ["s", "t", "u", "v"]
    variables = {
        "cs": {"s": 1.0, "t": 1.0, "u": 0.0, "v": 0.0},
        "cu": {"s": 0.0, "t": 0.0, "u": 1.0, "v": 0.0},
    }
    moves1 = {
        "s": ["b", "c", "e"],
        "t": ["b", "c"],
        "u": ["stay"],
        "v": ["stay"],
    }
    trans = {
        ("s", "b", "-"): {"v": 1.0},
        ("s", "c", "-"): {"u": 1.0},
        ("s", "e", "-"): {"u": 0.5, "v": 0.5},
        ("t", "b", "-"): {"v": 1.0},
        ("t", "c", "-"): {"u": 1.0},
        ("u", "stay", "-"): {"u": 1.0},
        ("v", "stay", "-"): {"v": 1.0},
    }
    return build_game(states, (0.0, 1.0), variables, moves1, trans)


def reward_chain_pair(zero_tail: bool = False) -> GameStructure:
    """Two deterministic two-state chains over [0, 8] with a reward variable.

    s -> t (absorbing, r = 5) with r(s) = 2, and s1 -> t1 (absorbing) with
    r(s1) = 2.1 and r(t1) = 8.  This is the counterexample showing the
    discounted metric does not bound the discounted value difference.
    With ``zero_tail`` the primed copy instead has r(s1) = 2, r(t1) = 0,
    which makes the undiscounted total metric diverge against the original.
    """
    states = ["s", "t", "s1", "t1"]
    if zero_tail:
        r = {"s": 2.0, "t": 5.0, "s1": 2.0, "t1": 0.0}
    else:
        r = {"s": 2.0, "t": 5.0, "s1": 2.1, "t1": 8.0}
    moves1 = {s: ["go"] for s in states}
    trans = {
        ("s", "go", "-"): {"t": 1.0},
        ("t", "go", "-"): {"t": 1.0},
        ("s1", "go", "-"): {"t1": 1.0},
        ("t1", "go", "-"): {"t1": 1.0},
    }
    return build_game(states, (0.0, 8.0), {"r": r}, moves1, trans)


def matching_pennies_reachability() -> GameStructure:
    """Concurrent reachability game: matched moves reach the goal.

    From ``m`` both players pick heads or tails; a match moves to the
    absorbing goal (q = 1), a mismatch to the absorbing safe state.  The
    optimal reachability value at m is 1/2.
    """
    states = ["m", "goal", "safe"]
    q = {"m": 0.0, "goal": 1.0, "safe": 0.0}
    moves1 = {"m": ["h", "t"], "goal": ["stay"], "safe": ["stay"]}
    moves2 = {"m": ["h", "t"], "goal": ["stay"], "safe": ["stay"]}
    trans = {
        ("m", "h", "h"): {"goal": 1.0},
        ("m", "t", "t"): {"goal": 1.0},
        ("m", "h", "t"): {"safe": 1.0},
        ("m", "t", "h"): {"safe": 1.0},
        ("goal", "stay", "stay"): {"goal": 1.0},
        ("safe", "stay", "stay"): {"safe": 1.0},
    }
    return build_game(states, (0.0, 1.0), {"q": q}, moves1, trans, moves2=moves2)


def two_cycle_reward(interval=(0.0, 1.0)) -> GameStructure:
    """Deterministic 2-cycle with rewards 0 and 1; closed-form payoffs."""
    states = ["x", "y"]
    r = {"x": 0.0, "y": 1.0}
    moves1 = {"x": ["go"], "y": ["go"]}
    trans = {("x", "go", "-"): {"y": 1.0}, ("y", "go", "-"): {"x": 1.0}}
    return build_game(states, interval, {"r": r}, moves1, trans)
