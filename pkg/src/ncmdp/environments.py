"""Desk-scale environments with non-additive scoring in mind.

Three environments: a two-step stochastic process whose best second action
depends on the first reward, a deterministic grid crossing with per-tile
rewards, and a ten-step walk over a one-dimensional cost profile whose global
minimum hides behind a peak. `TabularNcmdp` is the explicit finite form used
by the exhaustive oracles.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .mapping import NcmdpEnv
from .rng import make_rng

_PROB_TOL = 1e-12


class Outcome(NamedTuple):
    """One probabilistic branch of a (state, action) transition."""

    prob: float
    reward: float
    next_state: int
    terminal: bool


class TabularNcmdp(NcmdpEnv):
    """Fully enumerated finite decision process.

    `transitions[s][a]` lists the probabilistic outcomes of action `a` in
    state `s`; per (state, action) the probabilities must be positive and sum
    to one. States with an empty action list may only be reached by terminal
    branches. The object doubles as a live environment that samples outcomes
    with its own seeded generator.
    """

    def __init__(self, transitions, start: int):
        self.transitions: tuple[tuple[tuple[Outcome, ...], ...], ...] = tuple(
            tuple(
                tuple(Outcome(float(p), float(r), int(s), bool(term))
                      for p, r, s, term in action_outcomes)
                for action_outcomes in per_state)
            for per_state in transitions)
        self.start = int(start)
        self._validate()
        self._rng = make_rng(0)
        self._state: int | None = None
        self._done = True

    @property
    def n_states(self) -> int:
        return len(self.transitions)

    def outcomes(self, state: int, action: int) -> tuple[Outcome, ...]:
        return self.transitions[state][action]

    def action_count(self, state: int) -> int:
        return len(self.transitions[state])

    def _validate(self) -> None:
        if not 0 <= self.start < len(self.transitions):
            raise ValueError(f"start state {self.start} out of range")
        needs_actions = {self.start}
        for per_state in self.transitions:
            for outs in per_state:
                if not outs:
                    raise ValueError("an action must have at least one outcome")
                if any(o.prob <= 0.0 for o in outs):
                    raise ValueError("outcome probabilities must be positive")
                total = math.fsum(o.prob for o in outs)
                if abs(total - 1.0) > _PROB_TOL:
                    raise ValueError(f"outcome probabilities sum to {total!r}, not 1")
                for o in outs:
                    if not 0 <= o.next_state < len(self.transitions):
                        raise ValueError(f"next state {o.next_state} out of range")
                    if not o.terminal:
                        needs_actions.add(o.next_state)
        for s in sorted(needs_actions):
            if not self.transitions[s]:
                raise ValueError(f"non-terminal state {s} has no actions")

    def clone(self) -> "TabularNcmdp":
        return TabularNcmdp(self.transitions, self.start)

    def reset(self, seed: int | None = None) -> int:
        if seed is not None:
            self._rng = make_rng(seed)
        self._state = self.start
        self._done = False
        return self.start

    def step(self, action: int) -> tuple[float, int, bool]:
        if self._done or self._state is None:
            raise RuntimeError("episode is not active; call reset first")
        outs = self.transitions[self._state][action]
        draw = self._rng.random()
        acc = 0.0
        picked = outs[-1]
        for o in outs:
            acc += o.prob
            if draw < acc:
                picked = o
                break
        self._state = picked.next_state
        self._done = picked.terminal
        return picked.reward, picked.next_state, picked.terminal


def make_two_step() -> TabularNcmdp:
    """Two-step stochastic process where the right second action depends on
    the first reward.

    The forced first action pays +1 or -1 with equal probability. The second
    step offers a safe action (reward 0) and a gamble paying +2 with
    probability 0.9 and -2 with probability 0.1. Under min-of-rewards
    scoring, the gamble is right after +1 and wrong after -1, so any method
    blind to the first reward settles for a worse policy.
    """
    transitions = (
        # state 0: single action, coin-flip reward, always moves to state 1
        ((Outcome(0.5, 1.0, 1, False), Outcome(0.5, -1.0, 1, False)),),
        # state 1: safe stop vs. gamble, both terminal
        ((Outcome(1.0, 0.0, 2, True),),
         (Outcome(0.9, 2.0, 2, True), Outcome(0.1, -2.0, 2, True))),
        # sink reached only terminally
        (),
    )
    return TabularNcmdp(transitions, start=0)


class GridWorld(NcmdpEnv):
    """Deterministic west-to-east grid crossing.

    The agent starts in the middle of the west edge. Every move advances one
    column and shifts the row by -1, 0, or +1 (actions 0, 1, 2), clamped at
    the grid edges. Entering a tile yields that tile's fixed reward; the
    start tile pays nothing. The episode ends on reaching the east edge,
    after exactly n - 1 moves. States are (column, row) pairs.
    """

    def __init__(self, rewards: np.ndarray):
        rewards = np.array(rewards, dtype=float)
        if rewards.ndim != 2 or rewards.shape[0] != rewards.shape[1]:
            raise ValueError("rewards must be a square matrix")
        if rewards.shape[0] < 2:
            raise ValueError("grid side length must be at least 2")
        rewards.setflags(write=False)
        self.rewards = rewards
        self.n = int(rewards.shape[0])
        self._pos: tuple[int, int] | None = None
        self._done = True

    def clone(self) -> "GridWorld":
        return GridWorld(self.rewards)

    def reset(self, seed: int | None = None) -> tuple[int, int]:
        self._pos = (0, self.n // 2)
        self._done = False
        return self._pos

    def step(self, action: int) -> tuple[float, tuple[int, int], bool]:
        if self._done or self._pos is None:
            raise RuntimeError("episode is not active; call reset first")
        if action not in (0, 1, 2):
            raise ValueError(f"action must be 0, 1, or 2, got {action!r}")
        col, row = self._pos
        new_row = min(max(row + action - 1, 0), self.n - 1)
        new_col = col + 1
        reward = float(self.rewards[new_row, new_col])
        self._pos = (new_col, new_row)
        self._done = new_col == self.n - 1
        return reward, self._pos, self._done

    def action_count(self, state: tuple[int, int]) -> int:
        return 3


def make_grid(n: int, seed: int) -> GridWorld:
    """Grid with i.i.d. tile rewards drawn uniformly from [-1, 1]."""
    if n < 2:
        raise ValueError(f"grid side length must be at least 2, got {n}")
    return GridWorld(make_rng(seed).uniform(-1.0, 1.0, size=(n, n)))


def save_grid(grid: GridWorld, path) -> None:
    """Write a grid as text: side length, then one row of tile values per line."""
    lines = [str(grid.n)]
    for row in grid.rewards:
        lines.append(" ".join(f"{v:.17g}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_grid(path) -> GridWorld:
    """Read a grid written by `save_grid`; values round-trip bit-exactly."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty grid file")
    try:
        n = int(lines[0].strip())
    except ValueError as exc:
        raise ValueError(f"{path}: first line must be the grid side length") from exc
    rows = lines[1:]
    if len(rows) != n:
        raise ValueError(f"{path}: expected {n} rows of values, found {len(rows)}")
    matrix = []
    for i, ln in enumerate(rows):
        try:
            values = [float(tok) for tok in ln.split()]
        except ValueError as exc:
            raise ValueError(f"{path}: row {i + 1} holds a non-numeric value") from exc
        if len(values) != n:
            raise ValueError(f"{path}: row {i + 1} holds {len(values)} values, expected {n}")
        matrix.append(values)
    return GridWorld(np.array(matrix))


def grid_to_tabular(grid: GridWorld) -> TabularNcmdp:
    """Explicit finite form of a grid; states are (column, row) cells in
    column-major index order."""
    n = grid.n
    index = lambda col, row: col * n + row
    transitions = []
    for col in range(n):
        for row in range(n):
            if col == n - 1:
                transitions.append(())
                continue
            actions = []
            for action in range(3):
                new_row = min(max(row + action - 1, 0), n - 1)
                new_col = col + 1
                actions.append((Outcome(1.0, float(grid.rewards[new_row, new_col]),
                                        index(new_col, new_row), new_col == n - 1),))
            transitions.append(tuple(actions))
    return TabularNcmdp(transitions, start=index(0, n // 2))


#: cost profile: the walk starts at a local minimum (position 2, cost 1) and
#: the global minimum (position 7, cost 0) sits in a narrow notch behind a
#: peak of cost 3, with both notch neighbors costlier than the start
PEAK_COSTS = (3.0, 2.0, 1.0, 2.0, 3.0, 2.0, 1.25, 0.0, 2.75)
PEAK_START = 2
PEAK_HORIZON = 10


class PeakEnv(NcmdpEnv):
    """Fixed-length walk over a one-dimensional cost profile.

    Actions 0, 1, 2 move the position by -1, 0, +1, clamped to the profile.
    Every reward is the cost drop caused by the move, so the rewards of any
    episode sum exactly to start cost minus final cost. Reaching the global
    minimum requires climbing over a costlier peak first, and the minimum is
    a narrow notch: an agent scored by its final cost must both find the
    notch and learn to stop in it, while one scored by the lowest cost
    visited only has to touch it. The episode ends after exactly `horizon`
    actions. States are positions.
    """

    def __init__(self, costs: Sequence[float] = PEAK_COSTS, start: int = PEAK_START,
                 horizon: int = PEAK_HORIZON):
        self.costs = tuple(float(c) for c in costs)
        if not 0 <= start < len(self.costs):
            raise ValueError(f"start position {start} out of range")
        if horizon < 1:
            raise ValueError("horizon must be at least 1")
        self.start = int(start)
        self.horizon = int(horizon)
        self._pos: int | None = None
        self._steps = 0
        self._done = True

    def clone(self) -> "PeakEnv":
        return PeakEnv(self.costs, self.start, self.horizon)

    def reset(self, seed: int | None = None) -> int:
        self._pos = self.start
        self._steps = 0
        self._done = False
        return self.start

    def step(self, action: int) -> tuple[float, int, bool]:
        if self._done or self._pos is None:
            raise RuntimeError("episode is not active; call reset first")
        if action not in (0, 1, 2):
            raise ValueError(f"action must be 0, 1, or 2, got {action!r}")
        new_pos = min(max(self._pos + action - 1, 0), len(self.costs) - 1)
        reward = self.costs[self._pos] - self.costs[new_pos]
        self._pos = new_pos
        self._steps += 1
        self._done = self._steps >= self.horizon
        return reward, new_pos, self._done

    def action_count(self, state: int) -> int:
        return 3


def make_peak() -> PeakEnv:
    """Peak environment with the canonical cost profile."""
    return PeakEnv()
