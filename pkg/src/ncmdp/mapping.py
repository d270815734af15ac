"""Wrapping an environment so a non-additive objective becomes a plain sum.

The adapter pairs every raw environment state with the objective's summary
state and replaces every raw reward with the objective increment it causes.
The wrapped process is an ordinary MDP: its per-episode reward sum equals the
objective of the raw reward sequence, and the legal actions are untouched.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any

from .objectives import Objective, ObjectiveState


class NcmdpEnv(ABC):
    """Episodic environment contract.

    `step` is legal only between a `reset` and the terminal transition, and
    the distribution of (reward, next state) may depend only on the current
    state and action.
    """

    @abstractmethod
    def reset(self, seed: int | None = None) -> Any:
        """Start a new episode and return the initial state."""

    @abstractmethod
    def step(self, action: int) -> tuple[float, Any, bool]:
        """Apply an action; returns (reward, next state, terminal)."""

    @abstractmethod
    def action_count(self, state: Any) -> int:
        """Number of legal actions in `state` (actions are 0..count-1)."""

    def clone(self) -> "NcmdpEnv":
        """Fresh instance with the same parameters and no episode state."""
        raise NotImplementedError


@dataclass(frozen=True)
class AugmentedState:
    """Raw environment state paired with the objective summary."""

    raw: Any
    obj: ObjectiveState


class MdpAdapter(NcmdpEnv):
    """Environment view with augmented states and telescoped rewards.

    The inner environment is treated as a black box; the adapter only keeps
    the objective summary, which it refreshes incrementally in O(1) memory.
    Each adapter owns one episode at a time.
    """

    def __init__(self, env: NcmdpEnv, objective: Objective):
        self.env = env
        self.objective = objective
        self._state: AugmentedState | None = None
        self._done = True

    def reset(self, seed: int | None = None) -> AugmentedState:
        raw = self.env.reset(seed)
        self._state = AugmentedState(raw, self.objective.initial_state())
        self._done = False
        return self._state

    def step(self, action: int) -> tuple[float, AugmentedState, bool]:
        if self._done or self._state is None:
            raise RuntimeError("episode is not active; call reset first")
        raw_reward, raw_next, terminal = self.env.step(action)
        summary = self._state.obj
        reward = self.objective.adapted_reward(summary, raw_reward)
        nxt = AugmentedState(raw_next, self.objective.update(summary, raw_reward))
        self._state = nxt
        self._done = terminal
        return reward, nxt, terminal

    def action_count(self, state: AugmentedState) -> int:
        return self.env.action_count(state.raw)

    def clone(self) -> "MdpAdapter":
        return MdpAdapter(self.env.clone(), self.objective)


def wrap(env: NcmdpEnv, objective: Objective) -> MdpAdapter:
    """Adapter exposing `env` with augmented states and adapted rewards."""
    return MdpAdapter(env, objective)


@dataclass
class TrajectoryRecord:
    """One recorded episode: states, the actions taken, and the rewards.

    Holds len(actions) + 1 states (the final state included) and one reward
    per action; the reward stream may be raw or adapted depending on how the
    record was produced.
    """

    states: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    terminal: bool = True


def map_trajectory(record: TrajectoryRecord, objective: Objective) -> TrajectoryRecord:
    """Offline replay of a raw trajectory into its augmented form.

    Actions are kept; states gain the objective summary and rewards become
    the telescoped increments, exactly as the live adapter would have
    produced them.
    """
    n = len(record.actions)
    if len(record.rewards) != n or len(record.states) != n + 1:
        raise ValueError(
            f"inconsistent trajectory record: {len(record.states)} states, "
            f"{n} actions, {len(record.rewards)} rewards")
    summary = objective.initial_state()
    states = [AugmentedState(record.states[0], summary)]
    adapted = []
    for raw_next, reward in zip(record.states[1:], record.rewards):
        adapted.append(objective.adapted_reward(summary, reward))
        summary = objective.update(summary, reward)
        states.append(AugmentedState(raw_next, summary))
    return TrajectoryRecord(states, list(record.actions), adapted, record.terminal)
