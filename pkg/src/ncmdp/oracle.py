"""Exhaustive-enumeration ground truth.

Builds the explicit augmented MDP of a finite environment, enumerates full
trajectory distributions under arbitrary policies, and computes exact
expected objective returns and exact optima. Everything here is brute force
on purpose: these are the oracles the learners are checked against.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Hashable

from .environments import TabularNcmdp
from .mapping import AugmentedState, NcmdpEnv
from .objectives import Objective
from .solvers import (ExplicitMdp, GreedyTablePolicy, Policy, SoftmaxPolicy,
                      TableProbsPolicy, key_augmented, value_iteration)

#: enumeration never follows a trajectory past this many steps
HORIZON_CAP = 32


class EnumerationCapError(RuntimeError):
    """Enumeration exceeded its state or horizon cap."""


def augmented_model(env: TabularNcmdp, objective: Objective,
                    state_cap: int = 100_000, merge: bool = True) -> ExplicitMdp:
    """Explicit MDP over the reachable (raw state, objective summary) pairs.

    Breadth-first enumeration from the start pair; transitions carry adapted
    rewards. Outcomes landing on the same (next raw state, next summary,
    adapted reward) are merged by summing probability unless `merge` is off.
    """
    start = AugmentedState(env.start, objective.initial_state())
    index: dict[AugmentedState, int] = {start: 0}
    states: list[AugmentedState] = [start]
    transitions: list[list[tuple[tuple[float, float, int, bool], ...]]] = []
    cursor = 0
    while cursor < len(states):
        state = states[cursor]
        cursor += 1
        per_action = []
        for action in range(env.action_count(state.raw)):
            merged: dict[tuple, float] = {}
            order: list[tuple] = []
            for o in env.outcomes(state.raw, action):
                reward = objective.adapted_reward(state.obj, o.reward)
                summary = objective.update(state.obj, o.reward)
                outcome_key = (o.next_state, summary, reward, o.terminal)
                if not merge:
                    outcome_key = outcome_key + (len(order),)
                if outcome_key not in merged:
                    order.append(outcome_key)
                    merged[outcome_key] = 0.0
                merged[outcome_key] += o.prob
            outs = []
            for outcome_key in order:
                next_raw, summary, reward, terminal = outcome_key[:4]
                if terminal:
                    next_index = -1
                else:
                    successor = AugmentedState(next_raw, summary)
                    next_index = index.get(successor)
                    if next_index is None:
                        if len(states) >= state_cap:
                            raise EnumerationCapError(
                                f"more than {state_cap} augmented states")
                        next_index = len(states)
                        index[successor] = next_index
                        states.append(successor)
                outs.append((merged[outcome_key], reward, next_index, terminal))
            per_action.append(tuple(outs))
        transitions.append(per_action)
    return ExplicitMdp(states, transitions, start=0)


def trajectory_distribution(env: TabularNcmdp, objective: Objective, policy: Policy,
                            horizon_cap: int = HORIZON_CAP) -> list[tuple[float, tuple[float, ...]]]:
    """All trajectories of `env` under `policy` as (probability, raw rewards).

    The policy sees augmented states, so it may condition on reward history.
    Probabilities sum to 1 when every trajectory terminates within the cap;
    a trajectory running past the cap raises instead of being truncated.
    """
    out: list[tuple[float, tuple[float, ...]]] = []

    def descend(raw: int, summary, prob: float, rewards: tuple[float, ...]) -> None:
        if len(rewards) >= horizon_cap:
            raise EnumerationCapError(f"trajectory exceeded {horizon_cap} steps")
        n_actions = env.action_count(raw)
        probs = policy.probs(AugmentedState(raw, summary), n_actions)
        for action in range(n_actions):
            act_prob = probs[action]
            if act_prob <= 0.0:
                continue
            for o in env.outcomes(raw, action):
                branch = prob * act_prob * o.prob
                extended = rewards + (o.reward,)
                if o.terminal:
                    out.append((branch, extended))
                else:
                    descend(o.next_state, objective.update(summary, o.reward),
                            branch, extended)

    descend(env.start, objective.initial_state(), 1.0, ())
    return out


@dataclass(frozen=True)
class ExactReturn:
    """Exact expectations of the same policy on both sides of the reduction.

    `ncmdp_value` is E[objective(raw rewards)] from raw trajectory
    enumeration; `mdp_value` is E[sum of adapted rewards] from enumeration of
    the augmented model. The two agree for every policy.
    """

    ncmdp_value: float
    mdp_value: float


def _expected_objective(env: TabularNcmdp, objective: Objective, policy: Policy,
                        horizon_cap: int) -> float:
    items = trajectory_distribution(env, objective, policy, horizon_cap)
    return math.fsum(prob * objective.value(rewards) for prob, rewards in items)


def _expected_adapted_sum(model: ExplicitMdp, policy: Policy,
                          horizon_cap: int) -> float:
    terms: list[float] = []

    def descend(state_index: int, prob: float, total: float, depth: int) -> None:
        if depth >= horizon_cap:
            raise EnumerationCapError(f"trajectory exceeded {horizon_cap} steps")
        state = model.states[state_index]
        n_actions = model.action_count(state_index)
        probs = policy.probs(state, n_actions)
        for action in range(n_actions):
            act_prob = probs[action]
            if act_prob <= 0.0:
                continue
            for t in model.transitions[state_index][action]:
                branch = prob * act_prob * t.prob
                if t.terminal:
                    terms.append(branch * (total + t.reward))
                else:
                    descend(t.next_index, branch, total + t.reward, depth + 1)

    descend(model.start, 1.0, 0.0, 0)
    return math.fsum(terms)


def exact_return(env: TabularNcmdp, objective: Objective, policy: Policy,
                 horizon_cap: int = HORIZON_CAP, state_cap: int = 100_000) -> ExactReturn:
    """Exact expected return of `policy` on both sides of the reduction."""
    ncmdp_value = _expected_objective(env, objective, policy, horizon_cap)
    model = augmented_model(env, objective, state_cap)
    mdp_value = _expected_adapted_sum(model, policy, horizon_cap)
    return ExactReturn(ncmdp_value, mdp_value)


def exact_optimal_return(env: TabularNcmdp, objective: Objective,
                         tol: float = 1e-12,
                         state_cap: int = 100_000) -> tuple[float, GreedyTablePolicy]:
    """Exact optimal expected objective value and an optimal greedy policy,
    via value iteration on the augmented model."""
    model = augmented_model(env, objective, state_cap)
    q = value_iteration(model, tol)
    policy = GreedyTablePolicy(q, key=key_augmented)
    return max(q[model.states[model.start]]), policy


def optimal_return_by_policy_enumeration(env: TabularNcmdp, objective: Objective,
                                         limit: int = 10_000,
                                         horizon_cap: int = HORIZON_CAP) -> float:
    """Best exact return over every deterministic policy of the augmented
    model; the independent cross-check for `exact_optimal_return`."""
    model = augmented_model(env, objective)
    counts = [model.action_count(i) for i in range(model.n_states)]
    n_policies = math.prod(counts)
    if n_policies > limit:
        raise ValueError(f"{n_policies} deterministic policies exceed the limit {limit}")
    best = -math.inf
    for assignment in itertools.product(*(range(c) for c in counts)):
        table = {}
        for i, action in enumerate(assignment):
            row = [0.0] * counts[i]
            row[action] = 1.0
            table[model.states[i]] = row
        policy = TableProbsPolicy(table, key=key_augmented)
        best = max(best, _expected_objective(env, objective, policy, horizon_cap))
    return best


def exhaustive_best_return(env: NcmdpEnv, objective: Objective, horizon: int,
                           n_actions: int | None = None) -> tuple[float, tuple[int, ...]]:
    """Best objective value over every action sequence of a deterministic
    environment, by trying all of them (grows as n_actions ** horizon)."""
    scratch = env.clone()
    start = scratch.reset()
    if n_actions is None:
        n_actions = scratch.action_count(start)
    best = -math.inf
    best_seq: tuple[int, ...] = ()
    for seq in itertools.product(range(n_actions), repeat=horizon):
        scratch.reset()
        rewards = []
        for action in seq:
            reward, _, done = scratch.step(action)
            rewards.append(reward)
            if done:
                break
        value = objective.value(rewards)
        if value > best:
            best = value
            best_seq = seq[:len(rewards)]
    return best, best_seq


def exact_policy_gradient(env: TabularNcmdp, objective: Objective,
                          policy: SoftmaxPolicy,
                          horizon_cap: int = HORIZON_CAP) -> dict[Hashable, list[float]]:
    """Exact expectation of the reward-to-go policy-gradient estimator.

    Enumerates every trajectory under the softmax policy and accumulates the
    probability-weighted per-trajectory gradient of the adapted return w.r.t.
    the policy logits. By the policy gradient theorem this equals the
    gradient of the exact expected objective value.
    """
    grads: dict[Hashable, list[float]] = {}

    def accumulate(steps: list[tuple[Hashable, int, list[float], float]], prob: float) -> None:
        reward_to_go = 0.0
        for key, action, probs, reward in reversed(steps):
            reward_to_go += reward
            g = grads.get(key)
            if g is None:
                g = grads[key] = [0.0] * len(probs)
            for i in range(len(probs)):
                g[i] += prob * ((1.0 if i == action else 0.0) - probs[i]) * reward_to_go

    def descend(raw: int, summary, prob: float,
                steps: list[tuple[Hashable, int, list[float], float]]) -> None:
        if len(steps) >= horizon_cap:
            raise EnumerationCapError(f"trajectory exceeded {horizon_cap} steps")
        n_actions = env.action_count(raw)
        key = policy.key(AugmentedState(raw, summary))
        probs = policy.probs_for_key(key, n_actions)
        for action in range(n_actions):
            act_prob = probs[action]
            if act_prob <= 0.0:
                continue
            for o in env.outcomes(raw, action):
                adapted = objective.adapted_reward(summary, o.reward)
                step = (key, action, probs, adapted)
                branch = prob * act_prob * o.prob
                if o.terminal:
                    accumulate(steps + [step], branch)
                else:
                    descend(o.next_state, objective.update(summary, o.reward),
                            branch, steps + [step])

    descend(env.start, objective.initial_state(), 1.0, [])
    return grads
