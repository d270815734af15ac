"""Tabular solvers and policies.

Value iteration and policy evaluation on explicit finite MDPs, tabular
Q-learning with either the standard max-bootstrap target on augmented states
or a min-folding target on raw states, per-episode policy-gradient training
with reward-to-go, and gradient statistics that compare the raw-sum and
best-prefix reward streams on shared trajectories.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Hashable, NamedTuple, Sequence

from .environments import TabularNcmdp
from .mapping import AugmentedState, MdpAdapter, NcmdpEnv, TrajectoryRecord
from .objectives import Objective, PrefixMaxObjective
from .rng import make_rng


class IterationCapError(RuntimeError):
    """A sweep-based solver failed to reach its tolerance within the cap."""


class StateCapExceededError(RuntimeError):
    """A learner touched more distinct state keys than the configured cap."""


def _argmax(values: Sequence[float]) -> int:
    # ties break toward the lowest action index
    best = 0
    best_value = values[0]
    for i in range(1, len(values)):
        if values[i] > best_value:
            best = i
            best_value = values[i]
    return best


class Transition(NamedTuple):
    """One outcome of an explicit-MDP action; next_index is -1 on terminal branches."""

    prob: float
    reward: float
    next_index: int
    terminal: bool


class ExplicitMdp:
    """Enumerated finite MDP over hashable state keys.

    `transitions[i][a]` lists the outcomes of action `a` in state
    `states[i]`; per (state, action) probabilities must sum to one. Only
    decision states are enumerated; terminal branches carry no successor.
    """

    def __init__(self, states: Sequence[Hashable], transitions, start: int):
        self.states = list(states)
        self.transitions: list[list[tuple[Transition, ...]]] = [
            [tuple(Transition(float(p), float(r), int(n), bool(term)) for p, r, n, term in outs)
             for outs in per_state]
            for per_state in transitions]
        self.start = int(start)
        if len(self.states) != len(self.transitions):
            raise ValueError("states and transitions must align")
        if not 0 <= self.start < len(self.states):
            raise ValueError(f"start index {self.start} out of range")
        for per_state in self.transitions:
            for outs in per_state:
                total = math.fsum(t.prob for t in outs)
                if abs(total - 1.0) > 1e-12:
                    raise ValueError(f"transition probabilities sum to {total!r}, not 1")
                for t in outs:
                    if not t.terminal and not 0 <= t.next_index < len(self.states):
                        raise ValueError(f"next index {t.next_index} out of range")

    @property
    def n_states(self) -> int:
        return len(self.states)

    def action_count(self, index: int) -> int:
        return len(self.transitions[index])


QTable = dict  # state key -> list of action values


def value_iteration(model: ExplicitMdp, tol: float = 1e-12,
                    max_sweeps: int = 100_000) -> QTable:
    """Optimal action values of an explicit MDP, keyed by its state keys.

    Bellman sweeps with max bootstrap and continuation value 0 on terminal
    branches, iterated until no entry moves by more than `tol`. Episodic
    models reach their exact fixed point after as many sweeps as the horizon.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    q = [[0.0] * len(acts) for acts in model.transitions]
    for _ in range(max_sweeps):
        delta = 0.0
        for s, acts in enumerate(model.transitions):
            for a, outs in enumerate(acts):
                backed_up = 0.0
                for t in outs:
                    cont = 0.0 if t.terminal else max(q[t.next_index])
                    backed_up += t.prob * (t.reward + cont)
                delta = max(delta, abs(backed_up - q[s][a]))
                q[s][a] = backed_up
        if delta <= tol:
            return {model.states[s]: list(row) for s, row in enumerate(q)}
    raise IterationCapError(f"no fixed point within {max_sweeps} sweeps")


def policy_evaluation(model: ExplicitMdp, policy: "Policy", tol: float = 1e-12,
                      max_sweeps: int = 100_000) -> QTable:
    """Action values of an explicit MDP under a fixed policy."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    q = [[0.0] * len(acts) for acts in model.transitions]
    for _ in range(max_sweeps):
        delta = 0.0
        for s, acts in enumerate(model.transitions):
            for a, outs in enumerate(acts):
                backed_up = 0.0
                for t in outs:
                    if t.terminal:
                        cont = 0.0
                    else:
                        probs = policy.probs(model.states[t.next_index], len(q[t.next_index]))
                        cont = sum(p * v for p, v in zip(probs, q[t.next_index]))
                    backed_up += t.prob * (t.reward + cont)
                delta = max(delta, abs(backed_up - q[s][a]))
                q[s][a] = backed_up
        if delta <= tol:
            return {model.states[s]: list(row) for s, row in enumerate(q)}
    raise IterationCapError(f"no fixed point within {max_sweeps} sweeps")


def cui_value_iteration(env: TabularNcmdp, tol: float = 1e-12,
                        max_sweeps: int = 100_000) -> QTable:
    """Value iteration that folds each raw reward into the bootstrap with a
    min instead of adding it, computed on the raw states of `env`.

    Terminal branches use continuation value 0, so a terminal branch scores
    min(reward, 0). The rule ignores reward history, which makes its greedy
    policy suboptimal in stochastic environments.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    decision_states = [s for s in range(env.n_states) if env.action_count(s) > 0]
    q = {s: [0.0] * env.action_count(s) for s in decision_states}
    for _ in range(max_sweeps):
        delta = 0.0
        for s in decision_states:
            for a in range(env.action_count(s)):
                backed_up = 0.0
                for o in env.outcomes(s, a):
                    cont = 0.0 if o.terminal else max(q[o.next_state])
                    backed_up += o.prob * min(o.reward, cont)
                delta = max(delta, abs(backed_up - q[s][a]))
                q[s][a] = backed_up
        if delta <= tol:
            return {s: list(row) for s, row in q.items()}
    raise IterationCapError(f"no fixed point within {max_sweeps} sweeps")


class Policy(ABC):
    """Action distribution over augmented states."""

    @abstractmethod
    def probs(self, state: Any, n_actions: int) -> Sequence[float]:
        """Action probabilities in `state` (length n_actions, sums to 1)."""

    def sample(self, state: Any, n_actions: int, rng) -> int:
        draw = rng.random()
        acc = 0.0
        probs = self.probs(state, n_actions)
        for i, p in enumerate(probs):
            acc += p
            if draw < acc:
                return i
        return n_actions - 1


def key_augmented(state: AugmentedState) -> Hashable:
    return state


def key_raw(state: AugmentedState) -> Hashable:
    return state.raw


def key_summary(state: AugmentedState) -> Hashable:
    """Raw state paired with the summary vector, dropping the step counter.

    This is the (state, summary) pair itself; use it where the counter would
    only fragment the table, e.g. for best-prefix policies, whose updates
    never read it.
    """
    return (state.raw, state.obj.h)


class UniformPolicy(Policy):
    def probs(self, state: Any, n_actions: int) -> list[float]:
        return [1.0 / n_actions] * n_actions


class TableProbsPolicy(Policy):
    """Explicit per-state action distributions; unseen states act uniformly."""

    def __init__(self, table: dict, key: Callable[[Any], Hashable] = key_augmented):
        self.table = table
        self.key = key

    def probs(self, state: Any, n_actions: int) -> list[float]:
        row = self.table.get(self.key(state))
        if row is None:
            return [1.0 / n_actions] * n_actions
        return list(row)


class GreedyTablePolicy(Policy):
    """Deterministic argmax over a Q-table; unseen states take action 0."""

    def __init__(self, q: QTable, key: Callable[[Any], Hashable] = key_augmented):
        if not q:
            raise ValueError("cannot act greedily on an empty Q-table")
        self.q = q
        self.key = key

    def action(self, state: Any) -> int:
        row = self.q.get(self.key(state))
        if row is None:
            return 0
        return _argmax(row)

    def probs(self, state: Any, n_actions: int) -> list[float]:
        probs = [0.0] * n_actions
        probs[self.action(state)] = 1.0
        return probs


def greedy_policy(q: QTable, key: Callable[[Any], Hashable] = key_augmented) -> GreedyTablePolicy:
    """Greedy policy of a Q-table; ties break toward the lowest action index."""
    return GreedyTablePolicy(q, key)


class SoftmaxPolicy(Policy):
    """Tabular softmax over per-state logit rows, created lazily at zero.

    Rows are sized on first touch, so state-dependent action counts are fine.
    Logits are clamped to +-`clamp` after every gradient step to keep the
    exponentials healthy.
    """

    def __init__(self, key: Callable[[Any], Hashable] = key_raw, clamp: float = 50.0):
        self.logits: dict[Hashable, list[float]] = {}
        self.key = key
        self.clamp = clamp

    def row(self, key: Hashable, n_actions: int) -> list[float]:
        row = self.logits.get(key)
        if row is None:
            row = self.logits[key] = [0.0] * n_actions
        return row

    def probs_for_key(self, key: Hashable, n_actions: int) -> list[float]:
        row = self.logits.get(key)
        if row is None:
            return [1.0 / n_actions] * n_actions
        top = max(row)
        exps = [math.exp(v - top) for v in row]
        norm = sum(exps)
        return [e / norm for e in exps]

    def probs(self, state: Any, n_actions: int) -> list[float]:
        return self.probs_for_key(self.key(state), n_actions)

    def apply_gradient(self, grads: dict[Hashable, list[float]], learning_rate: float) -> None:
        for key, g in grads.items():
            row = self.row(key, len(g))
            for i, gi in enumerate(g):
                row[i] = min(max(row[i] + learning_rate * gi, -self.clamp), self.clamp)

    def entropy(self) -> float:
        """Mean entropy (nats) across table rows."""
        if not self.logits:
            return float("nan")
        total = 0.0
        for key, row in self.logits.items():
            probs = self.probs_for_key(key, len(row))
            total += -sum(p * math.log(p) for p in probs if p > 0.0)
        return total / len(self.logits)

    def copy(self) -> "SoftmaxPolicy":
        dup = SoftmaxPolicy(self.key, self.clamp)
        dup.logits = {k: list(v) for k, v in self.logits.items()}
        return dup


@dataclass
class TrainConfig:
    """Shared knobs for the tabular learners.

    `total_steps`, `alpha_*`, `epsilon`, and `rule` drive Q-learning, whose
    per-entry step size decays harmonically in the visit count and is clipped
    to [alpha_end, alpha_start]; `episodes`, `learning_rate`, and
    `policy_states` drive policy-gradient training. `rule` is "standard"
    (augmented states, max bootstrap) or "cui-min" (raw states, min folding);
    `policy_states` is "augmented" or "raw".
    """

    total_steps: int = 100_000
    episodes: int = 10_000
    epsilon: float = 0.1
    alpha_start: float = 0.5
    alpha_end: float = 1e-6
    learning_rate: float = 2.0 ** -10
    seed: int = 0
    rule: str = "standard"
    policy_states: str = "augmented"
    eval_every: int = 5_000
    eval_episodes: int = 1
    state_cap: int = 1_000_000

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.alpha_start <= 0.0 or self.alpha_end <= 0.0 or self.learning_rate < 0.0:
            raise ValueError("learning rates must be positive")
        if self.rule not in ("standard", "cui-min"):
            raise ValueError(f"unknown update rule {self.rule!r}")
        if self.policy_states not in ("augmented", "raw"):
            raise ValueError(f"unknown policy-state mode {self.policy_states!r}")


def q_learning(env: NcmdpEnv, objective: Objective,
               config: TrainConfig) -> tuple[QTable, list[tuple[int, float]]]:
    """Tabular TD learning with epsilon-greedy exploration.

    Rule "standard" acts in the wrapped environment (augmented states,
    adapted rewards) with the usual max-bootstrap target; rule "cui-min" acts
    on raw states and folds each raw reward into the bootstrap with a min.
    The step size for each (state, action) entry decays harmonically in its
    visit count, clipped to [alpha_end, alpha_start], so stochastic targets
    are averaged out rather than chased. Returns the Q-table and
    greedy-policy evaluation snapshots of (step, objective value).
    """
    standard = config.rule == "standard"
    world: NcmdpEnv = MdpAdapter(env, objective) if standard else env
    explore = make_rng(config.seed, 1)
    q: QTable = {}
    visits: dict[Hashable, list[int]] = {}
    curve: list[tuple[int, float]] = []

    state = world.reset(config.seed)
    row = q.setdefault(state, [0.0] * world.action_count(state))
    visits[state] = [0] * len(row)
    for step in range(config.total_steps):
        if explore.random() < config.epsilon:
            action = int(explore.integers(len(row)))
        else:
            action = _argmax(row)
        reward, nxt, done = world.step(action)
        if done:
            cont = 0.0
        else:
            next_row = q.get(nxt)
            cont = max(next_row) if next_row else 0.0
        target = reward + cont if standard else min(reward, cont)
        seen = visits[state]
        seen[action] += 1
        alpha = min(max(1.0 / seen[action], config.alpha_end), config.alpha_start)
        row[action] += alpha * (target - row[action])
        if done:
            state = world.reset()
        else:
            state = nxt
        row = q.get(state)
        if row is None:
            if len(q) >= config.state_cap:
                raise StateCapExceededError(f"more than {config.state_cap} state keys")
            row = q[state] = [0.0] * world.action_count(state)
            visits[state] = [0] * len(row)
        if (step + 1) % config.eval_every == 0 or step + 1 == config.total_steps:
            policy = greedy_policy(q, key_augmented if standard else key_raw)
            exact = isinstance(env, TabularNcmdp)
            curve.append((step + 1, evaluate_policy(
                env, objective, policy, exact=exact,
                episodes=config.eval_episodes, seed=config.seed)))
    return q, curve


def run_raw_episode(env: NcmdpEnv, objective: Objective, policy: Policy, rng,
                    seed: int | None = None, max_steps: int = 100_000) -> TrajectoryRecord:
    """Roll one episode on the raw environment, tracking the objective
    summary so the policy can key on augmented states. Records raw rewards."""
    raw = env.reset(seed)
    summary = objective.initial_state()
    record = TrajectoryRecord(states=[raw])
    done = False
    while not done:
        if len(record.actions) >= max_steps:
            raise RuntimeError(f"episode exceeded {max_steps} steps")
        n_actions = env.action_count(raw)
        action = policy.sample(AugmentedState(raw, summary), n_actions, rng)
        reward, raw, done = env.step(action)
        record.actions.append(action)
        record.rewards.append(reward)
        record.states.append(raw)
        summary = objective.update(summary, reward)
    return record


def evaluate_policy(env: NcmdpEnv, objective: Objective, policy: Policy,
                    episodes: int = 0, exact: bool = False, seed: int = 0) -> float:
    """Mean objective value achieved by `policy`.

    With exact=True the expectation is computed by full trajectory
    enumeration (finite tabular environments only); otherwise `episodes`
    Monte Carlo episodes run on a clone of the environment.
    """
    if exact:
        from .oracle import exact_return  # local import to avoid a module cycle
        return exact_return(env, objective, policy).ncmdp_value
    if episodes < 1:
        raise ValueError("need at least one episode (or exact=True)")
    scratch = env.clone()
    rng = make_rng(seed, 4)
    total = 0.0
    for episode in range(episodes):
        record = run_raw_episode(scratch, objective, policy, rng,
                                 seed=seed if episode == 0 else None)
        total += objective.value(record.rewards)
    return total / episodes


@dataclass
class EpisodeStats:
    """Per-episode training log entry.

    `improvement` is the best prefix sum of the raw rewards, i.e. the cost
    drop achieved at the episode's best point in cost-walk environments.
    """

    episode: int
    improvement: float
    entropy: float


class ReinforceTrainer:
    """Per-episode policy-gradient training with reward-to-go and no baseline.

    Mode "cumulative" trains on the raw reward stream with a policy over raw
    states; mode "mapped-prefixmax" trains on the best-prefix adapted stream,
    keying the policy by augmented or raw states per `config.policy_states`.
    """

    MODES = ("cumulative", "mapped-prefixmax")

    def __init__(self, env: NcmdpEnv, mode: str, config: TrainConfig):
        if mode not in self.MODES:
            raise ValueError(f"mode must be one of {self.MODES}, got {mode!r}")
        self.env = env
        self.mode = mode
        self.config = config
        self.objective = PrefixMaxObjective()
        mapped = mode == "mapped-prefixmax"
        key = key_summary if (mapped and config.policy_states == "augmented") else key_raw
        self.policy = SoftmaxPolicy(key=key)
        self.rng = make_rng(config.seed, 2)
        self.episode = 0

    def run_episode(self) -> EpisodeStats:
        env = self.env
        objective = self.objective
        policy = self.policy
        mapped = self.mode == "mapped-prefixmax"

        raw = env.reset(self.config.seed if self.episode == 0 else None)
        summary = objective.initial_state()
        keys: list[Hashable] = []
        actions: list[int] = []
        probs: list[list[float]] = []
        rewards: list[float] = []
        running = 0.0
        best_prefix = 0.0
        done = False
        while not done:
            n_actions = env.action_count(raw)
            key = policy.key(AugmentedState(raw, summary))
            p = policy.probs_for_key(key, n_actions)
            action = _sample(p, self.rng)
            raw_reward, raw, done = env.step(action)
            adapted = objective.adapted_reward(summary, raw_reward)
            summary = objective.update(summary, raw_reward)
            keys.append(key)
            actions.append(action)
            probs.append(p)
            rewards.append(adapted if mapped else raw_reward)
            running += raw_reward
            best_prefix = max(best_prefix, running)

        grads: dict[Hashable, list[float]] = {}
        reward_to_go = 0.0
        for t in range(len(actions) - 1, -1, -1):
            reward_to_go += rewards[t]
            g = grads.get(keys[t])
            if g is None:
                g = grads[keys[t]] = [0.0] * len(probs[t])
            p = probs[t]
            a = actions[t]
            for i in range(len(p)):
                g[i] += ((1.0 if i == a else 0.0) - p[i]) * reward_to_go
        policy.apply_gradient(grads, self.config.learning_rate)

        self.episode += 1
        return EpisodeStats(self.episode - 1, best_prefix, policy.entropy())


def _sample(probs: Sequence[float], rng) -> int:
    draw = rng.random()
    acc = 0.0
    for i, p in enumerate(probs):
        acc += p
        if draw < acc:
            return i
    return len(probs) - 1


def reinforce(env: NcmdpEnv, mode: str,
              config: TrainConfig) -> tuple[SoftmaxPolicy, list[EpisodeStats]]:
    """Train a tabular softmax policy for `config.episodes` episodes."""
    trainer = ReinforceTrainer(env, mode, config)
    curve = [trainer.run_episode() for _ in range(config.episodes)]
    return trainer.policy, curve


@dataclass(frozen=True)
class DiagnosticsResult:
    """Gradient statistics of the two reward streams on shared trajectories.

    `var_max` / `var_sum` are the empirical per-episode gradient variances of
    the best-prefix and raw-sum estimators, each normalized by the squared
    norm of its mean gradient; `dot` is the cosine of the two mean gradients.
    `degenerate` marks a zero mean gradient on either side, in which case the
    affected fields are NaN instead of raising.
    """

    var_max: float
    var_sum: float
    dot: float
    degenerate: bool = False


def gradient_diagnostics(policy: SoftmaxPolicy, env: NcmdpEnv, n: int,
                         seed: int = 0,
                         objective: Objective | None = None) -> DiagnosticsResult:
    """Frozen-policy gradient statistics over `n` episodes.

    Each episode is rolled out once; its policy-gradient vector is computed
    twice from the same trajectory, with reward-to-go taken over the raw
    rewards and over the best-prefix adapted rewards, so both estimators
    share one parameter space and one data set.
    """
    if n < 2:
        raise ValueError("need at least two episodes")
    objective = objective or PrefixMaxObjective()
    scratch = env.clone()
    rng = make_rng(seed, 9)

    sum_grads: list[dict[Hashable, list[float]]] = []
    max_grads: list[dict[Hashable, list[float]]] = []
    for episode in range(n):
        raw = scratch.reset(seed if episode == 0 else None)
        summary = objective.initial_state()
        keys: list[Hashable] = []
        actions: list[int] = []
        probs: list[list[float]] = []
        raw_rewards: list[float] = []
        adapted_rewards: list[float] = []
        done = False
        while not done:
            n_actions = scratch.action_count(raw)
            key = policy.key(AugmentedState(raw, summary))
            p = policy.probs_for_key(key, n_actions)
            action = _sample(p, rng)
            reward, raw, done = scratch.step(action)
            keys.append(key)
            actions.append(action)
            probs.append(p)
            raw_rewards.append(reward)
            adapted_rewards.append(objective.adapted_reward(summary, reward))
            summary = objective.update(summary, reward)
        sum_grads.append(_episode_gradient(keys, actions, probs, raw_rewards))
        max_grads.append(_episode_gradient(keys, actions, probs, adapted_rewards))

    mean_sum, mean_sq_sum = _gradient_moments(sum_grads, n)
    mean_max, mean_sq_max = _gradient_moments(max_grads, n)
    sq_norm_sum = _sq_norm(mean_sum)
    sq_norm_max = _sq_norm(mean_max)
    degenerate = sq_norm_sum == 0.0 or sq_norm_max == 0.0
    var_sum = (mean_sq_sum - sq_norm_sum) / sq_norm_sum if sq_norm_sum > 0.0 else math.nan
    var_max = (mean_sq_max - sq_norm_max) / sq_norm_max if sq_norm_max > 0.0 else math.nan
    if degenerate:
        dot = math.nan
    else:
        cross = math.fsum(v * mean_sum.get(comp, 0.0) for comp, v in mean_max.items())
        dot = cross / math.sqrt(sq_norm_max * sq_norm_sum)
    return DiagnosticsResult(var_max, var_sum, dot, degenerate)


def _episode_gradient(keys, actions, probs, rewards) -> dict[Hashable, list[float]]:
    grads: dict[Hashable, list[float]] = {}
    reward_to_go = 0.0
    for t in range(len(actions) - 1, -1, -1):
        reward_to_go += rewards[t]
        g = grads.get(keys[t])
        if g is None:
            g = grads[keys[t]] = [0.0] * len(probs[t])
        p = probs[t]
        a = actions[t]
        for i in range(len(p)):
            g[i] += ((1.0 if i == a else 0.0) - p[i]) * reward_to_go
    return grads


def _gradient_moments(grads: list[dict[Hashable, list[float]]],
                      n: int) -> tuple[dict[tuple[Hashable, int], float], float]:
    """Component-wise mean gradient and mean squared norm, with exact sums."""
    samples: dict[tuple[Hashable, int], list[float]] = {}
    sq_norms: list[float] = []
    for g in grads:
        terms: list[float] = []
        for key, row in g.items():
            for i, v in enumerate(row):
                samples.setdefault((key, i), []).append(v)
                terms.append(v * v)
        sq_norms.append(math.fsum(terms))
    mean = {comp: math.fsum(vals) / n for comp, vals in samples.items()}
    mean_sq_norm = math.fsum(sq_norms) / n
    return mean, mean_sq_norm


def _sq_norm(mean: dict[tuple[Hashable, int], float]) -> float:
    return math.fsum(v * v for v in mean.values())
