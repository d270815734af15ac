"""Objective families for reward sequences scored by something other than their sum.

Each objective is packaged as an adapter with three pieces: an initial summary
state, an update rule folding one more raw reward into the summary, and an
adapted reward equal to the increment of the objective value caused by that
reward. Summing the adapted rewards over an episode therefore reproduces the
objective of the whole raw reward sequence (telescoping), while the summary
stays a fixed-size vector no matter how long the episode runs.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Sequence


class NonFiniteRewardError(ValueError):
    """A reward was NaN or infinite."""


class HarmonicZeroRewardError(ValueError):
    """The harmonic-mean objective received a zero reward."""


class EmptySequenceError(ValueError):
    """An objective value was requested for an empty reward sequence."""


#: running variances at or below this are treated as degenerate in ratios
VARIANCE_FLOOR = 1e-12


@dataclass(frozen=True)
class ObjectiveState:
    """Fixed-size reward summary plus the number of rewards folded in."""

    h: tuple[float, ...]
    t: int = 0


def _check_reward(reward: float) -> float:
    reward = float(reward)
    if not math.isfinite(reward):
        raise NonFiniteRewardError(f"reward must be finite, got {reward!r}")
    return reward


def _ratio_of_moments(mean: float, mean_sq: float) -> float:
    # degenerate variance (fewer than two samples, or all equal) scores 0
    var = mean_sq - mean * mean
    if var <= VARIANCE_FLOOR:
        return 0.0
    return mean / math.sqrt(var)


class Objective(ABC):
    """One objective family: summary state, update rule, adapted reward.

    Adapters are pure functions of (state, reward); any number of concurrent
    episodes may share one adapter as long as each owns its own state.
    """

    name: str = "abstract"
    state_dim: int = 1

    def initial_state(self) -> ObjectiveState:
        return ObjectiveState((0.0,) * self.state_dim, 0)

    @abstractmethod
    def update(self, state: ObjectiveState, reward: float) -> ObjectiveState:
        """Fold one raw reward into the summary state."""

    @abstractmethod
    def adapted_reward(self, state: ObjectiveState, reward: float) -> float:
        """Objective increment caused by `reward` arriving in `state`."""

    @abstractmethod
    def value(self, rewards: Sequence[float]) -> float:
        """Objective applied directly to a complete reward sequence."""

    def adapted_rewards(self, rewards: Sequence[float]) -> list[float]:
        """Adapted-reward sequence for a complete raw reward sequence."""
        state = self.initial_state()
        out = []
        for r in rewards:
            out.append(self.adapted_reward(state, r))
            state = self.update(state, r)
        return out

    def _checked(self, rewards: Sequence[float]) -> list[float]:
        rs = [_check_reward(r) for r in rewards]
        if not rs:
            raise EmptySequenceError(f"{self.name}: need at least one reward")
        return rs

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class MaxObjective(Objective):
    """Largest reward of the episode.

    The summary is meaningless until the first reward arrives (t == 0 marks
    it unset); the first reward both seeds the running maximum and is paid
    out unchanged, so no infinite sentinel is ever stored.
    """

    name = "max"

    def update(self, state: ObjectiveState, reward: float) -> ObjectiveState:
        r = _check_reward(reward)
        if state.t == 0:
            return ObjectiveState((r,), 1)
        return ObjectiveState((max(state.h[0], r),), state.t + 1)

    def adapted_reward(self, state: ObjectiveState, reward: float) -> float:
        r = _check_reward(reward)
        if state.t == 0:
            return r
        return max(0.0, r - state.h[0])

    def value(self, rewards: Sequence[float]) -> float:
        return max(self._checked(rewards))


class MinObjective(Objective):
    """Smallest reward of the episode (weakest-link scoring)."""

    name = "min"

    def update(self, state: ObjectiveState, reward: float) -> ObjectiveState:
        r = _check_reward(reward)
        if state.t == 0:
            return ObjectiveState((r,), 1)
        return ObjectiveState((min(state.h[0], r),), state.t + 1)

    def adapted_reward(self, state: ObjectiveState, reward: float) -> float:
        r = _check_reward(reward)
        if state.t == 0:
            return r
        return min(0.0, r - state.h[0])

    def value(self, rewards: Sequence[float]) -> float:
        return min(self._checked(rewards))


class SharpeObjective(Objective):
    """Mean of the rewards divided by their population standard deviation.

    The summary holds the running mean, running mean of squares, and count.
    The ratio is defined as 0 whenever the variance is degenerate (fewer than
    two rewards, or all rewards equal), which keeps episode returns finite;
    the adapted reward is the difference of the guarded ratios.
    """

    name = "sharpe"
    state_dim = 3

    def update(self, state: ObjectiveState, reward: float) -> ObjectiveState:
        r = _check_reward(reward)
        mean, mean_sq, count = state.h
        grown = count + 1.0
        new_mean = (count / grown) * mean + (1.0 / grown) * r
        new_mean_sq = (count / grown) * mean_sq + (1.0 / grown) * r * r
        return ObjectiveState((new_mean, new_mean_sq, grown), state.t + 1)

    def adapted_reward(self, state: ObjectiveState, reward: float) -> float:
        nxt = self.update(state, reward)
        return _ratio_of_moments(nxt.h[0], nxt.h[1]) - _ratio_of_moments(state.h[0], state.h[1])

    def value(self, rewards: Sequence[float]) -> float:
        rs = self._checked(rewards)
        n = len(rs)
        mean = math.fsum(rs) / n
        mean_sq = math.fsum(r * r for r in rs) / n
        return _ratio_of_moments(mean, mean_sq)


class PrefixMaxObjective(Objective):
    """Best prefix sum of the rewards, the empty prefix counting as 0.

    The summary tracks how far the running sum currently sits below its best
    prefix; a reward only pays out the part that pushes the running sum to a
    new best. In environments whose rewards are cost drops between states,
    the episode value equals start cost minus the lowest cost visited.
    """

    name = "prefixmax"

    def update(self, state: ObjectiveState, reward: float) -> ObjectiveState:
        r = _check_reward(reward)
        return ObjectiveState((max(0.0, state.h[0] - r),), state.t + 1)

    def adapted_reward(self, state: ObjectiveState, reward: float) -> float:
        r = _check_reward(reward)
        return max(0.0, r - state.h[0])

    def value(self, rewards: Sequence[float]) -> float:
        best = 0.0
        total = 0.0
        for r in self._checked(rewards):
            total += r
            best = max(best, total)
        return best


class ProductObjective(Objective):
    """Product of all rewards; the summary is the running product, seeded at 1."""

    name = "product"

    def initial_state(self) -> ObjectiveState:
        return ObjectiveState((1.0,), 0)

    def update(self, state: ObjectiveState, reward: float) -> ObjectiveState:
        r = _check_reward(reward)
        return ObjectiveState((r * state.h[0],), state.t + 1)

    def adapted_reward(self, state: ObjectiveState, reward: float) -> float:
        r = _check_reward(reward)
        if state.t == 0:
            return r
        return r * state.h[0] - state.h[0]

    def value(self, rewards: Sequence[float]) -> float:
        prod = 1.0
        for r in self._checked(rewards):
            prod = r * prod
        return prod


class HarmonicMeanObjective(Objective):
    """Reciprocal of the summed reciprocals of the rewards.

    Zero rewards are rejected outright rather than silently propagating
    infinities through the summary.
    """

    name = "harmonic"

    def _checked_nonzero(self, reward: float) -> float:
        r = _check_reward(reward)
        if r == 0.0:
            raise HarmonicZeroRewardError("harmonic mean is undefined for a zero reward")
        return r

    def update(self, state: ObjectiveState, reward: float) -> ObjectiveState:
        r = self._checked_nonzero(reward)
        return ObjectiveState((state.h[0] + 1.0 / r,), state.t + 1)

    def adapted_reward(self, state: ObjectiveState, reward: float) -> float:
        r = self._checked_nonzero(reward)
        if state.t == 0:
            return r
        return 1.0 / (state.h[0] + 1.0 / r) - 1.0 / state.h[0]

    def value(self, rewards: Sequence[float]) -> float:
        total = 0.0
        for r in self._checked(rewards):
            if r == 0.0:
                raise HarmonicZeroRewardError("harmonic mean is undefined for a zero reward")
            total += 1.0 / r
        return 1.0 / total


class LengthDiscountedObjective(Objective):
    """Total reward damped by decay**(count - 1): an exponential trade-off
    between episode return and episode length.

    The exponent counts rewards after the first, so a single-reward episode
    is undamped and every extra step multiplies the total by `decay` once.
    """

    name = "discounted"
    state_dim = 2

    def __init__(self, decay: float):
        decay = float(decay)
        if not 0.0 < decay < 1.0:
            raise ValueError(f"decay must lie strictly inside (0, 1), got {decay}")
        self.decay = decay

    def _damped(self, total: float, count: float) -> float:
        if count == 0:
            return 0.0
        return self.decay ** (count - 1.0) * total

    def update(self, state: ObjectiveState, reward: float) -> ObjectiveState:
        r = _check_reward(reward)
        return ObjectiveState((state.h[0] + r, state.h[1] + 1.0), state.t + 1)

    def adapted_reward(self, state: ObjectiveState, reward: float) -> float:
        nxt = self.update(state, reward)
        return self._damped(nxt.h[0], nxt.h[1]) - self._damped(state.h[0], state.h[1])

    def value(self, rewards: Sequence[float]) -> float:
        rs = self._checked(rewards)
        return self.decay ** (len(rs) - 1.0) * math.fsum(rs)

    def __repr__(self) -> str:
        return f"LengthDiscountedObjective({self.decay})"


class MeanObjective(Objective):
    """Arithmetic mean of the rewards; summary is (running sum, count)."""

    name = "mean"
    state_dim = 2

    def update(self, state: ObjectiveState, reward: float) -> ObjectiveState:
        r = _check_reward(reward)
        return ObjectiveState((state.h[0] + r, state.h[1] + 1.0), state.t + 1)

    def adapted_reward(self, state: ObjectiveState, reward: float) -> float:
        r = _check_reward(reward)
        if state.t == 0:
            return r
        total, count = state.h
        return (total + r) / (count + 1.0) - total / count

    def value(self, rewards: Sequence[float]) -> float:
        rs = self._checked(rewards)
        return math.fsum(rs) / len(rs)


@dataclass(frozen=True)
class Accumulator:
    """One folded statistic: acc <- fold(step(t, reward), acc).

    `init` is the starting accumulator value; None means the first step value
    itself seeds the accumulator, for folds like max/min that have no finite
    identity element.
    """

    fold: Callable[[float, float], float]
    step: Callable[[int, float], float]
    init: float | None = None


@dataclass(frozen=True)
class GenericSpec:
    """Recipe for an objective: folded statistics plus a finishing map.

    `finish(count, b0, ..., b_{k-1})` turns the statistics into the objective
    value. The value before the first reward is fixed at 0, so the first
    adapted reward equals the objective of the one-reward sequence.
    """

    accumulators: tuple[Accumulator, ...]
    finish: Callable[..., float]
    name: str = "generic"

    def __post_init__(self) -> None:
        if len(self.accumulators) < 1:
            raise ValueError("a generic objective needs at least one accumulator")


class GenericObjective(Objective):
    """Objective assembled from a GenericSpec.

    The summary holds one entry per accumulator plus a step counter in the
    last slot, so its size is the number of accumulators plus one.
    """

    def __init__(self, spec: GenericSpec):
        if not isinstance(spec, GenericSpec):
            raise ValueError(f"expected a GenericSpec, got {spec!r}")
        self.spec = spec
        self.name = spec.name
        self.state_dim = len(spec.accumulators) + 1

    def initial_state(self) -> ObjectiveState:
        h = tuple(0.0 if a.init is None else float(a.init) for a in self.spec.accumulators)
        return ObjectiveState(h + (0.0,), 0)

    def update(self, state: ObjectiveState, reward: float) -> ObjectiveState:
        r = _check_reward(reward)
        t = state.t
        folded = []
        for acc, current in zip(self.spec.accumulators, state.h):
            stepped = acc.step(t, r)
            if acc.init is None and t == 0:
                folded.append(stepped)
            else:
                folded.append(acc.fold(stepped, current))
        folded.append(state.h[-1] + 1.0)
        return ObjectiveState(tuple(folded), t + 1)

    def _finish(self, state: ObjectiveState) -> float:
        if state.t == 0:
            return 0.0
        return self.spec.finish(state.t, *state.h[:-1])

    def adapted_reward(self, state: ObjectiveState, reward: float) -> float:
        return self._finish(self.update(state, reward)) - self._finish(state)

    def value(self, rewards: Sequence[float]) -> float:
        state = self.initial_state()
        for r in self._checked(rewards):
            state = self.update(state, r)
        return self._finish(state)

    def __repr__(self) -> str:
        return f"GenericObjective({self.spec.name!r})"


def build_generic(spec: GenericSpec) -> GenericObjective:
    """Adapter implementing the objective a GenericSpec describes."""
    return GenericObjective(spec)


def _sum_accumulator(step: Callable[[int, float], float] | None = None) -> Accumulator:
    return Accumulator(fold=lambda x, acc: acc + x, step=step or (lambda t, r: r), init=0.0)


def generic_variant(objective: Objective) -> GenericObjective:
    """Generic-builder twin of a specialized adapter.

    Expresses the adapter's objective through fold/finish pieces; used to
    check that the generic construction agrees with each hand-written one.
    """
    if isinstance(objective, MaxObjective):
        spec = GenericSpec(
            (Accumulator(fold=lambda x, acc: max(x, acc), step=lambda t, r: r),),
            finish=lambda n, b0: b0, name="generic:max")
    elif isinstance(objective, MinObjective):
        spec = GenericSpec(
            (Accumulator(fold=lambda x, acc: min(x, acc), step=lambda t, r: r),),
            finish=lambda n, b0: b0, name="generic:min")
    elif isinstance(objective, SharpeObjective):
        spec = GenericSpec(
            (_sum_accumulator(), _sum_accumulator(lambda t, r: r * r)),
            finish=lambda n, b0, b1: _ratio_of_moments(b0 / n, b1 / n),
            name="generic:sharpe")
    elif isinstance(objective, PrefixMaxObjective):
        gap = Accumulator(fold=lambda x, acc: max(0.0, acc - x), step=lambda t, r: r, init=0.0)
        spec = GenericSpec(
            (gap, _sum_accumulator()),
            finish=lambda n, b0, b1: b0 + b1, name="generic:prefixmax")
    elif isinstance(objective, ProductObjective):
        spec = GenericSpec(
            (Accumulator(fold=lambda x, acc: x * acc, step=lambda t, r: r, init=1.0),),
            finish=lambda n, b0: b0, name="generic:product")
    elif isinstance(objective, HarmonicMeanObjective):
        spec = GenericSpec(
            (_sum_accumulator(lambda t, r: 1.0 / r),),
            finish=lambda n, b0: 1.0 / b0, name="generic:harmonic")
    elif isinstance(objective, LengthDiscountedObjective):
        decay = objective.decay
        spec = GenericSpec(
            (_sum_accumulator(),),
            finish=lambda n, b0: decay ** (n - 1.0) * b0, name="generic:discounted")
    elif isinstance(objective, MeanObjective):
        spec = GenericSpec(
            (_sum_accumulator(),),
            finish=lambda n, b0: b0 / n, name="generic:mean")
    else:
        raise ValueError(f"no generic recipe for {objective!r}")
    return GenericObjective(spec)


_BUILTIN = {
    "max": MaxObjective,
    "min": MinObjective,
    "sharpe": SharpeObjective,
    "prefixmax": PrefixMaxObjective,
    "product": ProductObjective,
    "harmonic": HarmonicMeanObjective,
    "mean": MeanObjective,
}


def objective_from_name(name: str) -> Objective:
    """Parse a config/CLI identifier.

    Recognized: max, min, sharpe, prefixmax, product, harmonic, mean, and
    discounted:<decay> with decay strictly inside (0, 1).
    """
    key = name.strip().lower()
    if key in _BUILTIN:
        return _BUILTIN[key]()
    if key.startswith("discounted:"):
        try:
            decay = float(key.split(":", 1)[1])
        except ValueError as exc:
            raise ValueError(f"bad decay in objective identifier {name!r}") from exc
        return LengthDiscountedObjective(decay)
    raise ValueError(f"unknown objective {name!r}")


def all_objectives(decay: float = 0.9) -> list[Objective]:
    """One instance of every built-in objective family."""
    return [
        MaxObjective(),
        MinObjective(),
        SharpeObjective(),
        PrefixMaxObjective(),
        ProductObjective(),
        HarmonicMeanObjective(),
        LengthDiscountedObjective(decay),
        MeanObjective(),
    ]
