import pytest

from ncmdp.environments import (Outcome, TabularNcmdp, make_grid, make_peak,
                                make_two_step)
from ncmdp.mapping import (AugmentedState, MdpAdapter, TrajectoryRecord,
                           map_trajectory, wrap)
from ncmdp.objectives import (MinObjective, ObjectiveState,
                              PrefixMaxObjective, all_objectives)
from ncmdp.rng import make_rng


def close(a, b, rel=1e-9):
    return a == b or abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def deterministic_two_step(first_reward):
    """Two-step chain with a fixed first reward, then a safe/gamble choice
    paying 0 / -2 deterministically."""
    transitions = (
        ((Outcome(1.0, first_reward, 1, False),),),
        ((Outcome(1.0, 0.0, 2, True),), (Outcome(1.0, -2.0, 2, True),)),
        (),
    )
    return TabularNcmdp(transitions, start=0)


def rollout(adapter, actions, seed=0):
    state = adapter.reset(seed)
    rewards = []
    for action in actions:
        reward, state, done = adapter.step(action)
        rewards.append(reward)
    return rewards, state, done


class TestWrap:
    def test_min_rollout_telescopes_to_minimum(self):
        env = make_two_step()
        adapter = wrap(env, MinObjective())
        for seed in range(50):
            adapter.reset(seed)
            total = 0.0
            raws = []
            done = False
            # replay raw rewards through a twin env on the same seed
            twin = make_two_step()
            twin.reset(seed)
            state = adapter.reset(seed)
            while not done:
                # last action: the gamble, keeping both outcome branches live
                action = adapter.action_count(state) - 1
                reward, state, done = adapter.step(action)
                raw, _, _ = twin.step(action)
                total += reward
                raws.append(raw)
            assert close(total, min(raws))

    def test_reset_starts_with_zero_counter(self):
        adapter = wrap(make_grid(4, seed=3), MinObjective())
        state = adapter.reset()
        assert state.obj.t == 0

    def test_action_count_preserved(self):
        grid = make_grid(3, seed=0)
        adapter = wrap(grid, MinObjective())
        state = adapter.reset()
        assert adapter.action_count(state) == grid.action_count(state.raw) == 3


class TestAdapterReset:
    def test_grid_reset_is_deterministic(self):
        adapter = wrap(make_grid(3, seed=7), MinObjective())
        assert adapter.reset(7) == adapter.reset(7)

    def test_peak_reset_returns_start_position(self):
        adapter = wrap(make_peak(), PrefixMaxObjective())
        assert adapter.reset().raw == 2

    def test_step_before_reset_rejected(self):
        adapter = wrap(make_peak(), PrefixMaxObjective())
        with pytest.raises(RuntimeError):
            adapter.step(0)


class TestAdapterStep:
    def test_first_reward_passes_through(self):
        adapter = wrap(deterministic_two_step(1.0), MinObjective())
        adapter.reset()
        reward, state, done = adapter.step(0)
        assert reward == 1.0
        assert state.obj == ObjectiveState((1.0,), 1)
        assert not done

    def test_second_step_pays_only_the_drop(self):
        adapter = wrap(deterministic_two_step(1.0), MinObjective())
        adapter.reset()
        adapter.step(0)
        reward, _, done = adapter.step(1)  # raw -2 against running min 1
        assert reward == -3.0
        assert done

    def test_no_drop_pays_zero(self):
        adapter = wrap(deterministic_two_step(-1.0), MinObjective())
        adapter.reset()
        adapter.step(0)
        reward, _, done = adapter.step(0)  # raw 0 against running min -1
        assert reward == 0.0
        assert done

    def test_step_after_terminal_rejected(self):
        adapter = wrap(deterministic_two_step(1.0), MinObjective())
        adapter.reset()
        adapter.step(0)
        adapter.step(0)
        with pytest.raises(RuntimeError):
            adapter.step(0)


class TestMapTrajectory:
    def test_min_pair(self):
        record = TrajectoryRecord(states=[0, 1, 2], actions=[0, 1],
                                  rewards=[1.0, -2.0])
        mapped = map_trajectory(record, MinObjective())
        assert mapped.rewards == [1.0, -3.0]
        assert sum(mapped.rewards) == min(record.rewards)
        assert mapped.actions == record.actions

    def test_single_step_equals_objective(self):
        for objective in all_objectives():
            record = TrajectoryRecord(states=["a", "b"], actions=[0], rewards=[1.5])
            mapped = map_trajectory(record, objective)
            assert close(sum(mapped.rewards), objective.value([1.5]))

    def test_prefixmax_example(self):
        record = TrajectoryRecord(states=[0, 1, 2, 3], actions=[0, 0, 0],
                                  rewards=[2.0, -1.0, 3.0])
        mapped = map_trajectory(record, PrefixMaxObjective())
        assert mapped.rewards == [2.0, 0.0, 2.0]
        assert sum(mapped.rewards) == 4.0

    @pytest.mark.parametrize("states,actions,rewards", [
        ([0, 1], [0, 1], [1.0, 2.0]),
        ([0, 1, 2], [0], [1.0]),
        ([0, 1], [0], [1.0, 2.0]),
    ])
    def test_inconsistent_lengths_rejected(self, states, actions, rewards):
        record = TrajectoryRecord(states=states, actions=actions, rewards=rewards)
        with pytest.raises(ValueError):
            map_trajectory(record, MinObjective())


def _record_adapter_episode(env, objective, seed, action_rng):
    """Run one adapter episode; return the raw record plus what the adapter emitted."""
    adapter = MdpAdapter(env, objective)
    state = adapter.reset(seed)
    raw_record = TrajectoryRecord(states=[state.raw])
    emitted_states = [state]
    emitted_rewards = []
    done = False
    twin = env.clone()
    twin.reset(seed)
    while not done:
        action = int(action_rng.integers(adapter.action_count(state)))
        reward, state, done = adapter.step(action)
        raw_reward, raw_next, _ = twin.step(action)
        raw_record.actions.append(action)
        raw_record.rewards.append(raw_reward)
        raw_record.states.append(raw_next)
        emitted_states.append(state)
        emitted_rewards.append(reward)
    return raw_record, emitted_states, emitted_rewards


@pytest.mark.parametrize("env_factory", [
    lambda: make_grid(4, seed=5),
    make_peak,
    make_two_step,
], ids=["grid", "peak", "two-step"])
def test_offline_mapping_reproduces_live_adapter(env_factory):
    rng = make_rng(0, 33)
    for objective in all_objectives():
        if objective.name == "harmonic":
            continue  # these environments emit zero rewards
        for episode in range(5):
            raw, states, rewards = _record_adapter_episode(
                env_factory(), objective, seed=episode, action_rng=rng)
            mapped = map_trajectory(raw, objective)
            assert mapped.rewards == rewards
            assert mapped.states == states


@pytest.mark.parametrize("env_factory", [
    lambda: make_grid(4, seed=5),
    make_peak,
    make_two_step,
], ids=["grid", "peak", "two-step"])
def test_episode_return_equals_objective_of_raw_rewards(env_factory):
    rng = make_rng(0, 34)
    for objective in all_objectives():
        if objective.name == "harmonic":
            continue
        for episode in range(10):
            raw, _, rewards = _record_adapter_episode(
                env_factory(), objective, seed=episode, action_rng=rng)
            assert close(sum(rewards), objective.value(raw.rewards))


def test_action_transparency_along_episodes():
    env = make_two_step()
    adapter = MdpAdapter(env, MinObjective())
    state = adapter.reset(0)
    assert adapter.action_count(state) == env.action_count(state.raw) == 1
    _, state, _ = adapter.step(0)
    assert adapter.action_count(state) == env.action_count(state.raw) == 2


def test_augmented_state_is_hashable_key():
    a = AugmentedState((0, 1), ObjectiveState((1.0,), 1))
    b = AugmentedState((0, 1), ObjectiveState((1.0,), 1))
    assert a == b and hash(a) == hash(b)
    assert len({a, b}) == 1
