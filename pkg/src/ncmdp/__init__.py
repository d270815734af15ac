"""Non-cumulative decision processes reduced to standard MDPs.

A decision process scored by an arbitrary function of its reward sequence is
turned into an ordinary MDP by pairing each state with a fixed-size summary
of past rewards and telescoping the objective into per-step increments. The
package ships the objective adapters, the environment wrapper, desk-scale
environments, tabular solvers, exhaustive oracles, and a seeded experiment
CLI.
"""

from .environments import (GridWorld, Outcome, PeakEnv, TabularNcmdp,
                           grid_to_tabular, load_grid, make_grid, make_peak,
                           make_two_step, save_grid)
from .mapping import (AugmentedState, MdpAdapter, NcmdpEnv, TrajectoryRecord,
                      map_trajectory, wrap)
from .objectives import (Accumulator, EmptySequenceError, GenericObjective,
                         GenericSpec, HarmonicMeanObjective,
                         HarmonicZeroRewardError, LengthDiscountedObjective,
                         MaxObjective, MeanObjective, MinObjective,
                         NonFiniteRewardError, Objective, ObjectiveState,
                         PrefixMaxObjective, ProductObjective, SharpeObjective,
                         all_objectives, build_generic, generic_variant,
                         objective_from_name)
from .oracle import (EnumerationCapError, ExactReturn, augmented_model,
                     exact_optimal_return, exact_policy_gradient, exact_return,
                     exhaustive_best_return, optimal_return_by_policy_enumeration,
                     trajectory_distribution)
from .solvers import (DiagnosticsResult, EpisodeStats, ExplicitMdp,
                      GreedyTablePolicy, IterationCapError, Policy,
                      ReinforceTrainer, SoftmaxPolicy, StateCapExceededError,
                      TableProbsPolicy, TrainConfig, Transition, UniformPolicy,
                      cui_value_iteration, evaluate_policy, gradient_diagnostics,
                      greedy_policy, key_augmented, key_raw, policy_evaluation,
                      q_learning, reinforce, run_raw_episode, value_iteration)
from .stats import BootstrapResult, bootstrap_ci

__all__ = [name for name in dir() if not name.startswith("_")]
