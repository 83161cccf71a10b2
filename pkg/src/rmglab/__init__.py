"""Tabular robust Markov games with total-variation fictitious uncertainty sets."""

__version__ = "0.1.0"

from .bellman import clip, lp_inner_min_oracle, robust_backup, tv_support_value, tv_worst_case_kernel
from .evaluator import (
    GapReport,
    cce_gap,
    mixture_best_response_mc,
    mixture_best_response_recursive,
    mixture_value_mc,
    mixture_value_recursive,
    robust_best_response,
    robust_policy_value,
)
from .game import (
    JointActionCodec,
    PolicyMixture,
    ProductPolicy,
    RobustMarkovGame,
    default_game,
    expected_kernel_row,
    expected_reward,
    random_game,
    validate_game,
)
from .kernels import BACKEND
from .learner import LearnerConfig, LearnerOutput, build_schedule, robust_q_ftrl
from .sampler import EmpiricalModel, GenerativeModel, n_sample_estimation
