"""Discrete black-box minimisation by sampling from a tensor-train distribution.

    from protes import ProtesConfig, protes_minimize
    from protes.problems import analytic_problem

    x, y, trace = protes_minimize(analytic_problem("ackley", d=7), ProtesConfig(seed=0))
"""

from .constraints import AutomatonSpec, build_indicator_tt, constrained_init, min_run_spec
from .learner import (
    AdamState,
    ProtesConfig,
    RunTrace,
    TraceRecord,
    adam_step,
    loss,
    loss_gradient,
    protes_minimize,
    select_top_k,
)
from .sampler import SampleBatch, categorical_draw, tt_sample
from .tensor_train import TensorTrain, right_interfaces, tt_eval, tt_log, tt_random

__all__ = [
    "AdamState",
    "AutomatonSpec",
    "ProtesConfig",
    "RunTrace",
    "SampleBatch",
    "TensorTrain",
    "TraceRecord",
    "adam_step",
    "build_indicator_tt",
    "categorical_draw",
    "constrained_init",
    "loss",
    "loss_gradient",
    "min_run_spec",
    "protes_minimize",
    "right_interfaces",
    "select_top_k",
    "tt_eval",
    "tt_log",
    "tt_random",
    "tt_sample",
]
