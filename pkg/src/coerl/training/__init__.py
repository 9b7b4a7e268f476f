"""Training loop, evaluation, trace export and mode comparisons"""

from .evaluation import (
    EvalStats,
    Episode,
    make_checkpoint,
    load_checkpoint,
    policy_from_checkpoint,
    env_from_checkpoint,
    run_episode,
    evaluate_returns,
    evaluate_policy,
    export_traces,
)
from .trainer import CoERLTrainer, TrainResult, train
from .experiments import (
    EXPERIMENTS,
    ComparisonResult,
    Experiment,
    RunOutcome,
    ablation_ordering_holds,
    lqr_optimality_ratio,
    lqr_sanity_passed,
    run_experiment,
)

__all__ = [
    'EvalStats', 'Episode', 'make_checkpoint', 'load_checkpoint', 'policy_from_checkpoint',
    'env_from_checkpoint', 'run_episode', 'evaluate_returns', 'evaluate_policy', 'export_traces',
    'CoERLTrainer', 'TrainResult', 'train', 'EXPERIMENTS', 'ComparisonResult', 'Experiment', 'RunOutcome',
    'ablation_ordering_holds', 'lqr_optimality_ratio', 'lqr_sanity_passed', 'run_experiment',
]
