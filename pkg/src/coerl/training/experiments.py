"""
Acceptance experiments
Paired-seed comparisons of training modes under one env-step budget
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import TrainerConfig
from ..envs import LQR, optimal_return
from ..errors import ConfigurationError, RejectedInputError
from ..utils.logger import setup_logger
from .evaluation import CheckpointLike, env_from_checkpoint, evaluate_policy, policy_from_checkpoint, run_episode
from .trainer import CoERLTrainer

logger = setup_logger(__name__)

# ES step norm per generation is about (es_lr / sigma) * sqrt(|theta| / pop_size);
# these keep it well under what one SAC phase moves the actor.
SHARED_OVERRIDES: Dict[str, Any] = {
    'sigma': 0.05,
    'es_lr': 5e-4,
    'fitness_shaping': 'standardized',
    'hidden_dims': (32, 32),
    'batch_size': 128,
    'rl_steps_per_generation': None,
    'total_generations': 100_000,
    'eval_interval': 10,
    'eval_episodes': 5,
    'checkpoint_interval': 100_000,
}

COMPARISON_COLUMNS = [
    'experiment', 'env', 'mode', 'seed', 'generations', 'train_env_steps',
    'eval_return_mean', 'eval_return_std', 'optimality_ratio', 'checkpoint',
]


@dataclass(frozen=True)
class Experiment:
    """A set of modes trained on one env over shared seeds and one env-step budget"""

    name: str
    env_name: str
    modes: Tuple[str, ...]
    max_env_steps: int
    seeds: Tuple[int, ...] = (0, 1, 2, 3, 4)
    overrides: Dict[str, Any] = field(default_factory=dict)

    def config(self, mode: str, seed: int, output_dir: Path) -> TrainerConfig:
        """Trainer configuration of one (mode, seed) cell"""
        settings = {**SHARED_OVERRIDES, **self.overrides}
        settings.update(
            env_name=self.env_name,
            mode=mode,
            seed=seed,
            max_env_steps=self.max_env_steps,
            output_dir=str(output_dir),
        )
        return TrainerConfig().replace(**settings)

    def with_budget(self, max_env_steps: Optional[int] = None, seeds: Optional[Sequence[int]] = None) -> 'Experiment':
        return Experiment(
            name=self.name,
            env_name=self.env_name,
            modes=self.modes,
            max_env_steps=max_env_steps or self.max_env_steps,
            seeds=tuple(seeds) if seeds else self.seeds,
            overrides=dict(self.overrides),
        )


EXPERIMENTS: Dict[str, Experiment] = {
    'lqr_sanity': Experiment('lqr_sanity', 'lqr', ('coerl',), 100_000, overrides={'alpha_s': 0.05}),
    'point_mass_ablation': Experiment('point_mass_ablation', 'point_mass', ('coerl', 'essac', 'coes'), 200_000),
    'pendulum_ablation': Experiment('pendulum_ablation', 'pendulum', ('coerl', 'essac', 'coes'), 200_000),
    'lqr_coerl_vs_coes': Experiment('lqr_coerl_vs_coes', 'lqr', ('coerl', 'coes'), 100_000,
                                    overrides={'alpha_s': 0.05}),
}


@dataclass
class RunOutcome:
    """Final evaluation of one trained (mode, seed) cell"""

    mode: str
    seed: int
    generations: int
    train_env_steps: int
    eval_return_mean: float
    eval_return_std: float
    checkpoint: str
    optimality_ratio: Optional[float] = None


@dataclass
class ComparisonResult:
    """All outcomes of one experiment"""

    experiment: str
    env_name: str
    max_env_steps: int
    outcomes: List[RunOutcome] = field(default_factory=list)

    @property
    def modes(self) -> List[str]:
        return list(dict.fromkeys(o.mode for o in self.outcomes))

    def returns(self, mode: str) -> Dict[int, float]:
        """Final eval return per seed"""
        return {o.seed: o.eval_return_mean for o in self.outcomes if o.mode == mode}

    def mean_return(self, mode: str) -> float:
        values = list(self.returns(mode).values())
        if not values:
            raise RejectedInputError(f"No outcomes for mode {mode!r}")
        return float(np.mean(values))

    def paired_differences(self, mode: str, baseline: str) -> List[float]:
        """mode minus baseline on every seed both ran"""
        ours, theirs = self.returns(mode), self.returns(baseline)
        return [ours[s] - theirs[s] for s in sorted(ours) if s in theirs]

    def wins(self, mode: str, baseline: str) -> int:
        return sum(d > 0 for d in self.paired_differences(mode, baseline))

    def ranking(self) -> List[str]:
        """Modes ordered from best to worst mean final return"""
        return sorted(self.modes, key=self.mean_return, reverse=True)

    def to_record(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            'experiment': self.experiment,
            'env': self.env_name,
            'max_env_steps': self.max_env_steps,
            'mean_return': {m: self.mean_return(m) for m in self.modes},
            'ranking': self.ranking(),
        }
        if 'coerl' in self.modes:
            record['paired_wins'] = {
                b: self.wins('coerl', b) for b in self.modes if b != 'coerl'
            }
        ratios = [o.optimality_ratio for o in self.outcomes if o.optimality_ratio is not None]
        if ratios:
            record['optimality_ratios'] = ratios
        return record


def lqr_optimality_ratio(checkpoint: CheckpointLike, env: LQR, episodes: int = 20, seed: int = 0) -> float:
    """
    Summed policy cost over summed Riccati-optimal cost from the same starts

    Reset seeds are drawn the way evaluate_policy draws them, so the ratio
    refers to the same episodes as an evaluation with this seed.

    Returns:
        Ratio >= 1 up to numerical error; 1.15 means 15% worse than optimal
    """
    if not isinstance(env, LQR):
        raise RejectedInputError(f"Optimality ratio needs the lqr env, got {env.name}")
    policy = policy_from_checkpoint(checkpoint)
    rng = np.random.default_rng(seed)
    achieved = 0.0
    optimal = 0.0
    for _ in range(episodes):
        reset_seed = int(rng.integers(0, 2 ** 31 - 1))
        achieved += run_episode(env, policy, reset_seed).total_return
        optimal += optimal_return(env, env.reset(seed=reset_seed).internal)
    return achieved / optimal


def lqr_sanity_passed(result: ComparisonResult, tolerance: float = 0.15, required: int = 4) -> bool:
    """At least `required` coerl seeds end within `tolerance` of the optimal cost"""
    ratios = [o.optimality_ratio for o in result.outcomes if o.mode == 'coerl' and o.optimality_ratio is not None]
    return sum(r <= 1.0 + tolerance for r in ratios) >= required


def ablation_ordering_holds(results: Sequence[ComparisonResult]) -> bool:
    """coerl matches or beats every other mode on every env and is strictly best on at least one"""
    strictly_best = False
    for result in results:
        ours = result.mean_return('coerl')
        others = [result.mean_return(m) for m in result.modes if m != 'coerl']
        if any(ours < other for other in others):
            return False
        strictly_best = strictly_best or all(ours > other for other in others)
    return strictly_best


def write_comparison(result: ComparisonResult, output_dir: Path) -> Tuple[Path, Path]:
    """Write comparison.csv (one row per run) and summary.json"""
    output_dir.mkdir(parents=True, exist_ok=True)
    table = output_dir / 'comparison.csv'
    with open(table, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(COMPARISON_COLUMNS)
        for o in result.outcomes:
            writer.writerow([
                result.experiment, result.env_name, o.mode, o.seed, o.generations, o.train_env_steps,
                repr(o.eval_return_mean), repr(o.eval_return_std),
                '' if o.optimality_ratio is None else repr(o.optimality_ratio), o.checkpoint,
            ])
    summary = output_dir / 'summary.json'
    summary.write_text(json.dumps(result.to_record(), indent=2), encoding='utf-8')
    return table, summary


def run_experiment(
    experiment: Experiment,
    output_dir: Path,
    eval_episodes: int = 20,
    eval_seed: int = 10_000,
    workers: Optional[int] = None,
) -> ComparisonResult:
    """
    Train every (seed, mode) cell and evaluate the final checkpoints on shared starts

    Args:
        experiment: What to run
        output_dir: Parent directory; each cell writes to <mode>/seed_<seed>
        eval_episodes: Final evaluation episodes per cell
        eval_seed: Reset-seed stream shared by every cell
        workers: Rollout threads per run (config default when None)

    Returns:
        ComparisonResult, also written as comparison.csv and summary.json
    """
    if not experiment.modes or not experiment.seeds:
        raise ConfigurationError(f"Experiment {experiment.name} needs at least one mode and one seed")
    output_dir = Path(output_dir)
    result = ComparisonResult(experiment.name, experiment.env_name, experiment.max_env_steps)

    for seed in experiment.seeds:
        for mode in experiment.modes:
            config = experiment.config(mode, seed, output_dir / mode / f'seed_{seed}').replace(workers=workers)
            logger.info(f"[{experiment.name}] {mode} seed={seed} budget={experiment.max_env_steps}")
            trained = CoERLTrainer(config).train()

            env = env_from_checkpoint(trained.final_checkpoint)
            stats = evaluate_policy(trained.final_checkpoint, env, eval_episodes, eval_seed)
            ratio = None
            if isinstance(env, LQR):
                ratio = lqr_optimality_ratio(trained.final_checkpoint, env, eval_episodes, eval_seed)
            result.outcomes.append(RunOutcome(
                mode=mode,
                seed=seed,
                generations=trained.generations_completed,
                train_env_steps=trained.train_env_steps,
                eval_return_mean=stats.mean,
                eval_return_std=stats.std,
                checkpoint=str(trained.final_checkpoint),
                optimality_ratio=ratio,
            ))

    table, summary = write_comparison(result, output_dir)
    logger.info(f"[{experiment.name}] ranking: {result.ranking()} (results in {table}, {summary})")
    return result
