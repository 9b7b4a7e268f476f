"""
Training orchestration
Runs the generation loop: coevolution phase, then the off-policy RL phase
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
from tqdm import tqdm

from ..config import SHOW_PROGRESS, TrainerConfig, get_config_summary, validate_config
from ..envs import Environment, make_env
from ..evolution.es_loop import coevolve_generation, plan_generation
from ..learning.replay_buffer import ReplayBuffer
from ..learning.sac import LearnerState, RLPhaseStats, collect_episodes, rl_phase
from ..policy.gaussian import GaussianPolicy
from ..utils.logger import setup_logger
from ..utils.storage import Checkpoint, RunStorage
from .evaluation import evaluate_returns, make_checkpoint

logger = setup_logger(__name__)

# Stand-in widths used to size the policy before the quadratic task exists
_QUADRATIC_IO = (1, 1)


@dataclass
class TrainResult:
    """Where a finished run left its outputs"""

    run_dir: Path
    final_checkpoint: Path
    metrics_path: Path
    events_path: Path
    theta: np.ndarray
    generations_completed: int
    train_env_steps: int
    eval_env_steps: int


class CoERLTrainer:
    """Drives one training run from config to final checkpoint"""

    def __init__(self, config: TrainerConfig):
        """
        Initialize the trainer

        Args:
            config: Validated or raw trainer configuration
        """
        validate_config(config)
        self.config = config
        self.storage = RunStorage(Path(config.output_dir))

        init_seq, train_seq, eval_seq = np.random.SeedSequence(config.seed).spawn(3)
        init_rng = np.random.default_rng(init_seq)
        self.rng = np.random.default_rng(train_seq)
        self.eval_rng = np.random.default_rng(eval_seq)

        if config.env_name == 'quadratic':
            state_dim, action_dim = _QUADRATIC_IO
        else:
            spec = make_env(config.env_name, horizon=config.horizon).spec
            state_dim, action_dim = spec.state_dim, spec.action_dim

        self.policy = GaussianPolicy.create(state_dim, action_dim, config.hidden_dims, init_rng, config.activation)
        self.env_kwargs = self._env_kwargs(self.policy.theta.size)

        self.learner: Optional[LearnerState] = None
        if config.runs_rl:
            self.learner = LearnerState.create(
                self.policy,
                config.hidden_dims,
                init_rng,
                config.activation,
                alpha_s=config.alpha_s,
                gamma=config.gamma,
                lr_actor=config.lr_actor,
                lr_critic=config.lr_critic,
                polyak_tau=config.polyak_tau,
                use_target_critics=config.use_target_critics,
                optimizer=config.optimizer,
            )
        self.buffer = ReplayBuffer(config.buffer_capacity, state_dim, action_dim)

        self.theta = self.policy.theta.copy()
        self.generation = 0
        self.train_env_steps = 0
        self.eval_env_steps = 0
        self._config_hash = config.config_hash()
        self._saved_generation: Optional[int] = None

        logger.info(
            f"Trainer ready: mode={config.mode} env={config.env_name} "
            f"params={self.theta.size} seed={config.seed}"
        )

    def _env_kwargs(self, n_params: int) -> Dict[str, Any]:
        if self.config.env_name == 'quadratic':
            return {'dim': n_params, 'seed': self.config.quadratic_seed}
        if self.config.horizon is not None:
            return {'horizon': self.config.horizon}
        return {}

    def make_env(self) -> Environment:
        """Fresh environment instance; one per rollout"""
        return make_env(self.config.env_name, **self.env_kwargs)

    def _checkpoint(self, theta: np.ndarray, generation: int, stage: int = 0) -> Checkpoint:
        return make_checkpoint(
            self.policy.with_theta(theta),
            self.config.env_name,
            self.env_kwargs,
            generation,
            stage=stage,
            config_hash=self._config_hash,
        )

    def save_checkpoint(self, generation: Optional[int] = None) -> Path:
        """Write the committed theta as an end-of-generation checkpoint"""
        generation = self.generation if generation is None else generation
        path = self.storage.save_checkpoint(self._checkpoint(self.theta, generation))
        self.storage.append_event('checkpoint', {'generation': generation, 'path': path.name})
        self._saved_generation = generation
        return path

    def _snapshot(self, generation: int):
        def on_subproblem(stage: int, theta: np.ndarray) -> None:
            self.storage.save_checkpoint(self._checkpoint(theta, generation, stage), stage=stage)
        return on_subproblem

    def _budget_exhausted(self) -> bool:
        limit = self.config.max_env_steps
        return limit is not None and self.train_env_steps >= limit

    def train(self) -> TrainResult:
        """
        Run every generation, writing metrics, events and checkpoints

        Returns:
            TrainResult

        Raises:
            Any module error, after a checkpoint of the last completed generation is written
        """
        config = self.config
        self.storage.reset()
        self.storage.append_event('run_start', {
            'config': config.to_dict(),
            'summary': get_config_summary(config),
            'policy': self.policy.describe(),
            'n_params': int(self.theta.size),
        })
        if config.runs_evolution and config.fitness_shaping != 'raw':
            self.storage.append_event('fitness_shaping', {'mode': config.fitness_shaping})

        final_path = self.save_checkpoint(0)

        progress = tqdm(
            range(1, config.total_generations + 1),
            desc=f"{config.mode}/{config.env_name}",
            unit='gen',
            disable=not SHOW_PROGRESS,
        )
        try:
            for generation in progress:
                if self._budget_exhausted():
                    logger.info(f"Env step budget {config.max_env_steps} reached before generation {generation}")
                    self.storage.append_event('budget_exhausted', {
                        'generation': self.generation,
                        'train_env_steps': self.train_env_steps,
                    })
                    break

                row = self._run_generation(generation)
                self.storage.append_metrics(row)

                if generation % config.checkpoint_interval == 0 or generation == config.total_generations:
                    final_path = self.save_checkpoint()

                progress.set_postfix(steps=self.train_env_steps, best=row.get('best_fitness'))

        except (Exception, KeyboardInterrupt) as e:
            logger.error(f"Training aborted after generation {self.generation}: {e}", exc_info=True)
            self.save_checkpoint()
            self.storage.append_event('run_abort', {
                'generation': self.generation,
                'error': f"{type(e).__name__}: {e}",
            })
            raise
        finally:
            progress.close()

        if self._saved_generation != self.generation:
            final_path = self.save_checkpoint()

        self.storage.append_event('run_end', {
            'generations': self.generation,
            'train_env_steps': self.train_env_steps,
            'eval_env_steps': self.eval_env_steps,
        })
        logger.info(
            f"Training finished: {self.generation} generations, "
            f"{self.train_env_steps} train steps, {self.eval_env_steps} eval steps"
        )
        return TrainResult(
            run_dir=self.storage.run_dir,
            final_checkpoint=final_path,
            metrics_path=self.storage.metrics_path,
            events_path=self.storage.events_path,
            theta=self.theta.copy(),
            generations_completed=self.generation,
            train_env_steps=self.train_env_steps,
            eval_env_steps=self.eval_env_steps,
        )

    def _run_generation(self, generation: int) -> Dict[str, Any]:
        """One generation; theta and counters are committed only on success"""
        config = self.config
        theta = self.theta
        steps_before = self.train_env_steps
        collected = 0
        row: Dict[str, Any] = {'generation': generation, 'rl_steps': 0}

        if config.runs_evolution:
            plan = plan_generation(theta.size, config, self.rng, generation, self.policy)
            self.storage.append_event('grouping', plan.describe(full=config.debug_groups))
            on_subproblem = self._snapshot(generation) if generation in config.snapshot_generations else None

            theta, stats = coevolve_generation(
                theta, self.make_env, config, self.buffer, self.rng, self.policy,
                plan=plan, generation=generation, on_subproblem=on_subproblem,
            )
            collected = stats.env_steps
            self.storage.append_event('generation', stats.to_record())
            row.update({
                'm': stats.m,
                'group_sizes': ';'.join(str(s) for s in stats.group_sizes),
                'best_fitness': stats.best_fitness,
                'mean_fitness': stats.mean_fitness,
                'update_norm': stats.update_norm,
            })
        else:
            collected = collect_episodes(
                self.make_env,
                self.policy.with_theta(theta),
                config.sac_episodes_per_generation,
                self.buffer,
                self.rng,
                config.fitness_mode,
            )

        if config.runs_rl:
            steps = config.rl_steps_per_generation
            if steps is None:
                steps = collected
            self.learner.set_policy_theta(theta)
            self.learner, rl_stats = rl_phase(self.learner, self.buffer, steps, config.batch_size, self.rng)
            theta = self.learner.policy.theta.copy()
            self._record_rl(generation, rl_stats, row)

        row['buffer_size'] = len(self.buffer)
        row['train_env_steps'] = steps_before + collected

        if generation % config.eval_interval == 0 or generation == config.total_generations:
            env = self.make_env()
            eval_stats = evaluate_returns(self.policy.with_theta(theta), env, config.eval_episodes, self.eval_rng)
            self.eval_env_steps += eval_stats.env_steps
            row['eval_return_mean'] = eval_stats.mean
            row['eval_return_std'] = eval_stats.std
            self.storage.append_event('evaluation', {'generation': generation, **eval_stats.to_record()})
            logger.info(f"Generation {generation}: eval return {eval_stats.mean:.3f} +/- {eval_stats.std:.3f}")
        row['eval_env_steps'] = self.eval_env_steps

        self.theta = theta
        self.train_env_steps = steps_before + collected
        self.generation = generation
        return row

    def _record_rl(self, generation: int, stats: RLPhaseStats, row: Dict[str, Any]) -> None:
        self.storage.append_event('rl_phase', {'generation': generation, **vars(stats)})
        if stats.skipped:
            self.storage.append_event('rl_skip', {
                'generation': generation,
                'skipped': stats.skipped,
                'buffer_size': stats.buffer_size,
            })
        row.update({
            'rl_steps': stats.steps,
            'critic_loss1': stats.critic_loss1,
            'critic_loss2': stats.critic_loss2,
            'actor_objective': stats.actor_objective,
            'entropy': stats.entropy,
        })


def train(config: TrainerConfig) -> TrainResult:
    """Convenience wrapper: build a trainer and run it"""
    return CoERLTrainer(config).train()
