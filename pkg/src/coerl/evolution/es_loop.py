"""
Cooperative coevolution loop
Per-subproblem population sampling, rollouts and partial-gradient updates
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..config import TrainerConfig
from ..decomposition.grouping import GroupingPlan, draw_group_count, layer_grouping, random_grouping
from ..envs.base import Environment
from ..errors import ConfigurationError, ContractViolationError, EvaluationError, RejectedInputError
from ..learning.replay_buffer import ReplayBuffer, Transition
from ..policy.gaussian import GaussianPolicy, act
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

SEED_BOUND = 2 ** 63 - 1


@dataclass
class Perturbation:
    """
    One sampled individual

    `individual` equals theta except on the group, where it holds
    theta[group] + sigma * epsilon.
    """

    epsilon: np.ndarray
    individual: np.ndarray


@dataclass
class FitnessReport:
    """
    Returns of one individual and the transitions that produced them

    `trajectory` concatenates the episodes in order; `episode_returns[k]` is the
    reward sum over the k-th `episode_lengths[k]` transitions. `fitness` is
    their mean, which equals the trajectory's reward sum for a single episode.
    """

    trajectory: List[Transition]
    episode_returns: List[float]
    episode_lengths: List[int]

    def __post_init__(self):
        if len(self.episode_returns) != len(self.episode_lengths) or not self.episode_returns:
            raise ContractViolationError("Need one return and one length per episode")
        if sum(self.episode_lengths) != len(self.trajectory):
            raise ContractViolationError(
                f"Episode lengths sum to {sum(self.episode_lengths)}, trajectory has {len(self.trajectory)}"
            )

    @property
    def fitness(self) -> float:
        return float(np.mean(self.episode_returns))

    @property
    def episodes(self) -> int:
        return len(self.episode_returns)

    @property
    def episode_len(self) -> int:
        """Transitions over all episodes"""
        return len(self.trajectory)


@dataclass
class SubproblemStats:
    index: int
    size: int
    best_fitness: float
    mean_fitness: float
    env_steps: int


@dataclass
class GenerationStats:
    """Bookkeeping of one coevolution generation"""

    generation: int
    m: int
    group_sizes: List[int]
    subproblems: List[SubproblemStats] = field(default_factory=list)
    env_steps: int = 0
    update_norm: float = 0.0

    @property
    def best_fitness(self) -> Optional[float]:
        if not self.subproblems:
            return None
        return max(s.best_fitness for s in self.subproblems)

    @property
    def mean_fitness(self) -> Optional[float]:
        if not self.subproblems:
            return None
        return float(np.mean([s.mean_fitness for s in self.subproblems]))

    def to_record(self) -> Dict[str, Any]:
        return {
            'generation': self.generation,
            'm': self.m,
            'group_sizes': self.group_sizes,
            'subproblems': [vars(s) for s in self.subproblems],
            'env_steps': self.env_steps,
            'update_norm': self.update_norm,
        }


def sample_population(
    theta: np.ndarray,
    group: np.ndarray,
    mu: int,
    sigma: float,
    rng: np.random.Generator,
) -> List[Perturbation]:
    """
    Draw mu individuals around theta on one subproblem

    Args:
        theta: Current context vector
        group: Indices of the subproblem
        mu: Population size (>= 2)
        sigma: Noise strength (> 0)
        rng: Random stream

    Returns:
        mu perturbations with epsilon_i ~ N(0, I) of length |group|
    """
    if mu < 2:
        raise ConfigurationError(f"Population size must be >= 2, got {mu}")
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be > 0, got {sigma}")
    group = np.asarray(group, dtype=np.int64)
    if group.size == 0 or group.min() < 0 or group.max() >= theta.size:
        raise RejectedInputError("Group indices must be a nonempty subset of the parameter range")

    epsilons = rng.standard_normal((mu, group.size))
    population = []
    for epsilon in epsilons:
        individual = theta.copy()
        individual[group] = theta[group] + sigma * epsilon
        population.append(Perturbation(epsilon=epsilon, individual=individual))
    return population


def evaluate_individual(
    env: Environment,
    individual: np.ndarray,
    policy: GaussianPolicy,
    mode: str,
    rng: np.random.Generator,
    episodes: int = 1,
) -> FitnessReport:
    """
    Roll out the policy psi_i for full episodes and capture every transition

    Args:
        env: Environment instance owned by this call
        individual: Flat parameter vector psi_i
        policy: Template giving the architecture
        mode: 'stochastic' or 'deterministic' actions
        rng: Random stream for reset seeds and action noise
        episodes: Episodes to average; fitness is the mean undiscounted return

    Returns:
        FitnessReport

    Raises:
        EvaluationError: if the environment produces a non-finite state or reward
    """
    candidate = policy.with_theta(individual)
    env.bind_parameters(individual)

    trajectory: List[Transition] = []
    returns: List[float] = []
    lengths: List[int] = []
    for _ in range(episodes):
        state = env.reset(seed=int(rng.integers(0, 2 ** 31 - 1)))
        total = 0.0
        start = len(trajectory)
        while not state.done:
            action, _ = act(candidate, state.observation, mode, rng)
            next_state, reward, terminal = env.step(state, env.rescale_action(action))
            if not np.all(np.isfinite(next_state.observation)) or not np.isfinite(reward):
                raise EvaluationError(f"{env.name} produced a non-finite state", step_index=state.t)
            trajectory.append(Transition(state.observation, action, reward, next_state.observation, terminal))
            total += reward
            state = next_state
        returns.append(total)
        lengths.append(len(trajectory) - start)

    return FitnessReport(trajectory=trajectory, episode_returns=returns, episode_lengths=lengths)


def shape_fitness(fitnesses: Sequence[float], mode: str = 'raw') -> np.ndarray:
    """
    Optional fitness shaping before the gradient estimate

    Args:
        fitnesses: Raw returns f_i
        mode: 'raw', 'centered' (subtract mean) or 'standardized' (also divide by std)

    Returns:
        Shaped fitness array
    """
    f = np.asarray(fitnesses, dtype=np.float64)
    if mode == 'raw':
        return f
    centered = f - f.mean()
    if mode == 'centered':
        return centered
    if mode == 'standardized':
        std = f.std()
        return centered / std if std > 0 else np.zeros_like(f)
    raise ConfigurationError(f"Unknown fitness shaping {mode!r}")


def estimate_partial_gradient(
    perturbations: Sequence[Perturbation],
    fitnesses: Sequence[float],
    sigma: float,
) -> np.ndarray:
    """(1 / (mu sigma)) sum_i f_i epsilon_i over the subproblem coordinates"""
    if len(perturbations) != len(fitnesses):
        raise ContractViolationError(
            f"{len(perturbations)} perturbations but {len(fitnesses)} fitness values"
        )
    epsilons = np.stack([p.epsilon for p in perturbations])
    f = np.asarray(fitnesses, dtype=np.float64)
    return f @ epsilons / (len(perturbations) * sigma)


def partial_gradient_update(
    theta: np.ndarray,
    group: np.ndarray,
    perturbations: Sequence[Perturbation],
    fitnesses: Sequence[float],
    alpha: float,
    sigma: float,
) -> np.ndarray:
    """
    theta'[group] = theta[group] + alpha / (mu sigma) * sum_i f_i epsilon_i

    Entries outside the group are copied unchanged.

    Returns:
        Updated parameter vector (new array)
    """
    group = np.asarray(group, dtype=np.int64)
    if any(p.epsilon.size != group.size for p in perturbations):
        raise ContractViolationError("Perturbation length does not match the group size")
    gradient = estimate_partial_gradient(perturbations, fitnesses, sigma)
    updated = theta.copy()
    updated[group] = theta[group] + alpha * gradient
    return updated


def plan_generation(
    dim: int,
    config: TrainerConfig,
    rng: np.random.Generator,
    generation: int,
    policy: Optional[GaussianPolicy] = None,
) -> GroupingPlan:
    """
    Decompose the parameter vector for this generation

    Layer grouping applies only when the mode allows more than one group.
    """
    candidates = config.effective_group_counts
    if config.grouping_strategy == 'layer' and candidates != (1,) and policy is not None:
        return layer_grouping(policy.spec, generation)
    m = min(draw_group_count(rng, candidates), dim)
    seed = int(rng.integers(0, SEED_BOUND))
    return random_grouping(dim, m, np.random.default_rng(seed), generation=generation, seed=seed)


def _evaluate_population(
    population: Sequence[Perturbation],
    env_factory: Callable[[], Environment],
    policy: GaussianPolicy,
    config: TrainerConfig,
    rng: np.random.Generator,
    executor: Optional[ThreadPoolExecutor],
) -> List[FitnessReport]:
    seeds = rng.integers(0, SEED_BOUND, size=len(population))

    def run(i: int) -> FitnessReport:
        return evaluate_individual(
            env_factory(),
            population[i].individual,
            policy,
            config.fitness_mode,
            np.random.default_rng(int(seeds[i])),
            config.episodes_per_individual,
        )

    if executor is None:
        return [run(i) for i in range(len(population))]
    # map keeps individual order regardless of completion order
    return list(executor.map(run, range(len(population))))


def coevolve_generation(
    theta: np.ndarray,
    env_factory: Callable[[], Environment],
    config: TrainerConfig,
    buffer: Optional[ReplayBuffer],
    rng: np.random.Generator,
    policy: GaussianPolicy,
    plan: Optional[GroupingPlan] = None,
    generation: int = 0,
    on_subproblem: Optional[Callable[[int, np.ndarray], None]] = None,
) -> Tuple[np.ndarray, GenerationStats]:
    """
    One cooperative coevolution generation

    Subproblems are processed in plan order and each population is sampled
    around the theta already updated by the previous subproblem. Every
    trajectory is appended to the buffer.

    Args:
        theta: Context vector at the start of the generation
        env_factory: Builds a fresh environment per rollout
        config: Trainer configuration (pop size, sigma, rates, shaping, workers)
        buffer: Replay buffer receiving trajectories (None to discard)
        rng: Random stream
        policy: Architecture template
        plan: Grouping to use; drawn from config when None
        generation: Generation counter
        on_subproblem: Called with (stage, theta) after each subproblem update

    Returns:
        (theta', GenerationStats)
    """
    theta0 = np.asarray(theta, dtype=np.float64)
    if plan is None:
        plan = plan_generation(theta0.size, config, rng, generation, policy)
    if plan.dim != theta0.size:
        raise ContractViolationError(f"Plan covers {plan.dim} parameters, theta has {theta0.size}")

    stats = GenerationStats(generation=generation, m=plan.m, group_sizes=plan.group_sizes)
    current = theta0.copy()
    executor = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None

    try:
        for j, group in enumerate(plan.groups):
            population = sample_population(current, group, config.pop_size, config.sigma, rng)
            reports = _evaluate_population(population, env_factory, policy, config, rng, executor)

            steps = 0
            for report in reports:
                steps += len(report.trajectory)
                if buffer is not None:
                    buffer.extend(report.trajectory)

            raw = [r.fitness for r in reports]
            shaped = shape_fitness(raw, config.fitness_shaping)
            current = partial_gradient_update(current, group, population, shaped, config.es_lr, config.sigma)

            stats.subproblems.append(SubproblemStats(
                index=j + 1,
                size=int(np.asarray(group).size),
                best_fitness=float(np.max(raw)),
                mean_fitness=float(np.mean(raw)),
                env_steps=steps,
            ))
            stats.env_steps += steps
            logger.debug(
                f"Generation {generation} subproblem {j + 1}/{plan.m}: "
                f"size={np.asarray(group).size} best={np.max(raw):.3f} mean={np.mean(raw):.3f}"
            )
            if on_subproblem is not None:
                on_subproblem(j + 1, current.copy())
    finally:
        if executor is not None:
            executor.shutdown(wait=True)

    stats.update_norm = float(np.linalg.norm(current - theta0))
    return current, stats
