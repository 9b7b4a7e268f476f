"""Unit tests for the cooperative coevolution loop"""

import time

import numpy as np
import pytest

from coerl.config import TrainerConfig
from coerl.decomposition import random_grouping
from coerl.envs import LQR, Pendulum, PointMass, QuadraticTask, uncontrolled_return
from coerl.errors import ConfigurationError, ContractViolationError, EvaluationError
from coerl.evolution import (
    FitnessReport,
    Perturbation,
    coevolve_generation,
    estimate_partial_gradient,
    evaluate_individual,
    partial_gradient_update,
    plan_generation,
    sample_population,
    shape_fitness,
)
from coerl.learning import ReplayBuffer
from coerl.nn import zeros_params
from coerl.policy import GaussianPolicy, sample_actions

from tests.helpers import ConstantRewardEnv, ExplodingEnv


def zero_policy(state_dim: int, action_dim: int, hidden=(4,)) -> GaussianPolicy:
    template = GaussianPolicy.create(state_dim, action_dim, hidden, np.random.default_rng(0))
    return GaussianPolicy(zeros_params(template.spec), action_dim)


def test_vanishing_noise_keeps_individuals_at_theta(rng):
    theta = rng.standard_normal(8)
    population = sample_population(theta, np.arange(8), 6, 1e-12, rng)
    for p in population:
        np.testing.assert_allclose(p.individual, theta, atol=1e-10)


def test_population_only_moves_the_group(rng):
    theta = np.zeros(10)
    group = np.array([1, 4, 7])
    for p in sample_population(theta, group, 6, 1.0, rng):
        outside = np.delete(p.individual, group)
        assert np.all(outside == 0.0)
        np.testing.assert_array_equal(p.individual[group], p.epsilon)


def test_noise_sample_mean_is_centered(rng):
    population = sample_population(np.zeros(3), np.arange(3), 10_000, 1.0, rng)
    mean = np.mean([p.epsilon for p in population], axis=0)
    assert np.all(np.abs(mean) < 3.0 / np.sqrt(10_000))


@pytest.mark.parametrize('mu, sigma', [(1, 1.0), (6, 0.0), (6, -0.5)])
def test_invalid_population_settings_rejected(rng, mu, sigma):
    with pytest.raises(ConfigurationError):
        sample_population(np.zeros(4), np.arange(4), mu, sigma, rng)


def test_zero_reward_env_fitness(rng):
    env = ConstantRewardEnv(horizon=7, reward=0.0)
    policy = GaussianPolicy.create(1, 1, (4,), rng)
    report = evaluate_individual(env, policy.theta, policy, 'stochastic', rng)
    assert report.fitness == 0.0
    assert len(report.trajectory) == 7
    assert report.episode_len == 7


def test_lqr_zero_policy_fitness_is_uncontrolled_cost():
    env = LQR(horizon=50)
    policy = zero_policy(2, 1)
    report = evaluate_individual(env, policy.theta, policy, 'deterministic', np.random.default_rng(3))

    seed = int(np.random.default_rng(3).integers(0, 2 ** 31 - 1))
    x0 = env.reset(seed=seed).internal
    assert report.fitness == pytest.approx(uncontrolled_return(env, x0), rel=1e-12)


def test_one_step_env(rng):
    env = LQR(horizon=1)
    policy = GaussianPolicy.create(2, 1, (4,), rng)
    report = evaluate_individual(env, policy.theta, policy, 'stochastic', rng)
    assert len(report.trajectory) == 1
    assert report.fitness == report.trajectory[0].r


def test_multiple_episodes_average(rng):
    env = ConstantRewardEnv(horizon=4, reward=-1.0)
    policy = GaussianPolicy.create(1, 1, (4,), rng)
    report = evaluate_individual(env, policy.theta, policy, 'stochastic', rng, episodes=3)
    assert report.fitness == pytest.approx(-4.0)
    assert len(report.trajectory) == 12
    assert report.episode_lengths == [4, 4, 4]
    assert report.episode_returns == [-4.0, -4.0, -4.0]
    assert report.episode_len == 12
    assert sum(report.episode_returns) == sum(t.r for t in report.trajectory)


def test_fitness_report_lengths_must_cover_the_trajectory(rng):
    policy = zero_policy(1, 1)
    report = evaluate_individual(ConstantRewardEnv(horizon=3), policy.theta, policy, 'deterministic', rng)
    with pytest.raises(ContractViolationError):
        FitnessReport(report.trajectory, [0.0], [2])
    with pytest.raises(ContractViolationError):
        FitnessReport(report.trajectory, [0.0, 0.0], [3])


def test_non_finite_state_raises_with_step_index(rng):
    env = ExplodingEnv(horizon=10)
    policy = GaussianPolicy.create(1, 1, (4,), rng)
    with pytest.raises(EvaluationError) as info:
        evaluate_individual(env, policy.theta, policy, 'deterministic', rng)
    assert info.value.step_index == 3


def test_antithetic_equal_fitness_cancels():
    eps = np.array([0.4, -1.1])
    perturbations = [Perturbation(eps, np.zeros(2)), Perturbation(-eps, np.zeros(2))]
    theta = np.array([1.0, 2.0, 3.0])
    updated = partial_gradient_update(theta, np.array([0, 2]), perturbations, [5.0, 5.0], 0.1, 0.5)
    np.testing.assert_allclose(updated, theta, atol=1e-15)


def test_update_arithmetic_by_hand():
    perturbations = [Perturbation(np.array([1.0]), np.zeros(1)), Perturbation(np.array([-1.0]), np.zeros(1))]
    updated = partial_gradient_update(np.zeros(1), np.array([0]), perturbations, [3.0, 1.0], 1.0, 1.0)
    assert updated[0] == pytest.approx(1.0, abs=1e-15)


def test_update_leaves_complement_untouched(rng):
    theta = rng.standard_normal(6)
    group = np.array([0, 5])
    population = sample_population(theta, group, 4, 0.5, rng)
    updated = partial_gradient_update(theta, group, population, rng.standard_normal(4), 0.1, 0.5)
    np.testing.assert_array_equal(np.delete(updated, group), np.delete(theta, group))
    assert not np.array_equal(updated[group], theta[group])


def test_update_rejects_mismatched_reduction(rng):
    population = sample_population(np.zeros(3), np.arange(3), 4, 1.0, rng)
    with pytest.raises(ContractViolationError):
        estimate_partial_gradient(population, [1.0, 2.0], 1.0)
    with pytest.raises(ContractViolationError):
        partial_gradient_update(np.zeros(3), np.arange(2), population, np.zeros(4), 0.1, 1.0)


def test_estimate_aligns_with_analytic_gradient():
    cosines = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        task = QuadraticTask(20, seed=100 + seed)
        theta = np.zeros(20)
        population = sample_population(theta, np.arange(20), 200, 0.1, rng)
        fitness = shape_fitness([task.fitness(p.individual) for p in population], 'centered')
        estimate = estimate_partial_gradient(population, fitness, 0.1)
        analytic = task.gradient(theta)
        cosines.append(estimate @ analytic / (np.linalg.norm(estimate) * np.linalg.norm(analytic)))
    assert np.mean(cosines) > 0.9


def test_constant_fitness_is_a_zero_mean_random_walk():
    """E||delta||^2 = alpha^2 c^2 d / (mu sigma^2) when every fitness equals c"""
    rng = np.random.default_rng(8)
    d, mu, sigma, alpha, c = 10, 6, 0.5, 0.1, 2.0
    deltas = []
    for _ in range(4000):
        population = sample_population(np.zeros(d), np.arange(d), mu, sigma, rng)
        deltas.append(partial_gradient_update(np.zeros(d), np.arange(d), population, [c] * mu, alpha, sigma))
    deltas = np.array(deltas)
    expected = alpha ** 2 * c ** 2 * d / (mu * sigma ** 2)
    assert np.mean(np.sum(deltas ** 2, axis=1)) == pytest.approx(expected, rel=0.08)
    assert np.all(np.abs(deltas.mean(axis=0)) < 5 * np.sqrt(expected / d / 4000))


def test_shape_fitness_modes():
    f = [1.0, 2.0, 3.0]
    np.testing.assert_array_equal(shape_fitness(f, 'raw'), f)
    np.testing.assert_allclose(shape_fitness(f, 'centered'), [-1.0, 0.0, 1.0])
    standardized = shape_fitness(f, 'standardized')
    assert standardized.mean() == pytest.approx(0.0)
    assert standardized.std() == pytest.approx(1.0)
    assert np.all(shape_fitness([4.0, 4.0], 'standardized') == 0.0)
    with pytest.raises(ConfigurationError):
        shape_fitness(f, 'ranked')


def test_es_modes_plan_a_single_group(rng):
    config = TrainerConfig(mode='es')
    plan = plan_generation(30, config, rng, generation=1)
    assert plan.m == 1
    assert plan.groups[0].tolist() == list(range(30))


def test_fixed_m_overrides_candidates(rng):
    config = TrainerConfig(fixed_m=4)
    assert {plan_generation(40, config, rng, 1).m for _ in range(10)} == {4}


def quadratic_setup(hidden):
    policy = GaussianPolicy.create(1, 1, hidden, np.random.default_rng(1))
    dim = policy.theta.size
    return policy, (lambda: QuadraticTask(dim, seed=5))


def test_each_index_updated_by_exactly_one_subproblem():
    policy, env_factory = quadratic_setup((125,))
    assert policy.theta.size == 502
    config = TrainerConfig(pop_size=4, sigma=0.1, es_lr=0.01, fitness_shaping='standardized')
    rng = np.random.default_rng(17)
    theta = policy.theta.copy()

    for generation in range(100):
        plan = plan_generation(theta.size, config, rng, generation)
        snapshots = []
        theta_next, stats = coevolve_generation(
            theta, env_factory, config, None, rng, policy, plan=plan, generation=generation,
            on_subproblem=lambda stage, t: snapshots.append(t),
        )
        assert len(snapshots) == plan.m
        previous = theta
        touched = np.zeros(theta.size, dtype=int)
        for group, snapshot in zip(plan.groups, snapshots):
            changed = np.flatnonzero(snapshot != previous)
            assert set(changed.tolist()) <= set(group.tolist())
            touched[group] += 1
            previous = snapshot
        assert np.all(touched == 1)
        np.testing.assert_array_equal(previous, theta_next)
        theta = theta_next


def test_generation_step_bookkeeping():
    rng = np.random.default_rng(4)
    env_factory = lambda: PointMass(horizon=6)
    policy = GaussianPolicy.create(4, 2, (8,), rng)
    config = TrainerConfig(pop_size=5, sigma=0.1, horizon=6)
    buffer = ReplayBuffer(10_000, 4, 2)

    plan = random_grouping(policy.theta.size, 3, rng)
    _, stats = coevolve_generation(policy.theta, env_factory, config, buffer, rng, policy, plan=plan)
    assert stats.env_steps == 3 * 5 * 6
    assert sum(s.env_steps for s in stats.subproblems) == stats.env_steps
    assert len(buffer) == stats.env_steps
    assert stats.m == 3
    assert stats.update_norm > 0


def test_single_group_generation_is_plain_es():
    rng = np.random.default_rng(6)
    policy, env_factory = quadratic_setup((4,))
    config = TrainerConfig(mode='es', pop_size=6, sigma=0.1, es_lr=0.01)
    theta, stats = coevolve_generation(policy.theta, env_factory, config, None, rng, policy)
    assert stats.m == 1
    assert stats.group_sizes == [policy.theta.size]


def test_plan_dimension_mismatch_rejected(rng):
    policy, env_factory = quadratic_setup((4,))
    plan = random_grouping(policy.theta.size + 1, 2, rng)
    with pytest.raises(ContractViolationError):
        coevolve_generation(policy.theta, env_factory, TrainerConfig(), None, rng, policy, plan=plan)


def test_plans_are_redrawn_independently_each_generation():
    """Pairs share a group at the rate implied by m alone, with no memory between generations"""
    rng = np.random.default_rng(11)
    config = TrainerConfig()
    dim, generations = 12, 3000
    together = np.empty((generations, dim, dim), dtype=bool)
    counts = []
    for generation in range(generations):
        plan = plan_generation(dim, config, rng, generation)
        labels = np.empty(dim, dtype=int)
        for j, group in enumerate(plan.groups):
            labels[group] = j
        together[generation] = labels[:, None] == labels[None, :]
        counts.append(plan.m)

    # equal group sizes: P(i, j cogrouped | m) = (dim / m - 1) / (dim - 1)
    expected = np.mean([(dim / m - 1) / (dim - 1) for m in counts])
    pairs = np.triu_indices(dim, 1)
    rate = together.mean(axis=0)[pairs]
    assert np.all(np.abs(rate - expected) < 0.05)

    joint = (together[1:] & together[:-1]).mean(axis=0)[pairs]
    assert np.all(np.abs(joint - rate ** 2) < 0.03)


@pytest.mark.slow
def test_update_arithmetic_scales_linearly():
    rng = np.random.default_rng(0)
    fitnesses = rng.standard_normal(6)
    timings = {}
    for dim in (1_000, 10_000, 100_000):
        theta = rng.standard_normal(dim)
        group = np.arange(dim)
        best = np.inf
        for _ in range(5):
            start = time.perf_counter()
            population = sample_population(theta, group, 6, 0.1, rng)
            partial_gradient_update(theta, group, population, fitnesses, 0.01, 0.1)
            best = min(best, time.perf_counter() - start)
        timings[dim] = best
    assert timings[10_000] <= 3.0 * 10 * timings[1_000]
    assert timings[100_000] <= 3.0 * 10 * timings[10_000]


def deterministic_actions(policy: GaussianPolicy, states: np.ndarray) -> np.ndarray:
    actions, _, _ = sample_actions(policy, states, noise=np.zeros((len(states), policy.action_dim)))
    return actions[:, 0]


@pytest.mark.slow
def test_subproblem_update_keeps_behaviour_closer_than_full_perturbation():
    """
    Linear pendulum policy: 8 parameters, 4 of which feed the log-std head.
    Each trial updates every group of an m=4 plan separately from the same theta
    and compares against random full-vector directions of the same norm.
    """
    rng = np.random.default_rng(3)
    policy = GaussianPolicy.create(3, 1, (), rng)
    states = np.array([Pendulum().reset(seed=s).observation for s in range(200)])
    base = deterministic_actions(policy, states)

    def divergence(theta):
        return float(np.mean(np.abs(deterministic_actions(policy.with_theta(theta), states) - base)))

    subproblem, full = [], []
    for _ in range(100):
        plan = random_grouping(policy.theta.size, 4, rng)
        for group in plan.groups:
            population = sample_population(policy.theta, group, 6, 0.1, rng)
            fitnesses = [
                evaluate_individual(Pendulum(horizon=50), p.individual, policy, 'deterministic', rng).fitness
                for p in population
            ]
            updated = partial_gradient_update(
                policy.theta, group, population, shape_fitness(fitnesses, 'standardized'), 0.01, 0.1
            )
            norm = np.linalg.norm(updated - policy.theta)
            subproblem.append(divergence(updated))

            directions = rng.standard_normal((20, policy.theta.size))
            directions *= norm / np.linalg.norm(directions, axis=1, keepdims=True)
            full.append(np.mean([divergence(policy.theta + d) for d in directions]))

    assert np.mean(subproblem) < np.mean(full)


def test_worker_pool_matches_serial_run():
    policy = GaussianPolicy.create(4, 2, (8,), np.random.default_rng(2))
    env_factory = lambda: PointMass(horizon=8)
    results = []
    for workers in (1, 3):
        rng = np.random.default_rng(21)
        buffer = ReplayBuffer(10_000, 4, 2)
        config = TrainerConfig(pop_size=6, sigma=0.1, horizon=8, workers=workers)
        theta, _ = coevolve_generation(policy.theta, env_factory, config, buffer, rng, policy)
        results.append((theta, buffer.states[:len(buffer)].copy()))
    np.testing.assert_array_equal(results[0][0], results[1][0])
    np.testing.assert_array_equal(results[0][1], results[1][1])


if __name__ == '__main__':
    pytest.main([__file__])
