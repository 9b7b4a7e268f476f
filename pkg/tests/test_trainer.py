"""Integration tests for the training loop, evaluation and trace export"""

from pathlib import Path

import numpy as np
import pytest

from coerl.config import TrainerConfig
from coerl.envs import LQR, Pendulum, PointMass, QuadraticTask, make_env, uncontrolled_return
from coerl.errors import RejectedInputError
from coerl.nn import zeros_params
from coerl.policy import GaussianPolicy
from coerl.training import (
    CoERLTrainer,
    env_from_checkpoint,
    evaluate_policy,
    export_traces,
    make_checkpoint,
)
from coerl.utils.storage import RunStorage, read_checkpoint


def test_zero_generations_write_initial_checkpoint_only(tiny_config):
    result = CoERLTrainer(tiny_config.replace(total_generations=0)).train()
    storage = RunStorage(result.run_dir)
    assert [p.name for p in storage.list_checkpoints()] == ['ckpt_0.bin']
    assert storage.read_metrics() == []
    assert result.generations_completed == 0


def test_coerl_run_outputs(tiny_config):
    result = CoERLTrainer(tiny_config).train()
    storage = RunStorage(result.run_dir)
    rows = storage.read_metrics()

    assert [int(r['generation']) for r in rows] == [1, 2, 3]
    steps = [int(r['train_env_steps']) for r in rows]
    assert steps == sorted(steps)
    assert steps[-1] == result.train_env_steps
    for row in rows:
        assert int(row['m']) in (2, 3, 4)
        assert sum(int(s) for s in row['group_sizes'].split(';')) == result.theta.size
        assert int(row['rl_steps']) == 5

    # evaluation every second generation and at the end
    assert [r['eval_return_mean'] != '' for r in rows] == [False, True, True]
    assert result.eval_env_steps == 2 * 2 * 10

    names = [p.name for p in storage.list_checkpoints()]
    assert names == ['ckpt_0.bin', 'ckpt_2.bin', 'ckpt_3.bin']
    final = read_checkpoint(result.final_checkpoint)
    assert final.generation == 3
    np.testing.assert_array_equal(final.theta, result.theta)

    events = {e['event'] for e in storage.read_events()}
    assert {'run_start', 'grouping', 'generation', 'rl_phase', 'evaluation', 'checkpoint', 'run_end'} <= events


def test_budget_accounting_matches_buffer(tiny_config):
    trainer = CoERLTrainer(tiny_config.replace(mode='coes'))
    result = trainer.train()
    assert result.train_env_steps == len(trainer.buffer)


def test_same_seed_reproduces_run_byte_for_byte(tiny_config, tmp_path):
    first = CoERLTrainer(tiny_config.replace(output_dir=str(tmp_path / 'a'))).train()
    second = CoERLTrainer(tiny_config.replace(output_dir=str(tmp_path / 'b'))).train()
    assert first.metrics_path.read_bytes() == second.metrics_path.read_bytes()
    assert first.final_checkpoint.read_bytes() == second.final_checkpoint.read_bytes()


def test_worker_pool_reproduces_final_parameters(tiny_config, tmp_path):
    serial = CoERLTrainer(tiny_config.replace(output_dir=str(tmp_path / 'a'))).train()
    pooled = CoERLTrainer(tiny_config.replace(output_dir=str(tmp_path / 'b'), workers=3)).train()
    np.testing.assert_array_equal(serial.theta, pooled.theta)


def test_es_mode_is_a_restriction_of_coerl(tiny_config, tmp_path):
    es = CoERLTrainer(tiny_config.replace(mode='es', output_dir=str(tmp_path / 'es'))).train()
    restricted = CoERLTrainer(tiny_config.replace(
        mode='coerl', group_counts=(1,), rl_steps_per_generation=0, output_dir=str(tmp_path / 'coerl'),
    )).train()
    assert es.metrics_path.read_bytes() == restricted.metrics_path.read_bytes()


def test_sac_mode_collects_with_the_learner(tiny_config):
    config = tiny_config.replace(mode='sac', sac_episodes_per_generation=2)
    result = CoERLTrainer(config).train()
    rows = RunStorage(result.run_dir).read_metrics()
    assert [int(r['train_env_steps']) for r in rows] == [20, 40, 60]
    assert all(r['m'] == '' for r in rows)
    assert all(int(r['rl_steps']) == 5 for r in rows)


def test_rl_steps_default_to_collected_steps(tiny_config):
    config = tiny_config.replace(mode='essac', total_generations=1)
    config.rl_steps_per_generation = None
    result = CoERLTrainer(config).train()
    row = RunStorage(result.run_dir).read_metrics()[0]
    assert int(row['rl_steps']) == int(row['train_env_steps']) == 4 * 10


def test_step_budget_stops_early(tiny_config):
    config = tiny_config.replace(mode='coes', total_generations=50, max_env_steps=100)
    result = CoERLTrainer(config).train()
    assert result.generations_completed < 50
    assert result.train_env_steps >= 100
    storage = RunStorage(result.run_dir)
    assert storage.read_events('budget_exhausted')
    assert read_checkpoint(result.final_checkpoint).generation == result.generations_completed


def test_failure_leaves_last_completed_checkpoint(tiny_config, monkeypatch):
    import coerl.training.trainer as trainer_module

    real = trainer_module.coevolve_generation
    calls = []

    def flaky(*args, **kwargs):
        calls.append(1)
        if len(calls) == 2:
            raise RuntimeError('rollout worker died')
        return real(*args, **kwargs)

    monkeypatch.setattr(trainer_module, 'coevolve_generation', flaky)
    trainer = CoERLTrainer(tiny_config.replace(checkpoint_interval=10))
    with pytest.raises(RuntimeError):
        trainer.train()

    storage = RunStorage(Path(tiny_config.output_dir))
    assert [p.name for p in storage.list_checkpoints()] == ['ckpt_0.bin', 'ckpt_1.bin']
    np.testing.assert_array_equal(read_checkpoint(storage.run_dir / 'ckpt_1.bin').theta, trainer.theta)
    abort = storage.read_events('run_abort')
    assert abort[0]['generation'] == 1


@pytest.mark.slow
@pytest.mark.parametrize('seed', range(5))
def test_es_solves_the_quadratic_task(tmp_path, seed):
    """hidden (12,) gives (1+1)*12 + (12+1)*2 = 50 parameters"""
    config = TrainerConfig(
        env_name='quadratic',
        mode='es',
        total_generations=300,
        pop_size=100,
        sigma=0.1,
        es_lr=0.01,
        fitness_shaping='standardized',
        hidden_dims=(12,),
        quadratic_seed=seed,
        eval_interval=100,
        eval_episodes=1,
        checkpoint_interval=300,
        seed=seed,
        output_dir=str(tmp_path / f'seed{seed}'),
    )
    trainer = CoERLTrainer(config)
    psi_star = QuadraticTask(50, seed=seed).psi_star
    assert trainer.theta.size == 50
    initial = np.linalg.norm(trainer.theta - psi_star)
    result = trainer.train()
    assert np.linalg.norm(result.theta - psi_star) < 0.1 * initial


def test_evaluate_zero_policy_on_lqr():
    env = LQR(horizon=40)
    template = GaussianPolicy.create(2, 1, (8,), np.random.default_rng(0))
    policy = GaussianPolicy(zeros_params(template.spec), 1)
    checkpoint = make_checkpoint(policy, 'lqr', {'horizon': 40}, generation=0)

    stats = evaluate_policy(checkpoint, env, episodes=1, seed=9)
    reset_seed = int(np.random.default_rng(9).integers(0, 2 ** 31 - 1))
    x0 = env.reset(seed=reset_seed).internal
    assert stats.mean == pytest.approx(uncontrolled_return(env, x0), rel=1e-12)
    assert evaluate_policy(checkpoint, env, episodes=1, seed=9).mean == stats.mean


def test_evaluation_stats_are_ordered(tiny_config):
    result = CoERLTrainer(tiny_config).train()
    env = env_from_checkpoint(result.final_checkpoint)
    stats = evaluate_policy(result.final_checkpoint, env, episodes=5, seed=1)
    assert len(stats.returns) == 5
    assert stats.min <= stats.mean <= stats.max
    assert stats.env_steps == 5 * 10


def test_evaluate_rejects_mismatched_env(tiny_config):
    result = CoERLTrainer(tiny_config.replace(total_generations=0)).train()
    with pytest.raises(RejectedInputError):
        evaluate_policy(result.final_checkpoint, Pendulum(), episodes=1)


def test_subproblem_traces(tmp_path):
    config = TrainerConfig(
        env_name='pendulum', mode='coerl', total_generations=1, pop_size=3, sigma=0.1,
        horizon=15, hidden_dims=(6,), fixed_m=4, rl_steps_per_generation=2, batch_size=8,
        snapshot_generations=(1,), output_dir=str(tmp_path / 'run'),
    )
    result = CoERLTrainer(config).train()
    storage = RunStorage(result.run_dir)
    staged = [p for p in storage.list_checkpoints(1) if '_s' in p.stem]
    assert [p.name for p in staged] == ['ckpt_1_s1.bin', 'ckpt_1_s2.bin', 'ckpt_1_s3.bin', 'ckpt_1_s4.bin']

    env = env_from_checkpoint(staged[0])
    traces = export_traces(staged, env, seed=3)
    assert [t['stage'] for t in traces] == [1, 2, 3, 4]
    assert all(t['generation'] == 1 and t['length'] == 15 for t in traces)

    # replaying logged actions reproduces the logged states exactly
    for trace in traces:
        state = env.reset(seed=trace['reset_seed'])
        assert state.internal.tolist() == trace['internal_states'][0]
        for k, action in enumerate(trace['actions']):
            state, reward, _ = env.step(state, np.array(action))
            assert state.internal.tolist() == trace['internal_states'][k + 1]
            assert reward == trace['rewards'][k]


def test_single_checkpoint_trace(tiny_config):
    result = CoERLTrainer(tiny_config.replace(total_generations=0)).train()
    traces = export_traces([result.final_checkpoint], PointMass(horizon=10), seed=0)
    assert len(traces) == 1
    assert traces[0]['length'] <= 10
    assert len(traces[0]['observations']) == traces[0]['length'] + 1


def test_traces_reject_mixed_architectures(rng):
    a = make_checkpoint(GaussianPolicy.create(4, 2, (4,), rng), 'point_mass', {}, 0)
    b = make_checkpoint(GaussianPolicy.create(4, 2, (6,), rng), 'point_mass', {}, 0)
    with pytest.raises(RejectedInputError):
        export_traces([a, b], make_env('point_mass'))


if __name__ == '__main__':
    pytest.main([__file__])
