"""
Command-line entry point for CoERL
Subcommands: train, eval, export-traces, compare, show-config
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from .config import (
    ENV_NAMES,
    MODES,
    UNPUBLISHED_DEFAULTS,
    TrainerConfig,
    get_config_summary,
    validate_config,
)
from .envs import make_env
from .errors import CoERLError, RejectedInputError
from .training import (
    EXPERIMENTS,
    CoERLTrainer,
    env_from_checkpoint,
    evaluate_policy,
    export_traces,
    load_checkpoint,
    run_experiment,
)
from .utils.logger import setup_logger
from .utils.storage import RunStorage

logger = setup_logger(__name__)


def _unpublished_note() -> str:
    defaults = TrainerConfig()
    lines = ["Defaults chosen by this project rather than taken from published settings:"]
    for name in UNPUBLISHED_DEFAULTS:
        lines.append(f"  {name} = {getattr(defaults, name)}")
    return '\n'.join(lines)


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser"""
    parser = argparse.ArgumentParser(
        prog='coerl',
        description='Cooperative coevolutionary reinforcement learning',
        epilog=_unpublished_note(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    subparsers = parser.add_subparsers(dest='command', required=True)

    train_p = subparsers.add_parser('train', help='Run the training loop',
                                    epilog=_unpublished_note(),
                                    formatter_class=argparse.RawDescriptionHelpFormatter)
    train_p.add_argument('--config', type=Path, help='JSON file mirroring TrainerConfig fields')
    train_p.add_argument('--mode', choices=MODES)
    train_p.add_argument('--env', dest='env_name', choices=ENV_NAMES)
    train_p.add_argument('--seed', type=int)
    train_p.add_argument('--workers', type=int)
    train_p.add_argument('--generations', dest='total_generations', type=int)
    train_p.add_argument('--no-target-critics', action='store_true',
                         help='Compute soft targets with the online critics')
    train_p.add_argument('--fixed-m', type=int, help='Always use this many subproblems')
    train_p.add_argument('--out', type=Path, help='Run directory')

    eval_p = subparsers.add_parser('eval', help='Evaluate a checkpoint with deterministic actions')
    eval_p.add_argument('--checkpoint', type=Path, required=True)
    eval_p.add_argument('--env', choices=ENV_NAMES, help='Defaults to the environment stored in the checkpoint')
    eval_p.add_argument('--episodes', type=int, default=5)
    eval_p.add_argument('--seed', type=int, default=0)

    traces_p = subparsers.add_parser('export-traces', help='Write state-visitation traces for one generation')
    traces_p.add_argument('--run', type=Path, required=True)
    traces_p.add_argument('--generation', type=int, required=True)
    traces_p.add_argument('--seed', type=int, default=0)

    compare_p = subparsers.add_parser('compare', help='Train several modes on shared seeds and compare final returns')
    compare_p.add_argument('--experiment', choices=sorted(EXPERIMENTS), required=True)
    compare_p.add_argument('--out', type=Path, required=True, help='Parent directory of all runs')
    compare_p.add_argument('--seeds', type=int, nargs='+', help='Override the experiment seeds')
    compare_p.add_argument('--max-env-steps', type=int, help='Override the env-step budget')
    compare_p.add_argument('--eval-episodes', type=int, default=20)
    compare_p.add_argument('--workers', type=int)

    show_p = subparsers.add_parser('show-config', help='Print the resolved configuration')
    show_p.add_argument('--config', type=Path)

    return parser


def load_config(args: argparse.Namespace) -> TrainerConfig:
    """Config file values with command-line overrides applied"""
    config = TrainerConfig.from_json(args.config) if getattr(args, 'config', None) else TrainerConfig()
    overrides = {
        'mode': getattr(args, 'mode', None),
        'env_name': getattr(args, 'env_name', None),
        'seed': getattr(args, 'seed', None),
        'workers': getattr(args, 'workers', None),
        'total_generations': getattr(args, 'total_generations', None),
        'fixed_m': getattr(args, 'fixed_m', None),
        'output_dir': str(args.out) if getattr(args, 'out', None) else None,
    }
    if getattr(args, 'no_target_critics', False):
        overrides['use_target_critics'] = False
    return config.replace(**overrides)


def cmd_train(args: argparse.Namespace) -> int:
    config = load_config(args)
    validate_config(config)
    for key, value in get_config_summary(config).items():
        logger.info(f"  {key}: {value}")

    result = CoERLTrainer(config).train()
    logger.info("=" * 60)
    logger.info(f"Final checkpoint: {result.final_checkpoint}")
    logger.info(f"Metrics: {result.metrics_path}")
    logger.info("=" * 60)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    checkpoint = load_checkpoint(args.checkpoint)
    if args.env is None or args.env == checkpoint.header.get('env_name'):
        env = env_from_checkpoint(checkpoint)
    elif args.env == 'quadratic':
        raise RejectedInputError("The quadratic task can only be rebuilt from a quadratic checkpoint")
    else:
        env = make_env(args.env)
    stats = evaluate_policy(checkpoint, env, args.episodes, args.seed)
    print(json.dumps(stats.to_record(), indent=2))
    return 0


def cmd_export_traces(args: argparse.Namespace) -> int:
    storage = RunStorage(args.run)
    paths = storage.list_checkpoints(args.generation)
    if not paths:
        logger.error(f"No checkpoints for generation {args.generation} in {args.run}")
        return 1
    # Stage snapshots carry the per-subproblem behaviour; fall back to the end-of-generation file
    staged = [p for p in paths if '_s' in p.stem]
    env = env_from_checkpoint(paths[0])
    traces = export_traces(staged or paths, env, args.seed)
    storage.write_traces(traces)
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    experiment = EXPERIMENTS[args.experiment].with_budget(args.max_env_steps, args.seeds)
    result = run_experiment(experiment, args.out, eval_episodes=args.eval_episodes, workers=args.workers)
    print(json.dumps(result.to_record(), indent=2))
    return 0


def cmd_show_config(args: argparse.Namespace) -> int:
    config = load_config(args)
    validate_config(config)
    print(json.dumps(config.to_dict(), indent=2))
    return 0


COMMANDS = {
    'train': cmd_train,
    'eval': cmd_eval,
    'export-traces': cmd_export_traces,
    'compare': cmd_compare,
    'show-config': cmd_show_config,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        logger.info("Operation cancelled by user")
        return 130
    except CoERLError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 2
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        return 1


if __name__ == '__main__':
    sys.exit(main())
