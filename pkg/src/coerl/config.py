"""
Configuration management for CoERL
Loads settings from environment variables and defines the trainer configuration
"""

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from dotenv import load_dotenv

from .errors import ConfigurationError

# Load environment variables from .env file
load_dotenv()

# Base Directories
BASE_DIR = Path(__file__).parent.parent.parent
OUTPUT_DIR = Path(os.getenv('COERL_OUTPUT_DIR', BASE_DIR / 'runs'))

# Run defaults
DEFAULT_SEED = int(os.getenv('COERL_SEED', '0'))
DEFAULT_WORKERS = int(os.getenv('COERL_WORKERS', '1'))
SHOW_PROGRESS = os.getenv('COERL_SHOW_PROGRESS', 'true').lower() == 'true'

# Logging Settings
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_FILE = Path(os.getenv('COERL_LOG_FILE', BASE_DIR / 'logs' / 'coerl.log'))

MODES = ('coerl', 'coes', 'essac', 'es', 'sac')
ENV_NAMES = ('point_mass', 'pendulum', 'lqr', 'quadratic')
GROUPING_STRATEGIES = ('random', 'layer')
FITNESS_SHAPINGS = ('raw', 'centered', 'standardized')
ACTION_MODES = ('stochastic', 'deterministic')
OPTIMIZERS = ('adam', 'sgd')

# Fields that are ours rather than published values; `--help` marks them.
UNPUBLISHED_DEFAULTS = (
    'sigma', 'alpha_s', 'batch_size', 'buffer_capacity', 'horizon',
    'polyak_tau', 'hidden_dims', 'eval_interval', 'eval_episodes',
)


@dataclass
class TrainerConfig:
    """Every hyperparameter of the training loop plus ablation switches and paths"""

    env_name: str = 'point_mass'
    total_generations: int = 100
    pop_size: int = 6
    sigma: float = 1.0
    es_lr: float = 1e-3
    lr_actor: float = 1e-3
    lr_critic: float = 1e-3
    alpha_s: float = 0.2
    gamma: float = 0.99
    group_counts: Tuple[int, ...] = (2, 3, 4)
    fixed_m: Optional[int] = None
    grouping_strategy: str = 'random'
    buffer_capacity: int = 100_000
    batch_size: int = 256
    rl_steps_per_generation: Optional[int] = None  # None: one RL step per env step collected
    mode: str = 'coerl'
    seed: int = DEFAULT_SEED
    output_dir: str = str(OUTPUT_DIR / 'default')

    hidden_dims: Tuple[int, ...] = (64, 64)
    activation: str = 'relu'
    polyak_tau: float = 0.005
    use_target_critics: bool = True
    optimizer: str = 'adam'
    fitness_shaping: str = 'raw'
    fitness_mode: str = 'stochastic'
    episodes_per_individual: int = 1
    horizon: Optional[int] = None
    quadratic_seed: int = 0
    eval_interval: int = 5
    eval_episodes: int = 5
    checkpoint_interval: int = 10
    max_env_steps: Optional[int] = None
    sac_episodes_per_generation: int = 18
    snapshot_generations: Tuple[int, ...] = ()
    debug_groups: bool = False
    workers: int = DEFAULT_WORKERS

    def __post_init__(self):
        self.group_counts = tuple(int(m) for m in self.group_counts)
        self.hidden_dims = tuple(int(h) for h in self.hidden_dims)
        self.snapshot_generations = tuple(int(g) for g in self.snapshot_generations)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrainerConfig':
        """
        Build a config from a dictionary whose keys mirror field names

        Args:
            data: Field values; unknown keys are rejected

        Returns:
            TrainerConfig instance
        """
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigurationError(f"Unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: Path) -> 'TrainerConfig':
        """Load a config from a JSON file"""
        with open(path, 'r', encoding='utf-8') as f:
            return cls.from_dict(json.load(f))

    def replace(self, **overrides: Any) -> 'TrainerConfig':
        """Return a copy with the non-None overrides applied"""
        data = asdict(self)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return TrainerConfig.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, tuple):
                data[key] = list(value)
        return data

    def config_hash(self) -> str:
        """Short SHA-256 over the canonical JSON form; the output location is not part of it"""
        data = self.to_dict()
        data.pop('output_dir')
        canonical = json.dumps(data, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:16]

    @property
    def runs_rl(self) -> bool:
        return self.mode in ('coerl', 'essac', 'sac')

    @property
    def runs_evolution(self) -> bool:
        return self.mode != 'sac'

    @property
    def effective_group_counts(self) -> Tuple[int, ...]:
        """Candidate subproblem counts after mode and override resolution"""
        if self.mode in ('es', 'essac'):
            return (1,)
        if self.fixed_m is not None:
            return (self.fixed_m,)
        return self.group_counts


def validate_config(config: TrainerConfig) -> bool:
    """
    Validate a trainer configuration

    Args:
        config: Configuration to check

    Returns:
        True when valid

    Raises:
        ConfigurationError: listing every invalid field
    """
    problems = []

    if config.mode not in MODES:
        problems.append(f"mode must be one of {MODES}, got {config.mode!r}")
    if config.env_name not in ENV_NAMES:
        problems.append(f"env_name must be one of {ENV_NAMES}, got {config.env_name!r}")
    if config.total_generations < 0:
        problems.append("total_generations must be >= 0")

    if config.runs_evolution:
        if config.pop_size < 2:
            problems.append("pop_size must be >= 2")
        if not config.sigma > 0:
            problems.append("sigma must be > 0")
        if not config.es_lr > 0:
            problems.append("es_lr must be > 0")
        if not config.group_counts or any(m < 1 for m in config.group_counts):
            problems.append("group_counts must be a nonempty set of counts >= 1")
        if config.fixed_m is not None and config.fixed_m < 1:
            problems.append("fixed_m must be >= 1")
        if config.episodes_per_individual < 1:
            problems.append("episodes_per_individual must be >= 1")

    if config.runs_rl:
        if not config.lr_actor > 0 or not config.lr_critic > 0:
            problems.append("lr_actor and lr_critic must be > 0")
        if config.batch_size < 1:
            problems.append("batch_size must be >= 1")
        if config.rl_steps_per_generation is not None and config.rl_steps_per_generation < 0:
            problems.append("rl_steps_per_generation must be >= 0")

    if not 0 <= config.gamma < 1:
        problems.append("gamma must lie in [0, 1)")
    if config.alpha_s < 0:
        problems.append("alpha_s must be >= 0")
    if not 0 < config.polyak_tau <= 1:
        problems.append("polyak_tau must lie in (0, 1]")
    if config.buffer_capacity < 1:
        problems.append("buffer_capacity must be >= 1")
    if not config.hidden_dims or any(h < 1 for h in config.hidden_dims):
        problems.append("hidden_dims must be a nonempty list of counts >= 1")
    if config.activation not in ('relu', 'tanh'):
        problems.append("activation must be relu or tanh")
    if config.grouping_strategy not in GROUPING_STRATEGIES:
        problems.append(f"grouping_strategy must be one of {GROUPING_STRATEGIES}")
    if config.fitness_shaping not in FITNESS_SHAPINGS:
        problems.append(f"fitness_shaping must be one of {FITNESS_SHAPINGS}")
    if config.fitness_mode not in ACTION_MODES:
        problems.append(f"fitness_mode must be one of {ACTION_MODES}")
    if config.optimizer not in OPTIMIZERS:
        problems.append(f"optimizer must be one of {OPTIMIZERS}")
    if config.horizon is not None and config.horizon < 1:
        problems.append("horizon must be >= 1")
    if config.eval_interval < 1 or config.eval_episodes < 1:
        problems.append("eval_interval and eval_episodes must be >= 1")
    if config.checkpoint_interval < 1:
        problems.append("checkpoint_interval must be >= 1")
    if config.sac_episodes_per_generation < 1:
        problems.append("sac_episodes_per_generation must be >= 1")
    if config.workers < 1:
        problems.append("workers must be >= 1")

    if problems:
        raise ConfigurationError("Invalid configuration: " + "; ".join(problems))

    return True


def get_config_summary(config: TrainerConfig) -> Dict[str, Any]:
    """Return a dictionary with the settings worth printing at startup"""
    return {
        'mode': config.mode,
        'env': config.env_name,
        'generations': config.total_generations,
        'pop_size': config.pop_size,
        'sigma': config.sigma,
        'group_counts': list(config.effective_group_counts),
        'grouping': config.grouping_strategy,
        'fitness_shaping': config.fitness_shaping,
        'target_critics': config.use_target_critics,
        'hidden_dims': list(config.hidden_dims),
        'seed': config.seed,
        'workers': config.workers,
        'output_dir': config.output_dir,
        'config_hash': config.config_hash(),
    }
