"""
Run storage module
Handles the run directory: event log, metrics table and checkpoint files
"""

import csv
import json
import re
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ..errors import RejectedInputError
from .logger import setup_logger

logger = setup_logger(__name__)

CHECKPOINT_MAGIC = b'COERLCK1'
CHECKPOINT_PATTERN = re.compile(r'^ckpt_(\d+)(?:_s(\d+))?\.bin$')

# Fixed column order of metrics.csv
METRICS_COLUMNS = (
    'generation',
    'm',
    'group_sizes',
    'train_env_steps',
    'eval_env_steps',
    'best_fitness',
    'mean_fitness',
    'update_norm',
    'rl_steps',
    'critic_loss1',
    'critic_loss2',
    'actor_objective',
    'entropy',
    'buffer_size',
    'eval_return_mean',
    'eval_return_std',
)


@dataclass
class Checkpoint:
    """A policy snapshot: JSON header plus the flat parameter vector"""

    header: Dict[str, Any]
    theta: np.ndarray

    @property
    def generation(self) -> int:
        return int(self.header.get('generation', 0))

    @property
    def stage(self) -> int:
        return int(self.header.get('stage', 0))


def write_checkpoint(path: Path, checkpoint: Checkpoint) -> Path:
    """
    Write a checkpoint file

    Layout: magic, uint32 LE header length, UTF-8 JSON header,
    then theta as little-endian float64.

    Args:
        path: Destination file
        checkpoint: Header and parameters to store

    Returns:
        The written path
    """
    header = dict(checkpoint.header)
    header['n_params'] = int(checkpoint.theta.size)
    header_bytes = json.dumps(header, sort_keys=True).encode('utf-8')
    body = np.ascontiguousarray(checkpoint.theta, dtype='<f8').tobytes()

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack('<I', len(header_bytes)))
        f.write(header_bytes)
        f.write(body)
    return path


def read_checkpoint(path: Path) -> Checkpoint:
    """
    Read a checkpoint file written by write_checkpoint

    Args:
        path: Checkpoint file

    Returns:
        Loaded checkpoint

    Raises:
        RejectedInputError: on a bad magic or truncated body
    """
    with open(path, 'rb') as f:
        data = f.read()

    if not data.startswith(CHECKPOINT_MAGIC):
        raise RejectedInputError(f"{path} is not a CoERL checkpoint")

    offset = len(CHECKPOINT_MAGIC)
    (header_len,) = struct.unpack_from('<I', data, offset)
    offset += 4
    header = json.loads(data[offset:offset + header_len].decode('utf-8'))
    offset += header_len

    theta = np.frombuffer(data[offset:], dtype='<f8').astype(np.float64)
    if theta.size != header.get('n_params', theta.size):
        raise RejectedInputError(
            f"{path}: header declares {header['n_params']} parameters, body holds {theta.size}"
        )
    return Checkpoint(header=header, theta=theta)


def checkpoint_name(generation: int, stage: Optional[int] = None) -> str:
    """File name of an end-of-generation or post-subproblem snapshot"""
    if stage is None:
        return f"ckpt_{generation}.bin"
    return f"ckpt_{generation}_s{stage}.bin"


class RunStorage:
    """Manages the files of one training run"""

    def __init__(self, run_dir: Path):
        """
        Initialize the RunStorage

        Args:
            run_dir: Directory holding all outputs of the run
        """
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.metrics_path = self.run_dir / 'metrics.csv'
        self.events_path = self.run_dir / 'events.jsonl'
        self.traces_path = self.run_dir / 'traces.jsonl'

    def reset(self) -> None:
        """Start a fresh metrics table and event log"""
        with open(self.metrics_path, 'w', encoding='utf-8', newline='') as f:
            csv.writer(f, lineterminator='\n').writerow(METRICS_COLUMNS)
        self.events_path.write_text('', encoding='utf-8')

    def append_event(self, event: str, payload: Dict[str, Any]) -> None:
        """
        Append one record to events.jsonl

        Args:
            event: Event type
            payload: JSON-serializable fields
        """
        record = {'event': event, **payload}
        with open(self.events_path, 'a', encoding='utf-8') as f:
            f.write(json.dumps(record, sort_keys=True) + '\n')

    def append_metrics(self, row: Dict[str, Any]) -> None:
        """
        Append one generation row to metrics.csv

        Missing columns are written empty; floats use repr so reruns compare byte-for-byte.
        """
        values = []
        for column in METRICS_COLUMNS:
            value = row.get(column)
            if value is None:
                values.append('')
            elif isinstance(value, float):
                values.append(repr(value))
            else:
                values.append(str(value))
        with open(self.metrics_path, 'a', encoding='utf-8', newline='') as f:
            csv.writer(f, lineterminator='\n').writerow(values)

    def read_metrics(self) -> List[Dict[str, str]]:
        """Read metrics.csv back as a list of rows"""
        with open(self.metrics_path, 'r', encoding='utf-8', newline='') as f:
            return list(csv.DictReader(f))

    def read_events(self, event: Optional[str] = None) -> List[Dict[str, Any]]:
        """Read events.jsonl, optionally filtered by event type"""
        records = []
        with open(self.events_path, 'r', encoding='utf-8') as f:
            for line in f:
                if line.strip():
                    record = json.loads(line)
                    if event is None or record['event'] == event:
                        records.append(record)
        return records

    def save_checkpoint(self, checkpoint: Checkpoint, stage: Optional[int] = None) -> Path:
        """Save a snapshot under its canonical name"""
        path = self.run_dir / checkpoint_name(checkpoint.generation, stage)
        write_checkpoint(path, checkpoint)
        logger.debug(f"Saved checkpoint: {path}")
        return path

    def list_checkpoints(self, generation: Optional[int] = None) -> List[Path]:
        """
        List checkpoint files ordered by (generation, stage)

        Args:
            generation: Restrict to one generation

        Returns:
            Sorted checkpoint paths; end-of-generation files sort before stage files
        """
        found = []
        for path in self.run_dir.glob('ckpt_*.bin'):
            match = CHECKPOINT_PATTERN.match(path.name)
            if not match:
                continue
            gen = int(match.group(1))
            stage = int(match.group(2)) if match.group(2) else 0
            if generation is None or gen == generation:
                found.append((gen, stage, path))
        return [path for _, _, path in sorted(found)]

    def write_traces(self, traces: Sequence[Dict[str, Any]]) -> Path:
        """Write state-visitation traces, one JSON object per line"""
        with open(self.traces_path, 'w', encoding='utf-8') as f:
            for trace in traces:
                f.write(json.dumps(trace) + '\n')
        logger.info(f"Wrote {len(traces)} traces to {self.traces_path}")
        return self.traces_path
