"""
Parameter grouping module
Splits the policy's flat parameter indices into disjoint subproblems
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ConfigurationError, RejectedInputError
from ..nn.mlp import MlpSpec, layer_slices

DEFAULT_GROUP_COUNTS = (2, 3, 4)


@dataclass(frozen=True)
class GroupingPlan:
    """A partition of range(dim) into ordered index groups I_1..I_m"""

    dim: int
    groups: Tuple[np.ndarray, ...]
    generation: int = 0
    seed: Optional[int] = None
    strategy: str = 'random'

    @property
    def m(self) -> int:
        return len(self.groups)

    @property
    def group_sizes(self) -> List[int]:
        return [int(g.size) for g in self.groups]

    def describe(self, full: bool = False) -> Dict[str, Any]:
        """
        Log record for the event stream

        Args:
            full: Include the complete index lists (debug)

        Returns:
            JSON-serializable dictionary
        """
        record = {
            'generation': self.generation,
            'dim': self.dim,
            'm': self.m,
            'group_sizes': self.group_sizes,
            'seed': self.seed,
            'strategy': self.strategy,
        }
        if full:
            record['groups'] = [g.tolist() for g in self.groups]
        return record


@dataclass(frozen=True)
class Violation:
    """One broken partition invariant"""

    kind: str  # 'overlap' | 'gap' | 'empty' | 'out_of_range'
    indices: Tuple[int, ...] = field(default=())
    groups: Tuple[int, ...] = field(default=())

    def __str__(self) -> str:
        return f"{self.kind}: indices={list(self.indices)} groups={list(self.groups)}"


def draw_group_count(rng: np.random.Generator, candidates: Sequence[int] = DEFAULT_GROUP_COUNTS) -> int:
    """
    Draw the number of subproblems m uniformly from the candidate set

    Args:
        rng: Random stream
        candidates: Allowed values of m

    Returns:
        m
    """
    candidates = list(candidates)
    if not candidates:
        raise ConfigurationError("Group-count candidate set is empty")
    if any(int(c) < 1 for c in candidates):
        raise ConfigurationError(f"Group counts must be >= 1, got {candidates}")
    return int(candidates[int(rng.integers(len(candidates)))])


def random_grouping(
    dim: int,
    m: int,
    rng: np.random.Generator,
    generation: int = 0,
    seed: Optional[int] = None,
) -> GroupingPlan:
    """
    Random partition: permute 0..dim-1 and cut into m near-equal chunks

    Earlier groups take the remainder, so sizes differ by at most one
    (dim=10, m=3 gives 4, 3, 3).

    Args:
        dim: Number of parameters
        m: Number of subproblems
        rng: Random stream
        generation: Generation counter stored on the plan
        seed: Seed recorded for the log

    Returns:
        GroupingPlan
    """
    if not 1 <= m <= dim:
        raise RejectedInputError(f"Need 1 <= m <= dim, got m={m}, dim={dim}")
    permutation = rng.permutation(dim)
    groups = tuple(np.sort(chunk) for chunk in np.array_split(permutation, m))
    return GroupingPlan(dim=dim, groups=groups, generation=generation, seed=seed)


def layer_grouping(spec: MlpSpec, generation: int = 0) -> GroupingPlan:
    """
    One subproblem per network layer (its weights and biases together)

    Args:
        spec: Network shape whose flat vector is being split
        generation: Generation counter stored on the plan

    Returns:
        GroupingPlan with m equal to the number of layers
    """
    groups = tuple(
        np.concatenate([np.arange(w.start, w.stop), np.arange(b.start, b.stop)])
        for w, b in layer_slices(spec)
    )
    return GroupingPlan(dim=spec.param_count, groups=groups, generation=generation, strategy='layer')


def validate(plan: GroupingPlan) -> List[Violation]:
    """
    Check the partition invariants

    Args:
        plan: Plan to check

    Returns:
        Every violation found (overlap, gap, empty group, out-of-range); empty when ok
    """
    violations = []
    owners: Dict[int, List[int]] = {}

    for j, group in enumerate(plan.groups):
        indices = np.asarray(group).ravel()
        if indices.size == 0:
            violations.append(Violation('empty', groups=(j,)))
            continue
        bad = indices[(indices < 0) | (indices >= plan.dim)]
        if bad.size:
            violations.append(Violation('out_of_range', tuple(int(i) for i in bad), (j,)))
        for i in indices.tolist():
            owners.setdefault(int(i), []).append(j)

    for i, groups in sorted(owners.items()):
        if len(groups) > 1:
            violations.append(Violation('overlap', (i,), tuple(groups)))

    missing = sorted(set(range(plan.dim)) - set(owners))
    if missing:
        violations.append(Violation('gap', tuple(missing)))

    return violations
