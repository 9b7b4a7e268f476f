"""Random decomposition of the policy parameter vector"""

from .grouping import (
    DEFAULT_GROUP_COUNTS,
    GroupingPlan,
    Violation,
    draw_group_count,
    random_grouping,
    layer_grouping,
    validate,
)

__all__ = [
    'DEFAULT_GROUP_COUNTS', 'GroupingPlan', 'Violation', 'draw_group_count',
    'random_grouping', 'layer_grouping', 'validate',
]
