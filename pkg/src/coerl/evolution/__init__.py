"""Cooperative coevolution with partial-gradient updates"""

from .es_loop import (
    Perturbation,
    FitnessReport,
    SubproblemStats,
    GenerationStats,
    sample_population,
    evaluate_individual,
    shape_fitness,
    estimate_partial_gradient,
    partial_gradient_update,
    plan_generation,
    coevolve_generation,
)

__all__ = [
    'Perturbation', 'FitnessReport', 'SubproblemStats', 'GenerationStats',
    'sample_population', 'evaluate_individual', 'shape_fitness', 'estimate_partial_gradient',
    'partial_gradient_update', 'plan_generation', 'coevolve_generation',
]
