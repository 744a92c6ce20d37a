from .generators import (
    PROBLEMS,
    LinearProblem,
    NoisySample,
    add_noise,
    make_problem,
    problem_names,
    smooth_variant,
)

__all__ = [
    'PROBLEMS',
    'LinearProblem',
    'NoisySample',
    'add_noise',
    'make_problem',
    'problem_names',
    'smooth_variant',
]
