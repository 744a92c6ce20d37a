from .operators import (
    as_matrix,
    as_vector,
    dense_least_squares,
    gram_apply,
    matvec,
    orthonormalize_against,
)
from .tikhonov import TikhonovFactorization, tikhonov_factorize, tikhonov_solve_multi

__all__ = [
    'TikhonovFactorization',
    'as_matrix',
    'as_vector',
    'dense_least_squares',
    'gram_apply',
    'matvec',
    'orthonormalize_against',
    'tikhonov_factorize',
    'tikhonov_solve_multi',
]
