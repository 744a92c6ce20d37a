from .subspaces import (
    ExplicitBasis,
    detect_breakdown,
    effective_rank,
    explicit_basis,
    krylov_basis,
    lsq_over_subspace,
    rational_basis,
    subspace_condition,
)

__all__ = [
    'ExplicitBasis',
    'detect_breakdown',
    'effective_rank',
    'explicit_basis',
    'krylov_basis',
    'lsq_over_subspace',
    'rational_basis',
    'subspace_condition',
]
