from .cgne import cgne
from .direct import aggregate, aggregate_path, tikhonov, tikhonov_path
from .krylov import KrylovBasis, arnoldi_kr, lanczos_kr
from .rational_cg import rational_cg, rational_cg_complex_step
from .schedule import AlphaSchedule, as_schedule
from .trace import IterationState, SolverRun, SolverTrace, TraceEntry

__all__ = [
    'AlphaSchedule',
    'IterationState',
    'KrylovBasis',
    'SolverRun',
    'SolverTrace',
    'TraceEntry',
    'aggregate',
    'aggregate_path',
    'arnoldi_kr',
    'as_schedule',
    'cgne',
    'lanczos_kr',
    'rational_cg',
    'rational_cg_complex_step',
    'tikhonov',
    'tikhonov_path',
]
