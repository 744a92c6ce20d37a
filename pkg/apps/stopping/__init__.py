from .rules import (
    CONTINUE,
    Budget,
    Composite,
    Discrepancy,
    OracleBest,
    StopDecision,
    StoppingRule,
    budget,
    discrepancy,
    oracle_best,
    replay,
    should_stop,
)

__all__ = [
    'CONTINUE',
    'Budget',
    'Composite',
    'Discrepancy',
    'OracleBest',
    'StopDecision',
    'StoppingRule',
    'budget',
    'discrepancy',
    'oracle_best',
    'replay',
    'should_stop',
]
