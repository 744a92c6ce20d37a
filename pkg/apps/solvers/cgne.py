"""Conjugate gradients on the normal equations (CGLS form)."""
import logging

import numpy as np

from .trace import SolverRun

logger = logging.getLogger(__name__)


def cgne(A, y, stop, x_exact=None, keep_states=False):
    """
    CG on A^T A x = A^T y from x_0 = 0.

    Iterate n minimizes ||A x - y|| over the Krylov space K^n. The products
    with A^T A are split into A and A^T so the Gram matrix is never formed.
    """
    run = SolverRun('cgne', A, y, stop, x_exact=x_exact, keep_states=keep_states)
    A = run.A
    x = np.zeros(A.shape[1])

    if not np.any(run.ybar):
        logger.warning('cgne: A^T y = 0, returning x = 0')
        run.record(1, x)
        return run.finish('stagnation')

    # r is the normal-equation residual ybar - A^T A x
    r = run.ybar.copy()
    p = r.copy()
    rr = float(r @ r)

    for n in range(1, run.n_cap + 1):
        Ap = A @ p
        denom = float(Ap @ Ap)
        if denom <= 0.0 or run.tiny(denom, run.op_norm * float(p @ p)):
            if n == 1:
                run.record(1, x)
            return run.breakdown(n, 'in cgne: <A^T A p, p> vanished')

        step = rr / denom
        x = x + step * p
        r = r - step * (A.T @ Ap)
        if run.record(n, x, r=-r, p=p):
            break

        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return run.finish()
