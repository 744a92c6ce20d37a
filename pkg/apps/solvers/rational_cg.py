"""
Rational CG: the CG-like short recursion for the least-squares iterates
over the mixed rational Krylov space KR^n.
"""
import logging

import numpy as np

from apps.linops import tikhonov_factorize
from core.exceptions import FactorizationError

from .schedule import as_schedule
from .trace import SolverRun

logger = logging.getLogger(__name__)


def _rational_direction(run, F, p, r, Ap):
    """p_n = zeta s + t with (s, t) = (A^T A + alpha I)^{-1} (p, r)."""
    s, t = F.solve_multi([p, r])
    As = run.A @ s
    Ar = run.A @ r
    denom = float(Ap @ As)
    if run.tiny(denom, np.linalg.norm(Ap) * np.linalg.norm(As)):
        return None
    zeta = -float(Ar @ As) / denom
    return zeta * s + t


def _rational_direction_complex(run, F, p, r, Ap):
    """Same direction up to a real factor, from one complex solve."""
    u = F.solve(p + 1j * r)
    w = np.dot(Ap, run.A @ np.conj(u))
    direction = np.imag(w * u)
    if not np.any(direction):
        return None
    return direction


def _unit(v):
    """v / ||v||, or None when v is zero or not finite."""
    norm = np.linalg.norm(v)
    if norm == 0.0 or not np.isfinite(norm):
        return None
    return v / norm


def _run(method, A, y, alphas, stop, x_exact, keep_states, rational_direction):
    schedule = as_schedule(alphas)
    run = SolverRun(method, A, y, stop, x_exact=x_exact, keep_states=keep_states)
    A, ybar = run.A, run.ybar
    if not np.any(ybar):
        raise ValueError('A^T y vanishes; the Krylov space is empty')

    Aybar = A @ ybar
    x = (float(ybar @ ybar) / float(Aybar @ Aybar)) * ybar
    r = A.T @ (A @ x) - ybar
    # directions are kept at unit length; the iterates do not depend on their scale
    p = _unit(x)
    Ap = A @ p
    Ap_sq = float(Ap @ Ap)
    p_old = Ap_old = Ap_old_sq = None

    if run.record(1, x, r=r, p=p):
        return run.finish()

    for n in range(2, run.n_cap + 1):
        if n % 2 == 0:
            try:
                F = tikhonov_factorize(A, schedule.alpha(n // 2), gram=run.gram)
            except IndexError:
                return run.finish('budget')
            except FactorizationError as exc:
                return run.breakdown(n, f'({exc})')
            direction = rational_direction(run, F, p, r, Ap)
            if direction is None:
                return run.breakdown(n, 'in the rational direction update')
            p_old, Ap_old, Ap_old_sq = p, Ap, Ap_sq
        else:
            Ar = A @ r
            direction = (
                -(float(Ar @ Ap) / Ap_sq) * p
                - (float(Ar @ Ap_old) / Ap_old_sq) * p_old
                + r
            )

        p = _unit(direction)
        if p is None:
            return run.breakdown(n, '(search direction vanished)')
        Ap = A @ p
        AAp = A.T @ Ap
        if run.tiny(np.linalg.norm(AAp), run.op_norm):
            return run.breakdown(n, '(A^T A p vanished)')
        Ap_sq = float(Ap @ Ap)
        # squared norm: squared tolerance
        if run.tiny(Ap_sq, run.guard_tol * run.op_norm):
            return run.breakdown(n, '(||A p||^2 below the guard)')

        eta = float(r @ p) / Ap_sq
        x = x - eta * p
        r = r - eta * AAp
        if run.record(n, x, r=r, p=p, p_old=p_old):
            break
    return run.finish()


def rational_cg(A, y, alphas, stop, x_exact=None, keep_states=False):
    """
    Each rational step solves with (A^T A + alpha_k I) for the two
    right-hand sides p and r using a single factorization.
    """
    return _run('rational_cg', A, y, alphas, stop, x_exact, keep_states, _rational_direction)


def rational_cg_complex_step(A, y, alphas, stop, x_exact=None, keep_states=False):
    """Rational CG with one complex right-hand side per rational step."""
    return _run(
        'rational_cg_complex', A, y, alphas, stop, x_exact, keep_states, _rational_direction_complex
    )
