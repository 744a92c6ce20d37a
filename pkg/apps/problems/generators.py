"""
Dense test problems from first-kind Fredholm integral equations.

Every generator discretizes its kernel with the midpoint rule on n cells
and returns the square matrix together with the sampled exact solution.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from core.exceptions import UnknownProblemError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinearProblem:
    """Forward matrix with exact solution and exact data."""
    name: str
    A: np.ndarray
    x_exact: np.ndarray
    y_exact: np.ndarray

    @property
    def size(self):
        return self.A.shape[1]


@dataclass(frozen=True)
class NoisySample:
    """Perturbed data with its noise level."""
    y_delta: np.ndarray
    delta_abs: float
    delta_rel: float
    seed: int = field(default=0)


def _midpoints(a, b, n):
    h = (b - a) / n
    return h, a + h * (np.arange(n) + 0.5)


# ============================================================================
# GENERATORS
# ============================================================================

def _deriv2(n):
    # Green's function of the second derivative on [0, 1].
    h, t = _midpoints(0.0, 1.0, n)
    s = t[:, np.newaxis]
    tt = t[np.newaxis, :]
    K = np.where(s <= tt, s * (tt - 1.0), tt * (s - 1.0))
    return h * K, t.copy()


def _shaw(n):
    h, t = _midpoints(-np.pi / 2, np.pi / 2, n)
    s = t[:, np.newaxis]
    tt = t[np.newaxis, :]
    # np.sinc(z) = sin(pi z) / (pi z), so this is sin(u)/u with u = pi (sin s + sin t)
    K = (np.cos(s) + np.cos(tt)) ** 2 * np.sinc(np.sin(s) + np.sin(tt)) ** 2
    x = 2.0 * np.exp(-6.0 * (t - 0.8) ** 2) + 1.0 * np.exp(-2.0 * (t + 0.5) ** 2)
    return h * K, x


def _phillips_shape(z):
    return np.where(np.abs(z) < 3.0, 1.0 + np.cos(np.pi * z / 3.0), 0.0)


def _phillips(n):
    h, t = _midpoints(-6.0, 6.0, n)
    K = _phillips_shape(t[:, np.newaxis] - t[np.newaxis, :])
    return h * K, _phillips_shape(t)


def _gravity(n, depth=0.25):
    h, t = _midpoints(0.0, 1.0, n)
    diff = t[:, np.newaxis] - t[np.newaxis, :]
    K = depth * (depth ** 2 + diff ** 2) ** -1.5
    x = np.sin(np.pi * t) + 0.5 * np.sin(2 * np.pi * t)
    return h * K, x


PROBLEMS = {
    'deriv2': {
        'builder': _deriv2,
        'even': False,
        'description': 'second-derivative Green kernel on [0,1]; x(t) = t',
    },
    'shaw': {
        'builder': _shaw,
        'even': True,
        'description': '1-D image restoration kernel on [-pi/2,pi/2]; two Gaussians',
    },
    'phillips': {
        'builder': _phillips,
        'even': True,
        'description': 'cosine-hat convolution on [-6,6]; x(t) = cosine hat',
    },
    'gravity': {
        'builder': _gravity,
        'even': False,
        'description': 'gravity surveying, depth 0.25 on [0,1]; x(t) = sin(pi t) + 0.5 sin(2 pi t)',
    },
}


def problem_names():
    return sorted(PROBLEMS)


def make_problem(name, n):
    """Build the named test problem of size n (deterministic)."""
    spec = PROBLEMS.get(name)
    if spec is None:
        raise UnknownProblemError(f'unknown problem {name!r}; choose from {", ".join(problem_names())}')
    n = int(n)
    if n < 4:
        raise UnknownProblemError(f'{name}: size must be at least 4, got {n}')
    if spec['even'] and n % 2:
        raise UnknownProblemError(f'{name}: size must be even, got {n}')

    A, x_exact = spec['builder'](n)
    logger.debug('built problem %s(%d)', name, n)
    return LinearProblem(name=name, A=A, x_exact=x_exact, y_exact=A @ x_exact)


def smooth_variant(p):
    """Replace the exact solution by A^T A x_exact (higher source condition)."""
    x_smooth = p.A.T @ (p.A @ p.x_exact)
    return replace(p, name=f'{p.name}-smooth', x_exact=x_smooth, y_exact=p.A @ x_smooth)


# ============================================================================
# NOISE
# ============================================================================

def add_noise(p, delta_rel, seed):
    """
    Add seeded Gaussian noise rescaled to relative level ``delta_rel``.

    The noise vector is scaled so that ||y_delta - y_exact|| equals
    delta_rel * ||y_exact|| exactly.
    """
    delta_rel = float(delta_rel)
    if delta_rel < 0:
        raise ValueError(f'delta_rel must be nonnegative, got {delta_rel}')

    delta_abs = delta_rel * np.linalg.norm(p.y_exact)
    if delta_rel == 0.0:
        return NoisySample(y_delta=p.y_exact.copy(), delta_abs=0.0, delta_rel=0.0, seed=int(seed))

    w = np.random.default_rng(seed).standard_normal(p.y_exact.shape[0])
    y_delta = p.y_exact + (delta_abs / np.linalg.norm(w)) * w
    return NoisySample(y_delta=y_delta, delta_abs=delta_abs, delta_rel=delta_rel, seed=int(seed))
