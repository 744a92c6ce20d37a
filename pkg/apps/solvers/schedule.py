"""Regularization-parameter schedules alpha_1, alpha_2, ..."""
from collections.abc import Sequence

from core.conf import ratkryl_setting


class AlphaSchedule:
    """
    Strictly positive, pairwise distinct regularization parameters.

    Kinds:
      * ``paper_default``: alpha_i = 10**(-i-1)
      * ``geometric``:     alpha_i = a * q**(s - i)
      * ``explicit``:      a finite list given by the caller
    """

    KINDS = ('paper_default', 'geometric', 'explicit')

    def __init__(self, kind='paper_default', a=None, q=None, s=None, values=None):
        if kind not in self.KINDS:
            raise ValueError(f'unknown alpha schedule kind {kind!r}')
        self.kind = kind
        self.a = float(ratkryl_setting('DEFAULT_GEOMETRIC_A') if a is None else a)
        self.q = float(ratkryl_setting('DEFAULT_GEOMETRIC_Q') if q is None else q)
        self.s = int(ratkryl_setting('DEFAULT_GEOMETRIC_S') if s is None else s)
        self._values = tuple(float(v) for v in values) if values is not None else None

        if kind == 'geometric':
            if not self.a > 0:
                raise ValueError(f'geometric schedule needs a > 0, got {self.a}')
            if not self.q > 1:
                raise ValueError(f'geometric schedule needs q > 1, got {self.q}')
        if kind == 'explicit':
            if not self._values:
                raise ValueError('explicit schedule needs at least one value')
            if any(not v > 0 for v in self._values):
                raise ValueError('alpha values must be strictly positive')
            if len(set(self._values)) != len(self._values):
                raise ValueError('alpha values must be pairwise distinct')

    @classmethod
    def paper_default(cls):
        return cls('paper_default')

    @classmethod
    def geometric(cls, a, q, s):
        return cls('geometric', a=a, q=q, s=s)

    @classmethod
    def explicit(cls, values):
        return cls('explicit', values=values)

    def __len__(self):
        # Generated kinds are unbounded.
        return len(self._values) if self.kind == 'explicit' else 10 ** 9

    def __repr__(self):
        return f'AlphaSchedule({self.descriptor()})'

    def alpha(self, i):
        """Return alpha_i (1-based)."""
        if i < 1:
            raise IndexError('alpha schedule is 1-based')
        if self.kind == 'paper_default':
            return 10.0 ** (-i - 1)
        if self.kind == 'geometric':
            return self.a * self.q ** (self.s - i)
        if i > len(self._values):
            raise IndexError(f'explicit alpha schedule has only {len(self._values)} values')
        return self._values[i - 1]

    def values(self, count):
        return [self.alpha(i) for i in range(1, count + 1)]

    def descriptor(self):
        if self.kind == 'paper_default':
            return 'paper_default'
        if self.kind == 'geometric':
            return f'geometric(a={self.a:g},q={self.q:g},s={self.s})'
        return 'explicit(' + ','.join(f'{v:g}' for v in self._values) + ')'


def as_schedule(alphas):
    """Accept an AlphaSchedule, a single positive number or a sequence of them."""
    if isinstance(alphas, AlphaSchedule):
        return alphas
    if alphas is None:
        return AlphaSchedule.paper_default()
    if isinstance(alphas, Sequence) or hasattr(alphas, '__iter__'):
        return AlphaSchedule.explicit(list(alphas))
    return AlphaSchedule.explicit([alphas])
