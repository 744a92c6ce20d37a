"""Exception hierarchy shared by the ratkryl apps."""


class RatKrylError(Exception):
    """Base class for every error raised by the project."""


class DimensionMismatchError(RatKrylError, ValueError):
    """Operand shapes do not fit together."""

    def __init__(self, expected, got, what='operand'):
        self.expected = expected
        self.got = got
        super().__init__(f'{what}: expected dimension {expected}, got {got}')


class FactorizationError(RatKrylError):
    """Cholesky factorization of (A^T A + alpha I) failed."""

    def __init__(self, alpha, pivot_index, message=None):
        self.alpha = alpha
        self.pivot_index = pivot_index
        super().__init__(
            message or f'factorization failed for alpha={alpha:.3e} at pivot {pivot_index}'
        )


class NearSingularError(RatKrylError):
    """Least-squares matrix is rank deficient below tolerance."""

    def __init__(self, pivot_ratio, column=None, message=None):
        self.pivot_ratio = pivot_ratio
        self.column = column
        super().__init__(
            message or f'near-singular system: pivot ratio {pivot_ratio:.3e} at column {column}'
        )


class GramianSingularError(NearSingularError):
    """Aggregation Gramian is near singular; names the most collinear pair."""

    def __init__(self, pivot_ratio, columns):
        self.columns = columns
        i, j = columns
        super().__init__(
            pivot_ratio,
            column=j,
            message=(
                f'aggregation Gramian near singular (pivot ratio {pivot_ratio:.3e}); '
                f'most collinear columns: {i} and {j}'
            ),
        )


class BreakdownError(RatKrylError):
    """The mixed rational Krylov space stopped growing."""

    def __init__(self, step, norm_ratio=0.0):
        self.step = step
        self.norm_ratio = norm_ratio
        super().__init__(f'breakdown at step {step} (relative norm {norm_ratio:.3e})')


class UnknownProblemError(RatKrylError, ValueError):
    """Requested test problem does not exist or has an invalid size."""


class ConfigError(RatKrylError):
    """Experiment configuration is invalid.

    ``errors`` maps dotted config keys to lists of messages.
    """

    def __init__(self, errors):
        self.errors = errors
        lines = [f'{key}: {msg}' for key, msgs in errors.items() for msg in msgs]
        super().__init__('; '.join(lines))
