"""
Experiment configuration: flat ``key = value`` files with dotted keys.
"""
import logging
from dataclasses import dataclass

from apps.solvers import AlphaSchedule
from core.exceptions import ConfigError

logger = logging.getLogger(__name__)

KNOWN_KEYS = (
    'problem.name',
    'problem.size',
    'methods',
    'alpha.kind',
    'alpha.a',
    'alpha.q',
    'alpha.s',
    'noise.delta_rel',
    'noise.seeds',
    'stopping.tau',
    'stopping.n_max',
    'stopping.oracle',
    'smooth_solution',
    'output.path',
    'output.format',
    'output.traces',
    'run.workers',
    'run.strict',
)

METHOD_CHOICES = ('tikhonov', 'cgne', 'aggregate', 'lanczos_kr', 'rational_cg', 'rational_cg_complex')


@dataclass(frozen=True)
class ExperimentConfig:
    problem_name: str
    problem_size: int
    methods: tuple
    alpha_kind: str = 'paper_default'
    alpha_a: float = 0.1
    alpha_q: float = 10.0
    alpha_s: int = 0
    deltas: tuple = (0.0,)
    seeds: tuple = ()
    tau: float = 1.01
    n_max: int = 200
    oracle: bool = True
    smooth_solution: bool = False
    output_path: str = ''
    output_format: str = 'csv'
    traces_path: str = ''
    workers: int = 1
    strict: bool = False

    def schedule(self):
        if self.alpha_kind == 'geometric':
            return AlphaSchedule.geometric(self.alpha_a, self.alpha_q, self.alpha_s)
        return AlphaSchedule.paper_default()

    def cell_seeds(self, delta):
        """Seeds to run at noise level ``delta``; noise-free data needs only one."""
        if delta == 0.0:
            return self.seeds[:1] or (0,)
        return self.seeds


def parse_config_text(text, source='<config>'):
    """
    Parse ``key = value`` lines. ``#`` starts a comment, blank lines are
    skipped. Returns a dict of dotted key to raw string value.
    """
    values = {}
    errors = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        key = key.strip()
        if not sep or not key:
            errors.setdefault(f'line {lineno}', []).append(f'expected "key = value" in {source}')
            continue
        values[key] = value.strip()
    if errors:
        raise ConfigError(errors)
    return values


def apply_overrides(values, overrides):
    """Apply ``key=value`` strings from the command line on top of ``values``."""
    merged = dict(values)
    errors = {}
    for item in overrides or ():
        key, sep, value = item.partition('=')
        key = key.strip()
        if not sep or not key:
            errors.setdefault('override', []).append(f'expected key=value, got {item!r}')
            continue
        merged[key] = value.strip()
    if errors:
        raise ConfigError(errors)
    return merged


def check_known_keys(values):
    unknown = sorted(set(values) - set(KNOWN_KEYS))
    if unknown:
        raise ConfigError({key: ['unknown configuration key'] for key in unknown})


def read_config(path, overrides=None):
    """Read a config file, apply overrides and reject unknown keys."""
    try:
        with open(path, encoding='utf-8') as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError({'config': [f'cannot read {path}: {exc.strerror or exc}']}) from exc
    values = apply_overrides(parse_config_text(text, source=str(path)), overrides)
    check_known_keys(values)
    logger.debug('config %s: %s', path, values)
    return values
