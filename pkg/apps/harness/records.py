"""
Run records and their csv / json serialization.
"""
import csv
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, fields

from core.exceptions import RatKrylError

logger = logging.getLogger(__name__)

HEADER = (
    'problem', 'size', 'method', 'delta', 'seed', 'stop_reason',
    'n_stop', 'error', 'residual', 'time_s', 'alpha_spec',
)


@dataclass(frozen=True)
class RunRecord:
    problem: str
    size: int
    method: str
    delta: float
    seed: int
    stop_reason: str
    n_stop: int
    error: float
    residual: float
    time_s: float
    alpha_spec: str

    def __post_init__(self):
        if self.n_stop < 1:
            raise ValueError(f'n_stop must be at least 1, got {self.n_stop}')
        for name in ('delta', 'error', 'residual', 'time_s'):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f'{name} must be finite, got {getattr(self, name)}')

    @property
    def cell_key(self):
        return (self.problem, self.size, self.method, self.delta, self.seed)

    def same_result(self, other):
        """Equality ignoring wall time."""
        mine, theirs = asdict(self), asdict(other)
        mine.pop('time_s')
        theirs.pop('time_s')
        return mine == theirs


@dataclass(frozen=True)
class TraceRow:
    """Residual and error of one iterate, for error/residual-vs-iteration plots."""
    problem: str
    size: int
    method: str
    delta: float
    seed: int
    n: int
    residual: float
    error: float

    @property
    def sort_key(self):
        return (self.problem, self.size, self.method, self.delta, self.seed, self.n)


TRACE_HEADER = tuple(f.name for f in fields(TraceRow))


_INT_FIELDS = {'size', 'seed', 'n_stop'}
_FLOAT_FIELDS = {'delta', 'error', 'residual', 'time_s'}


def _format(value):
    if isinstance(value, float):
        return format(value, '.17g')
    return str(value)


def _coerce(row):
    values = {}
    for f in fields(RunRecord):
        raw = row[f.name]
        if f.name in _INT_FIELDS:
            values[f.name] = int(raw)
        elif f.name in _FLOAT_FIELDS:
            values[f.name] = float(raw)
        else:
            values[f.name] = str(raw)
    return RunRecord(**values)


def _ensure_parent(path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


def emit(records, path, fmt='csv'):
    """
    Write records to ``path`` as csv (fixed header, 17 significant digits)
    or json (array of flat objects). Returns the path.
    """
    records = list(records)
    if not records:
        raise ValueError('no records to emit')
    if fmt not in ('csv', 'json'):
        raise ValueError(f'unknown output format {fmt!r}')

    try:
        _ensure_parent(path)
        with open(path, 'w', encoding='utf-8', newline='') as fh:
            if fmt == 'csv':
                writer = csv.writer(fh)
                writer.writerow(HEADER)
                for record in records:
                    writer.writerow([_format(getattr(record, name)) for name in HEADER])
            else:
                json.dump([asdict(record) for record in records], fh, indent=2)
                fh.write('\n')
    except OSError as exc:
        raise RatKrylError(f'cannot write {path}: {exc.strerror or exc}') from exc

    logger.info('wrote %d records to %s (%s)', len(records), path, fmt)
    return path


def emit_rates(points, fits, path, fmt='csv'):
    """
    Write rate-sweep data. csv: points at ``path`` and fitted slopes at
    ``<path>.slopes.csv``; json: one object with ``points`` and ``slopes``.
    Returns the list of written paths.
    """
    points, fits = list(points), list(fits)
    if not points:
        raise ValueError('no rate points to emit')
    try:
        _ensure_parent(path)
        if fmt == 'json':
            with open(path, 'w', encoding='utf-8') as fh:
                json.dump({'points': [asdict(p) for p in points], 'slopes': [asdict(f) for f in fits]}, fh, indent=2)
                fh.write('\n')
            written = [path]
        elif fmt == 'csv':
            slopes_path = f'{path}.slopes.csv'
            for target, rows in ((path, points), (slopes_path, fits)):
                names = [f.name for f in fields(rows[0])] if rows else []
                with open(target, 'w', encoding='utf-8', newline='') as fh:
                    writer = csv.writer(fh)
                    writer.writerow(names)
                    for row in rows:
                        writer.writerow([_format(getattr(row, name)) for name in names])
            written = [path, slopes_path]
        else:
            raise ValueError(f'unknown output format {fmt!r}')
    except OSError as exc:
        raise RatKrylError(f'cannot write {path}: {exc.strerror or exc}') from exc

    logger.info('wrote %d rate points and %d fits to %s', len(points), len(fits), ', '.join(written))
    return written


def emit_traces(rows, path, fmt='csv'):
    """Write per-iteration TraceRows as csv (TRACE_HEADER) or a json array."""
    rows = list(rows)
    if not rows:
        raise ValueError('no trace rows to emit')
    if fmt not in ('csv', 'json'):
        raise ValueError(f'unknown output format {fmt!r}')

    try:
        _ensure_parent(path)
        with open(path, 'w', encoding='utf-8', newline='') as fh:
            if fmt == 'csv':
                writer = csv.writer(fh)
                writer.writerow(TRACE_HEADER)
                for row in rows:
                    writer.writerow([_format(getattr(row, name)) for name in TRACE_HEADER])
            else:
                json.dump([asdict(row) for row in rows], fh, indent=2)
                fh.write('\n')
    except OSError as exc:
        raise RatKrylError(f'cannot write {path}: {exc.strerror or exc}') from exc

    logger.info('wrote %d trace rows to %s (%s)', len(rows), path, fmt)
    return path


def load_records(path, fmt=None):
    """Read records written by ``emit``; the format defaults to the file extension."""
    fmt = fmt or ('json' if os.fspath(path).endswith('.json') else 'csv')
    with open(path, encoding='utf-8', newline='') as fh:
        if fmt == 'json':
            rows = json.load(fh)
        else:
            reader = csv.DictReader(fh)
            if tuple(reader.fieldnames or ()) != HEADER:
                raise ValueError(f'unexpected csv header in {path}: {reader.fieldnames}')
            rows = list(reader)
    return [_coerce(row) for row in rows]
