"""
Experiment orchestration: one solver run per (problem, method, delta, seed)
cell, collected into RunRecords.
"""
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from apps.problems import add_noise, make_problem, smooth_variant
from apps.solvers import aggregate_path, cgne, lanczos_kr, rational_cg, rational_cg_complex_step, tikhonov_path
from apps.stopping import budget, discrepancy, oracle_best
from core.exceptions import RatKrylError

from .records import RunRecord, TraceRow

logger = logging.getLogger(__name__)


def _cgne(A, y, schedule, stop, x_exact):
    return cgne(A, y, stop, x_exact=x_exact)


METHODS = {
    'tikhonov': tikhonov_path,
    'cgne': _cgne,
    'aggregate': aggregate_path,
    'lanczos_kr': lanczos_kr,
    'rational_cg': rational_cg,
    'rational_cg_complex': rational_cg_complex_step,
}


def build_problem(config, smooth=None):
    problem = make_problem(config.problem_name, config.problem_size)
    smooth = config.smooth_solution if smooth is None else smooth
    return smooth_variant(problem) if smooth else problem


def stopping_rule(config, problem, sample):
    """Noise-free cells use the oracle rule, noisy ones the discrepancy principle."""
    if sample.delta_abs == 0.0:
        if config.oracle:
            return oracle_best(problem.x_exact, n_max=config.n_max)
        return budget(config.n_max)
    return discrepancy(sample.delta_abs, tau=config.tau, n_max=config.n_max)


def run_cell(config, problem, method, delta, seed, traces=None):
    """
    Run one solver on one noisy sample and summarize it as a RunRecord.

    When ``traces`` is a list, the per-iteration TraceRows are appended to it.
    """
    sample = add_noise(problem, delta, seed)
    schedule = config.schedule()
    stop = stopping_rule(config, problem, sample)
    solver = METHODS[method]
    alpha_spec = schedule.descriptor()

    started = time.perf_counter()
    try:
        trace = solver(problem.A, sample.y_delta, schedule, stop, x_exact=problem.x_exact)
    except (RatKrylError, ArithmeticError, np.linalg.LinAlgError) as exc:
        elapsed = time.perf_counter() - started
        logger.warning('%s on %s(delta=%g, seed=%d) failed: %s', method, problem.name, delta, seed, exc)
        return RunRecord(
            problem=problem.name,
            size=problem.size,
            method=method,
            delta=float(delta),
            seed=int(seed),
            stop_reason='breakdown',
            n_stop=1,
            error=float(np.linalg.norm(problem.x_exact)),
            residual=float(np.linalg.norm(sample.y_delta)),
            time_s=elapsed,
            alpha_spec=alpha_spec,
        )
    elapsed = time.perf_counter() - started

    x = trace.selected_x
    n_stop = trace.selected_index
    if method == 'aggregate':
        solves = trace.info.get('tikhonov_solves', trace.n_stop)
        alpha_spec = f'{alpha_spec};solves={solves};selected={n_stop}'
        n_stop = 1
    record = RunRecord(
        problem=problem.name,
        size=problem.size,
        method=method,
        delta=float(delta),
        seed=int(seed),
        stop_reason=trace.stop_reason,
        n_stop=int(n_stop),
        error=float(np.linalg.norm(x - problem.x_exact)),
        residual=float(np.linalg.norm(problem.A @ x - sample.y_delta)),
        time_s=elapsed,
        alpha_spec=alpha_spec,
    )
    logger.info(
        '%s %s(%d) delta=%g seed=%d: %s at n=%d, error=%.3e',
        method, problem.name, problem.size, delta, seed, record.stop_reason, record.n_stop, record.error,
    )
    if traces is not None:
        traces.extend(trace_rows(problem, method, delta, seed, trace))
    return record


def trace_rows(problem, method, delta, seed, trace):
    """
    One TraceRow per iterate. Aggregation over k alphas is placed at n = 2k,
    next to the mixed-space iterate with the same k rational elements.
    """
    step = 2 if method == 'aggregate' else 1
    return [
        TraceRow(
            problem=problem.name,
            size=problem.size,
            method=method,
            delta=float(delta),
            seed=int(seed),
            n=entry.n * step,
            residual=float(entry.residual),
            error=float(entry.error),
        )
        for entry in trace.entries
    ]


def experiment_cells(config):
    return [
        (method, delta, seed)
        for method in config.methods
        for delta in config.deltas
        for seed in config.cell_seeds(delta)
    ]


def run_experiment(config, problem=None, traces=None):
    """
    Run every cell of ``config``. Independent cells go to a thread pool when
    ``config.workers > 1``; the result is sorted by cell key either way.

    Pass a list as ``traces`` to collect per-iteration rows, sorted the same way.
    """
    problem = problem or build_problem(config)
    cells = experiment_cells(config)
    logger.info('running %d cells on %s(%d)', len(cells), problem.name, problem.size)

    def run(cell):
        return run_cell(config, problem, *cell, traces=traces)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(run, cells))
    else:
        records = [run(cell) for cell in cells]
    if traces is not None:
        traces.sort(key=lambda row: row.sort_key)
    return sorted(records, key=lambda record: record.cell_key)


# ============================================================================
# CONVERGENCE RATES
# ============================================================================

@dataclass(frozen=True)
class RatePoint:
    variant: str
    method: str
    delta: float
    error: float
    seeds: int


@dataclass(frozen=True)
class RateFit:
    variant: str
    method: str
    slope: float
    intercept: float
    degenerate: bool


def fit_rate(deltas, errors):
    """
    Least-squares slope of log(error) against log(delta).

    Returns ``(slope, intercept, degenerate)``; a fit with constant errors
    (or fewer than two usable points) is degenerate with slope 0.
    """
    deltas = np.asarray(deltas, dtype=float)
    errors = np.asarray(errors, dtype=float)
    usable = (deltas > 0) & (errors > 0) & np.isfinite(errors)
    if np.count_nonzero(usable) < 2:
        logger.warning('rate fit: fewer than two usable points')
        return 0.0, 0.0, True

    log_d = np.log(deltas[usable])
    log_e = np.log(errors[usable])
    if np.ptp(log_e) == 0.0 or np.ptp(log_d) == 0.0:
        logger.warning('rate fit degenerate: all errors equal')
        return 0.0, float(np.mean(log_e)), True
    slope, intercept = np.polyfit(log_d, log_e, 1)
    return float(slope), float(intercept), False


def _geometric_mean(values):
    values = np.asarray(values, dtype=float)
    return float(np.exp(np.mean(np.log(values))))


def rate_sweep(config):
    """
    Error versus noise level for the default and the smooth exact solution.

    Returns ``(points, fits, records)``: per-level geometric means over the
    seeds, the fitted slope per (variant, method) and the raw records.
    """
    points, fits, all_records = [], [], []
    for variant, smooth in (('default', False), ('smooth', True)):
        problem = build_problem(config, smooth=smooth)
        records = run_experiment(config, problem=problem)
        all_records.extend(records)
        for method in config.methods:
            deltas, errors = [], []
            for delta in sorted(set(config.deltas)):
                errs = [r.error for r in records if r.method == method and r.delta == delta]
                err = _geometric_mean(errs) if all(e > 0 for e in errs) else 0.0
                points.append(RatePoint(variant, method, delta, err, len(errs)))
                deltas.append(delta)
                errors.append(err)
            slope, intercept, degenerate = fit_rate(deltas, errors)
            fits.append(RateFit(variant, method, slope, intercept, degenerate))
            logger.info('rate %s/%s: slope %.3f%s', variant, method, slope, ' (degenerate)' if degenerate else '')
    return points, fits, all_records
