import csv
import json
import os
import re
import tempfile
from dataclasses import replace
from io import StringIO

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from apps.problems import make_problem
from core.exceptions import ConfigError, RatKrylError

from .config import apply_overrides, check_known_keys, parse_config_text
from .forms import RateSweepForm, build_config
from .records import HEADER, TRACE_HEADER, RunRecord, emit, emit_rates, load_records
from .services import RateFit, RatePoint, fit_rate, rate_sweep, run_experiment

BASE_VALUES = {
    'problem.name': 'phillips',
    'problem.size': '64',
    'methods': 'cgne',
    'noise.delta_rel': '0',
}


def _config(**values):
    merged = dict(BASE_VALUES)
    merged.update(values)
    return build_config(merged)


def _record(**overrides):
    values = dict(
        problem='phillips', size=64, method='rational_cg', delta=0.01, seed=3,
        stop_reason='discrepancy', n_stop=2, error=0.123456789012345678,
        residual=1.0 / 3.0, time_s=0.015, alpha_spec='paper_default',
    )
    values.update(overrides)
    return RunRecord(**values)


class ConfigParsingTests(SimpleTestCase):

    def test_comments_and_blank_lines(self):
        values = parse_config_text(
            '# experiment\n\nproblem.name = shaw  # inline\nproblem.size=32\n'
        )
        self.assertEqual(values, {'problem.name': 'shaw', 'problem.size': '32'})

    def test_malformed_line(self):
        with self.assertRaises(ConfigError) as ctx:
            parse_config_text('problem.name shaw\n')
        self.assertIn('line 1', ctx.exception.errors)

    def test_overrides_win(self):
        values = apply_overrides({'stopping.tau': '1.01'}, ['stopping.tau=1.1', 'methods = cgne'])
        self.assertEqual(values['stopping.tau'], '1.1')
        self.assertEqual(values['methods'], 'cgne')

    def test_unknown_key(self):
        with self.assertRaises(ConfigError) as ctx:
            check_known_keys({'problem.name': 'shaw', 'solver.speed': 'fast'})
        self.assertEqual(list(ctx.exception.errors), ['solver.speed'])


class ExperimentConfigFormTests(SimpleTestCase):

    def test_defaults(self):
        config = _config()
        self.assertEqual(config.problem_name, 'phillips')
        self.assertEqual(config.problem_size, 64)
        self.assertEqual(config.methods, ('cgne',))
        self.assertEqual(config.tau, 1.01)
        self.assertEqual(config.n_max, 200)
        self.assertTrue(config.oracle)
        self.assertFalse(config.smooth_solution)
        self.assertEqual(config.schedule().descriptor(), 'paper_default')

    def test_full_config(self):
        config = _config(**{
            'methods': 'rational_cg, lanczos_kr',
            'alpha.kind': 'geometric', 'alpha.q': '2', 'alpha.s': '-4',
            'noise.delta_rel': '0.01,0.001', 'noise.seeds': '1,2',
            'stopping.tau': '1.1', 'stopping.n_max': '50', 'stopping.oracle': 'false',
            'smooth_solution': 'yes', 'output.format': 'json', 'run.workers': '2',
        })
        self.assertEqual(config.methods, ('rational_cg', 'lanczos_kr'))
        self.assertEqual(config.deltas, (0.01, 0.001))
        self.assertEqual(config.seeds, (1, 2))
        self.assertFalse(config.oracle)
        self.assertTrue(config.smooth_solution)
        self.assertAlmostEqual(config.schedule().alpha(1), 0.1 * 2.0 ** -5)
        self.assertEqual((config.output_format, config.workers, config.n_max), ('json', 2, 50))

    def test_errors_carry_dotted_keys(self):
        with self.assertRaises(ConfigError) as ctx:
            _config(**{'stopping.tau': '1.0', 'methods': 'gmres', 'problem.size': '2'})
        self.assertEqual(set(ctx.exception.errors), {'stopping.tau', 'methods', 'problem.size'})

    def test_seeds_required_for_noisy_cells(self):
        with self.assertRaises(ConfigError) as ctx:
            _config(**{'noise.delta_rel': '0.01'})
        self.assertIn('noise.seeds', ctx.exception.errors)

    def test_negative_noise_level(self):
        with self.assertRaises(ConfigError) as ctx:
            _config(**{'noise.delta_rel': '-0.1', 'noise.seeds': '1'})
        self.assertIn('noise.delta_rel', ctx.exception.errors)

    def test_odd_size_for_symmetric_problem(self):
        with self.assertRaises(ConfigError) as ctx:
            _config(**{'problem.size': '63'})
        self.assertIn('problem.size', ctx.exception.errors)

    def test_bad_boolean(self):
        with self.assertRaises(ConfigError) as ctx:
            _config(**{'run.strict': 'maybe'})
        self.assertIn('run.strict', ctx.exception.errors)

    def test_missing_required(self):
        with self.assertRaises(ConfigError) as ctx:
            build_config({'methods': 'cgne'})
        self.assertIn('problem.name', ctx.exception.errors)
        self.assertIn('problem.size', ctx.exception.errors)


class RateSweepFormTests(SimpleTestCase):

    def _values(self, deltas, seeds):
        return dict(BASE_VALUES, **{'noise.delta_rel': deltas, 'noise.seeds': seeds})

    def test_valid(self):
        config = build_config(self._values('1e-1,1e-2,1e-3,1e-4', '1,2,3'), RateSweepForm)
        self.assertEqual(len(config.deltas), 4)

    def test_too_few_levels(self):
        with self.assertRaises(ConfigError) as ctx:
            build_config(self._values('1e-1,1e-2,1e-3', '1,2,3'), RateSweepForm)
        self.assertIn('noise.delta_rel', ctx.exception.errors)

    def test_narrow_span(self):
        with self.assertRaises(ConfigError) as ctx:
            build_config(self._values('0.1,0.05,0.03,0.02', '1,2,3'), RateSweepForm)
        self.assertIn('noise.delta_rel', ctx.exception.errors)

    def test_too_few_seeds(self):
        with self.assertRaises(ConfigError) as ctx:
            build_config(self._values('1e-1,1e-2,1e-3,1e-4', '1,2'), RateSweepForm)
        self.assertIn('noise.seeds', ctx.exception.errors)


class EmitTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_one_record_csv(self):
        path = emit([_record()], os.path.join(self.tmp.name, 'out', 'records.csv'))
        with open(path, newline='') as fh:
            rows = list(csv.reader(fh))
        self.assertEqual(len(rows), 2)
        self.assertEqual(tuple(rows[0]), HEADER)
        self.assertTrue(all(len(row) == 11 for row in rows))

    def test_csv_round_trip_is_exact(self):
        records = [_record(), _record(method='cgne', n_stop=4, residual=2.0 ** -40)]
        path = emit(records, os.path.join(self.tmp.name, 'records.csv'))
        self.assertEqual(load_records(path), records)

    def test_json_round_trip(self):
        records = [_record(), _record(seed=4, stop_reason='breakdown')]
        path = emit(records, os.path.join(self.tmp.name, 'records.json'), fmt='json')
        with open(path) as fh:
            payload = json.load(fh)
        self.assertEqual(set(payload[0]), set(HEADER))
        self.assertEqual(load_records(path), records)

    def test_empty(self):
        with self.assertRaises(ValueError):
            emit([], os.path.join(self.tmp.name, 'records.csv'))

    def test_unwritable_path(self):
        blocker = os.path.join(self.tmp.name, 'file')
        with open(blocker, 'w') as fh:
            fh.write('x')
        with self.assertRaises(RatKrylError):
            emit([_record()], os.path.join(blocker, 'records.csv'))

    def test_record_invariants(self):
        with self.assertRaises(ValueError):
            _record(n_stop=0)
        with self.assertRaises(ValueError):
            _record(error=float('nan'))

    def test_rates_csv_writes_two_files(self):
        points = [RatePoint('default', 'cgne', 0.01, 0.2, 3)]
        fits = [RateFit('default', 'cgne', 0.5, -1.0, False)]
        written = emit_rates(points, fits, os.path.join(self.tmp.name, 'rates.csv'))
        self.assertEqual(len(written), 2)
        self.assertTrue(written[1].endswith('.slopes.csv'))
        self.assertTrue(all(os.path.exists(path) for path in written))


class FitRateTests(SimpleTestCase):

    def test_exact_line(self):
        deltas = np.geomspace(1e-4, 1e-1, 4)
        slope, _, degenerate = fit_rate(deltas, deltas)
        self.assertAlmostEqual(slope, 1.0, delta=1e-6)
        self.assertFalse(degenerate)

    def test_two_thirds(self):
        deltas = np.geomspace(1e-4, 1e-1, 4)
        slope, _, _ = fit_rate(deltas, deltas ** (2.0 / 3.0))
        self.assertAlmostEqual(slope, 2.0 / 3.0, delta=1e-6)

    def test_constant_errors(self):
        slope, _, degenerate = fit_rate([1e-3, 1e-2, 1e-1, 1.0], [0.5] * 4)
        self.assertEqual(slope, 0.0)
        self.assertTrue(degenerate)


class RunExperimentTests(SimpleTestCase):

    def test_noise_free_single_cell(self):
        records = run_experiment(_config())
        self.assertEqual(len(records), 1)
        record = records[0]
        self.assertIn(record.stop_reason, ('oracle_best', 'budget'))
        self.assertEqual((record.problem, record.size, record.method), ('phillips', 64, 'cgne'))
        self.assertEqual(record.seed, 0)

    def test_deterministic(self):
        config = _config(**{'methods': 'rational_cg,cgne,aggregate', 'noise.delta_rel': '0.01', 'noise.seeds': '1,2'})
        first, second = run_experiment(config), run_experiment(config)
        self.assertEqual(len(first), 6)
        self.assertTrue(all(a.same_result(b) for a, b in zip(first, second)))

    def test_thread_pool_gives_same_sorted_records(self):
        config = _config(**{'methods': 'rational_cg,cgne', 'noise.delta_rel': '0.01,0.001', 'noise.seeds': '1,2'})
        serial = run_experiment(config)
        parallel = run_experiment(replace(config, workers=3))
        self.assertEqual([r.cell_key for r in serial], sorted(r.cell_key for r in serial))
        self.assertTrue(all(a.same_result(b) for a, b in zip(serial, parallel)))

    def test_aggregate_reports_one_iteration(self):
        config = _config(**{'methods': 'aggregate', 'noise.delta_rel': '0.01', 'noise.seeds': '1'})
        record = run_experiment(config)[0]
        self.assertEqual(record.n_stop, 1)
        match = re.fullmatch(r'paper_default;solves=(\d+);selected=(\d+)', record.alpha_spec)
        self.assertIsNotNone(match, record.alpha_spec)
        solves, selected = int(match.group(1)), int(match.group(2))
        self.assertTrue(1 <= selected <= solves)

    def test_aggregate_oracle_reports_selected_k(self):
        record = run_experiment(_config(**{'methods': 'aggregate', 'stopping.n_max': '12'}))[0]
        match = re.fullmatch(r'paper_default;solves=(\d+);selected=(\d+)', record.alpha_spec)
        self.assertIsNotNone(match, record.alpha_spec)
        self.assertLessEqual(int(match.group(2)), int(match.group(1)))
        self.assertEqual(record.n_stop, 1)

    def test_all_methods_run(self):
        config = _config(**{
            'methods': 'tikhonov,cgne,aggregate,lanczos_kr,rational_cg,rational_cg_complex',
            'noise.delta_rel': '0.01', 'noise.seeds': '1',
        })
        records = run_experiment(config)
        self.assertEqual(len(records), 6)
        self.assertTrue(all(np.isfinite(r.error) for r in records))

    def test_all_methods_noise_free_default_budget(self):
        config = _config(**{
            'methods': 'tikhonov,cgne,aggregate,lanczos_kr,rational_cg,rational_cg_complex',
        })
        self.assertEqual(config.n_max, 200)
        records = run_experiment(config)
        self.assertEqual([r.method for r in records], sorted(config.methods))
        x_norm = np.linalg.norm(make_problem('phillips', 64).x_exact)
        for record in records:
            self.assertIn(record.stop_reason, ('oracle_best', 'budget', 'breakdown', 'stagnation'), record.method)
            self.assertLess(record.error, x_norm, record.method)

    def test_trace_rows(self):
        config = _config(**{
            'methods': 'aggregate,rational_cg', 'noise.delta_rel': '0.01', 'noise.seeds': '1,2',
            'stopping.n_max': '6', 'stopping.tau': '1.0001',
        })
        traces = []
        records = run_experiment(config, traces=traces)
        self.assertEqual(traces, sorted(traces, key=lambda row: row.sort_key))
        for record in records:
            rows = [t for t in traces if (t.method, t.seed) == (record.method, record.seed)]
            self.assertTrue(rows)
            self.assertTrue(all(np.isfinite(t.residual) and np.isfinite(t.error) for t in rows))
            steps = [t.n for t in rows]
            if record.method == 'aggregate':
                self.assertEqual(steps, list(range(2, 2 * len(rows) + 1, 2)))
            else:
                self.assertEqual(steps, list(range(1, len(rows) + 1)))
                self.assertEqual(steps[-1], record.n_stop)

    def test_discrepancy_behavior_on_phillips(self):
        config = _config(**{
            'methods': 'rational_cg', 'noise.delta_rel': '0.01,0.05', 'noise.seeds': '1,2,3,4,5',
            'stopping.tau': '1.01',
        })
        records = run_experiment(config)
        x_norm = np.linalg.norm(make_problem('phillips', 64).x_exact)
        low = {r.seed: r for r in records if r.delta == 0.01}
        high = {r.seed: r for r in records if r.delta == 0.05}

        good = 0
        for seed, record in low.items():
            relative = record.error / x_norm
            if record.n_stop <= 6 and 3.94e-2 / 5 <= relative <= 3.94e-2 * 5:
                good += 1
            self.assertLessEqual(high[seed].n_stop, record.n_stop)
        self.assertGreaterEqual(good, 4)

    def test_robustness_sweep(self):
        for q in (2, 10):
            for s in (-4, 0, 4):
                config = _config(**{
                    'methods': 'rational_cg', 'alpha.kind': 'geometric', 'alpha.a': '0.1',
                    'alpha.q': str(q), 'alpha.s': str(s),
                    'noise.delta_rel': '0.001', 'noise.seeds': '1',
                })
                record = run_experiment(config)[0]
                if s == 0:
                    self.assertEqual(record.stop_reason, 'discrepancy', (q, s))

    def test_rate_ordering(self):
        config = build_config(dict(BASE_VALUES, **{
            'problem.name': 'deriv2', 'problem.size': '128', 'methods': 'rational_cg,cgne',
            'noise.delta_rel': '1e-1,1e-2,1e-3,1e-4', 'noise.seeds': '1,2,3',
        }), RateSweepForm)
        points, fits, records = rate_sweep(config)
        self.assertEqual(len(points), 16)
        self.assertEqual(len(records), 48)
        slopes = {(f.variant, f.method): f.slope for f in fits}
        for method in ('rational_cg', 'cgne'):
            self.assertGreater(slopes[('default', method)], 0.1)
            self.assertGreater(slopes[('smooth', method)], slopes[('default', method)])


class CommandTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def _write_config(self, text):
        path = os.path.join(self.tmp.name, 'experiment.cfg')
        with open(path, 'w') as fh:
            fh.write(text)
        return path

    def test_run_writes_records(self):
        output = os.path.join(self.tmp.name, 'records.csv')
        path = self._write_config(
            'problem.name = gravity\nproblem.size = 32\nmethods = rational_cg\n'
            f'noise.delta_rel = 0.01\nnoise.seeds = 1,2\noutput.path = {output}\n'
        )
        out = StringIO()
        call_command('run', config=path, stdout=out)
        self.assertIn('Wrote 2 records', out.getvalue())
        self.assertEqual(len(load_records(output)), 2)

    def test_run_writes_traces(self):
        output = os.path.join(self.tmp.name, 'records.csv')
        traces = os.path.join(self.tmp.name, 'traces.csv')
        path = self._write_config(
            'problem.name = gravity\nproblem.size = 32\nmethods = cgne, aggregate\n'
            f'stopping.n_max = 5\noutput.path = {output}\noutput.traces = {traces}\n'
        )
        out = StringIO()
        call_command('run', config=path, stdout=out)
        self.assertIn('trace rows', out.getvalue())
        with open(traces, newline='') as fh:
            rows = list(csv.DictReader(fh))
        self.assertEqual(tuple(rows[0]), TRACE_HEADER)
        self.assertEqual([int(r['n']) for r in rows if r['method'] == 'cgne'], [1, 2, 3, 4, 5])
        aggregate_steps = [int(r['n']) for r in rows if r['method'] == 'aggregate']
        self.assertTrue(aggregate_steps)
        self.assertTrue(all(n % 2 == 0 for n in aggregate_steps))

    def test_run_override(self):
        output = os.path.join(self.tmp.name, 'records.json')
        path = self._write_config('problem.name = gravity\nproblem.size = 32\nmethods = cgne\n')
        call_command(
            'run', config=path, override=[f'output.path={output}', 'output.format=json'], stdout=StringIO()
        )
        self.assertEqual(load_records(output)[0].method, 'cgne')

    def test_run_config_error_exits_with_one(self):
        path = self._write_config('problem.name = gravity\nproblem.size = 32\nmethods = cgne\nbogus = 1\n')
        with self.assertRaises(CommandError) as ctx:
            call_command('run', config=path, stdout=StringIO(), stderr=StringIO())
        self.assertEqual(ctx.exception.returncode, 1)

    def test_run_missing_file_exits_with_one(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('run', config=os.path.join(self.tmp.name, 'missing.cfg'), stdout=StringIO(), stderr=StringIO())
        self.assertEqual(ctx.exception.returncode, 1)

    def test_strict_breakdown_exits_with_two(self):
        output = os.path.join(self.tmp.name, 'records.csv')
        path = self._write_config(
            'problem.name = phillips\nproblem.size = 32\nmethods = aggregate\n'
            f'stopping.n_max = 40\noutput.path = {output}\n'
        )
        with self.assertRaises(CommandError) as ctx:
            call_command('run', config=path, strict=True, stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertEqual(load_records(output)[0].stop_reason, 'breakdown')

    def test_list_problems(self):
        out = StringIO()
        call_command('list_problems', stdout=out)
        for name in ('deriv2', 'gravity', 'phillips', 'shaw'):
            self.assertIn(name, out.getvalue())

    def test_oracle_check(self):
        out = StringIO()
        call_command('oracle_check', problem='gravity', size=32, steps=6, stdout=out)
        self.assertIn('match the oracle', out.getvalue())

    def test_rates_command(self):
        output = os.path.join(self.tmp.name, 'rates.json')
        path = self._write_config(
            'problem.name = deriv2\nproblem.size = 32\nmethods = cgne\n'
            'noise.delta_rel = 1e-1,1e-2,1e-3,1e-4\nnoise.seeds = 1,2,3\n'
            f'output.path = {output}\noutput.format = json\n'
        )
        call_command('rates', config=path, stdout=StringIO())
        with open(output) as fh:
            payload = json.load(fh)
        self.assertEqual(len(payload['points']), 8)
        self.assertEqual(len(payload['slopes']), 2)
