from django.core.management.base import BaseCommand, CommandError

from apps.harness.config import read_config
from apps.harness.forms import build_config
from apps.harness.records import emit, emit_traces
from apps.harness.services import run_experiment
from core.exceptions import ConfigError, RatKrylError


class Command(BaseCommand):
    help = 'Run a solver experiment and write one record per (method, delta, seed) cell'

    def add_arguments(self, parser):
        parser.add_argument(
            '--config',
            required=True,
            help='Path to a "key = value" experiment config file'
        )
        parser.add_argument(
            '--override',
            action='append',
            default=[],
            metavar='KEY=VALUE',
            help='Override a config key (repeatable)'
        )
        parser.add_argument(
            '--strict',
            action='store_true',
            help='Exit with code 2 if any solver broke down'
        )

    def handle(self, *args, **options):
        try:
            config = build_config(read_config(options['config'], options['override']))
        except ConfigError as exc:
            for key, messages in exc.errors.items():
                for message in messages:
                    self.stderr.write(f'{key}: {message}')
            raise CommandError('invalid configuration', returncode=1)

        self.stdout.write(self.style.SUCCESS(
            f'Running {", ".join(config.methods)} on {config.problem_name}({config.problem_size})...'
        ))
        traces = [] if config.traces_path else None
        records = run_experiment(config, traces=traces)

        for record in records:
            self.stdout.write(
                f'  {record.method:<20} delta={record.delta:<8g} seed={record.seed:<4d} '
                f'{record.stop_reason:<12} n={record.n_stop:<4d} error={record.error:.3e} '
                f'time={record.time_s:.3f}s'
            )

        try:
            path = emit(records, config.output_path, config.output_format)
        except RatKrylError as exc:
            raise CommandError(str(exc), returncode=1)
        self.stdout.write(self.style.SUCCESS(f'✅ Wrote {len(records)} records to {path}'))

        if traces:
            try:
                traces_path = emit_traces(traces, config.traces_path, config.output_format)
            except RatKrylError as exc:
                raise CommandError(str(exc), returncode=1)
            self.stdout.write(self.style.SUCCESS(f'✅ Wrote {len(traces)} trace rows to {traces_path}'))

        failures = [r for r in records if r.stop_reason == 'breakdown']
        if failures and (options['strict'] or config.strict):
            raise CommandError(f'{len(failures)} cell(s) stopped by breakdown', returncode=2)
