from django.core.management.base import BaseCommand, CommandError

from apps.harness.config import read_config
from apps.harness.forms import RateSweepForm, build_config
from apps.harness.records import emit_rates
from apps.harness.services import rate_sweep
from core.exceptions import ConfigError, RatKrylError


class Command(BaseCommand):
    help = 'Fit convergence rates of the error against the noise level'

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

    def handle(self, *args, **options):
        try:
            config = build_config(read_config(options['config'], options['override']), RateSweepForm)
        except ConfigError as exc:
            for key, messages in exc.errors.items():
                for message in messages:
                    self.stderr.write(f'{key}: {message}')
            raise CommandError('invalid configuration', returncode=1)

        points, fits, _ = rate_sweep(config)
        for fit in fits:
            flag = ' (degenerate fit)' if fit.degenerate else ''
            self.stdout.write(f'  {fit.variant:<8} {fit.method:<20} slope={fit.slope:.4f}{flag}')

        try:
            written = emit_rates(points, fits, config.output_path, config.output_format)
        except RatKrylError as exc:
            raise CommandError(str(exc), returncode=1)
        self.stdout.write(self.style.SUCCESS(f'✅ Wrote {", ".join(written)}'))
