import numpy as np
from django.core.management.base import BaseCommand, CommandError

from apps.oracle import explicit_basis, lsq_over_subspace
from apps.problems import make_problem
from apps.solvers import AlphaSchedule, lanczos_kr, rational_cg
from apps.stopping import budget
from core.exceptions import UnknownProblemError


class Command(BaseCommand):
    help = 'Compare solver residuals with the brute-force minimum over the mixed Krylov space'

    def add_arguments(self, parser):
        parser.add_argument('--problem', required=True, help='Test problem name')
        parser.add_argument('--size', type=int, default=32, help='Problem size (default: 32)')
        parser.add_argument('--steps', type=int, default=8, help='Number of steps (default: 8)')
        parser.add_argument(
            '--tolerance',
            type=float,
            default=1e-8,
            help='Allowed residual gap relative to ||y|| (default: 1e-8)'
        )

    def handle(self, *args, **options):
        try:
            problem = make_problem(options['problem'], options['size'])
        except UnknownProblemError as exc:
            raise CommandError(str(exc), returncode=1)
        steps = options['steps']
        y = problem.y_exact
        y_norm = np.linalg.norm(y)
        schedule = AlphaSchedule.paper_default()

        traces = {solver.__name__: solver(problem.A, y, schedule, budget(steps)) for solver in (rational_cg, lanczos_kr)}
        self.stdout.write(f'{"n":>3} {"rank":>5} {"oracle":>12} {"rational_cg":>12} {"lanczos_kr":>12}')

        mismatches = 0
        for n in range(1, steps + 1):
            basis = explicit_basis(problem.A, y, schedule, n)
            _, oracle_residual = lsq_over_subspace(problem.A, y, basis)
            row = [f'{n:>3}', f'{basis.effective_rank:>5}', f'{oracle_residual:>12.4e}']
            for name, trace in traces.items():
                try:
                    residual = trace.entry(n).residual
                except KeyError:
                    row.append(f'{"-":>12}')
                    continue
                row.append(f'{residual:>12.4e}')
                if basis.effective_rank == n and abs(residual - oracle_residual) > options['tolerance'] * y_norm:
                    mismatches += 1
            self.stdout.write(' '.join(row))

        if mismatches:
            raise CommandError(f'{mismatches} residual(s) differ from the oracle', returncode=2)
        self.stdout.write(self.style.SUCCESS('✅ Solver residuals match the oracle'))
