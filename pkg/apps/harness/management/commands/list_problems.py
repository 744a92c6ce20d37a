from django.core.management.base import BaseCommand

from apps.problems import PROBLEMS, problem_names


class Command(BaseCommand):
    help = 'List the available test problems'

    def handle(self, *args, **options):
        for name in problem_names():
            spec = PROBLEMS[name]
            size_rule = 'even size' if spec['even'] else 'any size >= 4'
            self.stdout.write(f'{name:<10} {spec["description"]} ({size_rule})')
