from django import forms
from django.core.exceptions import ValidationError

from apps.problems import problem_names
from core.conf import ratkryl_setting
from core.exceptions import ConfigError

from .config import METHOD_CHOICES, ExperimentConfig

TRUE_VALUES = ('1', 'true', 'yes', 'on')
FALSE_VALUES = ('0', 'false', 'no', 'off')


def _parse_bool(value, default):
    if value in (None, ''):
        return default
    lowered = str(value).strip().lower()
    if lowered in TRUE_VALUES:
        return True
    if lowered in FALSE_VALUES:
        return False
    raise ValidationError(f'Expected a boolean (true/false), got "{value}".')


def _split_list(value):
    return [item.strip() for item in str(value or '').split(',') if item.strip()]


class ExperimentConfigForm(forms.Form):
    """Validate a flat experiment config; field names are dotted keys with '_' for '.'."""

    FIELD_KEYS = {
        'problem_name': 'problem.name',
        'problem_size': 'problem.size',
        'methods': 'methods',
        'alpha_kind': 'alpha.kind',
        'alpha_a': 'alpha.a',
        'alpha_q': 'alpha.q',
        'alpha_s': 'alpha.s',
        'noise_delta_rel': 'noise.delta_rel',
        'noise_seeds': 'noise.seeds',
        'stopping_tau': 'stopping.tau',
        'stopping_n_max': 'stopping.n_max',
        'stopping_oracle': 'stopping.oracle',
        'smooth_solution': 'smooth_solution',
        'output_path': 'output.path',
        'output_format': 'output.format',
        'output_traces': 'output.traces',
        'run_workers': 'run.workers',
        'run_strict': 'run.strict',
    }

    problem_name = forms.CharField()
    problem_size = forms.IntegerField(min_value=4)
    methods = forms.CharField()
    alpha_kind = forms.ChoiceField(
        choices=[('paper_default', 'paper_default'), ('geometric', 'geometric')], required=False
    )
    alpha_a = forms.FloatField(required=False)
    alpha_q = forms.FloatField(required=False)
    alpha_s = forms.IntegerField(required=False)
    noise_delta_rel = forms.CharField(required=False)
    noise_seeds = forms.CharField(required=False)
    stopping_tau = forms.FloatField(required=False)
    stopping_n_max = forms.IntegerField(required=False, min_value=1)
    stopping_oracle = forms.CharField(required=False)
    smooth_solution = forms.CharField(required=False)
    output_path = forms.CharField(required=False)
    output_format = forms.ChoiceField(choices=[('csv', 'csv'), ('json', 'json')], required=False)
    output_traces = forms.CharField(required=False)
    run_workers = forms.IntegerField(required=False, min_value=1)
    run_strict = forms.CharField(required=False)

    @classmethod
    def from_values(cls, values):
        """Bind the form to a dict keyed by dotted config keys."""
        data = {field: values[key] for field, key in cls.FIELD_KEYS.items() if key in values}
        return cls(data=data)

    def clean_problem_name(self):
        """Validate that the problem generator exists."""
        name = self.cleaned_data.get('problem_name', '').strip()
        if name not in problem_names():
            raise ValidationError(f'Unknown problem "{name}". Choose from: {", ".join(problem_names())}.')
        return name

    def clean_methods(self):
        """Validate the comma-separated method list."""
        methods = _split_list(self.cleaned_data.get('methods'))
        if not methods:
            raise ValidationError('At least one method is required.')
        unknown = [m for m in methods if m not in METHOD_CHOICES]
        if unknown:
            raise ValidationError(f'Unknown method(s): {", ".join(unknown)}.')
        return tuple(dict.fromkeys(methods))

    def clean_alpha_kind(self):
        return self.cleaned_data.get('alpha_kind') or ratkryl_setting('DEFAULT_ALPHA_KIND')

    def clean_alpha_a(self):
        a = self.cleaned_data.get('alpha_a')
        if a is None:
            return ratkryl_setting('DEFAULT_GEOMETRIC_A')
        if a <= 0:
            raise ValidationError('alpha.a must be positive.')
        return a

    def clean_alpha_q(self):
        q = self.cleaned_data.get('alpha_q')
        if q is None:
            return ratkryl_setting('DEFAULT_GEOMETRIC_Q')
        if q <= 1:
            raise ValidationError('alpha.q must be greater than 1.')
        return q

    def clean_alpha_s(self):
        s = self.cleaned_data.get('alpha_s')
        return ratkryl_setting('DEFAULT_GEOMETRIC_S') if s is None else s

    def clean_noise_delta_rel(self):
        """Validate the noise levels: nonnegative numbers."""
        raw = _split_list(self.cleaned_data.get('noise_delta_rel'))
        if not raw:
            return (0.0,)
        try:
            deltas = tuple(float(item) for item in raw)
        except ValueError:
            raise ValidationError('Noise levels must be numbers.')
        if any(d < 0 for d in deltas):
            raise ValidationError('Noise levels must be nonnegative.')
        return deltas

    def clean_noise_seeds(self):
        raw = _split_list(self.cleaned_data.get('noise_seeds'))
        try:
            seeds = tuple(int(item) for item in raw)
        except ValueError:
            raise ValidationError('Seeds must be integers.')
        if any(seed < 0 for seed in seeds):
            raise ValidationError('Seeds must be nonnegative.')
        return seeds

    def clean_stopping_tau(self):
        tau = self.cleaned_data.get('stopping_tau')
        if tau is None:
            return ratkryl_setting('DEFAULT_TAU')
        if tau <= 1.0:
            raise ValidationError('The discrepancy parameter tau must be greater than 1.')
        return tau

    def clean_stopping_n_max(self):
        n_max = self.cleaned_data.get('stopping_n_max')
        return ratkryl_setting('DEFAULT_N_MAX') if n_max is None else n_max

    def clean_stopping_oracle(self):
        return _parse_bool(self.cleaned_data.get('stopping_oracle'), True)

    def clean_smooth_solution(self):
        return _parse_bool(self.cleaned_data.get('smooth_solution'), False)

    def clean_run_strict(self):
        return _parse_bool(self.cleaned_data.get('run_strict'), False)

    def clean_output_format(self):
        return self.cleaned_data.get('output_format') or ratkryl_setting('DEFAULT_OUTPUT_FORMAT')

    def clean_output_path(self):
        return self.cleaned_data.get('output_path') or ratkryl_setting('DEFAULT_OUTPUT_PATH')

    def clean_run_workers(self):
        workers = self.cleaned_data.get('run_workers')
        return ratkryl_setting('DEFAULT_WORKERS') if workers is None else workers

    def clean(self):
        """Cross-field checks: sizes per problem and seeds for noisy cells."""
        cleaned_data = super().clean()

        name = cleaned_data.get('problem_name')
        size = cleaned_data.get('problem_size')
        if name in ('shaw', 'phillips') and size and size % 2:
            self.add_error('problem_size', f'{name} needs an even size.')

        deltas = cleaned_data.get('noise_delta_rel') or ()
        seeds = cleaned_data.get('noise_seeds')
        if any(d > 0 for d in deltas) and seeds is not None and not seeds:
            self.add_error('noise_seeds', 'Seeds are required when a noise level is positive.')

        return cleaned_data

    def dotted_errors(self):
        """Form errors keyed by dotted config key."""
        errors = {}
        for field, messages in self.errors.items():
            key = self.FIELD_KEYS.get(field, 'config')
            errors.setdefault(key, []).extend(messages)
        return errors

    def to_config(self):
        data = self.cleaned_data
        return ExperimentConfig(
            problem_name=data['problem_name'],
            problem_size=data['problem_size'],
            methods=data['methods'],
            alpha_kind=data['alpha_kind'],
            alpha_a=data['alpha_a'],
            alpha_q=data['alpha_q'],
            alpha_s=data['alpha_s'],
            deltas=data['noise_delta_rel'],
            seeds=data['noise_seeds'],
            tau=data['stopping_tau'],
            n_max=data['stopping_n_max'],
            oracle=data['stopping_oracle'],
            smooth_solution=data['smooth_solution'],
            output_path=data['output_path'],
            output_format=data['output_format'],
            traces_path=data.get('output_traces') or '',
            workers=data['run_workers'],
            strict=data['run_strict'],
        )


class RateSweepForm(ExperimentConfigForm):
    """Experiment config with the extra preconditions of a convergence-rate fit."""

    def clean(self):
        """Require >= 4 positive noise levels over >= 2 decades and >= 3 seeds."""
        cleaned_data = super().clean()

        deltas = cleaned_data.get('noise_delta_rel')
        if deltas is not None:
            if len(set(deltas)) < 4 or min(deltas) <= 0:
                self.add_error('noise_delta_rel', 'A rate sweep needs at least 4 distinct positive noise levels.')
            elif max(deltas) / min(deltas) < 100.0 * (1 - 1e-9):
                self.add_error('noise_delta_rel', 'Noise levels must span at least two decades.')

        seeds = cleaned_data.get('noise_seeds')
        if seeds is not None and len(set(seeds)) < 3:
            self.add_error('noise_seeds', 'A rate sweep needs at least 3 seeds.')

        return cleaned_data


def build_config(values, form_class=ExperimentConfigForm):
    """Validate dotted-key values into an ExperimentConfig or raise ConfigError."""
    form = form_class.from_values(values)
    if not form.is_valid():
        raise ConfigError(form.dotted_errors())
    return form.to_config()
