"""
Access to the ``RATKRYL`` settings block with built-in defaults.

The numerical apps are importable without a configured Django project; in
that case the defaults below apply.
"""
import os

try:
    from django.conf import ENVIRONMENT_VARIABLE, settings
except ImportError:
    ENVIRONMENT_VARIABLE, settings = "DJANGO_SETTINGS_MODULE", None

DEFAULTS = {
    "DEFAULT_TAU": 1.01,
    "DEFAULT_N_MAX": 200,
    "STAGNATION_FACTOR": 10.0,
    "BREAKDOWN_TOL": 1e-12,
    "GUARD_TOL": 1e-14,
    "RANK_TOL": 1e-10,
    "LSQ_PIVOT_TOL": 1e-12,
    "TIKHONOV_REFINEMENT_STEPS": 1,
    "DEFAULT_ALPHA_KIND": "paper_default",
    "DEFAULT_GEOMETRIC_A": 0.1,
    "DEFAULT_GEOMETRIC_Q": 10.0,
    "DEFAULT_GEOMETRIC_S": 0,
    "DEFAULT_OUTPUT_FORMAT": "csv",
    "DEFAULT_OUTPUT_PATH": os.path.join("results", "records.csv"),
    "DEFAULT_WORKERS": 1,
}


def ratkryl_setting(name):
    """Return a RATKRYL setting, falling back to the default."""
    if name not in DEFAULTS:
        raise KeyError(f'unknown RATKRYL setting: {name}')
    if settings is None:
        return DEFAULTS[name]
    if settings.configured or os.environ.get(ENVIRONMENT_VARIABLE):
        return getattr(settings, 'RATKRYL', {}).get(name, DEFAULTS[name])
    return DEFAULTS[name]
