"""
Django settings for the ratkryl project.

The project has no web surface and no database: Django provides the
settings layer, the management-command CLI, form-based config validation
and the test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""
import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get("RATKRYL_SECRET_KEY", "ratkryl-cli-only-no-sessions")

DEBUG = os.environ.get("RATKRYL_DEBUG", "0") == "1"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "apps.linops",
    "apps.problems",
    "apps.solvers",
    "apps.stopping",
    "apps.oracle",
    "apps.harness",
]

# No persistence: results are emitted as csv/json files.
DATABASES = {}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True


# ============================================================================
# RATKRYL CONFIGURATION
# ============================================================================

RATKRYL = {
    # Stopping
    "DEFAULT_TAU": 1.01,
    "DEFAULT_N_MAX": 200,
    "STAGNATION_FACTOR": 10.0,

    # Numerical tolerances
    "BREAKDOWN_TOL": 1e-12,
    "GUARD_TOL": 1e-14,
    "RANK_TOL": 1e-10,
    "LSQ_PIVOT_TOL": 1e-12,
    "TIKHONOV_REFINEMENT_STEPS": 1,

    # Alpha schedule
    "DEFAULT_ALPHA_KIND": "paper_default",
    "DEFAULT_GEOMETRIC_A": 0.1,
    "DEFAULT_GEOMETRIC_Q": 10.0,
    "DEFAULT_GEOMETRIC_S": 0,

    # Output
    "DEFAULT_OUTPUT_FORMAT": "csv",
    "DEFAULT_OUTPUT_PATH": os.path.join(BASE_DIR, "results", "records.csv"),
    "DEFAULT_WORKERS": 1,
}

# ============================================================================
# LOGGING CONFIGURATION
# ============================================================================

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "{levelname} {asctime} {module} {process:d} {thread:d} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "django": {
            "handlers": ["console"],
            "level": "INFO",
        },
        "apps": {
            "handlers": ["console"],
            "level": os.environ.get("RATKRYL_LOG_LEVEL", "WARNING"),
        },
    },
}
