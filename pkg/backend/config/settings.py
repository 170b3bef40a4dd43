"""
Django settings for the metasurface design pipeline.

The project has no web surface: Django provides settings, logging, the run
ledger database and the management-command CLI.
"""
from pathlib import Path

import environ

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

env = environ.Env(
    DJANGO_DEBUG=(bool, False),
    LOG_LEVEL=(str, 'INFO'),
    METASURFACE_THREADS=(int, 1),
    METASURFACE_SEED=(int, 0),
)

# Optional local overrides, never required
environ.Env.read_env(BASE_DIR / '.env', overwrite=False)

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = env('DJANGO_SECRET_KEY', default='django-insecure-development-key')

DEBUG = env('DJANGO_DEBUG')

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    # Local apps
    'apps.patterns',
    'apps.solver',
    'apps.datasets',
    'apps.autodiff',
    'apps.forward',
    'apps.baselines',
    'apps.inverse',
    'apps.analytics',
    'apps.runs',
]

# Database
# The only table is the run ledger; SQLite next to manage.py unless DATABASE_URL says otherwise.
DATABASES = {
    'default': env.db('DATABASE_URL', default=f"sqlite:///{BASE_DIR / 'runs.sqlite3'}"),
}

# Default primary key field type
# https://docs.djangoproject.com/en/4.2/ref/settings/#default-auto-field
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

TIME_ZONE = 'UTC'

USE_TZ = True

# Logging
LOG_LEVEL = env('LOG_LEVEL').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': LOG_LEVEL,
    },
    'loggers': {
        'apps': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'utils': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}

# Pipeline settings
METASURFACE = {
    # Where commands write artifacts when --out is not given
    'OUTPUT_ROOT': Path(env('METASURFACE_OUTPUT_ROOT', default=str(BASE_DIR / 'runs'))),
    # Sample/tree/candidate-level parallelism; never changes numeric results
    'THREADS': env('METASURFACE_THREADS'),
    'DEFAULT_SEED': env('METASURFACE_SEED'),
}

# Test settings
TEST_RUNNER = 'django.test.runner.DiscoverRunner'
TEST_DISCOVER_PATTERN = "test*.py"
TEST_DISCOVER_TOP_LEVEL = BASE_DIR
