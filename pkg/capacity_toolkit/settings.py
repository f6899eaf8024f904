"""
Django settings for the capacity_toolkit project.

The project has no web surface: it is driven entirely through management
commands (see the ``experiments`` app). Every numeric default below can be
overridden through the environment or a ``.env`` file.

For the full list of Django settings and their values, see
https://docs.djangoproject.com/en/5.1/ref/settings/
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Load environment variables
load_dotenv()

# Only management commands run; the key is never used for signing anything.
SECRET_KEY = os.getenv('SECRET_KEY', 'capacity-toolkit-local-only')

DEBUG = os.getenv('DEBUG', 'False').lower() == 'true'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'analytic',
    'throughput',
    'simulate',
    'experiments',
]

# Nothing is persisted; results go to CSV files.
DATABASES = {}

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Radio defaults (meters, bit/s)
RADIO_R_TX = float(os.getenv('RADIO_R_TX', '250'))
RADIO_R_I = float(os.getenv('RADIO_R_I', '450'))
RADIO_R_CS = float(os.getenv('RADIO_R_CS', '500'))
RADIO_CAPACITY_BPS = float(os.getenv('RADIO_CAPACITY_BPS', '870000'))

# Deployment defaults
DEPLOYMENT_LAMBDA = float(os.getenv('DEPLOYMENT_LAMBDA', '0.04'))
DEPLOYMENT_LAMBDA_2D = float(os.getenv('DEPLOYMENT_LAMBDA_2D', '0.0002'))
DEPLOYMENT_LINE_LENGTH = float(os.getenv('DEPLOYMENT_LINE_LENGTH', '2000'))
HOPCURVE_LINE_LENGTH = float(os.getenv('HOPCURVE_LINE_LENGTH', '1250'))
DEPLOYMENT_AOP_DEG = float(os.getenv('DEPLOYMENT_AOP_DEG', '60'))
DEPLOYMENT_REGION_WIDTH = float(os.getenv('DEPLOYMENT_REGION_WIDTH', '2000'))
DEPLOYMENT_REGION_HEIGHT = float(os.getenv('DEPLOYMENT_REGION_HEIGHT', '1000'))

# Monte Carlo
MONTE_CARLO_TRIALS = int(os.getenv('MONTE_CARLO_TRIALS', '2000'))
THROUGHPUT_TRIALS = int(os.getenv('THROUGHPUT_TRIALS', '1000'))
MOMENT_TRIALS = int(os.getenv('MOMENT_TRIALS', '100000'))
MONTE_CARLO_SEED = int(os.getenv('MONTE_CARLO_SEED', '1'))
MONTE_CARLO_CI_LEVEL = float(os.getenv('MONTE_CARLO_CI_LEVEL', '0.99'))
MONTE_CARLO_WORKERS = int(os.getenv('MONTE_CARLO_WORKERS', '1'))
CENSORING_WARN_RATE = float(os.getenv('CENSORING_WARN_RATE', '0.05'))
ORACLE_REL_FLOOR = float(os.getenv('ORACLE_REL_FLOOR', '0.03'))

# Numerics
SERIES_STABILITY_HORIZON = int(os.getenv('SERIES_STABILITY_HORIZON', '20'))
QUADRATURE_RTOL = float(os.getenv('QUADRATURE_RTOL', '1e-10'))
GAMMA_TAIL_MASS = float(os.getenv('GAMMA_TAIL_MASS', '1e-12'))
ROOT_RTOL = float(os.getenv('ROOT_RTOL', '1e-12'))
FIXED_POINT_XTOL = float(os.getenv('FIXED_POINT_XTOL', '1e-13'))

# Logging Configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'file': {
            'level': 'INFO',
            'class': 'logging.FileHandler',
            'filename': os.getenv('LOG_FILE', str(BASE_DIR / 'capacity.log')),
            'formatter': 'verbose',
            'delay': True,
        },
        'console': {
            'level': 'INFO',
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'analytic': {
            'handlers': ['file', 'console'],
            'level': os.getenv('LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
        'throughput': {
            'handlers': ['file', 'console'],
            'level': os.getenv('LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
        'simulate': {
            'handlers': ['file', 'console'],
            'level': os.getenv('LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
        'experiments': {
            'handlers': ['file', 'console'],
            'level': os.getenv('LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}
