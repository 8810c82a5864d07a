from pathlib import Path

from decouple import Csv, config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-vsmargin-local-only')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost,127.0.0.1', cast=Csv())


# Application definition

INSTALLED_APPS = [
    "django.contrib.admin",
    "django.contrib.auth",
    "django.contrib.contenttypes",
    "django.contrib.sessions",
    "django.contrib.messages",
    "django.contrib.staticfiles",
    "vsmargin",
]

MIDDLEWARE = [
    "django.middleware.security.SecurityMiddleware",
    "django.contrib.sessions.middleware.SessionMiddleware",
    "django.middleware.common.CommonMiddleware",
    "django.middleware.csrf.CsrfViewMiddleware",
    "django.contrib.auth.middleware.AuthenticationMiddleware",
    "django.contrib.messages.middleware.MessageMiddleware",
    "django.middleware.clickjacking.XFrameOptionsMiddleware",
]

ROOT_URLCONF = "vsmargin_project.urls"

TEMPLATES = [
    {
        "BACKEND": "django.template.backends.django.DjangoTemplates",
        'DIRS': [],
        "APP_DIRS": True,
        "OPTIONS": {
            "context_processors": [
                "django.template.context_processors.debug",
                "django.template.context_processors.request",
                "django.contrib.auth.context_processors.auth",
                "django.contrib.messages.context_processors.messages",
            ],
        },
    },
]

WSGI_APPLICATION = "vsmargin_project.wsgi.application"


# Database
# The run registry is optional; sqlite is enough for a desk-scale artifact.

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": config('DATABASE_PATH', default=str(BASE_DIR / "db.sqlite3")),
    }
}


LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True

STATIC_URL = '/static/'
STATIC_ROOT = BASE_DIR / 'staticfiles'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Experiment harness
VSMARGIN_THREADS = config('VSMARGIN_THREADS', default=1, cast=int)
VSMARGIN_OUTPUT_DIR = config('VSMARGIN_OUTPUT_DIR', default=str(BASE_DIR / 'runs'))
VSMARGIN_RECORD_RUNS = config('VSMARGIN_RECORD_RUNS', default=False, cast=bool)

# Solver tolerances
VSMARGIN_SVM_TOL = config('VSMARGIN_SVM_TOL', default=1e-10, cast=float)
VSMARGIN_ROOT_TOL = config('VSMARGIN_ROOT_TOL', default=1e-9, cast=float)
VSMARGIN_INNER_TOL = config('VSMARGIN_INNER_TOL', default=1e-9, cast=float)

# Pagination for the run registry API
RUNS_PER_PAGE = 20

# Logging configuration
VSMARGIN_LOG_LEVEL = config('VSMARGIN_LOG_LEVEL', default='INFO')
VSMARGIN_LOG_FILE = config('VSMARGIN_LOG_FILE', default='')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': 'DEBUG',
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'INFO',
            'propagate': False,
        },
        'vsmargin': {
            'handlers': ['console'],
            'level': VSMARGIN_LOG_LEVEL,
            'propagate': False,
        },
    },
}

if VSMARGIN_LOG_FILE:
    LOGGING['handlers']['file'] = {
        'level': 'DEBUG',
        'class': 'logging.FileHandler',
        'filename': VSMARGIN_LOG_FILE,
        'formatter': 'verbose',
    }
    LOGGING['loggers']['vsmargin']['handlers'].append('file')
