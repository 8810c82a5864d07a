"""Settings access that also works when Django is not configured."""
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

DEFAULTS = {
    'VSMARGIN_THREADS': 1,
    'VSMARGIN_OUTPUT_DIR': 'runs',
    'VSMARGIN_RECORD_RUNS': False,
    'VSMARGIN_SVM_TOL': 1e-10,
    'VSMARGIN_ROOT_TOL': 1e-9,
    'VSMARGIN_INNER_TOL': 1e-9,
}


def get_setting(name):
    try:
        return getattr(settings, name, DEFAULTS[name])
    except ImproperlyConfigured:
        return DEFAULTS[name]
