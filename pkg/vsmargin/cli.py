"""
The ``vsmargin`` console entry point.

``vsmargin <subcommand> --config path.json [--out dir]`` forwards to the Django
management command of the same name (``deo-zero`` maps to ``deo_zero``); any other
Django command (``migrate``, ``runserver``...) passes through unchanged.
"""
import os
import sys

SUBCOMMANDS = ('gen', 'train', 'svm', 'theory', 'tune', 'sweep', 'phase', 'deo-zero')


def command_name(name):
    return name.replace('-', '_') if name in SUBCOMMANDS else name


def main(argv=None):
    argv = list(sys.argv if argv is None else argv)
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'vsmargin_project.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and "
            "available on your PYTHONPATH environment variable? Did you "
            "forget to activate a virtual environment?"
        ) from exc
    if len(argv) > 1:
        argv[1] = command_name(argv[1])
    execute_from_command_line(argv)


if __name__ == '__main__':
    main()
