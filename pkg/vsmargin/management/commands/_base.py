import json
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from vsmargin.conf import get_setting
from vsmargin.exceptions import ValidationError, VsMarginError

logger = logging.getLogger(__name__)


class ConfigCommand(BaseCommand):
    """
    A subcommand driven by a JSON config file. Subclasses implement
    ``execute_config(config, output_dir)`` and return the written paths.
    """

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Path to the JSON config.')
        parser.add_argument('--out', help='Output directory (default: VSMARGIN_OUTPUT_DIR).')

    def read_config(self, path):
        try:
            with Path(path).open() as handle:
                return json.load(handle)
        except OSError as exc:
            raise CommandError(f'Cannot read config {path}: {exc}')
        except json.JSONDecodeError as exc:
            raise CommandError(f'Config {path} is not valid JSON: {exc}')

    def handle(self, *args, **options):
        raw = self.read_config(options['config'])
        output_dir = Path(options.get('out') or get_setting('VSMARGIN_OUTPUT_DIR'))
        try:
            written = self.execute_config(raw, output_dir)
        except ValidationError as exc:
            raise CommandError(f'Invalid config: {exc}')
        except VsMarginError as exc:
            logger.error('%s failed: %s', self.__module__.rsplit('.', 1)[-1], exc)
            raise CommandError(str(exc))
        for path in written:
            self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))

    def execute_config(self, config, output_dir):
        raise NotImplementedError
