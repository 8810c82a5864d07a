from vsmargin.exceptions import ValidationError
from vsmargin.experiments import run

from ._base import ConfigCommand


class Command(ConfigCommand):
    help = 'Run an experiment config (dispatching on its kind) and write <kind>.csv and manifest.json.'
    kind = None

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--threads', type=int, help='Worker-pool size (default: VSMARGIN_THREADS).')
        parser.add_argument('--record', action='store_true', default=None,
                            help='Store an ExperimentRun row for this invocation.')

    def handle(self, *args, **options):
        self.threads = options.get('threads')
        self.record = options.get('record')
        return super().handle(*args, **options)

    def execute_config(self, config, output_dir):
        if self.kind is not None:
            config.setdefault('kind', self.kind)
            if config['kind'] != self.kind:
                raise ValidationError(f"this command runs kind {self.kind!r}, got {config['kind']!r}")
        outcome = run(config, output_dir, threads=self.threads, record=self.record)
        return [outcome.output_dir / name for name in outcome.manifest['artifacts']] + [
            outcome.output_dir / 'manifest.json'
        ]
