from vsmargin.asymptotics import THEORY_COLUMNS, TheoryProblem, theory_sweep
from vsmargin.experiments import write_rows_csv
from vsmargin.schemas import TheoryConfigSchema, load

from ._base import ConfigCommand


class Command(ConfigCommand):
    help = 'Predict asymptotic risks of CS-SVM / GS-SVM over a (gamma, delta) grid.'

    def execute_config(self, config, output_dir):
        config = load(TheoryConfigSchema(), config)
        problem = TheoryProblem.from_spec(config['spec'], config['gammas'][0])
        rows = theory_sweep(problem, config['gammas'], config['deltas'], config['skip_non_separable'])
        return [write_rows_csv(rows, THEORY_COLUMNS, output_dir / 'theory.csv')]
