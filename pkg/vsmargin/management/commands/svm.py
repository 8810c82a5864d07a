from vsmargin.maxmargin import cs_svm, gs_svm
from vsmargin.mixture import read_dataset_csv
from vsmargin.schemas import SvmConfigSchema, dump_solution, load, write_json

from ._base import ConfigCommand


class Command(ConfigCommand):
    help = 'Solve CS-SVM (or GS-SVM with group_deltas) on a dataset CSV and write solution.json.'

    def execute_config(self, config, output_dir):
        config = load(SvmConfigSchema(), config)
        dataset = read_dataset_csv(config['data'])
        if config.get('group_deltas'):
            solution = gs_svm(dataset, config['group_deltas'], config['with_intercept'])
        else:
            solution = cs_svm(dataset, config['delta'], config['with_intercept'])
        return [write_json(dump_solution(solution), output_dir / 'solution.json')]
