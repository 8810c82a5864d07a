from vsmargin.asymptotics import TheoryProblem
from vsmargin.mixture import read_dataset_csv
from vsmargin.schemas import TuneConfigSchema, TuneResultSchema, load, write_json
from vsmargin.tuning import delta_star_from_theory, delta_star_heuristic

from ._base import ConfigCommand


class Command(ConfigCommand):
    help = 'Compute the balanced-error optimal margin ratio and write tune.json.'

    def execute_config(self, config, output_dir):
        config = load(TuneConfigSchema(), config)
        if 'spec' in config:
            result = delta_star_from_theory(TheoryProblem.from_spec(config['spec'], config['gamma']))
        else:
            result = delta_star_heuristic(
                read_dataset_csv(config['data']), config.get('validation_fraction'), config['seed']
            )
        return [write_json(TuneResultSchema().dump(result.as_dict()), output_dir / 'tune.json')]
