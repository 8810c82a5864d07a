from vsmargin.mixture import GroupGmmSpec, sample_group_gmm, sample_label_gmm, write_dataset_csv
from vsmargin.schemas import GenConfigSchema, load

from ._base import ConfigCommand


class Command(ConfigCommand):
    help = 'Sample a dataset CSV (header y,g,x1..xd) from a mixture spec.'

    def execute_config(self, config, output_dir):
        config = load(GenConfigSchema(), config)
        spec = config['spec']
        if isinstance(spec, GroupGmmSpec):
            dataset = sample_group_gmm(spec, config['n'], config['seed'])
        else:
            dataset = sample_label_gmm(spec, config['n'], config['seed'], n_per_class=config.get('n_per_class'))
        output_dir.mkdir(parents=True, exist_ok=True)
        return [write_dataset_csv(dataset, output_dir / 'dataset.csv')]
