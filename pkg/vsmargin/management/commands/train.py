from functools import partial

from vsmargin.experiments import write_rows_csv
from vsmargin.exceptions import ValidationError
from vsmargin.linear import LinearModel
from vsmargin.losses import VsParams, preset, smoothness_bound, vs_value_and_scaled_grad_binary
from vsmargin.maxmargin import cs_svm, is_separable, svm
from vsmargin.mixture import read_dataset_csv
from vsmargin.optim import TRAJECTORY_COLUMNS, GdConfig, gd_train
from vsmargin.risk import empirical_risks
from vsmargin.schemas import TrainConfigSchema, load

from ._base import ConfigCommand


def binary_loss(loss, class_counts):
    if 'params' in loss:
        return loss['params']
    return preset(loss['preset'], class_counts, loss['tau'], loss['gamma_exp']).to_binary()


class Command(ConfigCommand):
    help = 'Run gradient descent on a dataset CSV with a VS-loss and write the trajectory CSV.'

    def execute_config(self, config, output_dir):
        config = load(TrainConfigSchema(), config)
        dataset = read_dataset_csv(config['data'])
        params = binary_loss(config['loss'], dataset.class_counts())
        if not isinstance(params, VsParams) or params.n_classes != 2:
            raise ValidationError('training needs binary loss parameters')

        fit_intercept = config['fit_intercept']
        step = config.get('step_size') or 1.0 / smoothness_bound(params, dataset, with_intercept=fit_intercept)
        gd_config = GdConfig(
            config['schedule'], step, config['iterations'],
            record_every=config['record_every'], fit_intercept=fit_intercept,
        )
        objective = partial(vs_value_and_scaled_grad_binary, params, dataset=dataset)
        _, trajectory = gd_train(objective, LinearModel.zeros(dataset.d), gd_config)
        self.stdout.write(f'Stopped after {trajectory.final.iteration} iterations ({trajectory.stop_reason}).')

        # references share the trained model's intercept setting
        reference_cs = reference_svm = None
        if is_separable(dataset, with_intercept=fit_intercept):
            delta = config.get('reference_delta', params.margin_ratio)
            reference_cs = cs_svm(dataset, delta, with_intercept=fit_intercept).model
            reference_svm = svm(dataset, with_intercept=fit_intercept).model
        else:
            self.stderr.write('Training data are not separable; angle gaps are left empty.')
        rows = trajectory.to_rows(reference_cs, reference_svm, lambda m: empirical_risks(m, dataset).balanced)
        return [write_rows_csv(rows, TRAJECTORY_COLUMNS, output_dir / 'trajectory.csv')]
