import pytest

from vsmargin.exceptions import ValidationError
from vsmargin.forms import ExperimentConfigForm

LABEL_SPEC = {'geometry': {'kind': 'antipodal', 'd': 50, 'norms': [2.0]}, 'pi': 0.1}
GROUP_SPEC = {'geometry': {'kind': 'orthogonal', 'd': 50, 'norms': [2.0, 2.0]}, 'pi': 0.5, 'p': 0.3}


def test_valid_tradeoff_config():
    form = ExperimentConfigForm(data={
        'kind': 'tradeoff_label', 'spec': LABEL_SPEC, 'gammas': [1.0, 2.0], 'deltas': '0.5, 1, 2',
    })
    assert form.is_valid(), form.errors
    config = form.config()
    assert config['deltas'] == [0.5, 1.0, 2.0]
    assert 'seeds' not in config
    assert 'n' not in config


def test_unknown_kind():
    form = ExperimentConfigForm(data={'kind': 'fig9', 'spec': LABEL_SPEC})
    assert not form.is_valid()
    assert 'kind' in form.errors


def test_required_fields_per_kind():
    form = ExperimentConfigForm(data={'kind': 'tradeoff_label', 'spec': LABEL_SPEC})
    assert not form.is_valid()
    assert set(form.errors) >= {'gammas', 'deltas'}


def test_explicit_empty_grid():
    form = ExperimentConfigForm(data={'kind': 'tradeoff_label', 'spec': LABEL_SPEC, 'gammas': [], 'deltas': [1.0]})
    assert not form.is_valid()
    assert 'gammas' in form.errors


@pytest.mark.parametrize('field, value', [
    ('gammas', [1.0, -2.0]),
    ('deltas', [0.0]),
    ('seeds', [1, 1]),
    ('seeds', [-1]),
    ('losses', ['CE', 'focal']),
    ('deo_bracket', [2.0, 1.0]),
    ('delta', '-3'),
])
def test_rejected_values(field, value):
    data = {'kind': 'tradeoff_label', 'spec': LABEL_SPEC, 'gammas': [2.0], 'deltas': [1.0], field: value}
    form = ExperimentConfigForm(data=data)
    assert not form.is_valid()
    assert field in form.errors


def test_invalid_spec():
    form = ExperimentConfigForm(data={'kind': 'tradeoff_label', 'spec': {'pi': 0.1}, 'gammas': [2.0], 'deltas': [1.0]})
    assert not form.is_valid()
    assert 'spec' in form.errors


def test_mixture_must_match_the_kind():
    form = ExperimentConfigForm(data={'kind': 'tradeoff_group', 'spec': LABEL_SPEC, 'gammas': [2.0], 'deltas': [1.0]})
    assert not form.is_valid()
    assert 'spec' in form.errors

    form = ExperimentConfigForm(data={'kind': 'tradeoff_label', 'spec': GROUP_SPEC, 'gammas': [2.0], 'deltas': [1.0]})
    assert not form.is_valid()


def test_delta_star_keyword():
    form = ExperimentConfigForm(data={'kind': 'mnist_rf', 'data_path': 'train.csv', 'test_path': 'test.csv', 'delta': 'star'})
    form.is_valid()
    assert form.cleaned_data['delta'] == 'star'


def test_config_of_invalid_form():
    with pytest.raises(ValidationError):
        ExperimentConfigForm(data={'kind': 'tradeoff_label'}).config()
