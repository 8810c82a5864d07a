import csv
import json
from io import StringIO

import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from vsmargin.cli import command_name
from vsmargin.mixture import read_dataset_csv

LABEL_SPEC = {'geometry': {'kind': 'antipodal', 'd': 20, 'norms': [2.0]}, 'pi': 0.3}
GROUP_SPEC = {'geometry': {'kind': 'orthogonal', 'd': 50, 'norms': [2.0, 2.0]}, 'pi': 0.5, 'p': 0.5}


def write_config(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def call(name, config_path, out, *args):
    stdout = StringIO()
    call_command(name, '--config', config_path, '--out', str(out), *args, stdout=stdout, stderr=StringIO())
    return stdout.getvalue()


@pytest.fixture
def dataset_csv(tmp_path):
    config = write_config(tmp_path, 'gen.json', {'spec': LABEL_SPEC, 'n': 10, 'seed': 3})
    call('gen', config, tmp_path / 'data')
    return tmp_path / 'data' / 'dataset.csv'


def test_gen_writes_the_dataset(dataset_csv):
    dataset = read_dataset_csv(dataset_csv)
    assert (dataset.n, dataset.d) == (10, 20)
    assert dataset_csv.read_text().splitlines()[0].startswith('y,g,x1,')


def test_gen_is_seeded(tmp_path, dataset_csv):
    config = write_config(tmp_path, 'again.json', {'spec': LABEL_SPEC, 'n': 10, 'seed': 3})
    call('gen', config, tmp_path / 'again')
    assert (tmp_path / 'again' / 'dataset.csv').read_bytes() == dataset_csv.read_bytes()


def test_train_writes_a_trajectory(tmp_path, dataset_csv):
    config = write_config(tmp_path, 'train.json', {
        'data': str(dataset_csv), 'loss': {'preset': 'CDT', 'gamma_exp': 0.5}, 'iterations': 30, 'record_every': 10,
    })
    output = call('train', config, tmp_path / 'runs')
    assert 'trajectory.csv' in output
    assert 'Stopped after 30 iterations (max_iters).' in output
    with open(tmp_path / 'runs' / 'trajectory.csv', newline='') as handle:
        rows = list(csv.DictReader(handle))
    assert [row['iter'] for row in rows] == ['0', '10', '20', '30']
    assert rows[-1]['angle_gap_cs'] != ''


def test_svm_writes_the_solution(tmp_path, dataset_csv):
    config = write_config(tmp_path, 'svm.json', {'data': str(dataset_csv), 'delta': 2.0})
    call('svm', config, tmp_path / 'runs')
    solution = json.loads((tmp_path / 'runs' / 'solution.json').read_text())
    assert solution['delta'] == 2.0
    assert len(solution['w']) == 20
    assert solution['margin'] == pytest.approx(1.0, abs=1e-6)


def test_theory_writes_rows(tmp_path):
    config = write_config(tmp_path, 'theory.json', {'spec': LABEL_SPEC, 'gammas': [2.0], 'deltas': [1.0, 2.0]})
    call('theory', config, tmp_path / 'runs')
    lines = (tmp_path / 'runs' / 'theory.csv').read_text().splitlines()
    assert lines[0] == 'gamma,delta,q,rho1,rho2,b,R_plus,R_minus,R_bal,R_std,DEO'
    assert len(lines) == 3


def test_tune_from_spec(tmp_path):
    config = write_config(tmp_path, 'tune.json', {'spec': LABEL_SPEC, 'gamma': 2.0})
    call('tune', config, tmp_path / 'runs')
    result = json.loads((tmp_path / 'runs' / 'tune.json').read_text())
    assert set(result) == {'delta_star', 'branch', 'R_bal_at_star', 'R_plus', 'R_minus'}


def test_tune_from_data(tmp_path, dataset_csv):
    config = write_config(tmp_path, 'tune.json', {'data': str(dataset_csv)})
    call('tune', config, tmp_path / 'runs')
    assert (tmp_path / 'runs' / 'tune.json').exists()


def test_sweep_writes_csv_and_manifest(tmp_path):
    config = write_config(tmp_path, 'sweep.json', {
        'kind': 'tradeoff_label', 'spec': LABEL_SPEC, 'gammas': [2.0], 'deltas': [1.0],
    })
    output = call('sweep', config, tmp_path / 'runs', '--threads', '2')
    assert 'manifest.json' in output
    manifest = json.loads((tmp_path / 'runs' / 'manifest.json').read_text())
    assert manifest['artifacts'] == ['tradeoff_label.csv']


def test_deo_zero_command_sets_its_kind(tmp_path):
    config = write_config(tmp_path, 'deo.json', {'spec': GROUP_SPEC, 'gammas': [2.0], 'deo_bracket': [0.5, 2.0]})
    call('deo_zero', config, tmp_path / 'runs')
    assert (tmp_path / 'runs' / 'deo_zero.csv').exists()


def test_phase_command_rejects_other_kinds(tmp_path):
    config = write_config(tmp_path, 'phase.json', {
        'kind': 'tradeoff_label', 'spec': LABEL_SPEC, 'gammas': [2.0], 'deltas': [1.0],
    })
    with pytest.raises(CommandError, match='Invalid config'):
        call('phase', config, tmp_path / 'runs')


def test_missing_config_file(tmp_path):
    with pytest.raises(CommandError, match='Cannot read config'):
        call('theory', str(tmp_path / 'missing.json'), tmp_path / 'runs')


def test_malformed_json(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"spec": ')
    with pytest.raises(CommandError, match='not valid JSON'):
        call('theory', str(path), tmp_path / 'runs')


def test_invalid_config(tmp_path):
    config = write_config(tmp_path, 'theory.json', {'spec': LABEL_SPEC, 'gammas': []})
    with pytest.raises(CommandError, match='Invalid config'):
        call('theory', config, tmp_path / 'runs')


def test_numerical_failure_becomes_a_command_error(tmp_path):
    config = write_config(tmp_path, 'theory.json', {
        'spec': LABEL_SPEC, 'gammas': [0.001], 'skip_non_separable': False,
    })
    with pytest.raises(CommandError, match='non-separable'):
        call('theory', config, tmp_path / 'runs')


@pytest.mark.parametrize('name, expected', [('deo-zero', 'deo_zero'), ('sweep', 'sweep'), ('migrate', 'migrate')])
def test_command_name(name, expected):
    assert command_name(name) == expected
