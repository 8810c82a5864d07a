import csv
import json
import time

import pytest

from vsmargin.asymptotics import TheoryProblem
from vsmargin.exceptions import BracketError, ValidationError
from vsmargin.experiments import (
    LOSS_NAMES, RUNNERS, WorkerPool, build_manifest, config_hash, empirical_crossover, find_deo_zero,
    loss_params, run, write_rows_csv,
)
from vsmargin.mixture import sample_label_gmm, write_dataset_csv
from vsmargin.models import ExperimentRun

from .factories import GroupGmmSpecFactory, LabelGmmSpecFactory

LABEL_SPEC = {'geometry': {'kind': 'antipodal', 'd': 50, 'norms': [2.0]}, 'pi': 0.1}
GROUP_SPEC = {'geometry': {'kind': 'orthogonal', 'd': 50, 'norms': [2.0, 2.0]}, 'pi': 0.5, 'p': 0.5}


def read_rows(path):
    with open(path, newline='') as handle:
        return list(csv.DictReader(handle))


class TestWorkerPool:
    def test_keeps_item_order(self):
        def slow_square(x):
            time.sleep(0.01 * (5 - x))
            return x * x

        with WorkerPool(4) as pool:
            assert pool.map(slow_square, range(5)) == [0, 1, 4, 9, 16]

    def test_single_worker_runs_inline(self):
        with WorkerPool(1) as pool:
            assert pool.map(str, [1, 2]) == ['1', '2']

    def test_needs_a_worker(self):
        with pytest.raises(ValidationError):
            WorkerPool(0)


class TestDeoZero:
    @pytest.fixture
    def problem(self):
        return TheoryProblem.from_spec(GroupGmmSpecFactory(d=50), gamma=2.0)

    def test_symmetric_groups_balance_at_one(self, problem):
        assert find_deo_zero(problem, (0.5, 2.0)) == pytest.approx(1.0, abs=1e-3)

    def test_no_sign_change(self, problem):
        with pytest.raises(BracketError) as excinfo:
            find_deo_zero(problem, (1.5, 3.0))
        assert excinfo.value.endpoints['delta'] == (1.5, 3.0)

    def test_needs_group_problem(self):
        problem = TheoryProblem.from_spec(LabelGmmSpecFactory(), gamma=2.0)
        with pytest.raises(ValidationError):
            find_deo_zero(problem, (0.5, 2.0))

    def test_bad_bracket(self, problem):
        with pytest.raises(ValidationError):
            find_deo_zero(problem, (2.0, 0.5))


class TestHelpers:
    def test_empirical_crossover(self):
        rows = [
            {'gamma': 0.4, 'separable_fraction': 0.0},
            {'gamma': 0.2, 'separable_fraction': 0.0},
            {'gamma': 0.6, 'separable_fraction': 1.0},
        ]
        assert empirical_crossover(rows) == pytest.approx(0.5)
        assert empirical_crossover(rows[:2]) is None

    def test_config_hash_ignores_key_order(self):
        assert config_hash({'a': 1, 'b': [1, 2]}) == config_hash({'b': [1, 2], 'a': 1})
        assert config_hash({'a': 1}) != config_hash({'a': 2})

    def test_manifest_has_no_timestamps(self):
        manifest = build_manifest({'kind': 'tradeoff_label', 'seeds': [3]}, ['out/tradeoff_label.csv'])
        assert set(manifest) == {'kind', 'config', 'config_hash', 'seeds', 'versions', 'artifacts', 'summary'}
        assert manifest['artifacts'] == ['tradeoff_label.csv']

    def test_csv_cells(self, tmp_path):
        path = write_rows_csv([{'a': 0.1, 'b': None, 'c': True}], ('a', 'b', 'c'), tmp_path / 'x.csv')
        assert path.read_text() == 'a,b,c\n0.1,,1\n'

    @pytest.mark.parametrize('name', LOSS_NAMES)
    def test_loss_params_are_binary(self, name):
        assert loss_params(name, [10, 90], 2.0).n_classes == 2

    def test_every_kind_is_registered(self):
        assert set(RUNNERS) == {
            'fig1a_sweep', 'fig1bc_dynamics', 'tradeoff_label', 'tradeoff_group', 'phase_transition',
            'tune_delta', 'undersampling', 'mnist_rf', 'deo_zero',
        }


class TestTradeoff:
    def test_label_rows_and_columns(self, tmp_path):
        config = {'kind': 'tradeoff_label', 'spec': LABEL_SPEC, 'gammas': [2.0], 'deltas': [1.0, 2.0], 'seeds': [0, 1]}
        outcome = run(config, tmp_path, threads=1, record=False)
        rows = read_rows(tmp_path / 'tradeoff_label.csv')
        assert [(r['gamma'], r['delta']) for r in rows] == [('2.0', '1.0'), ('2.0', '2.0')]
        assert rows[0]['delta_star'] == rows[1]['delta_star'] != ''
        assert rows[0]['mc_separable'] == '2'
        assert rows[0]['DEO'] == ''
        assert outcome.manifest['config_hash'] == config_hash(outcome.manifest['config'])

    def test_non_separable_gamma_leaves_theory_blank(self, tmp_path):
        config = {'kind': 'tradeoff_label', 'spec': LABEL_SPEC, 'gammas': [0.001, 2.0], 'deltas': [1.0]}
        run(config, tmp_path, threads=1, record=False)
        blank, solved = read_rows(tmp_path / 'tradeoff_label.csv')
        assert blank['q'] == '' and blank['delta_star'] == ''
        assert float(solved['q']) > 0

    def test_group_reports_delta_zero(self, tmp_path):
        config = {'kind': 'tradeoff_group', 'spec': GROUP_SPEC, 'gammas': [2.0], 'deltas': [0.5, 2.0]}
        run(config, tmp_path, threads=1, record=False)
        rows = read_rows(tmp_path / 'tradeoff_group.csv')
        assert float(rows[0]['delta_zero']) == pytest.approx(1.0, abs=1e-3)
        assert float(rows[0]['DEO']) * float(rows[1]['DEO']) < 0

    def test_rerun_and_thread_count_give_identical_bytes(self, tmp_path):
        config = {'kind': 'tradeoff_label', 'spec': LABEL_SPEC, 'gammas': [2.0, 4.0], 'deltas': [1.0, 3.0], 'seeds': [0, 1]}
        run(config, tmp_path / 'a', threads=1, record=False)
        run(config, tmp_path / 'b', threads=3, record=False)
        for name in ('tradeoff_label.csv', 'manifest.json'):
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()


class TestOtherKinds:
    def test_phase_transition(self, tmp_path):
        config = {'kind': 'phase_transition', 'spec': LABEL_SPEC, 'gammas': [0.5, 2.0], 'n': 20, 'seeds': [0, 1, 2]}
        outcome = run(config, tmp_path, threads=1, record=False)
        rows = read_rows(tmp_path / 'phase_transition.csv')
        assert [r['d'] for r in rows] == ['10', '40']
        assert float(rows[1]['separable_fraction']) == 1.0
        assert 0.0 < outcome.manifest['summary']['gamma_star'] < 0.5

    def test_tune_delta(self, tmp_path):
        config = {'kind': 'tune_delta', 'spec': LABEL_SPEC, 'gammas': [2.0], 'seeds': [0]}
        run(config, tmp_path, threads=1, record=False)
        row, = read_rows(tmp_path / 'tune_delta.csv')
        assert row['branch'] in ('1', '2', '3')
        assert float(row['grid_R_bal']) >= float(row['R_bal_at_star']) - 1e-12
        assert row['heuristic_delta'] != ''

    def test_undersampling(self, tmp_path):
        config = {'kind': 'undersampling', 'spec': LABEL_SPEC, 'gammas': [2.0], 'seeds': [0]}
        run(config, tmp_path, threads=1, record=False)
        row, = read_rows(tmp_path / 'undersampling.csv')
        assert float(row['mapped_gamma']) == pytest.approx(10.0)
        assert float(row['th_R_plus']) == pytest.approx(float(row['th_R_minus']), abs=1e-6)

    def test_deo_zero(self, tmp_path):
        config = {'kind': 'deo_zero', 'spec': GROUP_SPEC, 'gammas': [2.0], 'deo_bracket': [0.5, 2.0]}
        run(config, tmp_path, threads=1, record=False)
        row, = read_rows(tmp_path / 'deo_zero.csv')
        assert float(row['delta_zero']) == pytest.approx(1.0, abs=1e-3)
        assert abs(float(row['DEO'])) <= 1e-6

    def test_dynamics(self, tmp_path):
        config = {
            'kind': 'fig1bc_dynamics', 'spec': LABEL_SPEC, 'n': 20, 'seeds': [0], 'losses': ['CE', 'CDT'],
            'iterations': 20, 'record_every': 10, 'step_size': 0.1, 'delta': 2.0,
        }
        run(config, tmp_path, threads=1, record=False)
        rows = read_rows(tmp_path / 'fig1bc_dynamics.csv')
        assert [(r['loss_name'], r['iter']) for r in rows] == [
            ('CE', '0'), ('CE', '10'), ('CE', '20'), ('CDT', '0'), ('CDT', '10'), ('CDT', '20'),
        ]
        assert rows[0]['angle_gap_cs'] == ''
        assert rows[1]['angle_gap_cs'] != ''
        # intercept-free CS-SVM and SVM directions differ
        assert rows[-1]['angle_gap_cs'] != rows[-1]['angle_gap_svm']

    def test_feature_sweep(self, tmp_path):
        config = {
            'kind': 'fig1a_sweep', 'spec': LABEL_SPEC, 'ps': [10, 40], 'n': 20, 'seeds': [0],
            'losses': ['CDT'], 'iterations': 50, 'delta': 2.0,
        }
        run(config, tmp_path, threads=1, record=False)
        rows = read_rows(tmp_path / 'fig1a_sweep.csv')
        assert [r['p'] for r in rows] == ['10', '40']
        assert all(r['mc_R_bal'] != '' for r in rows)

    def test_random_features_from_files(self, tmp_path):
        spec = LabelGmmSpecFactory(d=10, pi=0.3)
        write_dataset_csv(sample_label_gmm(spec, 200, seed=0), tmp_path / 'train.csv')
        write_dataset_csv(sample_label_gmm(spec, 100, seed=1), tmp_path / 'test.csv')
        config = {
            'kind': 'mnist_rf', 'data_path': str(tmp_path / 'train.csv'), 'test_path': str(tmp_path / 'test.csv'),
            'gammas': [2.0], 'seeds': [0], 'n_features': 20,
        }
        outcome = run(config, tmp_path / 'out', threads=1, record=False)
        rows = read_rows(tmp_path / 'out' / 'mnist_rf.csv')
        assert [r['method'] for r in rows] == ['svm', 'heuristic', 'plug_in']
        assert 0.0 < outcome.manifest['summary']['pi'] < 1.0


class TestRecording:
    def test_invalid_config(self, tmp_path):
        with pytest.raises(ValidationError):
            run({'kind': 'tradeoff_label', 'spec': LABEL_SPEC}, tmp_path, record=False)

    @pytest.mark.django_db
    def test_completed_run_is_recorded(self, tmp_path):
        config = {'kind': 'deo_zero', 'spec': GROUP_SPEC, 'gammas': [2.0], 'deo_bracket': [0.5, 2.0]}
        outcome = run(config, tmp_path, threads=1, record=True)
        entry = ExperimentRun.objects.get()
        assert entry.status == 'completed'
        assert entry.manifest == json.loads((tmp_path / 'manifest.json').read_text())
        assert entry.config_hash == outcome.manifest['config_hash']
        assert entry.finished_at is not None

    @pytest.mark.django_db
    def test_failed_run_is_recorded(self, tmp_path):
        config = {'kind': 'deo_zero', 'spec': GROUP_SPEC, 'gammas': [2.0], 'deo_bracket': [1.5, 3.0]}
        with pytest.raises(BracketError):
            run(config, tmp_path, threads=1, record=True)
        entry = ExperimentRun.objects.get()
        assert entry.status == 'failed'
        assert 'gamma=2' in entry.error_message
