import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from vsmargin.exceptions import DegenerateModelError, ValidationError
from vsmargin.mixture import (
    Dataset, LabelGmmSpec, antipodal_means, embed_means, gramian_decompose, orthogonal_means,
    random_means, random_relu_features, read_dataset_csv, sample_group_gmm, sample_label_gmm,
    truncate_features, undersample_majority, whiten, write_dataset_csv,
)

from .factories import GroupGmmSpecFactory, LabelGmmSpecFactory, MeanModelFactory


class TestGramianDecompose:
    def test_antipodal_means_have_rank_one(self):
        mean_model = gramian_decompose(antipodal_means(10, 3.0))
        assert mean_model.rank == 1
        assert_allclose(mean_model.VS[:, 0], [3.0, -3.0], atol=1e-12)

    def test_orthogonal_means_have_rank_two(self):
        mean_model = gramian_decompose(orthogonal_means(10, 2.0, 1.0))
        assert mean_model.rank == 2
        assert_allclose(np.sort(mean_model.s), [1.0, 2.0], atol=1e-12)

    def test_reconstructs_the_gramian(self):
        mean_model = gramian_decompose(random_means(20, (1.5, 0.7), seed=3))
        assert_allclose(mean_model.VS @ mean_model.VS.T, mean_model.gramian, atol=1e-12)

    def test_zero_means_are_degenerate(self):
        with pytest.raises(DegenerateModelError):
            gramian_decompose(np.zeros((5, 2)))

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValidationError):
            gramian_decompose(np.ones((5, 3)))

    def test_embed_means_keeps_the_gramian(self):
        mean_model = MeanModelFactory(means=orthogonal_means(4, 1.0, 2.0))
        embedded = gramian_decompose(embed_means(mean_model, 30))
        assert embedded.dimension == 30
        assert_allclose(embedded.gramian, mean_model.gramian, atol=1e-12)

    def test_embed_means_below_rank(self):
        mean_model = MeanModelFactory(means=orthogonal_means(4, 1.0, 2.0))
        with pytest.raises(ValidationError):
            embed_means(mean_model, 1)


class TestSampling:
    def test_same_seed_same_data(self):
        spec = LabelGmmSpecFactory()
        first = sample_label_gmm(spec, 200, seed=7)
        second = sample_label_gmm(spec, 200, seed=7)
        assert_array_equal(first.features, second.features)
        assert_array_equal(first.labels, second.labels)

    def test_class_frequency(self):
        spec = LabelGmmSpecFactory(d=2, pi=0.1)
        n = 100000
        dataset = sample_label_gmm(spec, n, seed=0)
        n_plus = dataset.class_counts()[0]
        assert abs(n_plus - 0.1 * n) <= 5 * np.sqrt(n * 0.1 * 0.9)

    def test_class_means(self):
        spec = LabelGmmSpecFactory(d=3, norm_plus=4.0, norm_minus=2.0, pi=0.5)
        dataset = sample_label_gmm(spec, 40000, seed=1)
        plus_mean = dataset.features[dataset.labels == 1].mean(axis=0)
        minus_mean = dataset.features[dataset.labels == -1].mean(axis=0)
        assert_allclose(plus_mean, [4.0, 0.0, 0.0], atol=0.05)
        assert_allclose(minus_mean, [-2.0, 0.0, 0.0], atol=0.05)

    def test_exact_class_counts(self):
        dataset = sample_label_gmm(LabelGmmSpecFactory(), 0, seed=0, n_per_class=(3, 17))
        assert_array_equal(dataset.class_counts(), [3, 17])

    def test_too_few_examples(self):
        with pytest.raises(ValidationError):
            sample_label_gmm(LabelGmmSpecFactory(), 1, seed=0)

    def test_subgroup_frequencies(self):
        spec = GroupGmmSpecFactory(d=2, pi=0.5, p=0.5)
        n = 100000
        counts = sample_group_gmm(spec, n, seed=2).subgroup_counts()
        for count in counts.values():
            assert abs(count - n / 4) <= 5 * np.sqrt(n * 0.25 * 0.75)

    def test_group_noise_level(self):
        spec = GroupGmmSpecFactory(d=2, sigma1=0.5, sigma2=2.0)
        counts = {(1, 1): 10000, (1, 2): 10000, (-1, 1): 10000, (-1, 2): 10000}
        dataset = sample_group_gmm(spec, 0, seed=4, n_per_subgroup=counts)
        # coordinates orthogonal to a group's mean carry pure noise
        assert np.std(dataset.features[dataset.groups == 1, 1]) == pytest.approx(0.5, rel=0.03)
        assert np.std(dataset.features[dataset.groups == 2, 0]) == pytest.approx(2.0, rel=0.03)


class TestDataset:
    def test_needs_both_classes(self):
        with pytest.raises(ValidationError):
            Dataset(np.zeros((3, 2)), [1, 1, 1])

    def test_rejects_bad_groups(self):
        with pytest.raises(ValidationError):
            Dataset(np.zeros((2, 2)), [1, -1], groups=[1, 3])

    def test_truncate_dataset_and_spec(self):
        spec = LabelGmmSpecFactory(d=10)
        dataset = sample_label_gmm(spec, 20, seed=0)
        assert truncate_features(dataset, 4).d == 4
        assert truncate_features(spec, 4).dimension == 4
        with pytest.raises(ValidationError):
            truncate_features(dataset, 11)

    def test_undersample_majority_balances_classes(self):
        dataset = sample_label_gmm(LabelGmmSpecFactory(), 0, seed=0, n_per_class=(5, 40))
        balanced = undersample_majority(dataset, seed=1)
        assert_array_equal(balanced.class_counts(), [5, 5])

    def test_random_relu_features(self):
        dataset = sample_label_gmm(LabelGmmSpecFactory(d=5), 30, seed=0)
        mapped = random_relu_features(dataset, 12, seed=3)
        assert mapped.features.shape == (30, 12)
        assert np.all(mapped.features >= 0)
        assert_array_equal(mapped.features, random_relu_features(dataset, 12, seed=3).features)

    def test_csv_keeps_groups_and_values(self, tmp_path):
        dataset = sample_group_gmm(GroupGmmSpecFactory(d=3), 25, seed=5)
        path = write_dataset_csv(dataset, tmp_path / 'data.csv')
        assert path.read_text().splitlines()[0] == 'y,g,x1,x2,x3'
        loaded = read_dataset_csv(path)
        assert_array_equal(loaded.features, dataset.features)
        assert_array_equal(loaded.groups, dataset.groups)


def test_whiten_rescales_means():
    means = antipodal_means(3, 2.0)
    spec = LabelGmmSpec.from_means(means, 0.3, covariance=4.0 * np.eye(3))
    white = whiten(spec)
    assert white.is_isotropic
    assert_allclose(white.mu_plus, [1.0, 0.0, 0.0], atol=1e-12)
