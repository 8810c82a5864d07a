"""
Gaussian-mixture generative models for label- and group-imbalanced data.

Means are stored column-wise (d x 2) next to the eigendecomposition of their
Gramian, M'M = V S^2 V', which is what the asymptotic theory consumes.
"""
import csv
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .exceptions import DegenerateModelError, SamplingError, ValidationError

logger = logging.getLogger(__name__)

RANK_TOL = 1e-12
MAX_RESAMPLE_ATTEMPTS = 100


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class MeanModel:
    means: np.ndarray
    V: np.ndarray
    s: np.ndarray

    @property
    def rank(self):
        return self.s.shape[0]

    @property
    def S(self):
        return np.diag(self.s)

    @property
    def VS(self):
        """2 x r matrix whose rows give the mean projections onto the rho-space."""
        return self.V * self.s

    @property
    def dimension(self):
        return self.means.shape[0]

    @property
    def gramian(self):
        return self.means.T @ self.means

    def column(self, index):
        return np.array(self.means[:, index])


def gramian_decompose(means):
    """Eigendecomposition of the 2 x 2 Gramian of the two mean columns."""
    means = np.asarray(means, dtype=float)
    if means.ndim != 2 or means.shape[1] != 2:
        raise ValidationError(f"expected a d x 2 matrix of means, got shape {means.shape}")
    if not np.all(np.isfinite(means)):
        raise ValidationError("means must be finite")
    if not np.any(means):
        raise DegenerateModelError("both means are zero")

    eigvals, eigvecs = np.linalg.eigh(means.T @ means)
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    eigvals = np.clip(eigvals, 0.0, None)
    if eigvals[0] <= 0.0:
        raise DegenerateModelError("mean Gramian is numerically zero")

    rank = 1 if eigvals[1] < RANK_TOL * eigvals[0] else 2
    V = eigvecs[:, :rank]
    # deterministic column signs: first non-negligible entry positive
    for j in range(rank):
        pivot = V[np.argmax(np.abs(V[:, j]) > 1e-12), j]
        if pivot < 0:
            V[:, j] = -V[:, j]
    return MeanModel(_frozen(means), _frozen(V), _frozen(np.sqrt(eigvals[:rank])))


def antipodal_means(d, s):
    mu = np.zeros(d)
    mu[0] = s
    return np.column_stack([mu, -mu])


def orthogonal_means(d, s1, s2):
    if d < 2:
        raise ValidationError("orthogonal means need d >= 2")
    means = np.zeros((d, 2))
    means[0, 0] = s1
    means[1, 1] = s2
    return means


def embed_means(mean_model, d):
    """Means in R^d with the same Gramian as ``mean_model``, on the first coordinates."""
    if d < mean_model.rank:
        raise ValidationError(f"d={d} is below the rank {mean_model.rank} of the means")
    means = np.zeros((d, 2))
    means[:mean_model.rank] = mean_model.VS.T
    return means


def random_means(d, norms, seed):
    """Independent Gaussian directions rescaled to the requested norms."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((d, 2))
    return raw / np.linalg.norm(raw, axis=0) * np.asarray(norms, dtype=float)


@dataclass(frozen=True)
class LabelGmmSpec:
    """x | y ~ N(mu_y, Sigma) with P(y = +1) = pi; column 0 is mu_+, column 1 is mu_-."""

    mean_model: MeanModel
    pi: float
    covariance: np.ndarray = None

    def __post_init__(self):
        if not 0.0 < self.pi < 1.0:
            raise ValidationError(f"pi must lie in (0, 1), got {self.pi}")
        if self.covariance is not None:
            cov = _frozen(self.covariance)
            d = self.mean_model.dimension
            if cov.shape != (d, d):
                raise ValidationError(f"covariance must be {d} x {d}, got {cov.shape}")
            if not np.allclose(cov, cov.T, atol=1e-12):
                raise ValidationError("covariance must be symmetric")
            object.__setattr__(self, 'covariance', cov)

    @classmethod
    def from_means(cls, means, pi, covariance=None):
        return cls(gramian_decompose(means), pi, covariance)

    @property
    def dimension(self):
        return self.mean_model.dimension

    @property
    def is_isotropic(self):
        return self.covariance is None

    @property
    def mu_plus(self):
        return self.mean_model.column(0)

    @property
    def mu_minus(self):
        return self.mean_model.column(1)


@dataclass(frozen=True)
class GroupGmmSpec:
    """x | (y, g) ~ N(y mu_g, sigma_g^2 I); P(y = +1) = pi and P(g = 1) = p."""

    mean_model: MeanModel
    pi: float
    p: float
    sigma1: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.pi < 1.0:
            raise ValidationError(f"pi must lie in (0, 1), got {self.pi}")
        if not 0.0 < self.p < 1.0:
            raise ValidationError(f"p must lie in (0, 1), got {self.p}")
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise ValidationError("group noise levels must be positive")

    @classmethod
    def from_means(cls, means, pi, p, sigma1=1.0, sigma2=1.0):
        return cls(gramian_decompose(means), pi, p, sigma1, sigma2)

    @property
    def dimension(self):
        return self.mean_model.dimension

    @property
    def sigmas(self):
        return np.array([self.sigma1, self.sigma2])

    def group_mean(self, group):
        return self.mean_model.column(group - 1)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    groups: np.ndarray = None
    seed: int = None

    def __post_init__(self):
        features = _frozen(self.features)
        labels = np.array(self.labels, dtype=int)
        labels.setflags(write=False)
        if features.ndim != 2 or labels.shape != (features.shape[0],):
            raise ValidationError(
                f"inconsistent shapes: features {features.shape}, labels {labels.shape}"
            )
        object.__setattr__(self, 'features', features)
        object.__setattr__(self, 'labels', labels)
        if self.groups is not None:
            groups = np.array(self.groups, dtype=int)
            groups.setflags(write=False)
            if groups.shape != labels.shape:
                raise ValidationError("groups must have one entry per example")
            if not np.isin(groups, (1, 2)).all():
                raise ValidationError("groups must take values in {1, 2}")
            object.__setattr__(self, 'groups', groups)
        if np.unique(labels).size < 2:
            raise ValidationError("dataset needs at least one example per class")

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def gamma(self):
        return self.d / self.n

    @property
    def is_binary(self):
        return set(np.unique(self.labels)) <= {-1, 1}

    @property
    def has_groups(self):
        return self.groups is not None

    @property
    def classes(self):
        return np.unique(self.labels)

    def class_counts(self):
        """Binary datasets report (N_+, N_-); multiclass ones count labels 0..C-1."""
        if self.is_binary:
            return np.array([np.sum(self.labels == 1), np.sum(self.labels == -1)])
        return np.bincount(self.labels)

    def subgroup_counts(self):
        if not self.has_groups:
            raise ValidationError("dataset carries no group labels")
        return {
            (y, g): int(np.sum((self.labels == y) & (self.groups == g)))
            for y in (1, -1) for g in (1, 2)
        }

    def subset(self, mask):
        return Dataset(
            self.features[mask],
            self.labels[mask],
            None if self.groups is None else self.groups[mask],
            self.seed,
        )


def _draw_labels(rng, n, prob):
    for attempt in range(MAX_RESAMPLE_ATTEMPTS):
        labels = np.where(rng.random(n) < prob, 1, -1)
        if np.any(labels == 1) and np.any(labels == -1):
            return labels
        logger.warning("empty class in label draw (attempt %d), resampling", attempt + 1)
    raise SamplingError(
        f"could not draw both classes in {MAX_RESAMPLE_ATTEMPTS} attempts (n={n}, pi={prob})"
    )


def _noise(rng, spec, n):
    z = rng.standard_normal((n, spec.dimension))
    if spec.is_isotropic:
        return z
    return z @ np.linalg.cholesky(spec.covariance).T


def sample_label_gmm(spec, n, seed, n_per_class=None):
    """Draw n labelled examples; ``n_per_class=(n_plus, n_minus)`` fixes the counts."""
    rng = np.random.default_rng(seed)
    if n_per_class is not None:
        n_plus, n_minus = (int(k) for k in n_per_class)
        if n_plus < 1 or n_minus < 1:
            raise ValidationError("each class needs at least one example")
        labels = np.concatenate([np.ones(n_plus, dtype=int), -np.ones(n_minus, dtype=int)])
    else:
        if n < 2:
            raise ValidationError("need n >= 2 to observe both classes")
        labels = _draw_labels(rng, n, spec.pi)
    means = np.where((labels == 1)[:, None], spec.mu_plus, spec.mu_minus)
    features = means + _noise(rng, spec, labels.shape[0])
    return Dataset(features, labels, None, seed)


def sample_group_gmm(spec, n, seed, n_per_subgroup=None):
    """
    Draw n examples with group labels; ``n_per_subgroup`` maps (y, g) to exact counts.
    """
    rng = np.random.default_rng(seed)
    if n_per_subgroup is not None:
        keys = [(y, g) for y in (1, -1) for g in (1, 2)]
        labels = np.concatenate([np.full(int(n_per_subgroup.get(k, 0)), k[0]) for k in keys])
        groups = np.concatenate([np.full(int(n_per_subgroup.get(k, 0)), k[1]) for k in keys])
    else:
        if n < 2:
            raise ValidationError("need n >= 2 to observe both classes")
        labels = _draw_labels(rng, n, spec.pi)
        groups = np.where(rng.random(n) < spec.p, 1, 2)
    means = spec.mean_model.means[:, groups - 1].T * labels[:, None]
    scales = spec.sigmas[groups - 1][:, None]
    features = means + scales * rng.standard_normal((labels.shape[0], spec.dimension))
    return Dataset(features, labels, groups, seed)


def _inverse_sqrt(matrix):
    eigvals, eigvecs = np.linalg.eigh(matrix)
    if eigvals[0] <= RANK_TOL * max(eigvals[-1], 1.0):
        raise DegenerateModelError("covariance is singular")
    return (eigvecs / np.sqrt(eigvals)) @ eigvecs.T


def whiten(spec):
    """Identity-covariance spec with means Sigma^{-1/2} mu_y."""
    if spec.is_isotropic:
        return spec
    root = _inverse_sqrt(spec.covariance)
    return LabelGmmSpec.from_means(root @ spec.mean_model.means, spec.pi)


def truncate_features(obj, p):
    """Keep coordinates 1..p of a dataset's features or of a spec's means."""
    d = obj.d if isinstance(obj, Dataset) else obj.dimension
    if not 1 <= p <= d:
        raise ValidationError(f"p must lie in [1, {d}], got {p}")
    if isinstance(obj, Dataset):
        return replace(obj, features=obj.features[:, :p])
    means = obj.mean_model.means[:p]
    if isinstance(obj, LabelGmmSpec):
        cov = None if obj.covariance is None else obj.covariance[:p, :p]
        return LabelGmmSpec.from_means(means, obj.pi, cov)
    return GroupGmmSpec.from_means(means, obj.pi, obj.p, obj.sigma1, obj.sigma2)


def undersample_majority(dataset, seed):
    """Randomly drop majority-class examples until both classes are equally large."""
    rng = np.random.default_rng(seed)
    plus = np.flatnonzero(dataset.labels == 1)
    minus = np.flatnonzero(dataset.labels == -1)
    minority, majority = (plus, minus) if plus.size <= minus.size else (minus, plus)
    keep = np.sort(np.concatenate([minority, rng.choice(majority, minority.size, replace=False)]))
    return dataset.subset(keep)


def random_relu_features(dataset, n_features, seed):
    """ReLU random-feature map x -> max(0, R x) with R_ij ~ N(0, 1/d)."""
    rng = np.random.default_rng(seed)
    projection = rng.standard_normal((dataset.d, n_features)) / np.sqrt(dataset.d)
    return replace(dataset, features=np.maximum(dataset.features @ projection, 0.0))


def write_dataset_csv(dataset, path):
    path = Path(path)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(['y', 'g'] + [f'x{j + 1}' for j in range(dataset.d)])
        for i in range(dataset.n):
            group = '' if dataset.groups is None else int(dataset.groups[i])
            writer.writerow([int(dataset.labels[i]), group] + [repr(float(v)) for v in dataset.features[i]])
    return path


def read_dataset_csv(path, seed=None):
    with Path(path).open(newline='') as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header[:2] != ['y', 'g']:
            raise ValidationError(f"unexpected dataset header: {header[:2]}")
        rows = list(reader)
    labels = [int(row[0]) for row in rows]
    groups = [row[1] for row in rows]
    features = [[float(v) for v in row[2:]] for row in rows]
    has_groups = all(g != '' for g in groups)
    return Dataset(
        np.array(features), np.array(labels),
        np.array([int(g) for g in groups]) if has_groups else None,
        seed,
    )
