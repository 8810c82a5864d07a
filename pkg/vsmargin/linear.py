"""Linear classifiers shared by the losses, trainers, solvers and risk evaluators."""
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError, ValidationError


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class LinearModel:
    """Binary classifier f(x) = w'x + b."""

    weights: np.ndarray
    intercept: float = 0.0

    def __post_init__(self):
        weights = _frozen(self.weights)
        if weights.ndim != 1:
            raise ValidationError("weights must be a vector")
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'intercept', float(self.intercept))

    @classmethod
    def zeros(cls, dimension):
        return cls(np.zeros(dimension), 0.0)

    @classmethod
    def from_vector(cls, vector, with_intercept=True):
        vector = np.asarray(vector, dtype=float)
        if with_intercept:
            return cls(vector[:-1], vector[-1])
        return cls(vector, 0.0)

    @property
    def dimension(self):
        return self.weights.shape[0]

    @property
    def norm(self):
        return float(np.linalg.norm(self.weights))

    def as_vector(self, with_intercept=True):
        if with_intercept:
            return np.append(self.weights, self.intercept)
        return np.array(self.weights)

    def decision_function(self, features):
        features = np.asarray(features, dtype=float)
        if features.shape[-1] != self.dimension:
            raise DimensionMismatchError(
                f"model has dimension {self.dimension}, features have {features.shape[-1]}"
            )
        return features @ self.weights + self.intercept

    def predict(self, features):
        return np.where(self.decision_function(features) >= 0, 1, -1)

    def scaled(self, factor):
        return LinearModel(factor * self.weights, factor * self.intercept)

    def is_finite(self):
        return bool(np.all(np.isfinite(self.weights)) and np.isfinite(self.intercept))


@dataclass(frozen=True)
class MulticlassModel:
    """One weight vector per class, stacked as a C x d matrix; logits are W x."""

    weights: np.ndarray

    def __post_init__(self):
        weights = _frozen(self.weights)
        if weights.ndim != 2:
            raise ValidationError("multiclass weights must be a C x d matrix")
        object.__setattr__(self, 'weights', weights)

    @property
    def n_classes(self):
        return self.weights.shape[0]

    @property
    def dimension(self):
        return self.weights.shape[1]

    def logits(self, features):
        features = np.asarray(features, dtype=float)
        if features.shape[-1] != self.dimension:
            raise DimensionMismatchError(
                f"model has dimension {self.dimension}, features have {features.shape[-1]}"
            )
        return features @ self.weights.T

    def predict(self, features):
        return np.argmax(self.logits(features), axis=-1)
