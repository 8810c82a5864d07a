"""
The VS-loss family: per-class weights omega, additive logit adjustments iota and
multiplicative logit adjustments Delta.

Binary losses index classes as 0 <-> y=+1 and 1 <-> y=-1. Multiclass losses use
labels 0..C-1 directly. Group losses index the four subgroups (y, g) in the order
of ``SUBGROUPS``.
"""
import enum
import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import log_expit, logsumexp, softmax

from .exceptions import DimensionMismatchError, ValidationError
from .linear import LinearModel, MulticlassModel

logger = logging.getLogger(__name__)

SUBGROUPS = ((1, 1), (1, 2), (-1, 1), (-1, 2))

PRESET_KINDS = ('CE', 'wCE', 'LA', 'LDAM', 'CDT', 'VS')
GROUP_PRESET_KINDS = ('CE', 'LA', 'CDT', 'VS')


def _vector(values):
    array = np.array(values, dtype=float).reshape(-1)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class VsParams:
    omega: np.ndarray
    iota: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        omega, iota, delta = _vector(self.omega), _vector(self.iota), _vector(self.delta)
        if not omega.shape == iota.shape == delta.shape:
            raise ValidationError("omega, iota and delta must have one entry per class")
        if np.any(omega <= 0) or np.any(delta <= 0):
            raise ValidationError("omega and delta must be strictly positive")
        object.__setattr__(self, 'omega', omega)
        object.__setattr__(self, 'iota', iota)
        object.__setattr__(self, 'delta', delta)

    @classmethod
    def uniform(cls, n_classes=2):
        return cls(np.ones(n_classes), np.zeros(n_classes), np.ones(n_classes))

    @classmethod
    def cdt(cls, delta_ratio):
        """Binary (Delta_+, Delta_-) = (1/delta, 1): the loss whose limit is CS-SVM(delta)."""
        return cls(np.ones(2), np.zeros(2), [1.0 / delta_ratio, 1.0])

    @property
    def n_classes(self):
        return self.omega.shape[0]

    @property
    def margin_ratio(self):
        """delta = Delta_- / Delta_+ of a binary parameter set."""
        return float(self.delta[1] / self.delta[0])

    def to_binary(self):
        """
        Convert per-class logit offsets into the additive adjustments of the binary
        loss: iota_bin(y) = iota(-y) - iota(y).
        """
        if self.n_classes != 2:
            raise ValidationError("only two-class parameters have a binary form")
        return VsParams(self.omega, [self.iota[1] - self.iota[0], self.iota[0] - self.iota[1]], self.delta)


class MulticlassVariant(enum.Enum):
    SHARED_DELTA = 'shared'
    PER_LOGIT_DELTA = 'per_logit'


@dataclass(frozen=True)
class GroupVsParams:
    """Triples (omega, iota, Delta) for the subgroups listed in ``SUBGROUPS``."""

    omega: np.ndarray
    iota: np.ndarray
    delta: np.ndarray

    def __post_init__(self):
        omega, iota, delta = _vector(self.omega), _vector(self.iota), _vector(self.delta)
        if not omega.shape == iota.shape == delta.shape == (len(SUBGROUPS),):
            raise ValidationError("group parameters need one triple per (y, g) subgroup")
        if np.any(omega <= 0) or np.any(delta <= 0):
            raise ValidationError("omega and delta must be strictly positive")
        object.__setattr__(self, 'omega', omega)
        object.__setattr__(self, 'iota', iota)
        object.__setattr__(self, 'delta', delta)

    @classmethod
    def from_mapping(cls, triples):
        """Build from ``{(y, g): (omega, iota, Delta)}``."""
        missing = [s for s in SUBGROUPS if s not in triples]
        if missing:
            raise ValidationError(f"missing subgroup triples: {missing}")
        omega, iota, delta = zip(*(triples[s] for s in SUBGROUPS))
        return cls(omega, iota, delta)

    @classmethod
    def uniform(cls):
        return cls(np.ones(4), np.zeros(4), np.ones(4))

    @classmethod
    def gs(cls, delta_ratio):
        """Delta_{y,g} = Delta_g with (Delta_1, Delta_2) = (1/delta, 1)."""
        delta = [1.0 / delta_ratio if g == 1 else 1.0 for _, g in SUBGROUPS]
        return cls(np.ones(4), np.zeros(4), delta)

    def triple(self, subgroup):
        k = SUBGROUPS.index(subgroup)
        return self.omega[k], self.iota[k], self.delta[k]


def _binary_index(dataset):
    if not dataset.is_binary:
        raise ValidationError("binary loss requires labels in {+1, -1}")
    return (dataset.labels == -1).astype(int)


def subgroup_index(labels, groups):
    labels = np.asarray(labels)
    groups = np.asarray(groups)
    return np.where(labels == 1, 0, 2) + (groups - 1)


def _check_dimension(model, dataset):
    if model.dimension != dataset.d:
        raise DimensionMismatchError(
            f"model has dimension {model.dimension}, dataset has {dataset.d}"
        )


def _per_example(params, dataset):
    if params.n_classes != 2:
        raise ValidationError("binary loss requires two-class parameters")
    k = _binary_index(dataset)
    return params.omega[k], params.iota[k], params.delta[k]


def weighted_logistic_scaled(omega, iota, delta, model, dataset):
    """
    Value, gradient direction and log-scale of the weighted logistic loss.

    The gradient equals ``exp(log_scale) * direction``. The per-example factors
    sigma(iota - Delta y f) are kept in the log domain, so the direction stays
    representable after the gradient itself has underflowed.
    """
    _check_dimension(model, dataset)
    y = dataset.labels
    z = iota - delta * y * model.decision_function(dataset.features)
    value = float(np.sum(omega * np.logaddexp(0.0, z)))
    log_coef = np.log(omega) + np.log(delta) + log_expit(z)
    log_scale = float(log_coef.max())
    coef = -y * np.exp(log_coef - log_scale)
    return value, LinearModel(dataset.features.T @ coef, coef.sum()), log_scale


def weighted_logistic(omega, iota, delta, model, dataset):
    value, direction, log_scale = weighted_logistic_scaled(omega, iota, delta, model, dataset)
    scale = np.exp(log_scale)
    return value, LinearModel(scale * direction.weights, scale * direction.intercept)


def weighted_exponential(omega, iota, delta, model, dataset):
    _check_dimension(model, dataset)
    y = dataset.labels
    margins = y * model.decision_function(dataset.features)
    terms = omega * np.exp(iota - delta * margins)
    coef = -delta * y * terms
    return float(np.sum(terms)), LinearModel(dataset.features.T @ coef, coef.sum())


def vs_loss_binary(params, model, dataset):
    """sum_i omega_y log(1 + e^{iota_y} e^{-Delta_y y_i f(x_i)})"""
    return weighted_logistic(*_per_example(params, dataset), model, dataset)[0]


def vs_grad_binary(params, model, dataset):
    """Gradient over (w, b), returned as a LinearModel."""
    return weighted_logistic(*_per_example(params, dataset), model, dataset)[1]


def vs_value_and_grad_binary(params, model, dataset):
    return weighted_logistic(*_per_example(params, dataset), model, dataset)


def vs_value_and_scaled_grad_binary(params, model, dataset):
    """Training objective: (value, gradient direction, log-scale); see ``weighted_logistic_scaled``."""
    return weighted_logistic_scaled(*_per_example(params, dataset), model, dataset)


def exp_vs_loss_binary(params, model, dataset):
    """Exponential-tail counterpart: sum_i omega_y e^{iota_y} e^{-Delta_y y_i f(x_i)}."""
    return weighted_exponential(*_per_example(params, dataset), model, dataset)[0]


def exp_vs_value_and_grad_binary(params, model, dataset):
    return weighted_exponential(*_per_example(params, dataset), model, dataset)


def _multiclass_logits(params, model, dataset, variant):
    if params.n_classes != model.n_classes:
        raise ValidationError(
            f"{params.n_classes} parameter triples for {model.n_classes} classes"
        )
    labels = dataset.labels
    if labels.min() < 0 or labels.max() >= model.n_classes:
        raise ValidationError(f"labels must lie in 0..{model.n_classes - 1}")
    raw = model.logits(dataset.features)
    if variant is MulticlassVariant.SHARED_DELTA:
        scale = params.delta[labels][:, None]
    elif variant is MulticlassVariant.PER_LOGIT_DELTA:
        scale = params.delta[None, :]
    else:
        raise ValidationError(f"unknown multiclass variant {variant!r}")
    return scale * raw + params.iota[None, :], scale


def vs_value_and_grad_multi(params, model, dataset, variant=MulticlassVariant.SHARED_DELTA):
    logits, scale = _multiclass_logits(params, model, dataset, variant)
    labels = dataset.labels
    rows = np.arange(dataset.n)
    omega = params.omega[labels]
    value = float(np.sum(omega * (logsumexp(logits, axis=1) - logits[rows, labels])))

    residual = softmax(logits, axis=1)
    residual[rows, labels] -= 1.0
    coef = omega[:, None] * scale * residual
    return value, MulticlassModel(coef.T @ dataset.features)


def vs_loss_multi(params, model, dataset, variant=MulticlassVariant.SHARED_DELTA):
    return vs_value_and_grad_multi(params, model, dataset, variant)[0]


def vs_grad_multi(params, model, dataset, variant=MulticlassVariant.SHARED_DELTA):
    return vs_value_and_grad_multi(params, model, dataset, variant)[1]


def preset(kind, class_counts, tau=1.0, gamma_exp=0.0):
    """
    Named members of the family, returned with iota as per-class logit offsets
    (use ``VsParams.to_binary`` before evaluating the binary loss).
    """
    counts = np.asarray(class_counts, dtype=float)
    if counts.ndim != 1 or counts.size < 2 or np.any(counts <= 0):
        raise ValidationError("class counts must be positive, one per class")
    if tau < 0 or gamma_exp < 0:
        raise ValidationError("tau and gamma_exp must be non-negative")
    priors = counts / counts.sum()
    ones, zeros = np.ones_like(counts), np.zeros_like(counts)

    if kind == 'CE':
        return VsParams(ones, zeros, ones)
    if kind == 'wCE':
        return VsParams(1.0 / priors, zeros, ones)
    if kind == 'LA':
        return VsParams(ones, tau * np.log(priors), ones)
    if kind == 'CDT':
        return VsParams(ones, zeros, (counts / counts.max()) ** gamma_exp)
    if kind == 'LDAM':
        return VsParams(ones, -0.5 * (counts.min() / counts) ** 0.25, ones)
    if kind == 'VS':
        return VsParams(ones, tau * np.log(priors), (counts / counts.max()) ** gamma_exp)
    raise ValidationError(f"unknown loss preset {kind!r}; expected one of {PRESET_KINDS}")


def group_preset(kind, subgroup_counts, gamma_exp=0.3):
    """Group-CE/LA/CDT/VS with beta_s = N_s / N_max, Delta_s = beta_s^gamma, iota_s = -beta_s^-gamma."""
    counts = np.array([subgroup_counts[s] for s in SUBGROUPS], dtype=float)
    if np.any(counts <= 0):
        raise ValidationError("every subgroup needs a positive count")
    beta = counts / counts.max()
    ones, zeros = np.ones(4), np.zeros(4)
    if kind == 'CE':
        return GroupVsParams(ones, zeros, ones)
    if kind == 'LA':
        return GroupVsParams(ones, -beta ** -gamma_exp, ones)
    if kind == 'CDT':
        return GroupVsParams(ones, zeros, beta ** gamma_exp)
    if kind == 'VS':
        return GroupVsParams(ones, -beta ** -gamma_exp, beta ** gamma_exp)
    raise ValidationError(f"unknown group preset {kind!r}; expected one of {GROUP_PRESET_KINDS}")


def _group_terms(params, dataset):
    if not dataset.has_groups:
        raise ValidationError("group loss requires group labels")
    k = subgroup_index(dataset.labels, dataset.groups)
    return params.omega[k], params.iota[k], params.delta[k]


def group_vs_value_and_grad(params, model, dataset, reduction='sum'):
    value, grad = weighted_logistic(*_group_terms(params, dataset), model, dataset)
    if reduction == 'mean':
        return value / dataset.n, grad.scaled(1.0 / dataset.n)
    if reduction != 'sum':
        raise ValidationError(f"unknown reduction {reduction!r}")
    return value, grad


def group_vs_loss(params, model, dataset, reduction='sum'):
    return group_vs_value_and_grad(params, model, dataset, reduction)[0]


def group_vs_grad(params, model, dataset, reduction='sum'):
    return group_vs_value_and_grad(params, model, dataset, reduction)[1]


def smoothness_bound(params, dataset, with_intercept=True):
    """Upper bound on the Lipschitz constant of the binary VS-loss gradient."""
    omega, _, delta = _per_example(params, dataset)
    sq_norms = np.sum(dataset.features ** 2, axis=1) + (1.0 if with_intercept else 0.0)
    return float(0.25 * np.sum(omega * delta ** 2 * sq_norms))
