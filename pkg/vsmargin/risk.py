"""Closed-form and Monte-Carlo risks of linear classifiers under the Gaussian mixtures."""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from .exceptions import ValidationError
from .linear import LinearModel
from .mixture import GroupGmmSpec, LabelGmmSpec, sample_group_gmm, sample_label_gmm

logger = logging.getLogger(__name__)

RISK_COLUMNS = ('R_plus', 'R_minus', 'R_bal', 'R_std', 'DEO')
SUBGROUP_KEYS = ((1, 1), (1, 2), (-1, 1), (-1, 2))


def q_function(x):
    """Standard normal tail Q(x) = P(G > x), evaluated through erfc."""
    value = 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class RiskReport:
    """
    Class-conditional risks, and when groups are modelled the four subgroup risks
    R_{y,g}. Standard errors are attached for Monte-Carlo estimates.
    """

    r_plus: float
    r_minus: float
    pi: float
    subgroup: dict = None
    p: float = None
    sem: dict = None
    absent: tuple = field(default_factory=tuple)

    @classmethod
    def from_subgroups(cls, subgroup, pi, p, sem=None, absent=()):
        r_plus = p * subgroup[(1, 1)] + (1 - p) * subgroup[(1, 2)]
        r_minus = p * subgroup[(-1, 1)] + (1 - p) * subgroup[(-1, 2)]
        return cls(r_plus, r_minus, pi, dict(subgroup), p, sem, tuple(absent))

    @property
    def standard(self):
        return self.pi * self.r_plus + (1 - self.pi) * self.r_minus

    @property
    def balanced(self):
        return 0.5 * (self.r_plus + self.r_minus)

    @property
    def balanced_accuracy(self):
        return 1.0 - self.balanced

    @property
    def deo(self):
        if self.subgroup is None:
            return None
        return self.subgroup[(1, 1)] - self.subgroup[(1, 2)]

    @property
    def symm_deo(self):
        if self.subgroup is None:
            return None
        return 0.5 * (
            abs(self.subgroup[(1, 1)] - self.subgroup[(1, 2)])
            + abs(self.subgroup[(-1, 1)] - self.subgroup[(-1, 2)])
        )

    @property
    def worst_group(self):
        if self.subgroup is None:
            return max(self.r_plus, self.r_minus)
        return max(v for v in self.subgroup.values() if np.isfinite(v))

    @property
    def worst_group_accuracy(self):
        return 1.0 - self.worst_group

    def as_row(self):
        deo = self.deo
        return {
            'R_plus': self.r_plus,
            'R_minus': self.r_minus,
            'R_bal': self.balanced,
            'R_std': self.standard,
            'DEO': '' if deo is None else deo,
        }


def _check_model(model):
    if not isinstance(model, LinearModel):
        raise ValidationError("risk evaluation expects a binary LinearModel")
    if model.norm == 0:
        raise ValidationError("weight vector must be nonzero")


def closed_form_risks(model, spec):
    _check_model(model)
    w, b = model.weights, model.intercept
    if isinstance(spec, LabelGmmSpec):
        scale = np.linalg.norm(w) if spec.is_isotropic else np.sqrt(w @ spec.covariance @ w)
        return RiskReport(
            q_function((spec.mu_plus @ w + b) / scale),
            q_function((-spec.mu_minus @ w - b) / scale),
            spec.pi,
        )
    if isinstance(spec, GroupGmmSpec):
        norm = np.linalg.norm(w)
        subgroup = {}
        for y, g in SUBGROUP_KEYS:
            projection = spec.group_mean(g) @ w
            sigma = spec.sigmas[g - 1]
            subgroup[(y, g)] = q_function((projection + y * b) / (sigma * norm))
        return RiskReport.from_subgroups(subgroup, spec.pi, spec.p)
    raise ValidationError(f"unsupported spec type {type(spec).__name__}")


def _error_rate(model, dataset, mask):
    count = int(mask.sum())
    if count == 0:
        return np.nan, np.nan
    errors = model.predict(dataset.features[mask]) != dataset.labels[mask]
    rate = float(errors.mean())
    return rate, float(np.sqrt(rate * (1 - rate) / count))


def _combine_sem(weights, sems):
    return float(np.sqrt(sum((w * s) ** 2 for w, s in zip(weights, sems))))


def _report_from_dataset(model, dataset, pi, p):
    labels = dataset.labels
    if dataset.groups is None:
        r_plus, se_plus = _error_rate(model, dataset, labels == 1)
        r_minus, se_minus = _error_rate(model, dataset, labels == -1)
        sem = {
            'R_plus': se_plus,
            'R_minus': se_minus,
            'R_bal': _combine_sem((0.5, 0.5), (se_plus, se_minus)),
            'R_std': _combine_sem((pi, 1 - pi), (se_plus, se_minus)),
        }
        return RiskReport(r_plus, r_minus, pi, sem=sem)

    subgroup, sems, absent = {}, {}, []
    for y, g in SUBGROUP_KEYS:
        rate, se = _error_rate(model, dataset, (labels == y) & (dataset.groups == g))
        subgroup[(y, g)], sems[(y, g)] = rate, se
        if np.isnan(rate):
            absent.append((y, g))
    if absent:
        logger.warning("no test samples for subgroups %s", absent)
    se_plus = _combine_sem((p, 1 - p), (sems[(1, 1)], sems[(1, 2)]))
    se_minus = _combine_sem((p, 1 - p), (sems[(-1, 1)], sems[(-1, 2)]))
    sem = {
        'subgroup': sems,
        'R_plus': se_plus,
        'R_minus': se_minus,
        'R_bal': _combine_sem((0.5, 0.5), (se_plus, se_minus)),
        'R_std': _combine_sem((pi, 1 - pi), (se_plus, se_minus)),
        'DEO': _combine_sem((1.0, 1.0), (sems[(1, 1)], sems[(1, 2)])),
    }
    return RiskReport.from_subgroups(subgroup, pi, p, sem, absent)


def mc_risks(model, spec, n_test, seed, stratified=True):
    """
    Monte-Carlo risks with binomial standard errors. Stratified sampling draws an
    equal number of test points from every class (or subgroup).
    """
    _check_model(model)
    if n_test < 1000:
        raise ValidationError("n_test must be at least 1000")
    if isinstance(spec, LabelGmmSpec):
        per_class = (n_test // 2, n_test - n_test // 2) if stratified else None
        test = sample_label_gmm(spec, n_test, seed, n_per_class=per_class)
        return _report_from_dataset(model, test, spec.pi, None)
    if isinstance(spec, GroupGmmSpec):
        per_cell = {key: n_test // 4 for key in SUBGROUP_KEYS} if stratified else None
        test = sample_group_gmm(spec, n_test, seed, n_per_subgroup=per_cell)
        return _report_from_dataset(model, test, spec.pi, spec.p)
    raise ValidationError(f"unsupported spec type {type(spec).__name__}")


def empirical_risks(model, dataset, pi=None, p=None):
    """Per-class (and per-subgroup) error fractions of a model on a given dataset."""
    _check_model(model)
    if pi is None:
        pi = float(np.mean(dataset.labels == 1))
    if dataset.groups is not None and p is None:
        p = float(np.mean(dataset.groups == 1))
    return _report_from_dataset(model, dataset, pi, p)


def multiclass_error(model, dataset):
    """Top-1 (argmax) error of a multiclass linear model."""
    return float(np.mean(model.predict(dataset.features) != dataset.labels))
