"""Closed-form optimal margin ratio and its data-driven estimate."""
import logging
from dataclasses import dataclass

import numpy as np

from .asymptotics import predict_risks, solve_triple
from .exceptions import ValidationError
from .maxmargin import svm
from .risk import q_function

logger = logging.getLogger(__name__)

DELTA_CAP = 1e6
DELTA_FLOOR = 1e-6


@dataclass(frozen=True)
class SvmSummary:
    """Signed margins of the SVM limit, l_+ = e1'VS rho_1 + b_1/q_1 and l_- = -e2'VS rho_1 - b_1/q_1."""

    ell_plus: float
    ell_minus: float
    q1_inv: float

    def __post_init__(self):
        if not all(np.isfinite([self.ell_plus, self.ell_minus, self.q1_inv])):
            raise ValidationError("summary entries must be finite")
        if self.q1_inv <= 0:
            raise ValidationError("q1_inv must be positive")

    @classmethod
    def from_triple(cls, triple, problem):
        VS = problem.mean_model.VS
        shift = triple.b / triple.q
        return cls(
            float(VS[0] @ triple.rho + shift),
            float(-VS[1] @ triple.rho - shift),
            1.0 / triple.q,
        )

    @classmethod
    def from_model(cls, model, mean_plus, mean_minus):
        norm = model.norm
        return cls(
            float((model.weights @ mean_plus + model.intercept) / norm),
            float(-(model.weights @ mean_minus + model.intercept) / norm),
            1.0 / norm,
        )


@dataclass(frozen=True)
class DeltaStar:
    """
    ``value`` is the exact optimum: finite in branch 1, ``inf`` in branch 2 and
    0 in branch 3. ``concrete`` is what a classifier is built with.
    """

    value: float
    branch: int

    @property
    def is_sentinel(self):
        return self.branch != 1

    @property
    def concrete(self):
        return float(np.clip(self.value, DELTA_FLOOR, DELTA_CAP))


@dataclass(frozen=True)
class TuneResult:
    delta_star: DeltaStar
    r_bal_at_star: float
    r_plus: float
    r_minus: float
    summary: SvmSummary

    def as_dict(self):
        return {
            'delta_star': self.delta_star.concrete,
            'branch': self.delta_star.branch,
            'R_bal_at_star': self.r_bal_at_star,
            'R_plus': self.r_plus,
            'R_minus': self.r_minus,
        }


def delta_star(summary):
    lp, lm, q_inv = summary.ell_plus, summary.ell_minus, summary.q1_inv
    if lp + lm < 0:
        return DeltaStar(0.0, 3)
    denominator = lp - lm + 2.0 * q_inv
    if denominator <= 0:
        return DeltaStar(np.inf, 2)
    numerator = lm - lp + 2.0 * q_inv
    if numerator <= 0:
        # the balancing shift lies beyond delta -> 0
        return DeltaStar(0.0, 3)
    return DeltaStar(numerator / denominator, 1)


def balanced_error_curve(summary, deltas):
    """(R_+, R_-, R_bal) of CS-SVM(delta) predicted from the SVM summary."""
    deltas = np.asarray(deltas, dtype=float)
    if np.any(deltas <= 0):
        raise ValidationError("deltas must be positive")
    shift = (deltas - 1.0) / (deltas + 1.0) * summary.q1_inv
    r_plus = q_function(summary.ell_plus + shift)
    r_minus = q_function(summary.ell_minus - shift)
    return r_plus, r_minus, 0.5 * (r_plus + r_minus)


def _tune(summary):
    star = delta_star(summary)
    r_plus, r_minus, r_bal = balanced_error_curve(summary, np.array([star.concrete]))
    logger.info("delta_star=%.6g (branch %d), R_bal=%.6g", star.concrete, star.branch, r_bal[0])
    return TuneResult(star, float(r_bal[0]), float(r_plus[0]), float(r_minus[0]), summary)


def delta_star_from_theory(problem):
    """Solve the SVM (delta = 1) system and apply the closed form."""
    base = problem.with_delta(1.0)
    triple = solve_triple(base)
    logger.debug("SVM risks at delta=1: %s", predict_risks(triple, base).as_row())
    return _tune(SvmSummary.from_triple(triple, base))


def _validation_split(dataset, fraction, seed):
    rng = np.random.default_rng(seed)
    plus = np.flatnonzero(dataset.labels == 1)
    minus = np.flatnonzero(dataset.labels == -1)
    size = max(1, int(fraction * min(plus.size, minus.size)))
    held = np.concatenate([rng.choice(plus, size, replace=False), rng.choice(minus, size, replace=False)])
    mask = np.zeros(dataset.n, dtype=bool)
    mask[held] = True
    return dataset.subset(~mask), dataset.subset(mask)


def delta_star_heuristic(dataset, validation_fraction=None, seed=0):
    """
    Plug-in estimate of delta_star: fit the SVM, estimate the class means by
    sample averages and read off l_+, l_- and q_1 = ||w||.

    With ``validation_fraction`` the means come from a balanced held-out split
    instead of the training set.
    """
    if validation_fraction is not None:
        if not 0.0 < validation_fraction < 1.0:
            raise ValidationError("validation_fraction must lie in (0, 1)")
        train, held_out = _validation_split(dataset, validation_fraction, seed)
    else:
        train = held_out = dataset
    solution = svm(train)
    mean_plus = held_out.features[held_out.labels == 1].mean(axis=0)
    mean_minus = held_out.features[held_out.labels == -1].mean(axis=0)
    return _tune(SvmSummary.from_model(solution.model, mean_plus, mean_minus))


def heuristic_delta(pi, alpha):
    """Fixed-exponent choice ((1 - pi)/pi)^alpha."""
    if not 0.0 < pi < 1.0:
        raise ValidationError(f"pi must lie in (0, 1), got {pi}")
    return float(((1.0 - pi) / pi) ** alpha)
