"""
Hard-margin solvers: SVM, cost-sensitive SVM, group-sensitive SVM and the
multiclass CS-SVM.

Every solver reduces to the program

    min 1/2 ||v||^2   s.t.   a_i'v + c_i b >= m_i,

solved through its dual by coordinate ascent (no intercept) or maximal-violating
pair updates (intercept, where the dual carries the equality sum_i c_i alpha_i = 0).
Once the active set settles the KKT system is solved directly on it.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .conf import get_setting
from .exceptions import ConvergenceError, InfeasibleError, ValidationError
from .linear import LinearModel, MulticlassModel
from .losses import MulticlassVariant

logger = logging.getLogger(__name__)

MAX_SWEEPS = 20000
POLISH_EVERY = 10


@dataclass(frozen=True)
class MarginSolution:
    model: object
    dual: np.ndarray
    margins: np.ndarray
    margin_value: float
    duality_gap: float
    kkt_residual: float
    delta: float = None

    @property
    def weights(self):
        return self.model.weights

    @property
    def intercept(self):
        return getattr(self.model, 'intercept', 0.0)

    @property
    def support(self):
        return np.flatnonzero(self.dual > 0)


def _phase_one(rows, margins, intercept_coef):
    """Feasibility of {(v, b): a_i'v + c_i b >= m_i} by an objective-free LP."""
    m, p = rows.shape
    constraints = rows if intercept_coef is None else np.column_stack([rows, intercept_coef])
    result = linprog(
        np.zeros(constraints.shape[1]),
        A_ub=-constraints,
        b_ub=-margins,
        bounds=[(None, None)] * constraints.shape[1],
        method='highs',
    )
    logger.debug("phase-1 LP on %d constraints, %d variables: status %d", m, p, result.status)
    return result.status


def _kkt(gram_alpha, alpha, margins, intercept_coef, b):
    """Returns (primal violation, complementary slackness, equality residual, gap)."""
    slack = gram_alpha - margins + (0.0 if intercept_coef is None else intercept_coef * b)
    violation = float(np.max(np.clip(-slack, 0.0, None), initial=0.0))
    complementarity = float(np.max(np.abs(alpha * slack), initial=0.0))
    equality = 0.0 if intercept_coef is None else abs(float(intercept_coef @ alpha))
    norm_sq = float(alpha @ gram_alpha)
    gap = norm_sq - float(margins @ alpha)
    return violation, complementarity, equality, gap


def _polish(gram, alpha, margins, intercept_coef):
    """Solve the KKT equalities on the current support set; None if the result is invalid."""
    support = np.flatnonzero(alpha > 1e-12 * max(alpha.max(), 1.0))
    if support.size == 0:
        return None
    k = support.size
    if intercept_coef is None:
        system = gram[np.ix_(support, support)]
        rhs = margins[support]
    else:
        system = np.zeros((k + 1, k + 1))
        system[:k, :k] = gram[np.ix_(support, support)]
        system[:k, k] = intercept_coef[support]
        system[k, :k] = intercept_coef[support]
        rhs = np.append(margins[support], 0.0)
    solution = np.linalg.lstsq(system, rhs, rcond=None)[0]
    candidate = np.zeros_like(alpha)
    candidate[support] = solution[:k]
    b = solution[k] if intercept_coef is not None else 0.0
    if np.any(candidate < -1e-12):
        return None
    candidate = np.clip(candidate, 0.0, None)
    gram_alpha = gram @ candidate
    slack = gram_alpha - margins + (0.0 if intercept_coef is None else intercept_coef * b)
    if np.min(slack) < -1e-10 * max(1.0, np.max(np.abs(margins))):
        return None
    return candidate, float(b), gram_alpha


def _coordinate_ascent(gram, margins, tol, rng):
    n = margins.shape[0]
    alpha = np.zeros(n)
    gram_alpha = np.zeros(n)
    diag = np.diag(gram).copy()
    if np.any(diag <= 0):
        raise ValidationError("every constraint row must be nonzero")
    for sweep in range(MAX_SWEEPS):
        for i in rng.permutation(n):
            g = margins[i] - gram_alpha[i]
            new = max(0.0, alpha[i] + g / diag[i])
            if new != alpha[i]:
                gram_alpha += (new - alpha[i]) * gram[:, i]
                alpha[i] = new
        grad = margins - gram_alpha
        projected = np.where(alpha > 0, np.abs(grad), np.clip(grad, 0.0, None))
        if projected.max() <= tol:
            return alpha, 0.0, sweep + 1
        if sweep % POLISH_EVERY == POLISH_EVERY - 1:
            polished = _polish(gram, alpha, margins, None)
            if polished is not None:
                return polished[0], 0.0, sweep + 1
    raise ConvergenceError(
        "dual coordinate ascent did not converge",
        {'sweeps': MAX_SWEEPS, 'max_projected_gradient': float(projected.max())},
    )


def _pair_updates(gram, margins, coef, tol):
    n = margins.shape[0]
    alpha = np.zeros(n)
    grad = margins.copy()
    max_iters = MAX_SWEEPS * max(n, 1)
    for iteration in range(max_iters):
        signed = coef * grad
        up = (coef > 0) | (alpha > 0)
        low = (coef < 0) | (alpha > 0)
        i = np.flatnonzero(up)[np.argmax(signed[up])]
        j = np.flatnonzero(low)[np.argmin(signed[low])]
        violation = signed[i] - signed[j]
        if violation <= tol:
            return alpha, 0.5 * (signed[i] + signed[j]), iteration
        curvature = gram[i, i] + gram[j, j] - 2.0 * coef[i] * coef[j] * gram[i, j]
        step = violation / curvature if curvature > 1e-15 else np.inf
        if coef[i] < 0:
            step = min(step, alpha[i])
        if coef[j] > 0:
            step = min(step, alpha[j])
        if not np.isfinite(step):
            raise ConvergenceError("unbounded dual direction", {'iteration': iteration})
        alpha[i] += coef[i] * step
        alpha[j] -= coef[j] * step
        grad -= step * (coef[i] * gram[:, i] - coef[j] * gram[:, j])
        if iteration % (POLISH_EVERY * n) == POLISH_EVERY * n - 1:
            polished = _polish(gram, alpha, margins, coef)
            if polished is not None:
                return polished[0], polished[1], iteration
    raise ConvergenceError(
        "dual pair updates did not converge", {'iterations': max_iters, 'violation': float(violation)}
    )


def solve_margin_program(rows, margins, intercept_coef=None, tol=None, seed=0):
    """
    Minimum-norm (v, b) with rows @ v + intercept_coef * b >= margins.

    Returns (v, b, alpha, diagnostics). Raises InfeasibleError when the phase-1 LP
    finds no feasible point.
    """
    rows = np.asarray(rows, dtype=float)
    margins = np.asarray(margins, dtype=float)
    if rows.ndim != 2 or margins.shape != (rows.shape[0],):
        raise ValidationError("rows must be m x p with one margin per row")
    if np.any(margins <= 0):
        raise ValidationError("required margins must be positive")
    if intercept_coef is not None:
        intercept_coef = np.asarray(intercept_coef, dtype=float)
    tol = get_setting('VSMARGIN_SVM_TOL') if tol is None else tol

    status = _phase_one(rows, margins, intercept_coef)
    if status == 2:
        raise InfeasibleError("margin constraints are infeasible (data not separable)", status)
    if status != 0:
        logger.warning("phase-1 LP ended with status %d; attempting the dual anyway", status)

    gram = rows @ rows.T
    if intercept_coef is None:
        alpha, b, work = _coordinate_ascent(gram, margins, tol, np.random.default_rng(seed))
    else:
        alpha, b, work = _pair_updates(gram, margins, intercept_coef, tol)

    polished = _polish(gram, alpha, margins, intercept_coef)
    if polished is not None:
        alpha, b, gram_alpha = polished
    else:
        logger.debug("active-set polish rejected; keeping dual iterate")
        gram_alpha = gram @ alpha

    violation, complementarity, equality, gap = _kkt(gram_alpha, alpha, margins, intercept_coef, b)
    v = rows.T @ alpha
    achieved = rows @ v + (0.0 if intercept_coef is None else intercept_coef * b)
    diagnostics = {
        'work': work,
        'primal_violation': violation,
        'complementarity': complementarity,
        'equality_residual': equality,
        'duality_gap': gap,
        'kkt_residual': max(violation, complementarity, equality),
        'margin_value': float(np.min(achieved / margins)),
    }
    logger.debug("margin program solved: %s", diagnostics)
    return v, b, alpha, diagnostics


def _binary_rows(dataset):
    if not dataset.is_binary:
        raise ValidationError("binary solver requires labels in {+1, -1}")
    y = dataset.labels.astype(float)
    return dataset.features * y[:, None], y


def margin_program(dataset, margins, with_intercept=True, delta=None):
    """Hard-margin classifier with per-example required margins y_i f(x_i) >= m_i."""
    rows, y = _binary_rows(dataset)
    margins = np.asarray(margins, dtype=float)
    if margins.shape != (dataset.n,):
        raise ValidationError("one required margin per example")
    v, b, alpha, info = solve_margin_program(rows, margins, y if with_intercept else None)
    return MarginSolution(
        LinearModel(v, b), alpha, margins, info['margin_value'], info['duality_gap'],
        info['kkt_residual'], delta,
    )


def cs_svm(dataset, delta, with_intercept=True):
    """Margins delta for y = +1 and 1 for y = -1."""
    if delta <= 0:
        raise ValidationError("margin ratio delta must be positive")
    margins = np.where(dataset.labels == 1, float(delta), 1.0)
    return margin_program(dataset, margins, with_intercept, delta)


def svm(dataset, with_intercept=True):
    return cs_svm(dataset, 1.0, with_intercept)


def gs_svm(dataset, delta_per_group=(1.0, 1.0), with_intercept=True):
    """Margins delta_g for examples of group g."""
    if not dataset.has_groups:
        raise ValidationError("GS-SVM requires group labels")
    deltas = np.asarray(delta_per_group, dtype=float)
    if deltas.shape != (2,) or np.any(deltas <= 0):
        raise ValidationError("need two positive per-group margins")
    margins = deltas[dataset.groups - 1]
    return margin_program(dataset, margins, with_intercept, float(deltas[0] / deltas[1]))


def margin_spec_from_vs(params, dataset):
    """Per-example margins 1/Delta_{y_i}: the program the VS-loss direction converges to."""
    k = (dataset.labels == -1).astype(int)
    return 1.0 / params.delta[k]


def cs_svm_multi(dataset, delta, variant=MulticlassVariant.SHARED_DELTA):
    """
    Minimum Frobenius-norm W with, for every example i and class c != y_i,
    SharedDelta:   Delta_{y_i} (w_{y_i} - w_c)'x_i >= 1
    PerLogitDelta: (Delta_{y_i} w_{y_i} - Delta_c w_c)'x_i >= 1
    """
    delta = np.asarray(delta, dtype=float)
    labels = dataset.labels
    n_classes = delta.shape[0]
    if np.any(delta <= 0):
        raise ValidationError("Delta must be positive")
    if labels.min() < 0 or labels.max() >= n_classes:
        raise ValidationError(f"labels must lie in 0..{n_classes - 1}")

    rows = []
    for x, y in zip(dataset.features, labels):
        for c in range(n_classes):
            if c == y:
                continue
            coef = np.zeros(n_classes)
            if variant is MulticlassVariant.SHARED_DELTA:
                coef[y], coef[c] = delta[y], -delta[y]
            elif variant is MulticlassVariant.PER_LOGIT_DELTA:
                coef[y], coef[c] = delta[y], -delta[c]
            else:
                raise ValidationError(f"unknown multiclass variant {variant!r}")
            rows.append(np.kron(coef, x))
    rows = np.array(rows)
    margins = np.ones(rows.shape[0])
    v, _, alpha, info = solve_margin_program(rows, margins)
    return MarginSolution(
        MulticlassModel(v.reshape(n_classes, dataset.d)), alpha, margins,
        info['margin_value'], info['duality_gap'], info['kkt_residual'],
    )


def is_separable(dataset, with_intercept=True):
    """True iff some (w, b) achieves y_i(w'x_i + b) >= 1 for every example."""
    rows, y = _binary_rows(dataset)
    return _phase_one(rows, np.ones(dataset.n), y if with_intercept else None) == 0


def posthoc_transform(svm_solution, delta):
    """Map the SVM pair (w_1, b_1) to the CS-SVM(delta) pair by the boundary-shift identity."""
    if delta <= 0:
        raise ValidationError("margin ratio delta must be positive")
    model = svm_solution.model if isinstance(svm_solution, MarginSolution) else svm_solution
    scale = (delta + 1.0) / 2.0
    return LinearModel(scale * model.weights, scale * model.intercept + (delta - 1.0) / 2.0)
