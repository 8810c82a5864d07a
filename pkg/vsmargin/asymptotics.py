"""
Sharp asymptotics of the cost- and group-sensitive SVMs.

In the proportional limit d/n -> gamma the SVM solution is summarised by a triple
(q, rho, b): the limit of ||w||, the normalised projection of w onto the mean
subspace and the intercept. For fixed q, (rho, b) minimise eta(q, ., .) over the
unit ball; q is the root of f(q) = min eta(q, ., .), which is strictly decreasing.

Every expectation is a weighted sum of Gaussian partial moments, one per label
atom (Y) or subgroup atom (Y, S), so nothing on the theory path is sampled.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.optimize import brentq, minimize
from scipy.special import ndtr

from .conf import get_setting
from .exceptions import (
    BracketError, ConvergenceError, DimensionMismatchError, NonSeparableRegimeError, ValidationError,
)
from .losses import SUBGROUPS
from .mixture import GroupGmmSpec, LabelGmmSpec
from .risk import RiskReport, q_function

logger = logging.getLogger(__name__)

REGIME_MARGIN = 1e-6
INITIAL_BRACKET = (1e-3, 1e3)
BRACKET_LIMITS = (1e-6, 1e6)
MAX_INNER_ITERS = 100000
ARMIJO = 1e-4
ILL_CONDITIONED = 1e10
THEORY_COLUMNS = (
    'gamma', 'delta', 'q', 'rho1', 'rho2', 'b', 'R_plus', 'R_minus', 'R_bal', 'R_std', 'DEO',
)

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _pdf(c):
    return _INV_SQRT_2PI * np.exp(-0.5 * c * c)


def _moment_derivatives(c):
    """m(c) = E[(G + c)_-^2] with m'(c) = 2(c Phi(-c) - phi(c)) and m''(c) = 2 Phi(-c)."""
    tail = ndtr(-c)
    density = _pdf(c)
    value = np.clip((1.0 + c * c) * tail - c * density, 0.0, None)
    return value, 2.0 * (c * tail - density), 2.0 * tail


def partial_moment(c):
    """E[(G + c)_-^2] for G ~ N(0, 1), in closed form."""
    value = _moment_derivatives(np.asarray(c, dtype=float))[0]
    return float(value) if np.ndim(value) == 0 else value


def partial_moment_hermite(c, nodes=200):
    """Gauss-Hermite evaluation of the same moment; a cross-check only."""
    x, w = hermegauss(nodes)
    return float(np.sum(w * np.minimum(x + c, 0.0) ** 2) * _INV_SQRT_2PI)


@dataclass(frozen=True)
class TheoryProblem:
    """
    Hypotheses of the asymptotic system. The group fields ``p``, ``sigma1`` and
    ``sigma2`` are either all set (GS-SVM) or all None (CS-SVM).
    """

    mean_model: object
    pi: float
    gamma: float
    delta: float = 1.0
    p: float = None
    sigma1: float = None
    sigma2: float = None

    def __post_init__(self):
        if not 0.0 < self.pi < 1.0:
            raise ValidationError(f"pi must lie in (0, 1), got {self.pi}")
        if self.gamma <= 0:
            raise ValidationError(f"gamma must be positive, got {self.gamma}")
        if self.delta <= 0:
            raise ValidationError(f"delta must be positive, got {self.delta}")
        group = (self.p, self.sigma1, self.sigma2)
        if any(v is None for v in group) and not all(v is None for v in group):
            raise ValidationError("p, sigma1 and sigma2 must be given together")
        if self.p is not None:
            if not 0.0 < self.p < 1.0:
                raise ValidationError(f"p must lie in (0, 1), got {self.p}")
            if self.sigma1 <= 0 or self.sigma2 <= 0:
                raise ValidationError("group noise levels must be positive")

    @classmethod
    def from_spec(cls, spec, gamma, delta=1.0):
        if isinstance(spec, GroupGmmSpec):
            return cls(spec.mean_model, spec.pi, gamma, delta, spec.p, spec.sigma1, spec.sigma2)
        if isinstance(spec, LabelGmmSpec):
            if not spec.is_isotropic:
                raise ValidationError("asymptotics need isotropic noise; whiten the spec first")
            return cls(spec.mean_model, spec.pi, gamma, delta)
        raise ValidationError(f"unsupported spec type {type(spec).__name__}")

    @property
    def is_group(self):
        return self.p is not None

    @property
    def rank(self):
        return self.mean_model.rank

    def with_delta(self, delta):
        return replace(self, delta=delta)

    def with_gamma(self, gamma):
        return replace(self, gamma=gamma)


@dataclass(frozen=True)
class AsymptoticTriple:
    q: float
    rho: np.ndarray
    b: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.q <= 0:
            raise ValidationError("q must be positive")
        if np.linalg.norm(self.rho) > 1.0 + 1e-10:
            raise ValidationError("rho must lie in the unit ball")


@dataclass(frozen=True)
class InnerMinimum:
    rho: np.ndarray
    b: float
    value: float
    iterations: int
    projected_grad_norm: float
    condition: float


@dataclass(frozen=True)
class _Atoms:
    weights: np.ndarray
    directions: np.ndarray
    labels: np.ndarray
    margins: np.ndarray
    sigmas: np.ndarray


def _label_atoms(mean_model, pi, delta):
    VS = mean_model.VS
    return _Atoms(
        np.array([pi, 1.0 - pi]),
        np.vstack([VS[0], -VS[1]]),
        np.array([1.0, -1.0]),
        np.array([delta, 1.0]),
        np.ones(2),
    )


def _group_atoms(mean_model, pi, p, delta, sigmas):
    VS = mean_model.VS
    weights, directions, labels, margins, scales = [], [], [], [], []
    for y, g in SUBGROUPS:
        weights.append((pi if y == 1 else 1.0 - pi) * (p if g == 1 else 1.0 - p))
        directions.append(VS[g - 1])
        labels.append(float(y))
        margins.append(delta if g == 1 else 1.0)
        scales.append(sigmas[g - 1])
    return _Atoms(
        np.array(weights), np.array(directions), np.array(labels), np.array(margins), np.array(scales),
    )


def _atoms(problem):
    if problem.is_group:
        return _group_atoms(
            problem.mean_model, problem.pi, problem.p, problem.delta, (problem.sigma1, problem.sigma2),
        )
    return _label_atoms(problem.mean_model, problem.pi, problem.delta)


def _check_point(problem, q, rho):
    if not q > 0:
        raise ValidationError(f"q must be positive, got {q}")
    rho = np.asarray(rho, dtype=float).reshape(-1)
    if rho.shape != (problem.rank,):
        raise DimensionMismatchError(f"rho must have {problem.rank} entries, got {rho.shape[0]}")
    if np.linalg.norm(rho) > 1.0 + 1e-10:
        raise ValidationError("rho must lie in the unit ball")
    return rho


def _eta_terms(atoms, gamma, q, rho, b, order=0):
    """eta and, up to ``order``, its gradient and Hessian in (rho, b)."""
    offsets = (atoms.directions @ rho + (atoms.labels * b - atoms.margins) / q) / atoms.sigmas
    m, m1, m2 = _moment_derivatives(offsets)
    value = float(atoms.weights @ m - (1.0 - rho @ rho) * gamma)
    if order == 0:
        return value
    r = rho.shape[0]
    jac = np.column_stack([atoms.directions / atoms.sigmas[:, None], atoms.labels / (q * atoms.sigmas)])
    grad = jac.T @ (atoms.weights * m1)
    grad[:r] += 2.0 * gamma * rho
    if order == 1:
        return value, grad
    hess = jac.T @ (jac * (atoms.weights * m2)[:, None])
    hess[:r, :r] += 2.0 * gamma * np.eye(r)
    return value, grad, hess


def eta(problem, q, rho, b):
    """E[(G + E_Y'VS rho + (bY - Delta_Y)/q)_-^2] - (1 - ||rho||^2) gamma."""
    rho = _check_point(problem, q, rho)
    return _eta_terms(_atoms(problem), problem.gamma, q, rho, float(b))


def eta_group(problem, q, rho, b):
    """Group version: atoms (Y, S) with offsets scaled by 1/sigma_S."""
    if not problem.is_group:
        raise ValidationError("eta_group needs a problem with group fields")
    return eta(problem, q, rho, b)


def eta_grad(problem, q, rho, b):
    """Gradient of eta in (rho, b), returned as (grad_rho, grad_b)."""
    rho = _check_point(problem, q, rho)
    _, grad = _eta_terms(_atoms(problem), problem.gamma, q, rho, float(b), order=1)
    return grad[:-1], float(grad[-1])


def eta_monte_carlo(problem, q, rho, b, n_samples, seed):
    """Sampled eta; returns (estimate, standard error)."""
    rho = _check_point(problem, q, rho)
    atoms = _atoms(problem)
    rng = np.random.default_rng(seed)
    offsets = (atoms.directions @ rho + (atoms.labels * b - atoms.margins) / q) / atoms.sigmas
    which = rng.choice(atoms.weights.shape[0], size=n_samples, p=atoms.weights)
    samples = np.minimum(rng.standard_normal(n_samples) + offsets[which], 0.0) ** 2
    estimate = samples.mean() - (1.0 - rho @ rho) * problem.gamma
    return float(estimate), float(samples.std(ddof=1) / np.sqrt(n_samples))


def _project(x, r):
    norm = np.linalg.norm(x[:r])
    if norm <= 1.0:
        return x
    x = x.copy()
    x[:r] /= norm
    return x


def _backtrack(evaluate, x, value, grad, direction, r, t0):
    slack = 8.0 * np.finfo(float).eps * max(1.0, abs(value))
    t = t0
    while t >= 1e-20:
        candidate = _project(x + t * direction, r)
        move = candidate - x
        slope = float(grad @ move)
        if not np.any(move) or slope >= 0:
            return None
        if evaluate(candidate) <= value + ARMIJO * slope + slack:
            return candidate, t
        t *= 0.5
    return None


def inner_min(problem, q, start=None, tol=None, max_iters=MAX_INNER_ITERS):
    """
    Minimise eta(q, rho, b) over ||rho|| <= 1 and b.

    Projected Newton steps with backtracking, falling back to projected gradient
    steps when the projected Newton move is not a descent direction.
    """
    if not q > 0:
        raise ValidationError(f"q must be positive, got {q}")
    tol = get_setting('VSMARGIN_INNER_TOL') if tol is None else tol
    atoms = _atoms(problem)
    r = problem.rank
    x = np.zeros(r + 1) if start is None else _project(np.asarray(start, dtype=float).copy(), r)

    def evaluate(z, order=0):
        return _eta_terms(atoms, problem.gamma, q, z[:r], z[r], order)

    value, grad, hess = evaluate(x, 2)
    gradient_step = 1.0
    pg_norm = np.inf
    for iteration in range(max_iters):
        pg_norm = float(np.linalg.norm(x - _project(x - grad, r)))
        if pg_norm <= tol:
            break
        accepted = None
        try:
            newton = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            newton = None
        if newton is not None and np.all(np.isfinite(newton)):
            accepted = _backtrack(evaluate, x, value, grad, newton, r, 1.0)
        if accepted is None:
            accepted = _backtrack(evaluate, x, value, grad, -grad, r, min(1.0, 2.0 * gradient_step))
            if accepted is not None:
                gradient_step = accepted[1]
        if accepted is None:
            raise ConvergenceError(
                f"inner minimisation stalled at q={q:.6g}",
                {'iteration': iteration, 'projected_grad_norm': pg_norm, 'value': value},
            )
        x = accepted[0]
        value, grad, hess = evaluate(x, 2)
    else:
        raise ConvergenceError(
            f"inner minimisation did not converge at q={q:.6g}",
            {'iterations': max_iters, 'projected_grad_norm': pg_norm},
        )

    return InnerMinimum(x[:r].copy(), float(x[r]), value, iteration, pg_norm, float(np.linalg.cond(hess)))


def _gamma_star(atoms):
    r = atoms.directions.shape[1]
    directions = atoms.directions / atoms.sigmas[:, None]
    labels = atoms.labels / atoms.sigmas
    weights = atoms.weights

    def objective(z):
        t, b = z[:r], z[r]
        s = np.sqrt(1.0 + t @ t)
        offsets = (directions @ t + labels * b) / s
        m, m1, _ = _moment_derivatives(offsets)
        mean = weights @ m
        grad_t = 2.0 * t * mean + s * (directions.T @ (weights * m1)) - (weights @ (m1 * offsets)) * t
        grad_b = s * ((weights * m1) @ labels)
        return s * s * mean, np.append(grad_t, grad_b)

    result = minimize(
        objective, np.zeros(r + 1), jac=True, method='BFGS', options={'gtol': 1e-12, 'maxiter': 10000},
    )
    logger.debug("gamma_star minimisation: %s after %d iterations", result.message, result.nit)
    return float(min(result.fun, 0.5))


def gamma_star(mean_model, pi):
    """Separability threshold of the label mixture: data separable iff gamma > gamma_star."""
    return _gamma_star(_label_atoms(mean_model, pi, 1.0))


def gamma_star_group(mean_model, pi, p, sigma1=1.0, sigma2=1.0):
    return _gamma_star(_group_atoms(mean_model, pi, p, 1.0, (sigma1, sigma2)))


def threshold(problem):
    if problem.is_group:
        return gamma_star_group(problem.mean_model, problem.pi, problem.p, problem.sigma1, problem.sigma2)
    return gamma_star(problem.mean_model, problem.pi)


def solve_triple(problem, tol=None, gamma_threshold=None):
    """
    Solve for (q, rho, b). The root of f(q) is bracketed starting from
    [1e-3, 1e3], expanded tenfold up to [1e-6, 1e6], then located by Brent's
    method on log q.
    """
    tol = get_setting('VSMARGIN_ROOT_TOL') if tol is None else tol
    gamma_threshold = threshold(problem) if gamma_threshold is None else gamma_threshold
    if problem.gamma <= gamma_threshold + REGIME_MARGIN:
        logger.error("gamma=%.6g is not above gamma_star=%.6g", problem.gamma, gamma_threshold)
        raise NonSeparableRegimeError(problem.gamma, gamma_threshold)

    warm = {'rho': None, 'ratio': 0.0, 'evaluations': 0}

    def minimum(q):
        start = None if warm['rho'] is None else np.append(warm['rho'], warm['ratio'] * q)
        result = inner_min(problem, q, start=start)
        warm['rho'], warm['ratio'] = result.rho, result.b / q
        warm['evaluations'] += 1
        return result

    def f(log_q):
        return minimum(np.exp(log_q)).value

    lo, hi = INITIAL_BRACKET
    f_lo, f_hi = f(np.log(lo)), f(np.log(hi))
    while f_lo <= 0 and lo > BRACKET_LIMITS[0]:
        lo /= 10.0
        f_lo = f(np.log(lo))
    while f_hi >= 0 and hi < BRACKET_LIMITS[1]:
        hi *= 10.0
        f_hi = f(np.log(hi))
    if not f_lo > 0 > f_hi:
        logger.error("no sign change of f on [%g, %g]: f = (%.3g, %.3g)", lo, hi, f_lo, f_hi)
        raise BracketError(
            f"f(q) does not change sign on [{lo:g}, {hi:g}]",
            {'q': (lo, hi), 'f': (f_lo, f_hi)},
        )

    log_q = brentq(f, np.log(lo), np.log(hi), xtol=1e-15, maxiter=500)
    q = float(np.exp(log_q))
    final = minimum(q)
    if abs(final.value) > tol:
        raise ConvergenceError(
            f"root residual {final.value:.3e} exceeds {tol:g}",
            {'q': q, 'residual': final.value, 'bracket': (lo, hi)},
        )
    if final.condition > ILL_CONDITIONED:
        logger.warning(
            "ill-conditioned inner problem at gamma=%.6g (cond %.3g); gamma_star=%.6g",
            problem.gamma, final.condition, gamma_threshold,
        )
    diagnostics = {
        'residual': final.value,
        'condition': final.condition,
        'bracket': (lo, hi),
        'evaluations': warm['evaluations'],
        'gamma_star': gamma_threshold,
    }
    logger.debug("solved triple q=%.6g b=%.6g at gamma=%.4g delta=%.4g", q, final.b, problem.gamma, problem.delta)
    return AsymptoticTriple(q, final.rho, final.b, diagnostics)


def predict_risks(triple, problem):
    VS = problem.mean_model.VS
    shift = triple.b / triple.q
    if problem.is_group:
        sigmas = (problem.sigma1, problem.sigma2)
        subgroup = {
            (y, g): q_function((VS[g - 1] @ triple.rho + y * shift) / sigmas[g - 1])
            for y, g in SUBGROUPS
        }
        return RiskReport.from_subgroups(subgroup, problem.pi, problem.p)
    return RiskReport(
        q_function(VS[0] @ triple.rho + shift),
        q_function(-VS[1] @ triple.rho - shift),
        problem.pi,
    )


def undersampling_risks(gamma, pi, mean_model):
    """
    Asymptotic risks of the SVM trained after undersampling the majority class:
    the balanced problem seen at the larger ratio gamma / (2 pi_min).

    pi_min = min(pi, 1 - pi) is the minority prior, so this is gamma / (2 pi) when
    the positive class is the minority and the same mapping with the labels
    swapped when pi > 1/2.
    """
    mapped = TheoryProblem(mean_model, 0.5, gamma / (2.0 * min(pi, 1.0 - pi)), 1.0)
    report = predict_risks(solve_triple(mapped), mapped)
    return RiskReport(report.r_plus, report.r_minus, pi)


def theory_row(problem, triple):
    report = predict_risks(triple, problem)
    rho = triple.rho
    return {
        'gamma': problem.gamma,
        'delta': problem.delta,
        'q': triple.q,
        'rho1': rho[0],
        'rho2': rho[1] if rho.shape[0] > 1 else '',
        'b': triple.b,
        **report.as_row(),
    }


def theory_sweep(problem, gammas, deltas, skip_non_separable=False):
    """Rows of the theory-sweep CSV over the (gamma, delta) grid, gamma-major."""
    gamma_threshold = threshold(problem)
    rows = []
    for gamma in gammas:
        for delta in deltas:
            point = replace(problem, gamma=float(gamma), delta=float(delta))
            try:
                triple = solve_triple(point, gamma_threshold=gamma_threshold)
            except NonSeparableRegimeError:
                if not skip_non_separable:
                    raise
                logger.warning("skipping gamma=%.4g (gamma_star=%.4g)", gamma, gamma_threshold)
                break
            rows.append(theory_row(point, triple))
    return rows
