"""
First-order trainers and implicit-bias diagnostics.

An objective is any callable ``objective(model) -> (value, gradient)`` where the
gradient is returned as a LinearModel of the same shape, or
``objective(model) -> (value, direction, log_scale)`` for gradients that may
underflow.
"""
import logging
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .exceptions import DivergenceError, ValidationError
from .linear import LinearModel
from .losses import SUBGROUPS, subgroup_index, weighted_logistic

logger = logging.getLogger(__name__)

SCHEDULES = ('constant', 'normalized')
WEIGHT_NORM_GUARD = 1e8
TRAJECTORY_COLUMNS = (
    'iter', 'loss', 'grad_norm', 'w_norm', 'angle_gap_cs', 'angle_gap_svm', 'balanced_err',
)


@dataclass(frozen=True)
class GdConfig:
    schedule: str = 'constant'
    step_size: float = 0.1
    max_iters: int = 1000
    grad_tol: float = 0.0
    record_every: int = 1
    fit_intercept: bool = True

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValidationError(f"schedule must be one of {SCHEDULES}")
        if self.step_size <= 0:
            raise ValidationError("step size must be positive")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be at least 1")
        if self.grad_tol < 0:
            raise ValidationError("grad_tol must be non-negative")
        if self.record_every < 1:
            raise ValidationError("record_every must be at least 1")

    def step(self, iteration, grad_norm):
        if self.schedule == 'normalized':
            return 1.0 / (np.sqrt(iteration + 1.0) * grad_norm)
        return self.step_size


@dataclass(frozen=True)
class TrajectoryRecord:
    iteration: int
    model: LinearModel
    loss: float
    grad_norm: float
    weight_norm: float
    step_size: float


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    stop_reason: str = None

    def append(self, record):
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValidationError("trajectory iterations must be strictly increasing")
        if record.loss < 0:
            raise ValidationError("loss values must be non-negative")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, index):
        return self.records[index]

    @property
    def iterations(self):
        return np.array([r.iteration for r in self.records])

    @property
    def losses(self):
        return np.array([r.loss for r in self.records])

    @property
    def grad_norms(self):
        return np.array([r.grad_norm for r in self.records])

    @property
    def weight_norms(self):
        return np.array([r.weight_norm for r in self.records])

    @property
    def final(self):
        return self.records[-1]

    def to_rows(self, reference_cs=None, reference_svm=None, balanced_error=None):
        """Rows of the trajectory CSV; missing diagnostics are left empty."""
        rows = []
        for r in self.records:
            nonzero = r.weight_norm > 0
            rows.append({
                'iter': r.iteration,
                'loss': r.loss,
                'grad_norm': r.grad_norm,
                'w_norm': r.weight_norm,
                'angle_gap_cs': angle_gap(r.model, reference_cs) if reference_cs is not None and nonzero else '',
                'angle_gap_svm': angle_gap(r.model, reference_svm) if reference_svm is not None and nonzero else '',
                'balanced_err': balanced_error(r.model) if balanced_error is not None and nonzero else '',
            })
        return rows


def _evaluate(objective, model, fit_intercept):
    """(value, direction vector, log-scale); two-tuple objectives have log-scale 0."""
    evaluation = objective(model)
    value, grad = evaluation[0], evaluation[1]
    log_scale = float(evaluation[2]) if len(evaluation) > 2 else 0.0
    return value, grad.as_vector(with_intercept=fit_intercept), log_scale


def gd_train(objective, init, config, switch_at=None, switch_objective=None):
    """
    Gradient descent with a constant or normalized step size.

    ``objective(model)`` returns ``(value, gradient)`` or ``(value, direction,
    log_scale)`` with gradient ``exp(log_scale) * direction``. The normalized
    schedule only needs the direction, so it keeps moving after the gradient of a
    separable problem has underflowed.

    Stops after ``config.max_iters`` updates, once the gradient norm drops to a
    positive ``config.grad_tol``, or when the gradient direction is exactly zero.
    ``trajectory.stop_reason`` tells which. ``switch_objective`` replaces
    ``objective`` from iteration ``switch_at`` on (deferred re-weighting).
    """
    model = init if config.fit_intercept else LinearModel(init.weights, 0.0)
    trajectory = Trajectory()
    active = objective
    log_tol = np.log(config.grad_tol) if config.grad_tol > 0 else -np.inf

    iteration = 0
    for iteration in range(config.max_iters + 1):
        if switch_objective is not None and switch_at is not None and iteration == switch_at:
            logger.debug("switching objective at iteration %d", iteration)
            active = switch_objective
        value, gvec, log_scale = _evaluate(active, model, config.fit_intercept)
        if not (np.isfinite(value) and np.isfinite(log_scale) and np.all(np.isfinite(gvec))):
            logger.error("non-finite loss or gradient at iteration %d", iteration)
            raise DivergenceError(
                f"non-finite loss or gradient at iteration {iteration}",
                state={'iteration': iteration, 'model': model, 'trajectory': trajectory},
            )

        direction_norm = float(np.linalg.norm(gvec))
        log_grad_norm = np.log(direction_norm) + log_scale if direction_norm > 0 else -np.inf
        grad_norm = float(np.exp(log_grad_norm))
        if direction_norm == 0:
            trajectory.stop_reason = 'zero_gradient'
            logger.warning("gradient vanished exactly at iteration %d", iteration)
        elif log_grad_norm <= log_tol:
            trajectory.stop_reason = 'grad_tol'
        elif iteration == config.max_iters:
            trajectory.stop_reason = 'max_iters'
        done = trajectory.stop_reason is not None

        with np.errstate(over='ignore', divide='ignore'):
            step = config.step(iteration, grad_norm) if direction_norm > 0 else 0.0
        if done or iteration % config.record_every == 0:
            trajectory.append(TrajectoryRecord(iteration, model, value, grad_norm, model.norm, step))
        if done:
            break

        if config.schedule == 'normalized':
            update = gvec / (np.sqrt(iteration + 1.0) * direction_norm)
        else:
            update = config.step_size * np.exp(log_scale) * gvec
        model = LinearModel.from_vector(model.as_vector(config.fit_intercept) - update, config.fit_intercept)
        if model.norm > WEIGHT_NORM_GUARD:
            logger.error("weight norm %.3g exceeded guard at iteration %d", model.norm, iteration)
            raise DivergenceError(
                f"weight norm exceeded {WEIGHT_NORM_GUARD:g} at iteration {iteration + 1}",
                state={'iteration': iteration + 1, 'model': model, 'trajectory': trajectory},
            )

    logger.debug(
        "gd_train stopped (%s) after %d iterations, grad norm %.3e",
        trajectory.stop_reason, iteration, trajectory.final.grad_norm,
    )
    return model, trajectory


def _weights(model):
    return model.weights if isinstance(model, LinearModel) else np.asarray(model, dtype=float)


def _unit(model):
    w = _weights(model)
    norm = np.linalg.norm(w)
    if norm == 0:
        raise ValidationError("weight vector must be nonzero")
    return w / norm


def angle_gap(model, reference_model):
    """1 - cos of the angle between two weight vectors; 0 iff the directions coincide."""
    cosine = float(_unit(model) @ _unit(reference_model))
    return float(np.clip(1.0 - cosine, 0.0, 2.0))


def norm_gap(model, reference_model):
    return float(np.linalg.norm(_unit(model) - _unit(reference_model)))


@dataclass(frozen=True)
class FlowResidual:
    times: np.ndarray
    residuals: np.ndarray
    slope: float
    bounded: bool


def gradient_flow_residual(trajectory, reference, time_scale=None, slope_tol=0.01):
    """
    Residuals ||w_t - w_hat log t|| along a small-step trajectory, t in flow time.

    Boundedness is judged by the slope of a linear fit of the residual against
    log-time over the last half of the records.
    """
    records = [r for r in trajectory.records if r.iteration > 0]
    if len(records) < 100:
        raise ValidationError(f"need at least 100 records, got {len(records)}")
    scale = time_scale if time_scale is not None else records[0].step_size
    times = np.array([r.iteration for r in records], dtype=float) * scale
    w_hat = _weights(reference)
    residuals = np.array([np.linalg.norm(r.model.weights - w_hat * np.log(t)) for r, t in zip(records, times)])
    half = len(records) // 2
    slope = float(np.polyfit(np.log(times[half:]), residuals[half:], 1)[0])
    return FlowResidual(times, residuals, slope, slope <= slope_tol)


@dataclass(frozen=True)
class DroResult:
    model: LinearModel
    partition: tuple
    weights_history: np.ndarray
    loss_history: np.ndarray


def _partition_index(dataset, partition):
    if partition == 'subgroup':
        return subgroup_index(dataset.labels, dataset.groups), SUBGROUPS
    if partition == 'group':
        return dataset.groups - 1, (1, 2)
    raise ValidationError(f"partition must be 'subgroup' or 'group', got {partition!r}")


def group_dro_train(group_params, dataset, steps, step_size, group_step_size=0.01,
                    init=None, fit_intercept=True, partition='subgroup', cells=None):
    """
    Online min-max training of the Group-VS loss.

    Keeps a probability vector over the cells of the partition, updates it
    multiplicatively by the observed mean cell losses and moves the model along
    the gradient of the reweighted loss.
    """
    if not dataset.has_groups:
        raise ValidationError("group DRO requires group labels")
    index, labels = _partition_index(dataset, partition)
    present = [k for k in range(len(labels)) if np.any(index == k)]
    if cells is not None:
        wanted = [labels.index(c) for c in cells]
        empty = [labels[k] for k in wanted if k not in present]
        if empty:
            raise ValidationError(f"empty cells: {empty}")
        present = wanted
    if not present:
        raise ValidationError("no populated cells to train on")

    per_example = subgroup_index(dataset.labels, dataset.groups)
    omega = group_params.omega[per_example]
    iota = group_params.iota[per_example]
    delta = group_params.delta[per_example]

    cell_terms = []
    for k in present:
        mask = index == k
        cell_terms.append((mask.sum(), partial(
            weighted_logistic, omega[mask], iota[mask], delta[mask], dataset=dataset.subset(mask)
        )))

    model = init if init is not None else LinearModel.zeros(dataset.d)
    q = np.full(len(present), 1.0 / len(present))
    weights_history, loss_history = [q.copy()], []
    for _ in range(steps):
        losses, grads = [], []
        for count, term in cell_terms:
            value, grad = term(model)
            losses.append(value / count)
            grads.append(grad.as_vector(fit_intercept) / count)
        losses = np.array(losses)
        q = q * np.exp(group_step_size * losses)
        q = q / q.sum()
        direction = np.tensordot(q, np.array(grads), axes=1)
        model = LinearModel.from_vector(model.as_vector(fit_intercept) - step_size * direction, fit_intercept)
        weights_history.append(q.copy())
        loss_history.append(losses)

    return DroResult(
        model,
        tuple(labels[k] for k in present),
        np.array(weights_history),
        np.array(loss_history),
    )
