"""
Experiment harness: registered runners for the synthetic studies, the DEO-zero
search, a deterministic worker pool and CSV/manifest emission.

A runner takes the validated config and a pool and returns an ExperimentResult.
Rows are merged in grid order whatever the pool size, so re-running a config
reproduces the same bytes.
"""
import csv
import hashlib
import json
import logging
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import TheoryProblem, predict_risks, solve_triple, theory_row, threshold, undersampling_risks
from .conf import get_setting
from .exceptions import BracketError, InfeasibleError, NonSeparableRegimeError, ValidationError, VsMarginError
from .linear import LinearModel
from .losses import VsParams, preset, smoothness_bound, vs_value_and_scaled_grad_binary
from .maxmargin import cs_svm, gs_svm, is_separable, margin_program, margin_spec_from_vs, svm
from .mixture import (
    GroupGmmSpec, LabelGmmSpec, embed_means, random_relu_features, read_dataset_csv,
    sample_group_gmm, sample_label_gmm, truncate_features, undersample_majority,
)
from .optim import TRAJECTORY_COLUMNS, GdConfig, gd_train
from .risk import closed_form_risks, empirical_risks
from .tuning import balanced_error_curve, delta_star_from_theory, delta_star_heuristic, heuristic_delta

logger = logging.getLogger(__name__)

EXPERIMENT_KINDS = (
    'fig1a_sweep', 'fig1bc_dynamics', 'tradeoff_label', 'tradeoff_group',
    'phase_transition', 'tune_delta', 'undersampling', 'mnist_rf', 'deo_zero',
)
LOSS_NAMES = ('CE', 'wCE', 'LA', 'LDAM', 'CDT', 'VS', 'VS_wCE')
DEO_TOL = 1e-6
TUNE_GRID = np.logspace(-2, 2, 200)
RUNNERS = {}


@dataclass(frozen=True)
class Runner:
    kind: str
    function: object
    required: tuple
    mixture: str = None


@dataclass
class ExperimentResult:
    rows: list
    columns: tuple
    summary: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RunOutcome:
    output_dir: Path
    manifest: dict
    result: ExperimentResult


def runner(kind, required=(), mixture=None):
    def register(function):
        RUNNERS[kind] = Runner(kind, function, tuple(required), mixture)
        return function
    return register


class WorkerPool:
    """Ordered map over a thread pool; a single worker runs inline."""

    def __init__(self, threads=1):
        if threads < 1:
            raise ValidationError("the pool needs at least one worker")
        self.threads = threads
        self._executor = None

    def __enter__(self):
        if self.threads > 1:
            self._executor = ThreadPoolExecutor(max_workers=self.threads)
        return self

    def __exit__(self, *exc_info):
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def map(self, function, items):
        items = list(items)
        if self._executor is None:
            return [function(item) for item in items]
        return list(self._executor.map(function, items))


# -- shared helpers ---------------------------------------------------------

def _spec(config):
    from .schemas import SpecSchema, load
    return load(SpecSchema(), config['spec'])


def _n_for(dimension, gamma):
    return max(2, int(round(dimension / gamma)))


def _mean_sem(values):
    values = np.asarray([v for v in values if v is not None], dtype=float)
    if values.size == 0:
        return '', ''
    sem = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return float(values.mean()), sem


def _aggregate(reports, prefix='mc_'):
    """Seed-averaged metrics of the reports that exist (None marks a non-separable draw)."""
    present = [r for r in reports if r is not None]
    row = {f'{prefix}separable': len(present)}
    for key in ('R_plus', 'R_minus', 'R_bal', 'R_std'):
        row[f'{prefix}{key}'] = _mean_sem([r.as_row()[key] for r in present])[0]
    row[f'{prefix}R_bal_sem'] = _mean_sem([r.balanced for r in present])[1]
    if present and present[0].subgroup is not None:
        row[f'{prefix}DEO'], row[f'{prefix}DEO_sem'] = _mean_sem([r.deo for r in present])
    return row


def _theory_columns(report, prefix='th_'):
    if report is None:
        return {f'{prefix}{key}': '' for key in ('R_plus', 'R_minus', 'R_bal', 'R_std')}
    row = report.as_row()
    return {f'{prefix}{key}': row[key] for key in ('R_plus', 'R_minus', 'R_bal', 'R_std')}


def _solve_or_none(problem, gamma_threshold):
    try:
        triple = solve_triple(problem, gamma_threshold=gamma_threshold)
    except NonSeparableRegimeError:
        return None, None
    return triple, predict_risks(triple, problem)


def loss_params(name, class_counts, delta):
    """Binary VS parameters of the named losses compared in the training-dynamics study."""
    ones = np.ones(2)
    la = preset('LA', class_counts).to_binary()
    cdt = VsParams.cdt(delta)
    if name == 'CE':
        return VsParams.uniform()
    if name == 'wCE':
        return preset('wCE', class_counts)
    if name == 'LA':
        return la
    if name == 'LDAM':
        return preset('LDAM', class_counts).to_binary()
    if name == 'CDT':
        return cdt
    if name == 'VS':
        return VsParams(ones, la.iota, cdt.delta)
    if name == 'VS_wCE':
        return VsParams(preset('wCE', class_counts).omega, np.zeros(2), cdt.delta)
    raise ValidationError(f"unknown loss {name!r}; expected one of {LOSS_NAMES}")


def _loss_delta(name, delta):
    return delta if name in ('CDT', 'VS', 'VS_wCE') else 1.0


def _fit_loss(params, dataset, separable, iterations):
    """
    The classifier a loss leads to: its max-margin limit on separable data,
    otherwise a fixed budget of gradient descent with step 1/L.
    """
    if separable:
        return margin_program(dataset, margin_spec_from_vs(params, dataset)).model
    step = 1.0 / smoothness_bound(params, dataset)
    config = GdConfig('constant', step, iterations, record_every=iterations)
    objective = partial(vs_value_and_scaled_grad_binary, params, dataset=dataset)
    model, _ = gd_train(objective, LinearModel.zeros(dataset.d), config)
    return model


def _theory_delta(config, problem, gamma_threshold):
    """A numeric delta from the config; 'star' resolves to the theoretical optimum."""
    if config.get('delta', 'star') != 'star':
        return float(config['delta'])
    if problem.gamma > gamma_threshold:
        return delta_star_from_theory(problem).delta_star.concrete
    fallback = heuristic_delta(problem.pi, 0.25)
    logger.info("gamma=%.4g is not separable; using delta=%.4g", problem.gamma, fallback)
    return fallback


# -- runners ----------------------------------------------------------------

@runner('fig1a_sweep', required=('spec', 'ps', 'n', 'seeds'), mixture='label')
def fig1a_sweep(config, pool):
    """Losses trained on the first p features of a fixed mixture, against theory."""
    spec = _spec(config)
    n, seeds = config['n'], config['seeds']
    losses = config.get('losses') or ['CDT', 'LA']
    iterations = config.get('iterations', 2000)

    points = []
    for p in config['ps']:
        truncated = truncate_features(spec, p)
        base = TheoryProblem.from_spec(truncated, p / n)
        gamma_threshold = threshold(base)
        points.append((p, truncated, base, gamma_threshold, _theory_delta(config, base, gamma_threshold)))

    def task(item):
        (p, truncated, _, _, delta), seed = item
        train = truncate_features(sample_label_gmm(spec, n, seed), p)
        separable = is_separable(train)
        reports = []
        for name in losses:
            params = loss_params(name, train.class_counts(), delta)
            model = _fit_loss(params, train, separable, iterations)
            reports.append((closed_form_risks(model, truncated), empirical_risks(model, train).standard))
        return reports

    outcomes = pool.map(task, [(point, seed) for point in points for seed in seeds])

    rows = []
    for index, (p, truncated, base, gamma_threshold, delta) in enumerate(points):
        logger.info("fig1a: p=%d (gamma=%.3g)", p, base.gamma)
        block = outcomes[index * len(seeds):(index + 1) * len(seeds)]
        for k, name in enumerate(losses):
            loss_delta = _loss_delta(name, delta)
            _, theory = _solve_or_none(base.with_delta(loss_delta), gamma_threshold)
            row = {'p': p, 'gamma': base.gamma, 'loss': name, 'delta': loss_delta}
            row.update(_aggregate([seed_result[k][0] for seed_result in block]))
            row['train_err'] = _mean_sem([seed_result[k][1] for seed_result in block])[0]
            row.update(_theory_columns(theory))
            rows.append(row)
    columns = (
        'p', 'gamma', 'loss', 'delta', 'mc_separable', 'mc_R_plus', 'mc_R_minus', 'mc_R_bal', 'mc_R_std',
        'mc_R_bal_sem', 'train_err', 'th_R_plus', 'th_R_minus', 'th_R_bal', 'th_R_std',
    )
    return ExperimentResult(rows, columns)


@runner('fig1bc_dynamics', required=('spec', 'n', 'seeds'), mixture='label')
def fig1bc_dynamics(config, pool):
    """
    Gradient-descent trajectories of several losses against the CS-SVM and SVM
    directions. Classifiers are linear without intercept, f(x) = w'x: with an
    intercept CS-SVM(delta) shares the SVM direction and the two gaps coincide.
    """
    spec = _spec(config)
    n = config['n']
    losses = config.get('losses') or list(LOSS_NAMES)
    gd_config = GdConfig(
        config.get('schedule', 'constant'),
        config.get('step_size', 0.1),
        config.get('iterations', 10000),
        record_every=config.get('record_every', 100),
        fit_intercept=False,
    )
    base = TheoryProblem.from_spec(spec, spec.dimension / n)
    delta = _theory_delta(config, base, threshold(base))

    datasets = []
    for seed in config['seeds']:
        dataset = sample_label_gmm(spec, n, seed)
        if not is_separable(dataset, with_intercept=False):
            logger.warning("seed %d gives non-separable training data; skipped", seed)
            continue
        datasets.append((
            seed, dataset,
            cs_svm(dataset, delta, with_intercept=False).model,
            svm(dataset, with_intercept=False).model,
        ))

    def balanced_error(model):
        return closed_form_risks(model, spec).balanced

    def task(item):
        (seed, dataset, reference_cs, reference_svm), name = item
        params = loss_params(name, dataset.class_counts(), delta)
        objective = partial(vs_value_and_scaled_grad_binary, params, dataset=dataset)
        _, trajectory = gd_train(objective, LinearModel.zeros(dataset.d), gd_config)
        rows = trajectory.to_rows(reference_cs, reference_svm, balanced_error)
        return [{'seed': seed, 'loss_name': name, **row} for row in rows]

    blocks = pool.map(task, [(entry, name) for entry in datasets for name in losses])
    rows = [row for block in blocks for row in block]
    return ExperimentResult(rows, ('seed', 'loss_name') + TRAJECTORY_COLUMNS, {'delta': delta})


def _tradeoff(config, pool, group):
    spec = _spec(config)
    seeds = config.get('seeds', [])
    base = TheoryProblem.from_spec(spec, config['gammas'][0])
    gamma_threshold = threshold(base)
    grid = [(float(g), float(d)) for g in config['gammas'] for d in config['deltas']]

    def theory_task(point):
        gamma, delta = point
        problem = base.with_gamma(gamma).with_delta(delta)
        triple, _ = _solve_or_none(problem, gamma_threshold)
        return None if triple is None else theory_row(problem, triple)

    def mc_task(item):
        (gamma, delta), seed = item
        n = _n_for(spec.dimension, gamma)
        try:
            if group:
                model = gs_svm(sample_group_gmm(spec, n, seed), (delta, 1.0)).model
            else:
                model = cs_svm(sample_label_gmm(spec, n, seed), delta).model
        except InfeasibleError:
            return None
        return closed_form_risks(model, spec)

    theory = pool.map(theory_task, grid)
    mc = pool.map(mc_task, [(point, seed) for point in grid for seed in seeds])

    per_gamma = {}
    for gamma in dict.fromkeys(g for g, _ in grid):
        problem = base.with_gamma(gamma)
        if gamma <= gamma_threshold + 1e-6:
            per_gamma[gamma] = ''
        elif group:
            per_gamma[gamma] = _deo_zero_or_blank(problem, config)
        else:
            per_gamma[gamma] = delta_star_from_theory(problem).delta_star.concrete

    rows = []
    for index, ((gamma, delta), theory_values) in enumerate(zip(grid, theory)):
        row = {'gamma': gamma, 'delta': delta}
        row.update(theory_values or {})
        row['delta_zero' if group else 'delta_star'] = per_gamma[gamma]
        if seeds:
            row.update(_aggregate(mc[index * len(seeds):(index + 1) * len(seeds)]))
        rows.append(row)

    columns = ('gamma', 'delta', 'q', 'rho1', 'rho2', 'b', 'R_plus', 'R_minus', 'R_bal', 'R_std', 'DEO')
    columns += ('delta_zero',) if group else ('delta_star',)
    if seeds:
        columns += ('mc_separable', 'mc_R_plus', 'mc_R_minus', 'mc_R_bal', 'mc_R_std', 'mc_R_bal_sem')
        columns += ('mc_DEO', 'mc_DEO_sem') if group else ()
    return ExperimentResult(rows, columns, {'gamma_star': gamma_threshold})


@runner('tradeoff_label', required=('spec', 'gammas', 'deltas'), mixture='label')
def tradeoff_label(config, pool):
    """Conditional, balanced and standard risks of CS-SVM over (gamma, delta)."""
    return _tradeoff(config, pool, group=False)


@runner('tradeoff_group', required=('spec', 'gammas', 'deltas'), mixture='group')
def tradeoff_group(config, pool):
    """DEO and risks of GS-SVM over (gamma, delta), with the DEO-zero ratio per gamma."""
    return _tradeoff(config, pool, group=True)


def _deo_zero_or_blank(problem, config):
    bracket = config.get('deo_bracket') or [min(config['deltas']), max(config['deltas'])]
    try:
        return find_deo_zero(problem, bracket)
    except BracketError as exc:
        logger.warning("no DEO zero at gamma=%.4g: %s", problem.gamma, exc)
        return ''


@runner('phase_transition', required=('spec', 'gammas', 'n', 'seeds'))
def phase_transition(config, pool):
    """Empirical separability frequency across gamma next to the threshold gamma_star."""
    spec = _spec(config)
    n, seeds = config['n'], config['seeds']
    gamma_threshold = threshold(TheoryProblem.from_spec(spec, 1.0))

    def embedded(d):
        means = embed_means(spec.mean_model, d)
        if isinstance(spec, GroupGmmSpec):
            return GroupGmmSpec.from_means(means, spec.pi, spec.p, spec.sigma1, spec.sigma2)
        return LabelGmmSpec.from_means(means, spec.pi)

    def task(item):
        gamma, seed = item
        d = max(spec.mean_model.rank, int(round(gamma * n)))
        spec_d = embedded(d)
        sample = sample_group_gmm if isinstance(spec_d, GroupGmmSpec) else sample_label_gmm
        return is_separable(sample(spec_d, n, seed))

    gammas = [float(g) for g in config['gammas']]
    flags = pool.map(task, [(gamma, seed) for gamma in gammas for seed in seeds])
    rows = []
    for index, gamma in enumerate(gammas):
        block = flags[index * len(seeds):(index + 1) * len(seeds)]
        rows.append({
            'gamma': gamma,
            'd': max(spec.mean_model.rank, int(round(gamma * n))),
            'n': n,
            'separable_fraction': float(np.mean(block)),
            'gamma_star': gamma_threshold,
        })
    summary = {'gamma_star': gamma_threshold, 'empirical_crossover': empirical_crossover(rows)}
    logger.info("gamma_star=%.6g, empirical crossover=%s", gamma_threshold, summary['empirical_crossover'])
    return ExperimentResult(rows, ('gamma', 'd', 'n', 'separable_fraction', 'gamma_star'), summary)


def empirical_crossover(rows, level=0.5):
    """gamma at which the separable fraction first reaches ``level``, linearly interpolated."""
    points = sorted((row['gamma'], row['separable_fraction']) for row in rows)
    for (g0, f0), (g1, f1) in zip(points, points[1:]):
        if f0 < level <= f1:
            return g0 + (level - f0) * (g1 - g0) / (f1 - f0)
    return None


@runner('tune_delta', required=('spec', 'gammas'), mixture='label')
def tune_delta(config, pool):
    """Closed-form delta_star per gamma, checked on a grid and against the plug-in estimate."""
    spec = _spec(config)
    seeds = config.get('seeds', [])
    base = TheoryProblem.from_spec(spec, config['gammas'][0])

    def theory_task(gamma):
        try:
            return delta_star_from_theory(base.with_gamma(gamma))
        except NonSeparableRegimeError:
            logger.warning("gamma=%.4g is below gamma_star; no delta_star", gamma)
            return None

    def heuristic_task(item):
        gamma, seed = item
        try:
            return delta_star_heuristic(sample_label_gmm(spec, _n_for(spec.dimension, gamma), seed))
        except InfeasibleError:
            return None

    gammas = [float(g) for g in config['gammas']]
    tuned = pool.map(theory_task, gammas)
    estimates = pool.map(heuristic_task, [(gamma, seed) for gamma in gammas for seed in seeds])

    rows = []
    for index, (gamma, result) in enumerate(zip(gammas, tuned)):
        row = {'gamma': gamma}
        if result is not None:
            _, _, curve = balanced_error_curve(result.summary, TUNE_GRID)
            best = int(np.argmin(curve))
            row.update(result.as_dict(), grid_delta=float(TUNE_GRID[best]), grid_R_bal=float(curve[best]))
        if seeds:
            block = estimates[index * len(seeds):(index + 1) * len(seeds)]
            values = [e.delta_star.concrete for e in block if e is not None]
            row['heuristic_delta'], row['heuristic_delta_sem'] = _mean_sem(values)
        rows.append(row)
    columns = ('gamma', 'delta_star', 'branch', 'R_bal_at_star', 'R_plus', 'R_minus', 'grid_delta', 'grid_R_bal')
    if seeds:
        columns += ('heuristic_delta', 'heuristic_delta_sem')
    return ExperimentResult(rows, columns)


@runner('undersampling', required=('spec', 'gammas', 'seeds'), mixture='label')
def undersampling(config, pool):
    """SVM after undersampling the majority: the gamma / (2 pi) mapping against simulation."""
    spec = _spec(config)
    seeds = config['seeds']
    gammas = [float(g) for g in config['gammas']]

    def theory_task(gamma):
        try:
            return undersampling_risks(gamma, spec.pi, spec.mean_model)
        except NonSeparableRegimeError:
            return None

    def mc_task(item):
        gamma, seed = item
        dataset = undersample_majority(sample_label_gmm(spec, _n_for(spec.dimension, gamma), seed), seed)
        try:
            return closed_form_risks(svm(dataset).model, spec)
        except InfeasibleError:
            return None

    theory = pool.map(theory_task, gammas)
    mc = pool.map(mc_task, [(gamma, seed) for gamma in gammas for seed in seeds])
    rows = []
    for index, (gamma, report) in enumerate(zip(gammas, theory)):
        row = {'gamma': gamma, 'mapped_gamma': gamma / (2.0 * min(spec.pi, 1.0 - spec.pi))}
        row.update(_theory_columns(report))
        row.update(_aggregate(mc[index * len(seeds):(index + 1) * len(seeds)]))
        rows.append(row)
    columns = (
        'gamma', 'mapped_gamma', 'th_R_plus', 'th_R_minus', 'th_R_bal', 'th_R_std',
        'mc_separable', 'mc_R_plus', 'mc_R_minus', 'mc_R_bal', 'mc_R_std', 'mc_R_bal_sem',
    )
    return ExperimentResult(rows, columns)


def _stratified_draw(pool_data, n, pi, seed):
    rng = np.random.default_rng(seed)
    plus = np.flatnonzero(pool_data.labels == 1)
    minus = np.flatnonzero(pool_data.labels == -1)
    n_plus = min(plus.size, max(1, int(round(pi * n))))
    n_minus = min(minus.size, max(1, n - n_plus))
    keep = np.sort(np.concatenate([rng.choice(plus, n_plus, replace=False), rng.choice(minus, n_minus, replace=False)]))
    return pool_data.subset(keep)


@runner('mnist_rf', required=('data_path', 'test_path', 'gammas', 'seeds', 'n_features'))
def mnist_rf(config, pool):
    """
    One-vs-rest data from local files, ReLU random features, and three CS-SVM
    choices of delta: 1, ((1-pi)/pi)^(1/4) and the plug-in delta_star.
    """
    train_pool = read_dataset_csv(config['data_path'])
    test = read_dataset_csv(config['test_path'])
    if not (train_pool.is_binary and test.is_binary):
        raise ValidationError("one-vs-rest files must carry labels in {+1, -1}")
    n_features = config['n_features']
    pi = float(np.mean(train_pool.labels == 1))
    fixed_delta = heuristic_delta(pi, 0.25)
    methods = ('svm', 'heuristic', 'plug_in')

    def task(item):
        gamma, seed = item
        train = random_relu_features(_stratified_draw(train_pool, _n_for(n_features, gamma), pi, seed), n_features, seed)
        mapped_test = random_relu_features(test, n_features, seed)
        try:
            deltas = (1.0, fixed_delta, delta_star_heuristic(train).delta_star.concrete)
            return [
                (delta, empirical_risks(cs_svm(train, delta).model, mapped_test, pi=0.5).balanced)
                for delta in deltas
            ]
        except InfeasibleError:
            return None

    gammas = [float(g) for g in config['gammas']]
    seeds = config['seeds']
    outcomes = pool.map(task, [(gamma, seed) for gamma in gammas for seed in seeds])
    rows = []
    for index, gamma in enumerate(gammas):
        block = [o for o in outcomes[index * len(seeds):(index + 1) * len(seeds)] if o is not None]
        for k, method in enumerate(methods):
            r_bal, sem = _mean_sem([o[k][1] for o in block])
            rows.append({
                'gamma': gamma,
                'method': method,
                'delta_mean': _mean_sem([o[k][0] for o in block])[0],
                'R_bal': r_bal,
                'R_bal_sem': sem,
                'count': len(block),
            })
    return ExperimentResult(rows, ('gamma', 'method', 'delta_mean', 'R_bal', 'R_bal_sem', 'count'), {'pi': pi})


# -- DEO zero ---------------------------------------------------------------

def find_deo_zero(problem, bracket, tol=DEO_TOL, max_iters=200):
    """Margin ratio delta_0 at which the theoretical DEO of GS-SVM vanishes, by bisection."""
    if not problem.is_group:
        raise ValidationError("DEO needs a group problem")
    lo, hi = (float(v) for v in bracket)
    if not 0 < lo < hi:
        raise ValidationError(f"bracket must satisfy 0 < lo < hi, got {bracket}")
    gamma_threshold = threshold(problem)

    def deo(delta):
        point = problem.with_delta(delta)
        return predict_risks(solve_triple(point, gamma_threshold=gamma_threshold), point).deo

    deo_lo, deo_hi = deo(lo), deo(hi)
    if abs(deo_lo) <= tol:
        return lo
    if abs(deo_hi) <= tol:
        return hi
    if np.sign(deo_lo) == np.sign(deo_hi):
        logger.error("DEO keeps its sign on [%g, %g]: (%.3g, %.3g)", lo, hi, deo_lo, deo_hi)
        raise BracketError(
            f"DEO does not change sign on [{lo:g}, {hi:g}]: DEO = ({deo_lo:.6g}, {deo_hi:.6g})",
            {'delta': (lo, hi), 'deo': (deo_lo, deo_hi)},
        )
    for _ in range(max_iters):
        mid = 0.5 * (lo + hi)
        deo_mid = deo(mid)
        if abs(deo_mid) <= tol or hi - lo <= 1e-14 * hi:
            logger.debug("delta_0=%.10g with DEO=%.3e", mid, deo_mid)
            return mid
        if np.sign(deo_mid) == np.sign(deo_lo):
            lo, deo_lo = mid, deo_mid
        else:
            hi = mid
    raise BracketError(f"bisection did not reach |DEO| <= {tol:g}", {'delta': (lo, hi)})


@runner('deo_zero', required=('spec', 'gammas'), mixture='group')
def deo_zero(config, pool):
    """delta_0 per gamma, with the GS-SVM risks predicted at that ratio."""
    spec = _spec(config)
    base = TheoryProblem.from_spec(spec, config['gammas'][0])
    bracket = config.get('deo_bracket') or [0.1, 10.0]

    def task(gamma):
        problem = base.with_gamma(gamma)
        try:
            delta_zero = find_deo_zero(problem, bracket)
        except BracketError as exc:
            raise BracketError(f"gamma={gamma:g}: {exc}", exc.endpoints) from exc
        point = problem.with_delta(delta_zero)
        return {'gamma': gamma, 'delta_zero': delta_zero, **predict_risks(solve_triple(point), point).as_row()}

    rows = pool.map(task, [float(g) for g in config['gammas']])
    columns = ('gamma', 'delta_zero', 'R_plus', 'R_minus', 'R_bal', 'R_std', 'DEO')
    return ExperimentResult(rows, columns, {'gamma_star': threshold(base)})


# -- artifacts --------------------------------------------------------------

def _cell(value):
    if value is None or value == '':
        return ''
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_rows_csv(rows, columns, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(column, '')) for column in columns])
    return path


def canonical_json(data):
    return json.dumps(data, sort_keys=True, separators=(',', ':'))


def config_hash(config):
    return hashlib.sha256(canonical_json(config).encode('utf-8')).hexdigest()


def versions():
    import django
    import scipy

    return {
        'python': platform.python_version(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'django': django.get_version(),
        'vsmargin': __version__,
    }


def build_manifest(config, artifacts, summary=None):
    """No timestamps: the manifest of a re-run is byte-identical."""
    return {
        'kind': config['kind'],
        'config': config,
        'config_hash': config_hash(config),
        'seeds': config.get('seeds', []),
        'versions': versions(),
        'artifacts': sorted(Path(a).name for a in artifacts),
        'summary': summary or {},
    }


def validate_config(raw):
    """Clean an experiment config through ExperimentConfigForm; returns the normalised dict."""
    from .forms import ExperimentConfigForm

    form = ExperimentConfigForm(data=raw)
    if not form.is_valid():
        errors = {name: [str(e) for e in messages] for name, messages in form.errors.items()}
        raise ValidationError(f"invalid experiment config: {errors}")
    return form.config()


def _record_start(config, output_dir):
    from .models import ExperimentRun

    return ExperimentRun.objects.create(
        kind=config['kind'],
        status='running',
        config=config,
        config_hash=config_hash(config),
        seeds=config.get('seeds', []),
        output_dir=str(output_dir),
    )


def _record_finish(entry, status, manifest=None, error=''):
    from django.utils import timezone

    entry.status = status
    entry.manifest = manifest or {}
    entry.error_message = error
    entry.finished_at = timezone.now()
    entry.save()


def run(raw_config, output_dir=None, threads=None, record=None):
    """Validate, execute and write ``<out>/<kind>.csv`` plus ``<out>/manifest.json``."""
    from .schemas import write_json

    config = validate_config(raw_config)
    kind = config['kind']
    output_dir = Path(output_dir or get_setting('VSMARGIN_OUTPUT_DIR'))
    threads = get_setting('VSMARGIN_THREADS') if threads is None else threads
    record = get_setting('VSMARGIN_RECORD_RUNS') if record is None else record

    entry = _record_start(config, output_dir) if record else None
    logger.info("running %s (%s) into %s with %d worker(s)", kind, config_hash(config)[:12], output_dir, threads)
    try:
        with WorkerPool(threads) as pool:
            result = RUNNERS[kind].function(config, pool)
        artifact = write_rows_csv(result.rows, result.columns, output_dir / f'{kind}.csv')
        manifest = build_manifest(config, [artifact], result.summary)
        write_json(manifest, output_dir / 'manifest.json')
    except VsMarginError as exc:
        logger.error("%s failed: %s", kind, exc)
        if entry is not None:
            _record_finish(entry, 'failed', error=str(exc))
        raise
    if entry is not None:
        _record_finish(entry, 'completed', manifest)
    logger.info("wrote %s and manifest.json", artifact)
    return RunOutcome(output_dir, manifest, result)
