import numpy as np
import pytest

from vsmargin.asymptotics import TheoryProblem, predict_risks, solve_triple
from vsmargin.exceptions import ValidationError
from vsmargin.mixture import sample_label_gmm
from vsmargin.tuning import (
    DELTA_CAP, SvmSummary, balanced_error_curve, delta_star, delta_star_from_theory,
    delta_star_heuristic, heuristic_delta,
)

from .factories import LabelGmmSpecFactory


class TestClosedForm:
    def test_finite_branch(self):
        star = delta_star(SvmSummary(0.5, 1.5, 1.0))
        assert star.branch == 1
        assert star.value == pytest.approx(3.0)
        assert not star.is_sentinel

    def test_finite_branch_minimises_the_balanced_error(self):
        summary = SvmSummary(0.5, 1.5, 1.0)
        grid = np.logspace(-2, 2, 4001)
        _, _, r_bal = balanced_error_curve(summary, grid)
        assert grid[np.argmin(r_bal)] == pytest.approx(delta_star(summary).value, rel=5e-3)

    def test_symmetric_summary(self):
        assert delta_star(SvmSummary(0.8, 0.8, 0.6)).value == pytest.approx(1.0)

    def test_unbounded_branch(self):
        star = delta_star(SvmSummary(0.0, 3.0, 1.0))
        assert star.branch == 2
        assert star.value == np.inf
        assert star.concrete == DELTA_CAP

    def test_negative_margins_branch(self):
        star = delta_star(SvmSummary(-1.0, -0.5, 1.0))
        assert star.branch == 3
        assert star.value == 0.0
        assert star.concrete > 0.0

    def test_non_positive_numerator(self):
        assert delta_star(SvmSummary(3.0, 0.0, 1.0)).branch == 3

    def test_summary_validation(self):
        with pytest.raises(ValidationError):
            SvmSummary(0.5, 0.5, 0.0)
        with pytest.raises(ValidationError):
            SvmSummary(np.nan, 0.5, 1.0)

    def test_curve_needs_positive_deltas(self):
        with pytest.raises(ValidationError):
            balanced_error_curve(SvmSummary(0.5, 0.5, 1.0), [0.0, 1.0])


class TestFromTheory:
    @pytest.fixture
    def problem(self):
        return TheoryProblem.from_spec(LabelGmmSpecFactory(pi=0.1), gamma=2.0)

    def test_curve_agrees_with_the_asymptotic_system(self, problem):
        result = delta_star_from_theory(problem)
        for delta in (0.5, 4.0):
            shifted = problem.with_delta(delta)
            predicted = predict_risks(solve_triple(shifted), shifted)
            _, _, r_bal = balanced_error_curve(result.summary, [delta])
            assert r_bal[0] == pytest.approx(predicted.balanced, abs=1e-6)

    def test_star_beats_the_svm(self, problem):
        result = delta_star_from_theory(problem)
        svm_risk = predict_risks(solve_triple(problem), problem).balanced
        assert result.r_bal_at_star <= svm_risk + 1e-12
        assert result.as_dict()['branch'] == result.delta_star.branch

    def test_symmetric_mixture_gives_one(self):
        problem = TheoryProblem.from_spec(LabelGmmSpecFactory(pi=0.5), gamma=2.0)
        assert delta_star_from_theory(problem).delta_star.value == pytest.approx(1.0, abs=1e-6)


class TestHeuristic:
    def test_plug_in_on_data(self):
        dataset = sample_label_gmm(LabelGmmSpecFactory(d=100, pi=0.2), 50, seed=4)
        result = delta_star_heuristic(dataset)
        assert result.delta_star.branch in (1, 2, 3)
        assert 0.0 <= result.r_bal_at_star <= 1.0

    def test_validation_split_is_seeded(self):
        dataset = sample_label_gmm(LabelGmmSpecFactory(d=100, pi=0.3), 60, seed=4)
        first = delta_star_heuristic(dataset, validation_fraction=0.3, seed=2)
        second = delta_star_heuristic(dataset, validation_fraction=0.3, seed=2)
        assert first.as_dict() == second.as_dict()

    def test_validation_fraction_range(self):
        dataset = sample_label_gmm(LabelGmmSpecFactory(d=20, pi=0.3), 20, seed=4)
        with pytest.raises(ValidationError):
            delta_star_heuristic(dataset, validation_fraction=1.0)

    def test_fixed_exponent(self):
        assert heuristic_delta(0.1, 0.25) == pytest.approx(9.0 ** 0.25)
        assert heuristic_delta(0.5, 1.0) == pytest.approx(1.0)
        with pytest.raises(ValidationError):
            heuristic_delta(1.0, 0.25)
