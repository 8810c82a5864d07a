import numpy as np
import pytest

from vsmargin.exceptions import ValidationError
from vsmargin.linear import LinearModel, MulticlassModel
from vsmargin.mixture import Dataset, LabelGmmSpec, antipodal_means
from vsmargin.risk import (
    RiskReport, closed_form_risks, empirical_risks, mc_risks, multiclass_error, q_function,
)

from .factories import GroupGmmSpecFactory, LabelGmmSpecFactory


def test_q_function():
    assert q_function(0.0) == pytest.approx(0.5)
    assert q_function(1.959963984540054) == pytest.approx(0.025, rel=1e-9)
    assert q_function(40.0) > 0.0


class TestRiskReport:
    def test_derived_risks(self):
        report = RiskReport(0.2, 0.1, 0.25)
        assert report.balanced == pytest.approx(0.15)
        assert report.standard == pytest.approx(0.25 * 0.2 + 0.75 * 0.1)
        assert report.deo is None
        assert report.worst_group == 0.2
        assert report.as_row()['DEO'] == ''

    def test_from_subgroups(self):
        subgroup = {(1, 1): 0.1, (1, 2): 0.3, (-1, 1): 0.2, (-1, 2): 0.05}
        report = RiskReport.from_subgroups(subgroup, 0.5, 0.25)
        assert report.r_plus == pytest.approx(0.25 * 0.1 + 0.75 * 0.3)
        assert report.deo == pytest.approx(-0.2)
        assert report.symm_deo == pytest.approx(0.5 * (0.2 + 0.15))
        assert report.worst_group == 0.3


class TestClosedForm:
    def test_label_mixture(self):
        spec = LabelGmmSpecFactory(d=5, norm_plus=2.0, norm_minus=1.0, pi=0.3)
        model = LinearModel([2.0, 0.0, 0.0, 0.0, 0.0], 1.0)
        report = closed_form_risks(model, spec)
        # projections (mu_+'w + b)/||w|| = 2.5 and (-mu_-'w - b)/||w|| = 0.5
        assert report.r_plus == pytest.approx(q_function(2.5))
        assert report.r_minus == pytest.approx(q_function(0.5))

    def test_anisotropic_noise(self):
        spec = LabelGmmSpec.from_means(antipodal_means(2, 1.0), 0.5, covariance=np.diag([4.0, 1.0]))
        report = closed_form_risks(LinearModel([1.0, 0.0]), spec)
        assert report.r_plus == pytest.approx(q_function(0.5))

    def test_group_mixture(self):
        spec = GroupGmmSpecFactory(d=4, norm1=2.0, norm2=1.0, sigma2=2.0)
        report = closed_form_risks(LinearModel([1.0, 1.0, 0.0, 0.0]), spec)
        root = np.sqrt(2.0)
        assert report.subgroup[(1, 1)] == pytest.approx(q_function(2.0 / root))
        assert report.subgroup[(1, 2)] == pytest.approx(q_function(1.0 / (2.0 * root)))
        assert report.deo == pytest.approx(q_function(2.0 / root) - q_function(1.0 / (2.0 * root)))

    def test_zero_weights(self):
        with pytest.raises(ValidationError):
            closed_form_risks(LinearModel.zeros(5), LabelGmmSpecFactory(d=5))


class TestMonteCarlo:
    def test_agrees_with_closed_form(self):
        spec = LabelGmmSpecFactory(d=5, pi=0.2)
        model = LinearModel([1.0, 0.5, 0.0, 0.0, -0.3], 0.2)
        exact = closed_form_risks(model, spec)
        estimate = mc_risks(model, spec, 40000, seed=3)
        assert abs(estimate.r_plus - exact.r_plus) <= 5 * estimate.sem['R_plus']
        assert abs(estimate.r_minus - exact.r_minus) <= 5 * estimate.sem['R_minus']

    def test_group_estimates(self):
        spec = GroupGmmSpecFactory(d=4, p=0.3)
        model = LinearModel([1.0, 0.5, 0.0, 0.0])
        exact = closed_form_risks(model, spec)
        estimate = mc_risks(model, spec, 40000, seed=5)
        assert abs(estimate.deo - exact.deo) <= 5 * estimate.sem['DEO']
        assert estimate.absent == ()

    def test_minimum_test_size(self):
        with pytest.raises(ValidationError):
            mc_risks(LinearModel([1.0, 0.0]), LabelGmmSpecFactory(d=2), 999, seed=0)


class TestEmpirical:
    def test_class_fractions(self):
        dataset = Dataset(np.array([[1.0], [-1.0], [0.5], [2.0]]), [1, -1, -1, 1])
        report = empirical_risks(LinearModel([1.0]), dataset)
        assert report.r_plus == 0.0
        assert report.r_minus == 0.5
        assert report.pi == 0.5

    def test_missing_subgroup_is_reported(self):
        dataset = Dataset(np.array([[1.0], [-1.0], [0.5]]), [1, -1, -1], groups=[1, 1, 2])
        report = empirical_risks(LinearModel([1.0]), dataset)
        assert report.absent == ((1, 2),)
        assert np.isnan(report.subgroup[(1, 2)])

    def test_multiclass_error(self):
        dataset = Dataset(np.eye(3), [0, 1, 1])
        assert multiclass_error(MulticlassModel(np.eye(3)), dataset) == pytest.approx(1.0 / 3.0)
