"""JSON schemas for parameter sets, generative specs, solutions and tuning results."""
import json
from pathlib import Path

import numpy as np
from marshmallow import Schema, ValidationError as SchemaError, fields, post_load, validate, validates_schema

from .exceptions import ValidationError
from .linear import LinearModel
from .losses import PRESET_KINDS, VsParams
from .mixture import GroupGmmSpec, LabelGmmSpec, antipodal_means, orthogonal_means, random_means


class VsParamsSchema(Schema):
    omega = fields.List(fields.Float(), required=True, validate=validate.Length(min=2))
    iota = fields.List(fields.Float(), required=True, validate=validate.Length(min=2))
    delta = fields.List(fields.Float(), required=True, validate=validate.Length(min=2))

    @post_load
    def make_params(self, data, **kwargs):
        return VsParams(data['omega'], data['iota'], data['delta'])


class LossSchema(Schema):
    """Either an explicit triple or a named preset."""

    preset = fields.String(validate=validate.OneOf(PRESET_KINDS))
    tau = fields.Float(load_default=1.0, validate=validate.Range(min=0))
    gamma_exp = fields.Float(load_default=0.0, validate=validate.Range(min=0))
    params = fields.Nested(VsParamsSchema)

    @validates_schema
    def validate_choice(self, data, **kwargs):
        if ('preset' in data) == ('params' in data):
            raise SchemaError("give exactly one of 'preset' or 'params'")


class GeometrySchema(Schema):
    kind = fields.String(required=True, validate=validate.OneOf(('antipodal', 'orthogonal', 'random')))
    d = fields.Integer(required=True, validate=validate.Range(min=1))
    norms = fields.List(fields.Float(validate=validate.Range(min=0)), required=True,
                        validate=validate.Length(min=1, max=2))
    seed = fields.Integer(load_default=0)

    @post_load
    def make_means(self, data, **kwargs):
        norms = data['norms']
        if data['kind'] == 'antipodal':
            return antipodal_means(data['d'], norms[0])
        second = norms[1] if len(norms) > 1 else norms[0]
        if data['kind'] == 'orthogonal':
            return orthogonal_means(data['d'], norms[0], second)
        return random_means(data['d'], (norms[0], second), data['seed'])


class SpecSchema(Schema):
    """
    A label mixture, or a group mixture when ``p`` is present. Means are given as
    two vectors (mu_+, mu_-) or (mu_1, mu_2), or built from a geometry.
    """

    means = fields.List(fields.List(fields.Float()), validate=validate.Length(equal=2))
    geometry = fields.Nested(GeometrySchema)
    pi = fields.Float(required=True, validate=validate.Range(min=0, max=1, min_inclusive=False, max_inclusive=False))
    p = fields.Float(allow_none=True, validate=validate.Range(min=0, max=1, min_inclusive=False, max_inclusive=False))
    sigma1 = fields.Float(load_default=1.0, validate=validate.Range(min=0, min_inclusive=False))
    sigma2 = fields.Float(load_default=1.0, validate=validate.Range(min=0, min_inclusive=False))
    covariance = fields.List(fields.List(fields.Float()), allow_none=True)

    @validates_schema
    def validate_means(self, data, **kwargs):
        if ('means' in data) == ('geometry' in data):
            raise SchemaError("give exactly one of 'means' or 'geometry'")
        if 'means' in data and len(data['means'][0]) != len(data['means'][1]):
            raise SchemaError("both mean vectors need the same dimension", 'means')
        if data.get('p') is not None and data.get('covariance') is not None:
            raise SchemaError("group mixtures are isotropic per group", 'covariance')

    @post_load
    def make_spec(self, data, **kwargs):
        means = np.array(data['means']).T if 'means' in data else data['geometry']
        if data.get('p') is not None:
            return GroupGmmSpec.from_means(means, data['pi'], data['p'], data['sigma1'], data['sigma2'])
        covariance = data.get('covariance')
        return LabelGmmSpec.from_means(means, data['pi'], None if covariance is None else np.array(covariance))


class MarginSolutionSchema(Schema):
    w = fields.List(fields.Float(), required=True)
    b = fields.Float(required=True)
    delta = fields.Float(allow_none=True)
    margin = fields.Float()
    duality_gap = fields.Float()

    @post_load
    def make_model(self, data, **kwargs):
        return LinearModel(data['w'], data['b'])


def dump_solution(solution):
    return MarginSolutionSchema().dump({
        'w': [float(v) for v in solution.weights],
        'b': float(solution.intercept),
        'delta': solution.delta,
        'margin': solution.margin_value,
        'duality_gap': solution.duality_gap,
    })


class TuneResultSchema(Schema):
    delta_star = fields.Float(required=True)
    branch = fields.Integer(required=True, validate=validate.OneOf((1, 2, 3)))
    R_bal_at_star = fields.Float(required=True)
    R_plus = fields.Float(required=True)
    R_minus = fields.Float(required=True)


def load(schema, data):
    """Run ``schema.load`` and surface failures as the package's ValidationError."""
    try:
        return schema.load(data)
    except SchemaError as exc:
        raise ValidationError(f"invalid {type(schema).__name__[:-6]}: {exc.messages}") from exc


def load_json(schema, path):
    with Path(path).open() as handle:
        return load(schema, json.load(handle))


def write_json(data, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w') as handle:
        json.dump(data, handle, indent=2, sort_keys=True)
        handle.write('\n')
    return path


# -- subcommand configs -----------------------------------------------------

class GenConfigSchema(Schema):
    spec = fields.Nested(SpecSchema, required=True)
    n = fields.Integer(required=True, validate=validate.Range(min=2))
    seed = fields.Integer(load_default=0)
    n_per_class = fields.List(fields.Integer(validate=validate.Range(min=1)), validate=validate.Length(equal=2))


class TrainConfigSchema(Schema):
    data = fields.String(required=True)
    loss = fields.Nested(LossSchema, required=True)
    iterations = fields.Integer(load_default=1000, validate=validate.Range(min=1))
    step_size = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    schedule = fields.String(load_default='constant', validate=validate.OneOf(('constant', 'normalized')))
    record_every = fields.Integer(load_default=10, validate=validate.Range(min=1))
    reference_delta = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    fit_intercept = fields.Boolean(load_default=False)


class SvmConfigSchema(Schema):
    data = fields.String(required=True)
    delta = fields.Float(load_default=1.0, validate=validate.Range(min=0, min_inclusive=False))
    group_deltas = fields.List(fields.Float(validate=validate.Range(min=0, min_inclusive=False)),
                               validate=validate.Length(equal=2))
    with_intercept = fields.Boolean(load_default=True)


class TheoryConfigSchema(Schema):
    spec = fields.Nested(SpecSchema, required=True)
    gammas = fields.List(fields.Float(validate=validate.Range(min=0, min_inclusive=False)),
                         required=True, validate=validate.Length(min=1))
    deltas = fields.List(fields.Float(validate=validate.Range(min=0, min_inclusive=False)),
                         load_default=lambda: [1.0], validate=validate.Length(min=1))
    skip_non_separable = fields.Boolean(load_default=True)


class TuneConfigSchema(Schema):
    """Closed-form tuning from a spec at a given gamma, or the plug-in estimate from a dataset."""

    spec = fields.Nested(SpecSchema)
    gamma = fields.Float(validate=validate.Range(min=0, min_inclusive=False))
    data = fields.String()
    validation_fraction = fields.Float(
        validate=validate.Range(min=0, max=1, min_inclusive=False, max_inclusive=False)
    )
    seed = fields.Integer(load_default=0)

    @validates_schema
    def validate_source(self, data, **kwargs):
        if ('spec' in data) == ('data' in data):
            raise SchemaError("give exactly one of 'spec' or 'data'")
        if 'spec' in data and 'gamma' not in data:
            raise SchemaError("tuning from a spec needs gamma", 'gamma')

