from django import forms

from .exceptions import ValidationError as VsMarginValidationError
from .experiments import EXPERIMENT_KINDS, LOSS_NAMES, RUNNERS
from .optim import SCHEDULES


class _ListField(forms.Field):
    """A JSON list, or a comma-separated string, of scalars."""

    item_type = str
    item_label = 'values'

    def to_python(self, value):
        if value is None or value == '':
            return []
        if isinstance(value, str):
            value = [v.strip() for v in value.split(',') if v.strip()]
        if not isinstance(value, (list, tuple)):
            raise forms.ValidationError(f'Enter a list of {self.item_label}.', code='invalid')
        try:
            return [self.convert(v) for v in value]
        except (TypeError, ValueError):
            raise forms.ValidationError(f'Enter a list of {self.item_label}.', code='invalid')

    def convert(self, item):
        return self.item_type(item)


class FloatListField(_ListField):
    item_label = 'numbers'

    def convert(self, item):
        if isinstance(item, bool):
            raise TypeError('booleans are not numbers')
        return float(item)


class IntegerListField(_ListField):
    item_label = 'integers'

    def convert(self, item):
        if isinstance(item, bool) or float(item) != int(float(item)):
            raise ValueError('not an integer')
        return int(float(item))


class StringListField(_ListField):
    item_label = 'names'


GRID_FIELDS = ('gammas', 'deltas', 'ps', 'seeds', 'losses', 'deo_bracket')


class ExperimentConfigForm(forms.Form):
    """
    Validates an experiment config. ``config()`` returns the normalised dict the
    runners consume and the manifest records.
    """

    kind = forms.ChoiceField(choices=[(k, k.replace('_', ' ').title()) for k in EXPERIMENT_KINDS])
    spec = forms.JSONField(required=False)
    gammas = FloatListField(required=False)
    deltas = FloatListField(required=False)
    ps = IntegerListField(required=False)
    seeds = IntegerListField(required=False)
    losses = StringListField(required=False)
    deo_bracket = FloatListField(required=False)
    n = forms.IntegerField(required=False, min_value=2)
    n_test = forms.IntegerField(required=False, min_value=1000)
    n_features = forms.IntegerField(required=False, min_value=1)
    iterations = forms.IntegerField(required=False, min_value=1)
    record_every = forms.IntegerField(required=False, min_value=1)
    step_size = forms.FloatField(required=False, min_value=0)
    schedule = forms.ChoiceField(required=False, choices=[('', '')] + [(s, s) for s in SCHEDULES])
    delta = forms.CharField(required=False)
    data_path = forms.CharField(required=False)
    test_path = forms.CharField(required=False)

    def clean_spec(self):
        spec = self.cleaned_data.get('spec')
        if spec in (None, ''):
            return None
        if not isinstance(spec, dict):
            raise forms.ValidationError('The spec must be a JSON object.')
        from .schemas import SpecSchema, load

        try:
            load(SpecSchema(), spec)
        except VsMarginValidationError as exc:
            raise forms.ValidationError(str(exc))
        return spec

    def clean_gammas(self):
        gammas = self.cleaned_data.get('gammas', [])
        if any(g <= 0 for g in gammas):
            raise forms.ValidationError('Every gamma must be positive.')
        return gammas

    def clean_deltas(self):
        deltas = self.cleaned_data.get('deltas', [])
        if any(d <= 0 for d in deltas):
            raise forms.ValidationError('Every delta must be positive.')
        return deltas

    def clean_ps(self):
        ps = self.cleaned_data.get('ps', [])
        if any(p < 1 for p in ps):
            raise forms.ValidationError('Feature counts must be at least 1.')
        return ps

    def clean_seeds(self):
        seeds = self.cleaned_data.get('seeds', [])
        if len(set(seeds)) != len(seeds):
            raise forms.ValidationError('Seeds must be distinct.')
        if any(s < 0 for s in seeds):
            raise forms.ValidationError('Seeds must be non-negative.')
        return seeds

    def clean_losses(self):
        losses = self.cleaned_data.get('losses', [])
        unknown = [name for name in losses if name not in LOSS_NAMES]
        if unknown:
            raise forms.ValidationError(f'Unknown losses {unknown}; expected names from {list(LOSS_NAMES)}.')
        return losses

    def clean_deo_bracket(self):
        bracket = self.cleaned_data.get('deo_bracket', [])
        if bracket and not (len(bracket) == 2 and 0 < bracket[0] < bracket[1]):
            raise forms.ValidationError('The DEO bracket must be [lo, hi] with 0 < lo < hi.')
        return bracket

    def clean_delta(self):
        delta = (self.cleaned_data.get('delta') or '').strip()
        if delta in ('', 'star'):
            return delta or None
        try:
            value = float(delta)
        except ValueError:
            raise forms.ValidationError("Delta must be 'star' or a positive number.")
        if value <= 0:
            raise forms.ValidationError("Delta must be 'star' or a positive number.")
        return value

    def clean(self):
        cleaned_data = super().clean()
        kind = cleaned_data.get('kind')

        for name in GRID_FIELDS:
            if name in self.data and name not in self.errors and not cleaned_data.get(name):
                self.add_error(name, 'An explicit grid must not be empty.')

        if kind not in RUNNERS:
            return cleaned_data
        runner = RUNNERS[kind]
        for name in runner.required:
            if name not in self.errors and cleaned_data.get(name) in (None, '', []):
                self.add_error(name, f'Required for {kind}.')

        spec = cleaned_data.get('spec')
        if spec and runner.mixture == 'group' and spec.get('p') is None:
            self.add_error('spec', f'{kind} needs a group mixture (set p).')
        if spec and runner.mixture == 'label' and spec.get('p') is not None:
            self.add_error('spec', f'{kind} needs a label mixture (drop p).')
        return cleaned_data

    def config(self):
        """Cleaned values with unset options removed."""
        if not self.is_valid():
            raise VsMarginValidationError(f'invalid experiment config: {dict(self.errors)}')
        return {
            name: value
            for name, value in self.cleaned_data.items()
            if value is not None and value != '' and value != []
        }
