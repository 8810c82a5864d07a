"""Exception hierarchy shared by the numerical modules and the command layer."""


class VsMarginError(Exception):
    """Base class for every error raised by vsmargin."""


class ValidationError(VsMarginError, ValueError):
    """An argument or precondition was violated."""


class DimensionMismatchError(ValidationError):
    pass


class DegenerateModelError(VsMarginError):
    """The generative model cannot be decomposed (zero means, singular covariance)."""


class SamplingError(VsMarginError):
    pass


class InfeasibleError(VsMarginError):
    """The hard-margin program has no feasible point."""

    def __init__(self, message, status=None):
        super().__init__(message)
        self.status = status


class NonSeparableRegimeError(VsMarginError):
    """gamma lies at or below the separability threshold."""

    def __init__(self, gamma, gamma_star):
        super().__init__(
            f"non-separable regime: gamma={gamma:.6g} <= gamma_star={gamma_star:.6g}"
        )
        self.gamma = gamma
        self.gamma_star = gamma_star


class ConvergenceError(VsMarginError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DivergenceError(VsMarginError):
    """Training produced a non-finite value or hit the weight-norm guard."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class BracketError(VsMarginError):
    """A root-finding bracket does not contain a sign change."""

    def __init__(self, message, endpoints=None):
        super().__init__(message)
        self.endpoints = endpoints
