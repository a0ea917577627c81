"""Exception types shared across estimators."""


class FitFailure(RuntimeError):
    """An estimator could not produce a fit."""


class NonConvergenceError(FitFailure):
    """Iteration cap reached without meeting the convergence criterion."""


class SingularHessianError(FitFailure):
    """Newton step impossible: singular (or non-invertible) Hessian."""


class SampleCapError(ValueError):
    """Sample size exceeds the configured cost cap for this estimator."""
