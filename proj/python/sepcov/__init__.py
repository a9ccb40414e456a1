"""Separable covariance kernels, spectral sampling, emulators and design experiments."""

import json

from ._sepcov import (
    BudgetError,
    DomainError,
    Error,
    InvalidArgument,
    Kernel1D,
    NumericalError,
    RangeError,
    SampleSizeError,
    SeparableKernel,
    ShapeError,
    SpectralBasis,
    __version__,
    check_suites,
    conditional_covariance,
    cross_correlation,
    isotropy_residual,
    kl_sample,
    kron_solve,
    nystrom_decompose,
    product_sample,
    separability_residual,
    set_thread_count,
)
from . import _sepcov


def fit_predict(kernel, design, values, points, regression=None, plug_in_mean=False):
    """Posterior mean and covariance at `points`; `regression` is a dict or None."""
    reg = json.dumps(regression) if regression is not None else ""
    return _sepcov.fit_predict(kernel, design, values, points, reg, plug_in_mean)


def check_uncorrelated(x, y, k, tol=5.0):
    """x, y: arrays with one draw per row. Returns the report as a dict."""
    return json.loads(_sepcov.check_uncorrelated(x, y, k, tol))


def second_order_check(kernel, truncation=6, samples=4000, seed=20260101, nodes=40):
    return json.loads(_sepcov.second_order_check(kernel, truncation, samples, seed, nodes))


def run_check(suite, seed=20260101):
    return json.loads(_sepcov.run_check(suite, seed))


def run_experiment(config):
    """Returns (csv_text, summary_dict) for an experiment config dict."""
    csv, summary = _sepcov.run_experiment(json.dumps(config))
    return csv, json.loads(summary)
