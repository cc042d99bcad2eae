"""Synthetic instances for the regression and detection studies."""
from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..problem import Problem
from .config import ExperimentConfig

__all__ = ["OUTLIERS", "REGRESSION_N", "gen_detection_instance", "gen_regression_instance"]

REGRESSION_N = 52
OUTLIERS = 20
OUTLIER_VALUE = 20.0
_TAILORED_SHIFT = 20.0
_TAILORED_FROM = 32


def gen_regression_instance(kind: str, noise_std: float, seed):
    """Straight-line fit with gross outliers.

    ``A = [alpha, 1]`` with ``alpha_i = i`` (1-based); the ``tailored`` design
    shifts ``alpha_i`` by 20 for ``i > 32``.  Twenty rows chosen uniformly get
    an error of 20, and Gaussian noise of std ``noise_std`` is added.

    Returns ``(problem, x_true, e_true)``.
    """
    if kind not in ("uniform", "tailored"):
        raise ConfigError(f"unknown regression design {kind!r}")
    rng = np.random.default_rng(seed)
    alpha = np.arange(1, REGRESSION_N + 1, dtype=float)
    if kind == "tailored":
        alpha[_TAILORED_FROM:] += _TAILORED_SHIFT
    a = np.column_stack([alpha, np.ones(REGRESSION_N)])
    x_true = rng.standard_normal(2)
    e_true = np.zeros(REGRESSION_N)
    e_true[rng.choice(REGRESSION_N, OUTLIERS, replace=False)] = OUTLIER_VALUE
    noise = rng.normal(0.0, noise_std, REGRESSION_N) if noise_std > 0 else 0.0
    y = a @ x_true + e_true + noise
    return Problem(a, y), x_true, e_true


def gen_detection_instance(cfg: ExperimentConfig, seed):
    """Two-block Gaussian design with errors split between the blocks.

    The first ``n - k`` rows of ``A`` are N(0, 1), the last ``k`` are N(5, 1).
    ``round(t_fraction * s)`` errors go to uniformly chosen rows among the
    last ``k`` and the rest among the first ``n - k``; all have magnitude
    ``error_magnitude``.

    Raises
    ------
    ConfigError
        If either block cannot hold its share of the errors.
    """
    n, r, k, s = cfg.n, cfg.r, cfg.k, cfg.s
    n_last = round(cfg.t_fraction * s)
    n_first = s - n_last
    if n_last > k or n_first > n - k:
        raise ConfigError(f"cannot place {n_first} + {n_last} errors in blocks of {n - k} + {k}")
    rng = np.random.default_rng(seed)
    a = np.vstack([rng.standard_normal((n - k, r)), rng.normal(5.0, 1.0, (k, r))])
    x_true = rng.standard_normal(r)
    e_true = np.zeros(n)
    e_true[rng.choice(n - k, n_first, replace=False)] = cfg.error_magnitude
    e_true[n - k + rng.choice(k, n_last, replace=False)] = cfg.error_magnitude
    noise = rng.normal(0.0, cfg.noise_std, n) if cfg.noise_std > 0 else 0.0
    y = a @ x_true + e_true + noise
    return Problem(a, y), x_true, e_true
