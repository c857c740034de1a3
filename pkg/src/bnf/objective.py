"""Squared-error costs of a single bias-free linear neuron, with and without BN.

The BN variant recomputes batch statistics from the weights on every call,
using the whole dataset as the batch.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .batchnorm import BNParams, DEGENERATE_TOL, batch_stats
from .errors import DegenerateBatch, DimensionError, IllConditioned
from .nn_core import Dataset

# Upper bound on cond(X^T X) accepted by least_squares_fit.
KAPPA_MAX = 1e8


def _weights(w, data: Dataset):
    w = np.asarray(w, dtype=float)
    if w.shape != (data.dim,):
        raise DimensionError(f"weights of shape {w.shape} for {data.dim}-dimensional inputs")
    return w


def standard_cost(w, data: Dataset) -> float:
    w = _weights(w, data)
    r = data.inputs @ w - data.targets
    return float(r @ r)


def standard_cost_gradient(w, data: Dataset) -> np.ndarray:
    w = _weights(w, data)
    r = data.inputs @ w - data.targets
    return 2.0 * (data.inputs.T @ r)


def least_squares_fit(data: Dataset, kappa_max: float = KAPPA_MAX) -> np.ndarray:
    """Global minimizer of standard_cost via the normal equations."""
    X, y = data.inputs, data.targets
    G = X.T @ X
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > kappa_max:
        raise IllConditioned(float(cond), kappa_max)
    rhs = X.T @ y
    w = np.linalg.solve(G, rhs)
    # one step of iterative refinement
    w = w + np.linalg.solve(G, rhs - G @ w)
    return w


def _bn_parts(w, data: Dataset, params: BNParams | None):
    w = _weights(w, data)
    params = BNParams.plain() if params is None else params
    z = data.inputs @ w
    stats = batch_stats(z)
    mu, sigma = stats.mu[0], stats.sigma[0]
    if not sigma > DEGENERATE_TOL:
        raise DegenerateBatch(0, float(sigma))
    centered = z - mu
    gamma, beta = params.gamma[0], params.beta[0]
    out = gamma * centered / sigma + beta
    return w, centered, sigma, gamma, out - data.targets


def bn_cost(w, data: Dataset, params: BNParams | None = None) -> float:
    _, _, _, _, r = _bn_parts(w, data, params)
    return float(r @ r)


def bn_cost_gradient(w, data: Dataset, params: BNParams | None = None) -> np.ndarray:
    """Analytic gradient of bn_cost, differentiating through mu(w) and sigma(w)."""
    w, c, sigma, gamma, r = _bn_parts(w, data, params)
    U = data.inputs - data.inputs.mean(axis=0)
    # d(c_i / sigma)/dw = u_i / sigma - c_i * (U^T c / N) / sigma^3
    Sw = U.T @ c / data.size
    return (2.0 * gamma / sigma) * (U.T @ r - (r @ c) * Sw / sigma**2)


def finite_diff_gradient(f: Callable[[np.ndarray], float], w, h=None) -> np.ndarray:
    """Central-difference gradient; default step is 1e-6 * max(1, |w_i|)."""
    w = np.asarray(w, dtype=float)
    steps = 1e-6 * np.maximum(1.0, np.abs(w)) if h is None else np.broadcast_to(float(h), w.shape)
    g = np.empty_like(w)
    for i, hi in enumerate(steps):
        e = np.zeros_like(w)
        e[i] = hi
        g[i] = (f(w + e) - f(w - e)) / (2.0 * hi)
    return g
