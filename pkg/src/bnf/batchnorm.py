"""Batch normalization transform with fixed scale and shift."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBatch, DimensionError

# Rows whose batch standard deviation is at or below this are rejected.
DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class BatchStats:
    mu: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True)
class BNParams:
    gamma: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        b = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if g.ndim != 1 or g.shape != b.shape:
            raise DimensionError("gamma and beta must be vectors of equal length")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(b))):
            raise ValueError("gamma and beta must be finite")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "beta", b)

    @classmethod
    def plain(cls, width=1):
        """gamma = 1, beta = 0: pure standardization."""
        return cls(np.ones(width), np.zeros(width))


def _as_matrix(Z):
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[None, :]
    if Z.ndim != 2 or Z.shape[1] < 1:
        raise DimensionError(f"expected an n x M matrix with M >= 1, got shape {Z.shape}")
    return Z


def batch_stats(Z) -> BatchStats:
    """Per-row mean and population standard deviation (divisor M)."""
    Z = _as_matrix(Z)
    M = Z.shape[1]
    mu = Z.sum(axis=1) / M
    centered = Z - mu[:, None]
    sigma = np.sqrt((centered * centered).sum(axis=1) / M)
    return BatchStats(mu, sigma)


def _check_nondegenerate(sigma):
    for j, s in enumerate(sigma):
        if not s > DEGENERATE_TOL:
            raise DegenerateBatch(j, float(s))


def bn_transform(Z, params: BNParams) -> np.ndarray:
    Z = _as_matrix(Z)
    if params.gamma.size != Z.shape[0]:
        raise DimensionError(f"{params.gamma.size} BN parameters for {Z.shape[0]} rows")
    stats = batch_stats(Z)
    _check_nondegenerate(stats.sigma)
    normed = (Z - stats.mu[:, None]) / stats.sigma[:, None]
    return params.gamma[:, None] * normed + params.beta[:, None]


def bn_network_forward(w, x, stats: BatchStats, params: BNParams) -> float:
    """Single linear neuron followed by BN with precomputed batch statistics."""
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    if w.shape != x.shape or w.ndim != 1:
        raise DimensionError(f"weights {w.shape} and input {x.shape} disagree")
    _check_nondegenerate(stats.sigma)
    z = float(w @ x)
    return float(params.gamma[0] * (z - stats.mu[0]) / stats.sigma[0] + params.beta[0])
