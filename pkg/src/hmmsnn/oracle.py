"""
Batch reference implementations used to check the spiking network.

``GMMState`` is a Gaussian mixture with identity covariance; ``gmm_em_step``
is one exact EM iteration. ``snn_softmax_responsibility`` evaluates the
network's firing distribution straight from its parameters, independently
of :mod:`hmmsnn.wta`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from hmmsnn.errors import DegenerateComponentError, InvalidInputError

DEGENERATE_MASS = 1e-300


@dataclass
class GMMState:
    means: np.ndarray  # (K, N)
    mixing: np.ndarray  # (K,)

    def __post_init__(self):
        self.means = np.array(self.means, dtype=np.float64, ndmin=2)
        self.mixing = np.array(self.mixing, dtype=np.float64).reshape(-1)
        if self.mixing.shape[0] != self.means.shape[0]:
            raise InvalidInputError("one mixing weight per component required")
        if np.any(self.mixing < 0) or abs(self.mixing.sum() - 1.0) > 1e-9:
            raise InvalidInputError("mixing weights must be non-negative and sum to 1")


def _log_joint(gmm: GMMState, data: np.ndarray) -> np.ndarray:
    """log pi_k - 0.5 ||y - mu_k||^2 for every (sample, component); the
    Gaussian normalizer is common to all components and omitted."""
    d2 = ((data[:, None, :] - gmm.means[None, :, :]) ** 2).sum(axis=2)
    with np.errstate(divide="ignore"):
        return np.log(gmm.mixing)[None, :] - 0.5 * d2


def _as_data(gmm, data):
    data = np.array(data, dtype=np.float64, ndmin=2)
    if data.shape[1] != gmm.means.shape[1]:
        raise InvalidInputError(
            f"data dimension {data.shape[1]} != model dimension {gmm.means.shape[1]}"
        )
    return data


def gmm_responsibility(gmm: GMMState, y) -> np.ndarray:
    lj = _log_joint(gmm, _as_data(gmm, y))[0]
    return np.exp(lj - logsumexp(lj))


def log_likelihood(gmm: GMMState, data) -> float:
    """Total data log-likelihood including the Gaussian normalizer."""
    data = _as_data(gmm, data)
    n = data.shape[1]
    return float(logsumexp(_log_joint(gmm, data), axis=1).sum() - 0.5 * n * np.log(2 * np.pi) * data.shape[0])


def gmm_em_step(gmm: GMMState, data) -> GMMState:
    data = _as_data(gmm, data)
    if data.shape[0] < 1:
        raise InvalidInputError("EM needs at least one sample")
    lj = _log_joint(gmm, data)
    resp = np.exp(lj - logsumexp(lj, axis=1, keepdims=True))
    mass = resp.sum(axis=0)
    if np.any(mass < DEGENERATE_MASS):
        bad = np.flatnonzero(mass < DEGENERATE_MASS).tolist()
        raise DegenerateComponentError(f"component(s) {bad} received no responsibility")
    means = (resp.T @ data) / mass[:, None]
    mixing = mass / data.shape[0]
    return GMMState(means, mixing / mixing.sum())


def snn_softmax_responsibility(weights, biases, y) -> np.ndarray:
    """Exact ``softmax(W y + b)`` computed via logsumexp."""
    weights = np.asarray(weights, dtype=np.float64)
    biases = np.asarray(biases, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if weights.shape != (biases.shape[0], y.shape[0]):
        raise InvalidInputError("weights, biases and input dimensions disagree")
    s = weights @ y + biases
    return np.exp(s - logsumexp(s))
