"""
Winner-take-all spiking network: one HMM state's emission model.

A network has ``K`` output units fully connected to ``N`` inputs. Unit
``k`` sees the membrane input ``u_k = b_k + w_k . epsp`` and the WTA layer
fires unit ``k`` with probability ``softmax(u)_k``. Learning happens at
every output spike: the winner's weights follow an exponential LTP /
constant LTD rule, all biases move (winner up, losers down), and each
unit's step size decays as ``eta0 / N_k`` where ``N_k`` counts its wins.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hmmsnn import kernels
from hmmsnn.errors import InvalidInputError

INIT_SCALE = 0.1


@dataclass(eq=False)
class WTANetwork:
    weights: np.ndarray  # (K, N), each in [-1, 1]
    bias: np.ndarray  # (K,)
    fire_counts: np.ndarray = field(default=None)  # (K,) int, starts at 1
    eta0: float = 1.0

    def __post_init__(self):
        self.weights = np.array(self.weights, dtype=np.float64, ndmin=2)
        self.bias = np.array(self.bias, dtype=np.float64).reshape(-1)
        if self.bias.shape[0] != self.weights.shape[0]:
            raise InvalidInputError("bias length must equal number of output units")
        if self.fire_counts is None:
            self.fire_counts = np.ones(self.num_outputs, dtype=np.int64)
        else:
            self.fire_counts = np.array(self.fire_counts, dtype=np.int64).reshape(-1)
        if self.fire_counts.shape[0] != self.num_outputs or np.any(self.fire_counts < 1):
            raise InvalidInputError("fire_counts must be K positive integers")
        if not self.eta0 > 0:
            raise InvalidInputError(f"eta0 must be > 0, got {self.eta0}")
        self.eta0 = float(self.eta0)

    @classmethod
    def random(cls, num_inputs: int, num_outputs: int, seed=None, eta0: float = 1.0):
        """Weights uniform in [-0.1, 0.1], zero biases, counters at 1."""
        if num_inputs < 1 or num_outputs < 1:
            raise InvalidInputError("network needs at least one input and one output")
        rng = np.random.default_rng(seed)
        w = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(num_outputs, num_inputs))
        return cls(w, np.zeros(num_outputs), eta0=eta0)

    @property
    def num_inputs(self) -> int:
        return self.weights.shape[1]

    @property
    def num_outputs(self) -> int:
        return self.weights.shape[0]

    def copy(self) -> WTANetwork:
        return WTANetwork(
            self.weights.copy(), self.bias.copy(), self.fire_counts.copy(), self.eta0
        )

    def __eq__(self, other):
        if not isinstance(other, WTANetwork):
            return NotImplemented
        return (
            self.eta0 == other.eta0
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.bias, other.bias)
            and np.array_equal(self.fire_counts, other.fire_counts)
        )

    def _check(self, epsp) -> np.ndarray:
        y = np.asarray(epsp)
        if y.shape != (self.num_inputs,):
            raise InvalidInputError(
                f"epsp must have length {self.num_inputs}, got shape {y.shape}"
            )
        return y.astype(np.float64)


def _softmax(u: np.ndarray) -> np.ndarray:
    p = np.exp(u - u.max())
    return p / p.sum()


def membrane_input(net: WTANetwork, epsp) -> np.ndarray:
    """``u_k = b_k + sum_i epsp_i w_ki`` for every output unit."""
    return net.bias + net.weights @ net._check(epsp)


def responsibility(net: WTANetwork, epsp) -> np.ndarray:
    """Probability that each output unit fires for this input."""
    return _softmax(membrane_input(net, epsp))


def select_winner(resp, seed=None) -> int:
    """Sample one firing unit from a responsibility vector."""
    rng = np.random.default_rng(seed)
    cum = np.cumsum(np.asarray(resp, dtype=np.float64))
    k = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return min(k, cum.shape[0] - 1)


def stdp_update(net: WTANetwork, winner: int, epsp) -> WTANetwork:
    """Apply one learning event in place and return the network.

    Only the winner's weight row changes; every bias changes.
    """
    if not 0 <= winner < net.num_outputs:
        raise InvalidInputError(f"winner {winner} out of range")
    y = net._check(epsp).astype(bool)
    eta = net.eta0 / net.fire_counts
    row = net.weights[winner]
    dw = np.where(y, np.exp(1.0 - row) - 1.0, -1.0)
    net.weights[winner] = np.clip(row + eta[winner] * dw, -1.0, 1.0)
    db = np.full(net.num_outputs, -1.0)
    db[winner] = np.exp(1.0 - net.bias[winner]) - 1.0
    net.bias = np.clip(net.bias + eta * db, -1.0, 1.0)
    net.fire_counts[winner] += 1
    return net


def mixing_coefficients(net: WTANetwork) -> np.ndarray:
    """Mixture weights encoded by the biases, ``softmax(bias)``."""
    return _softmax(net.bias)


def snn_prob(net: WTANetwork, epsp) -> float:
    """Largest output-unit firing probability for this input."""
    return float(responsibility(net, epsp).max())


EMISSIONS = ("peak", "normalized")


def log_snn_prob(net: WTANetwork, epsp_rows: np.ndarray, emission: str = "peak") -> np.ndarray:
    """Per-step log emission probability over the rows of an (E, N) EPSP array.

    ``"normalized"`` is ``log snn_prob``: the winning unit's share of the
    layer's total drive, ``max_k u_k - logsumexp(u)``. ``"peak"`` keeps the
    normalizer fixed instead, ``max_k u_k - (N + 1)``; ``N + 1`` bounds
    ``u`` from above, so the result is a log-probability as well, and it
    grows with how strongly the best unit matches the input.
    """
    epsp_rows = np.ascontiguousarray(epsp_rows, dtype=np.uint8)
    if epsp_rows.ndim != 2 or epsp_rows.shape[1] != net.num_inputs:
        raise InvalidInputError(
            f"expected (E, {net.num_inputs}) epsp rows, got {epsp_rows.shape}"
        )
    peak, lse = kernels.emission_terms(net.weights, net.bias, epsp_rows)
    if emission == "peak":
        return peak - (net.num_inputs + 1.0)
    if emission == "normalized":
        return peak - lse
    raise InvalidInputError(f"emission must be one of {EMISSIONS}, got {emission!r}")


def average_state_weights(net: WTANetwork) -> np.ndarray:
    """Bias-scaled mean of the weight rows, ``mean_k(w_k * b_k)``."""
    return (net.weights * net.bias[:, None]).mean(axis=0)


def train_on_epsp(net: WTANetwork, epsp_rows: np.ndarray, seed=None) -> WTANetwork:
    """One learning event per EPSP row, in order. Mutates ``net``."""
    epsp_rows = np.ascontiguousarray(epsp_rows, dtype=np.uint8)
    if epsp_rows.ndim != 2 or epsp_rows.shape[1] != net.num_inputs:
        raise InvalidInputError(
            f"expected (E, {net.num_inputs}) epsp rows, got {epsp_rows.shape}"
        )
    rng = np.random.default_rng(seed)
    uniforms = rng.random(epsp_rows.shape[0])
    kernels.train_events(
        net.weights, net.bias, net.fire_counts, net.eta0, epsp_rows, uniforms
    )
    return net
