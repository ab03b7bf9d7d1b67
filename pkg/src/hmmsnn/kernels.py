"""
Hot loops: the per-event STDP training sweep and per-step emission scoring.

Each kernel has a numba implementation and a pure-numpy fallback with the
same signature. ``train_events`` and ``emission_terms`` are bound to one of
them at import time according to :data:`hmmsnn._jit.USE_NUMBA`. Both
variants are always importable so the benchmark and the tests can compare
them directly.

Event arrays use the layout ``epsp[e, i]`` (event-major, uint8) so that a
training sweep reads one contiguous row per learning event.
"""

import numpy as np

from hmmsnn._jit import HAS_NUMBA, USE_NUMBA, njit


def _train_events_py(weights, bias, counts, eta0, epsp, uniforms):
    """Numpy fallback for :func:`train_events`."""
    n_events = epsp.shape[0]
    for e in range(n_events):
        y = epsp[e]
        active = y.astype(bool)
        u = bias + weights @ y
        p = np.exp(u - u.max())
        cum = np.cumsum(p)
        k = int(np.searchsorted(cum, uniforms[e] * cum[-1], side="right"))
        if k >= cum.shape[0]:
            k = cum.shape[0] - 1

        eta = eta0 / counts
        row = weights[k]
        dw = np.where(active, np.exp(1.0 - row) - 1.0, -1.0)
        weights[k] = np.clip(row + eta[k] * dw, -1.0, 1.0)

        db = np.full(bias.shape[0], -1.0)
        db[k] = np.exp(1.0 - bias[k]) - 1.0
        bias[:] = np.clip(bias + eta * db, -1.0, 1.0)
        counts[k] += 1


def _emission_terms_py(weights, bias, epsp):
    """Numpy fallback for :func:`emission_terms`."""
    u = epsp.astype(np.float64) @ weights.T + bias
    m = u.max(axis=1)
    return m, m + np.log(np.exp(u - m[:, None]).sum(axis=1))


@njit(cache=True, nogil=True)
def _train_events_nb(weights, bias, counts, eta0, epsp, uniforms):
    n_events = epsp.shape[0]
    n_out, n_in = weights.shape
    u = np.empty(n_out)
    for e in range(n_events):
        umax = -np.inf
        for k in range(n_out):
            acc = bias[k]
            for i in range(n_in):
                if epsp[e, i]:
                    acc += weights[k, i]
            u[k] = acc
            if acc > umax:
                umax = acc
        total = 0.0
        for k in range(n_out):
            u[k] = np.exp(u[k] - umax)
            total += u[k]
        thr = uniforms[e] * total
        win = n_out - 1
        cum = 0.0
        for k in range(n_out):
            cum += u[k]
            if cum > thr:
                win = k
                break

        eta_w = eta0 / counts[win]
        for i in range(n_in):
            w = weights[win, i]
            if epsp[e, i]:
                w += eta_w * (np.exp(1.0 - w) - 1.0)
            else:
                w -= eta_w
            if w > 1.0:
                w = 1.0
            elif w < -1.0:
                w = -1.0
            weights[win, i] = w
        for k in range(n_out):
            b = bias[k]
            if k == win:
                b += eta_w * (np.exp(1.0 - b) - 1.0)
            else:
                b -= eta0 / counts[k]
            if b > 1.0:
                b = 1.0
            elif b < -1.0:
                b = -1.0
            bias[k] = b
        counts[win] += 1


@njit(cache=True, nogil=True)
def _emission_terms_nb(weights, bias, epsp):
    # the membrane inputs are one BLAS product; the reduction is fused
    n_events = epsp.shape[0]
    n_out = weights.shape[0]
    u = epsp.astype(np.float64) @ np.ascontiguousarray(weights.T)
    peak = np.empty(n_events)
    lse = np.empty(n_events)
    for e in range(n_events):
        umax = -np.inf
        for k in range(n_out):
            u[e, k] += bias[k]
            if u[e, k] > umax:
                umax = u[e, k]
        total = 0.0
        for k in range(n_out):
            total += np.exp(u[e, k] - umax)
        peak[e] = umax
        lse[e] = umax + np.log(total)
    return peak, lse


if USE_NUMBA:
    _train_impl = _train_events_nb
    _emit_impl = _emission_terms_nb
else:
    _train_impl = _train_events_py
    _emit_impl = _emission_terms_py


def train_events(weights, bias, counts, eta0, epsp, uniforms):
    """Run one STDP learning event per row of ``epsp``, mutating in place.

    At every event the winner is drawn from the softmax of the membrane
    input by inverse-CDF on ``uniforms[e]``; the winner's weight row and
    bias move by the exponential LTP / unit LTD rule scaled by
    ``eta0 / counts[k]``, every loser bias takes the ``-1`` step scaled by
    its own rate, everything is clipped to [-1, 1] and the winner's
    counter is incremented.
    """
    _train_impl(weights, bias, counts, float(eta0), epsp, uniforms)


def emission_terms(weights, bias, epsp):
    """Per-event ``(max_k u_k, logsumexp_k u_k)`` of the membrane input."""
    if epsp.shape[0] == 0:
        return np.zeros(0), np.zeros(0)
    return _emit_impl(weights, bias, epsp)


BACKEND = "numba" if USE_NUMBA else "numpy"

__all__ = [
    "BACKEND",
    "HAS_NUMBA",
    "emission_terms",
    "train_events",
]
