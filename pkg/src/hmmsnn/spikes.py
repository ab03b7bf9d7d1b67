"""
Discrete-time Poisson spike trains and EPSP windows.

Time is discretized at 1 ms. Each neuron emits at most one spike per step,
with probability ``1 - exp(-rate * 1e-3)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hmmsnn.errors import FormatError, InvalidInputError

DT_S = 1e-3
DEFAULT_SIGMA_MS = 5


@dataclass(frozen=True, eq=False)
class SpikeRaster:
    """Binary spike matrix, neurons x 1 ms steps."""

    spikes: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.spikes)
        if s.ndim != 2:
            raise InvalidInputError(f"spikes must be 2-D, got shape {s.shape}")
        if s.size and not np.isin(s, (0, 1)).all():
            raise InvalidInputError("spike entries must be 0 or 1")
        object.__setattr__(self, "spikes", s.astype(np.uint8, copy=False))

    @property
    def num_neurons(self) -> int:
        return self.spikes.shape[0]

    @property
    def num_steps(self) -> int:
        return self.spikes.shape[1]

    def __eq__(self, other):
        if not isinstance(other, SpikeRaster):
            return NotImplemented
        return np.array_equal(self.spikes, other.spikes)

    def split(self, num_steps: int) -> list[SpikeRaster]:
        """Cut into consecutive blocks of ``num_steps`` steps."""
        if num_steps < 1 or self.num_steps % num_steps:
            raise InvalidInputError(
                f"{self.num_steps} steps do not divide into blocks of {num_steps}"
            )
        return [
            SpikeRaster(self.spikes[:, j : j + num_steps])
            for j in range(0, self.num_steps, num_steps)
        ]

    @classmethod
    def concat(cls, rasters) -> SpikeRaster:
        return cls(np.concatenate([r.spikes for r in rasters], axis=1))


def spike_probability(rates) -> np.ndarray:
    """Per-step spike probability for rates in Hz (saturates at 1)."""
    return -np.expm1(-np.asarray(rates, dtype=np.float64) * DT_S)


def encode_poisson(rates, duration_ms: int, seed=None) -> SpikeRaster:
    """Draw a Bernoulli-discretized Poisson raster.

    ``seed`` may be anything :func:`numpy.random.default_rng` accepts,
    including an existing Generator (which is then advanced).
    """
    rates = np.asarray(rates, dtype=np.float64)
    if rates.ndim != 1:
        raise InvalidInputError("rates must be a 1-D vector")
    if np.any(rates < 0) or np.any(np.isnan(rates)):
        raise InvalidInputError("rates must be non-negative")
    if duration_ms < 1:
        raise InvalidInputError(f"duration_ms must be >= 1, got {duration_ms}")
    rng = np.random.default_rng(seed)
    p = spike_probability(rates)
    draws = rng.random((rates.shape[0], duration_ms))
    return SpikeRaster((draws < p[:, None]).astype(np.uint8))


def epsp_window(raster: SpikeRaster, neuron: int, t: int, sigma_ms: int = DEFAULT_SIGMA_MS) -> int:
    """1 iff ``neuron`` spiked in the closed step interval [t - sigma, t].

    The window is truncated at step 0.
    """
    if sigma_ms < 0:
        raise InvalidInputError("sigma_ms must be >= 0")
    if not 0 <= neuron < raster.num_neurons:
        raise InvalidInputError(f"neuron {neuron} out of range")
    if not 0 <= t < raster.num_steps:
        raise InvalidInputError(f"step {t} out of range")
    lo = max(0, t - sigma_ms)
    return int(raster.spikes[neuron, lo : t + 1].any())


def epsp_matrix(raster: SpikeRaster, sigma_ms: int = DEFAULT_SIGMA_MS) -> np.ndarray:
    """All EPSP vectors of a raster, shape (num_steps, num_neurons), uint8.

    Row ``t`` equals ``[epsp_window(raster, i, t, sigma_ms) for i]``.
    """
    if sigma_ms < 0:
        raise InvalidInputError("sigma_ms must be >= 0")
    cs = np.cumsum(raster.spikes, axis=1, dtype=np.int32)
    lagged = np.zeros_like(cs)
    shift = sigma_ms + 1
    if shift < cs.shape[1]:
        lagged[:, shift:] = cs[:, :-shift]
    return ((cs - lagged) > 0).T.astype(np.uint8)


def write_raster(raster: SpikeRaster, path) -> None:
    """Text format: ``neurons steps`` header, then one 0/1 row per neuron."""
    lines = [f"{raster.num_neurons} {raster.num_steps}"]
    lines += ["".join("1" if v else "0" for v in row) for row in raster.spikes]
    Path(path).write_text("\n".join(lines) + "\n")


def read_raster(path) -> SpikeRaster:
    text = Path(path).read_text().split()
    if len(text) < 2:
        raise FormatError(f"{path}: missing 'neurons steps' header")
    try:
        n, t = int(text[0]), int(text[1])
    except ValueError:
        raise FormatError(f"{path}: malformed header {text[:2]!r}") from None
    rows = text[2:]
    if len(rows) != n:
        raise FormatError(f"{path}: header says {n} neurons, found {len(rows)} rows")
    out = np.zeros((n, t), dtype=np.uint8)
    for i, row in enumerate(rows):
        if len(row) != t or set(row) - {"0", "1"}:
            raise FormatError(f"{path}: row {i} is not {t} characters of 0/1")
        out[i] = np.frombuffer(row.encode(), dtype=np.uint8) - ord("0")
    return SpikeRaster(out)


def poisson_epsp_rows(rates, duration_ms: int, sigma_ms: int = DEFAULT_SIGMA_MS, seed=None) -> np.ndarray:
    """Encode each row of ``rates`` (F, N) for ``duration_ms`` steps and
    return the stacked EPSP vectors, shape (F * duration_ms, N).

    Rows are consumed in order; the result matches encoding each rate
    vector separately from the same generator.
    """
    rates = np.atleast_2d(np.asarray(rates, dtype=np.float64))
    if np.any(rates < 0) or np.any(np.isnan(rates)):
        raise InvalidInputError("rates must be non-negative")
    rng = np.random.default_rng(seed)
    f, n = rates.shape
    draws = rng.random((f, n, duration_ms))
    spikes = draws < spike_probability(rates)[:, :, None]
    cs = np.cumsum(spikes, axis=2, dtype=np.int32)
    lagged = np.zeros_like(cs)
    shift = sigma_ms + 1
    if shift < duration_ms:
        lagged[:, :, shift:] = cs[:, :, :-shift]
    epsp = (cs - lagged) > 0
    return np.ascontiguousarray(epsp.transpose(0, 2, 1).reshape(f * duration_ms, n), dtype=np.uint8)
