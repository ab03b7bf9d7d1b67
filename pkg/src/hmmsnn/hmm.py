"""
Fixed-transition left-to-right HMM over per-state WTA emission networks.

The state path is fixed by the segmentation: segment ``p`` is emitted by
state ``p``. A sequence scores

    log G + sum_{p>=2} log a(p-1, p) + sum_p [emission terms of segment p]

where every 1 ms step contributes the log emission probability of the
state's network (see :func:`hmmsnn.wta.log_snn_prob` for the two emission
modes). In the frame-based (speech) variant each frame of a segment also
pays one self-transition ``log a(p, p)``. A model may carry an additive
class log-prior, zero unless fitted. All scoring stays in the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hmmsnn.errors import InvalidInputError
from hmmsnn.features import DEFAULT_R_MAX, to_rates
from hmmsnn.segmentation import SegmentBoundaries
from hmmsnn.spikes import DEFAULT_SIGMA_MS, SpikeRaster, encode_poisson, epsp_matrix
from hmmsnn.wta import EMISSIONS, WTANetwork, log_snn_prob

DEFAULT_TRANSITION = 0.5


@dataclass(eq=False)
class HMMModel:
    label: str
    states: list[WTANetwork]
    self_prob: float = DEFAULT_TRANSITION
    advance_prob: float = DEFAULT_TRANSITION
    initial_prob: float = 1.0
    emission: str = "peak"
    log_prior: float = 0.0

    def __post_init__(self):
        if self.emission not in EMISSIONS:
            raise InvalidInputError(f"emission must be one of {EMISSIONS}, got {self.emission!r}")
        if not math.isfinite(self.log_prior):
            raise InvalidInputError("log_prior must be finite")
        if not self.states:
            raise InvalidInputError("an HMM needs at least one state")
        for name in ("self_prob", "advance_prob", "initial_prob"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise InvalidInputError(f"{name} must be in (0, 1], got {v}")
        shapes = {(s.num_inputs, s.num_outputs) for s in self.states}
        if len(shapes) != 1:
            raise InvalidInputError(f"state networks disagree on (N, K): {sorted(shapes)}")

    @property
    def num_states(self) -> int:
        return len(self.states)

    @property
    def num_inputs(self) -> int:
        return self.states[0].num_inputs

    def transition_log_prob(self) -> float:
        return (
            self.log_prior
            + math.log(self.initial_prob)
            + (self.num_states - 1) * math.log(self.advance_prob)
        )


@dataclass
class SegmentedObservation:
    """Spike rasters grouped by HMM state.

    ``segments[p]`` holds the rasters emitted in state ``p``: a single
    sub-pattern in the synthetic task, one raster per frame for speech.
    ``self_loops`` charges ``log a(p, p)`` once per raster.
    """

    segments: list[list[SpikeRaster]]
    self_loops: bool = False
    sigma_ms: int = DEFAULT_SIGMA_MS
    _epsp: list[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if not self.segments or any(len(seg) == 0 for seg in self.segments):
            raise InvalidInputError("every segment must hold at least one raster")
        n = {r.num_neurons for seg in self.segments for r in seg}
        if len(n) != 1:
            raise InvalidInputError(f"rasters disagree on neuron count: {sorted(n)}")

    @classmethod
    def from_subpatterns(cls, rasters, sigma_ms: int = DEFAULT_SIGMA_MS):
        return cls([[r] for r in rasters], self_loops=False, sigma_ms=sigma_ms)

    @classmethod
    def from_frames(
        cls,
        frames,
        boundaries: SegmentBoundaries,
        seed=None,
        r_max: float = DEFAULT_R_MAX,
        duration_ms: int = 20,
        sigma_ms: int = DEFAULT_SIGMA_MS,
    ):
        """Poisson-encode every frame for ``duration_ms`` and group by segment."""
        frames = np.asarray(frames, dtype=np.float64)
        if boundaries.num_frames != frames.shape[0]:
            raise InvalidInputError(
                f"boundaries cover {boundaries.num_frames} frames, got {frames.shape[0]}"
            )
        rng = np.random.default_rng(seed)
        rates = to_rates(frames, r_max)
        segs = [
            [encode_poisson(rates[i], duration_ms, rng) for i in range(sl.start, sl.stop)]
            for sl in boundaries.slices()
        ]
        return cls(segs, self_loops=True, sigma_ms=sigma_ms)

    @property
    def num_segments(self) -> int:
        return len(self.segments)

    @property
    def num_inputs(self) -> int:
        return self.segments[0][0].num_neurons

    def epsp_rows(self, p: int) -> np.ndarray:
        """All EPSP vectors of segment ``p`` stacked, shape (E, N)."""
        if self._epsp is None:
            self._epsp = [
                np.ascontiguousarray(
                    np.concatenate([epsp_matrix(r, self.sigma_ms) for r in seg])
                )
                for seg in self.segments
            ]
        return self._epsp[p]


def log_prob(model: HMMModel, obs: SegmentedObservation) -> float:
    if obs.num_segments != model.num_states:
        raise InvalidInputError(
            f"observation has {obs.num_segments} segments, model has {model.num_states} states"
        )
    if obs.num_inputs != model.num_inputs:
        raise InvalidInputError(
            f"observation has {obs.num_inputs} inputs, model expects {model.num_inputs}"
        )
    total = model.transition_log_prob()
    log_self = math.log(model.self_prob)
    for p, net in enumerate(model.states):
        total += float(log_snn_prob(net, obs.epsp_rows(p), model.emission).sum())
        if obs.self_loops:
            total += len(obs.segments[p]) * log_self
    return total


def log_prob_subpattern(model: HMMModel, rasters, sigma_ms: int = DEFAULT_SIGMA_MS) -> float:
    """Score a sequence of one sub-pattern raster per state."""
    return log_prob(model, SegmentedObservation.from_subpatterns(list(rasters), sigma_ms))


def log_prob_speech(
    model: HMMModel,
    frames,
    boundaries: SegmentBoundaries,
    seed=None,
    r_max: float = DEFAULT_R_MAX,
    duration_ms: int = 20,
    sigma_ms: int = DEFAULT_SIGMA_MS,
) -> float:
    """Score a segmented frame sequence; frames are Poisson-encoded with ``seed``."""
    obs = SegmentedObservation.from_frames(
        frames, boundaries, seed, r_max=r_max, duration_ms=duration_ms, sigma_ms=sigma_ms
    )
    return log_prob(model, obs)


def normalize_log_probs(log_probs) -> np.ndarray:
    """Posteriors ``exp(L_c - max) / sum`` across models."""
    lp = np.asarray(log_probs, dtype=np.float64)
    w = np.exp(lp - lp.max())
    return w / w.sum()


def classify(obs: SegmentedObservation, models) -> tuple[str, np.ndarray]:
    """Label of the highest-scoring model (ties go to the lowest index) and
    the normalized posteriors over ``models``."""
    models = list(models)
    if not models:
        raise InvalidInputError("need at least one model")
    scores = np.array([log_prob(m, obs) for m in models])
    return models[int(np.argmax(scores))].label, normalize_log_probs(scores)
