"""
Synthetic spatio-temporal spike patterns.

Four sub-patterns A-D of 80 Poisson spike trains, 20 ms each. In every
sub-pattern one block of 20 neurons fires at 340 Hz and the other 60 at
50 Hz background. Blocks are disjoint: A uses neurons 0-19, B 20-39,
C 40-59 and D 60-79. Target patterns concatenate sub-patterns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hmmsnn.errors import InvalidInputError
from hmmsnn.spikes import SpikeRaster, encode_poisson

LABELS = "ABCD"
NUM_NEURONS = 80
BLOCK = 20
INFO_RATE = 340.0
BACKGROUND_RATE = 50.0
DURATION_MS = 20
DEFAULT_CLASSES = ("ABCD", "DCBA", "ABDC", "BACD")


@dataclass(frozen=True)
class SubPatternSpec:
    label: str
    info_rate: float = INFO_RATE
    background_rate: float = BACKGROUND_RATE
    duration_ms: int = DURATION_MS

    def __post_init__(self):
        if self.label not in LABELS or len(self.label) != 1:
            raise InvalidInputError(f"unknown sub-pattern label {self.label!r}")

    @property
    def informative_range(self) -> range:
        start = LABELS.index(self.label) * BLOCK
        return range(start, start + BLOCK)

    def rates(self) -> np.ndarray:
        r = np.full(NUM_NEURONS, self.background_rate)
        rng = self.informative_range
        r[rng.start : rng.stop] = self.info_rate
        return r


def check_labels(labels: str) -> str:
    if not labels:
        raise InvalidInputError("label string must be non-empty")
    bad = sorted(set(labels) - set(LABELS))
    if bad:
        raise InvalidInputError(f"invalid sub-pattern label(s) {''.join(bad)!r} in {labels!r}")
    return labels


def make_subpattern(spec: SubPatternSpec, seed=None) -> SpikeRaster:
    return encode_poisson(spec.rates(), spec.duration_ms, seed)


def make_sequence(labels: str, seed=None) -> list[SpikeRaster]:
    """One independently drawn sub-pattern raster per label, in order."""
    check_labels(labels)
    rng = np.random.default_rng(seed)
    return [make_subpattern(SubPatternSpec(c), rng) for c in labels]
