"""
Toy spoken-word corpus: harmonic source shaped by two formant resonances.

Each word is a short sequence of phones. A voiced phone is a glottal
harmonic series whose spectral envelope peaks at two formants (F1, F2);
formants glide linearly from one phone to the next. Fricatives and bursts
are band-limited noise. Every utterance draws its own pitch, vocal-tract
scale, phone durations, loudness and background noise, so the classes
have realistic within-class variability at 8 kHz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import butter, sosfilt

from hmmsnn.errors import InvalidInputError
from hmmsnn.features import AudioSignal

SAMPLE_RATE = 8000


@dataclass(frozen=True)
class Phone:
    f1: float
    f2: float
    ms: float
    noise_band: tuple | None = None  # (lo, hi) Hz for unvoiced phones
    gain: float = 1.0


WORDS = {
    "zero": (
        Phone(0, 0, 90, noise_band=(2500, 3800), gain=0.4),
        Phone(400, 2000, 80),
        Phone(450, 1250, 90),
        Phone(500, 900, 170),
    ),
    "one": (
        Phone(300, 700, 70),
        Phone(600, 1200, 160),
        Phone(300, 1500, 110, gain=0.5),
    ),
    "four": (
        Phone(0, 0, 110, noise_band=(1200, 3500), gain=0.3),
        Phone(550, 850, 170),
        Phone(450, 1250, 110),
    ),
    "eight": (
        Phone(500, 1800, 150),
        Phone(380, 2250, 120),
        Phone(0, 0, 50, noise_band=(2000, 3900), gain=0.5),
    ),
    "nine": (
        Phone(300, 1500, 80, gain=0.5),
        Phone(750, 1200, 130),
        Phone(400, 2000, 110),
        Phone(300, 1500, 90, gain=0.5),
    ),
}

_BW1, _BW2 = 90.0, 140.0


def _envelope(freqs, f1, f2):
    """Two-resonance magnitude response sampled at ``freqs``."""
    def peak(f, fc, bw):
        return 1.0 / np.sqrt(1.0 + ((f - fc) / (bw / 2.0)) ** 2)

    return peak(freqs, f1, _BW1) + 0.6 * peak(freqs, f2, _BW2)


def synthesize_word(word: str, seed=None, sample_rate: int = SAMPLE_RATE) -> AudioSignal:
    if word not in WORDS:
        raise InvalidInputError(f"unknown word {word!r}; known: {sorted(WORDS)}")
    rng = np.random.default_rng(seed)
    f0 = rng.uniform(90.0, 220.0)
    scale = rng.uniform(0.9, 1.12)
    phones = WORDS[word]
    durs = [p.ms * rng.uniform(0.8, 1.25) for p in phones]
    counts = [max(1, int(round(d * sample_rate / 1000.0))) for d in durs]
    n = sum(counts)

    # per-sample formant tracks, gliding across the middle third of each boundary
    f1 = np.concatenate([np.full(c, p.f1 * scale) for p, c in zip(phones, counts)])
    f2 = np.concatenate([np.full(c, p.f2 * scale) for p, c in zip(phones, counts)])
    voiced = np.concatenate([np.full(c, p.noise_band is None) for p, c in zip(phones, counts)])
    gain = np.concatenate([np.full(c, p.gain) for p, c in zip(phones, counts)])
    kernel = np.hanning(int(0.03 * sample_rate)) if n > int(0.03 * sample_rate) else np.ones(1)
    kernel /= kernel.sum()
    vidx = voiced.astype(bool)
    for track in (f1, f2):
        filled = np.interp(np.arange(n), np.flatnonzero(vidx), track[vidx]) if vidx.any() else track
        track[:] = np.convolve(filled, kernel, mode="same")
    gain = np.convolve(gain, kernel, mode="same")

    pitch = f0 * (1.0 + 0.05 * np.sin(2 * np.pi * rng.uniform(2, 5) * np.arange(n) / sample_rate))
    phase = 2 * np.pi * np.cumsum(pitch) / sample_rate
    out = np.zeros(n)
    for h in range(1, int((sample_rate / 2) // 90.0)):
        fh = h * pitch
        amp = np.where(fh < sample_rate / 2 - 100, _envelope(fh, f1, f2), 0.0)
        out += amp * np.sin(h * phase) / np.sqrt(h)
    out *= vidx * gain

    start = 0
    for p, c in zip(phones, counts):
        if p.noise_band is not None:
            lo, hi = p.noise_band
            sos = butter(4, [lo / (sample_rate / 2), min(hi, sample_rate / 2 - 50) / (sample_rate / 2)],
                         btype="band", output="sos")
            burst = sosfilt(sos, rng.normal(size=c)) * 3.0 * p.gain
            out[start : start + c] += burst * np.hanning(c) if c > 2 else burst
        start += c

    # onset/offset ramps, loudness, short padding, background noise
    ramp = min(n // 4, int(0.015 * sample_rate))
    if ramp > 1:
        out[:ramp] *= np.linspace(0, 1, ramp)
        out[-ramp:] *= np.linspace(1, 0, ramp)
    out /= np.abs(out).max() + 1e-12
    out *= rng.uniform(0.3, 0.8)
    pad = [np.zeros(int(rng.uniform(0.01, 0.04) * sample_rate)) for _ in range(2)]
    out = np.concatenate([pad[0], out, pad[1]])
    out += rng.normal(scale=10 ** rng.uniform(-3.0, -2.3), size=out.shape[0])
    return AudioSignal(np.clip(out, -1.0, 1.0 - 2**-15), sample_rate)


def make_corpus(words, count_per_word: int, seed=None) -> list[tuple[str, AudioSignal]]:
    """``count_per_word`` utterances of every word, grouped by word."""
    ss = np.random.SeedSequence(seed)
    out = []
    for w, child in zip(words, ss.spawn(len(words))):
        for s in child.spawn(count_per_word):
            out.append((w, synthesize_word(w, s)))
    return out
