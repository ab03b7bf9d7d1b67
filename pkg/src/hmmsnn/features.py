"""
Speech front-end: PCM ingestion, 20 ms framing, magnitude spectra, rates.

At 8 kHz a 20 ms frame holds 160 samples; with 50 % overlap the hop is 80.
A 160-point DFT has 81 non-redundant bins; the DC bin is dropped, leaving
N = 80 magnitudes per frame. No analysis window is applied.
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from hmmsnn.errors import FormatError, InvalidInputError

FRAME_MS = 20
OVERLAP = 0.5
DEFAULT_R_MAX = 340.0


class AudioSignal:
    __slots__ = ("samples", "sample_rate")

    def __init__(self, samples, sample_rate: int = 8000):
        if sample_rate <= 0:
            raise InvalidInputError(f"sample_rate must be positive, got {sample_rate}")
        self.samples = np.asarray(samples, dtype=np.float64).reshape(-1)
        self.sample_rate = int(sample_rate)

    def __len__(self):
        return self.samples.shape[0]

    def __repr__(self):
        return f"AudioSignal({len(self)} samples @ {self.sample_rate} Hz)"


def load_pcm(path) -> AudioSignal:
    """Read a 16-bit mono PCM WAV file, scaled to [-1, 1)."""
    try:
        with wave.open(str(path), "rb") as wf:
            channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise FormatError(f"{path}: malformed WAV header ({exc})") from None
    if channels != 1:
        raise FormatError(f"{path}: unsupported channel count {channels} (need mono)")
    if width != 2:
        raise FormatError(f"{path}: unsupported bit depth {8 * width} (need 16)")
    if rate <= 0:
        raise FormatError(f"{path}: invalid sample rate {rate}")
    pcm = np.frombuffer(raw, dtype="<i2")
    return AudioSignal(pcm / 32768.0, rate)


def save_pcm(signal: AudioSignal, path) -> None:
    """Write a 16-bit mono WAV; samples are clipped to the int16 range."""
    pcm = np.clip(np.round(signal.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(signal.sample_rate)
        wf.writeframes(pcm.tobytes())


def frame_signal(signal: AudioSignal, frame_ms: float = FRAME_MS, overlap: float = OVERLAP) -> np.ndarray:
    """Overlapping frames, shape (M, frame_len). The tail remainder is dropped."""
    frame_len = int(round(signal.sample_rate * frame_ms / 1000.0))
    hop = int(round(frame_len * (1.0 - overlap)))
    if frame_len < 1 or hop < 1:
        raise InvalidInputError("frame length and hop must be at least one sample")
    n = len(signal)
    if n < frame_len:
        raise InvalidInputError(f"signal has {n} samples, one frame needs {frame_len}")
    count = (n - frame_len) // hop + 1
    idx = np.arange(frame_len)[None, :] + hop * np.arange(count)[:, None]
    return signal.samples[idx]


def magnitude_spectrum(frame) -> np.ndarray:
    """DFT magnitudes of bins 1..L/2 for an even-length real frame."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 1 or frame.shape[0] < 2 or frame.shape[0] % 2:
        raise InvalidInputError(f"frame must be 1-D with even length, got shape {frame.shape}")
    return np.abs(np.fft.rfft(frame))[1:]


def spectrogram(signal: AudioSignal) -> np.ndarray:
    """Frame sequence (M, 80) of magnitude spectra."""
    frames = frame_signal(signal)
    return np.abs(np.fft.rfft(frames, axis=1))[:, 1:]


def to_rates(magnitudes, r_max: float = DEFAULT_R_MAX) -> np.ndarray:
    """Scale magnitudes linearly so the largest maps to ``r_max`` Hz.

    Works row-wise on a (M, N) array. All-zero rows stay zero.
    """
    mags = np.asarray(magnitudes, dtype=np.float64)
    if np.any(mags < 0):
        raise InvalidInputError("magnitudes must be non-negative")
    peak = mags.max(axis=-1, keepdims=True)
    safe = np.where(peak > 0, peak, 1.0)
    return r_max * mags / safe


def write_frames_csv(frames, path) -> None:
    frames = np.asarray(frames, dtype=np.float64)
    lines = [",".join(repr(float(v)) for v in row) for row in frames]
    Path(path).write_text("\n".join(lines) + "\n")


def read_frames_csv(path) -> np.ndarray:
    rows = [line for line in Path(path).read_text().splitlines() if line.strip()]
    if not rows:
        raise FormatError(f"{path}: no frames")
    try:
        out = np.array([[float(v) for v in line.split(",")] for line in rows])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    if out.ndim != 2:
        raise FormatError(f"{path}: rows have differing lengths")
    if np.any(out < 0):
        raise FormatError(f"{path}: frame magnitudes must be non-negative")
    return out
