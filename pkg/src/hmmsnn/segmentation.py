"""
Contiguity-constrained k-means auto-segmentation.

Splits ``M`` sequential frames into ``P`` consecutive segments, one per HMM
state. Starting from equal-width segments, each pass sweeps the boundaries
left to right: segment ``p`` keeps absorbing the next frame while that frame
is no farther (Euclidean) from centroid ``p`` than from centroid ``p + 1``.
Centroids are refreshed after every boundary. Passes repeat until at most
``threshold`` frames change segment, or ``max_iter`` passes have run.

The sweep alone can settle with one segment spanning two distinct regions
while another region is cut in two. An optional refinement step then
tries merge-and-split moves and keeps them only when they lower the total
within-segment squared error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hmmsnn.errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class SegmentBoundaries:
    """Last frame index of every segment (strictly increasing, ends at M-1)."""

    last_index: np.ndarray
    iterations: int = 0

    def __post_init__(self):
        last = np.asarray(self.last_index, dtype=np.int64).reshape(-1)
        if last.size == 0:
            raise InvalidInputError("need at least one segment")
        if last[0] < 0 or np.any(np.diff(last) <= 0):
            raise InvalidInputError(f"boundaries must be strictly increasing: {last}")
        object.__setattr__(self, "last_index", last)

    @property
    def num_segments(self) -> int:
        return self.last_index.shape[0]

    @property
    def num_frames(self) -> int:
        return int(self.last_index[-1]) + 1

    def slices(self) -> list[slice]:
        starts = np.concatenate(([0], self.last_index[:-1] + 1))
        return [slice(int(a), int(b) + 1) for a, b in zip(starts, self.last_index)]

    def labels(self) -> np.ndarray:
        """Segment index of every frame."""
        return np.repeat(np.arange(self.num_segments), np.diff(self.last_index, prepend=-1))

    def __eq__(self, other):
        if not isinstance(other, SegmentBoundaries):
            return NotImplemented
        return np.array_equal(self.last_index, other.last_index)

    def __str__(self):
        return ",".join(str(int(i)) for i in self.last_index)

    @classmethod
    def parse(cls, text: str) -> SegmentBoundaries:
        try:
            return cls([int(tok) for tok in text.strip().split(",")])
        except ValueError:
            raise InvalidInputError(f"cannot parse boundaries {text!r}") from None


def equal_width(num_frames: int, num_segments: int) -> SegmentBoundaries:
    sizes = np.full(num_segments, num_frames // num_segments)
    sizes[: num_frames % num_segments] += 1
    return SegmentBoundaries(np.cumsum(sizes) - 1)


class _Prefix:
    """Prefix sums for O(1) segment means and squared errors."""

    def __init__(self, frames):
        self.frames = frames
        self.s1 = np.vstack([np.zeros(frames.shape[1]), np.cumsum(frames, axis=0)])
        self.s2 = np.concatenate(([0.0], np.cumsum((frames**2).sum(axis=1))))

    def mean(self, a, b):
        return (self.s1[b + 1] - self.s1[a]) / (b + 1 - a)

    def sse(self, a, b):
        tot = self.s1[b + 1] - self.s1[a]
        return float(self.s2[b + 1] - self.s2[a] - tot @ tot / (b + 1 - a))

    def total_sse(self, last):
        starts = np.concatenate(([0], last[:-1] + 1))
        return sum(self.sse(int(a), int(b)) for a, b in zip(starts, last))


def _centroids(pre, last):
    starts = np.concatenate(([0], last[:-1] + 1))
    return np.stack([pre.mean(int(a), int(b)) for a, b in zip(starts, last)])


def _changed(before, after):
    return int(np.count_nonzero(
        SegmentBoundaries(before).labels() != SegmentBoundaries(after).labels()
    ))


def _sweep(pre, last, threshold, max_iter):
    frames = pre.frames
    m = frames.shape[0]
    p_count = last.shape[0]
    last = last.copy()
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        before = last.copy()
        cent = _centroids(pre, last)
        start = 0
        for p in range(p_count - 1):
            # leave one frame for every later segment
            limit = m - (p_count - 1 - p)
            s = start + 1
            while s < limit:
                d_here = np.linalg.norm(frames[s] - cent[p])
                d_next = np.linalg.norm(frames[s] - cent[p + 1])
                if d_here > d_next:
                    break
                s += 1
            last[p] = s - 1
            for q in range(p + 1, p_count - 1):
                last[q] = max(last[q], last[q - 1] + 1)
            cent = _centroids(pre, last)
            start = s
        if _changed(before, last) <= threshold:
            break
    return last, iterations


def _best_split(pre, a, b):
    """Split point minimizing the squared error of frames a..b."""
    best, cut = np.inf, a
    for c in range(a, b):
        cost = pre.sse(a, c) + pre.sse(c + 1, b)
        if cost < best:
            best, cut = cost, c
    return cut, best


def _merge_split_candidate(pre, last):
    """Lowest-SSE partition reachable by merging one adjacent pair and
    splitting one other segment in two, or None if nothing improves."""
    p_count = last.shape[0]
    starts = np.concatenate(([0], last[:-1] + 1))
    seg_sse = np.array([pre.sse(int(a), int(b)) for a, b in zip(starts, last)])
    splits = []
    for i in range(p_count):
        if last[i] > starts[i]:
            cut, cost = _best_split(pre, int(starts[i]), int(last[i]))
            splits.append((seg_sse[i] - cost, i, cut))
    current = seg_sse.sum()
    best, best_last = current, None
    for j in range(p_count - 1):
        merge_cost = pre.sse(int(starts[j]), int(last[j + 1])) - seg_sse[j] - seg_sse[j + 1]
        for gain, i, cut in splits:
            if i in (j, j + 1):
                continue
            cand = current + merge_cost - gain
            if cand < best - 1e-12 * max(1.0, current):
                ends = [int(x) for k, x in enumerate(last) if k != j] + [cut]
                best, best_last = cand, np.array(sorted(ends), dtype=np.int64)
    return best_last


def auto_segment(
    frames,
    num_segments: int,
    threshold: int = 0,
    max_iter: int = 100,
    refine: bool = True,
) -> SegmentBoundaries:
    """Partition frames into ``num_segments`` contiguous, non-empty segments.

    With ``refine`` (the default), a converged sweep that is stuck in a
    poor local optimum is perturbed by merging two adjacent segments and
    splitting another; the move is kept, and re-swept, only when it lowers
    the within-segment squared error. ``refine=False`` runs the plain sweep.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise InvalidInputError(f"frames must be (M, N), got shape {frames.shape}")
    m = frames.shape[0]
    p_count = int(num_segments)
    if p_count < 1:
        raise InvalidInputError("num_segments must be >= 1")
    if m < p_count:
        raise InvalidInputError(f"{m} frames cannot fill {p_count} segments")
    if threshold < 0:
        raise InvalidInputError("threshold must be >= 0")
    if max_iter < 1:
        raise InvalidInputError("max_iter must be >= 1")

    pre = _Prefix(frames)
    last, iterations = _sweep(pre, equal_width(m, p_count).last_index, threshold, max_iter)
    if refine and p_count > 2:
        for _ in range(max_iter):
            cand = _merge_split_candidate(pre, last)
            if cand is None:
                break
            swept, extra = _sweep(pre, cand, threshold, max_iter)
            iterations += extra
            # the re-sweep is not guaranteed to lower the error; keep the better one
            if pre.total_sse(swept) <= pre.total_sse(cand):
                cand = swept
            last = cand
    return SegmentBoundaries(last, iterations)
