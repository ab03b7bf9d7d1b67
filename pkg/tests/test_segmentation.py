import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hmmsnn.errors import InvalidInputError
from hmmsnn.segmentation import SegmentBoundaries, auto_segment, equal_width
from oracles import dp_partition, exhaustive_partition, partition_sse, piecewise_frames

frame_arrays = st.integers(1, 14).flatmap(
    lambda m: arrays(np.float64, (m, 3), elements=st.floats(0, 10, allow_subnormal=False))
)


def test_equal_width():
    assert list(equal_width(10, 3).last_index) == [3, 6, 9]
    assert list(equal_width(5, 5).last_index) == [0, 1, 2, 3, 4]


def test_boundaries_validation_and_text():
    b = SegmentBoundaries([2, 5, 9])
    assert str(b) == "2,5,9"
    assert SegmentBoundaries.parse("2,5,9") == b
    assert b.num_frames == 10 and b.num_segments == 3
    assert [s.stop - s.start for s in b.slices()] == [3, 3, 4]
    np.testing.assert_array_equal(b.labels(), [0, 0, 0, 1, 1, 1, 2, 2, 2, 2])
    for bad in ([3, 3], [4, 2], [-1, 3], []):
        with pytest.raises(InvalidInputError):
            SegmentBoundaries(bad)
    with pytest.raises(InvalidInputError):
        SegmentBoundaries.parse("1,x")


def test_m_equals_p_is_forced():
    frames = np.random.default_rng(0).random((6, 4))
    b = auto_segment(frames, 6)
    assert list(b.last_index) == [0, 1, 2, 3, 4, 5]
    assert b.iterations == 1


def test_fixed_point_input_is_returned_after_one_pass():
    # equal-width start that is already the true partition
    frames = np.repeat(np.array([[0.0, 0.0], [5.0, 5.0], [10.0, 0.0]]), 4, axis=0)
    b = auto_segment(frames, 3)
    assert b == equal_width(12, 3)
    assert b.iterations == 1


def test_too_few_frames():
    with pytest.raises(InvalidInputError):
        auto_segment(np.zeros((3, 2)), 4)
    with pytest.raises(InvalidInputError):
        auto_segment(np.zeros((3, 2)), 2, threshold=-1)


@pytest.mark.parametrize("num_segments", [2, 3, 4])
def test_well_separated_levels_match_exhaustive_oracle(num_segments):
    rng = np.random.default_rng(num_segments)
    for _ in range(25):
        frames, truth = piecewise_frames(rng, num_segments, dim=8, max_len=4)
        oracle, _ = exhaustive_partition(frames, num_segments)
        assert oracle == truth
        assert list(auto_segment(frames, num_segments).last_index) == truth


def test_dp_oracle_agrees_with_exhaustive():
    rng = np.random.default_rng(5)
    for _ in range(20):
        frames = rng.random((int(rng.integers(4, 10)), 3))
        p = int(rng.integers(1, 4))
        a, ca = exhaustive_partition(frames, p)
        b, cb = dp_partition(frames, p)
        assert ca == pytest.approx(cb, abs=1e-9)
        assert partition_sse(frames, b) == pytest.approx(cb, abs=1e-9)


@given(frame_arrays, st.data())
def test_output_is_a_valid_partition(frames, data):
    m = frames.shape[0]
    p = data.draw(st.integers(1, m))
    b = auto_segment(frames, p, max_iter=data.draw(st.integers(1, 5)))
    last = b.last_index
    assert last.shape == (p,)
    assert last[-1] == m - 1 and np.all(np.diff(last) > 0) and last[0] >= 0


@given(frame_arrays, st.integers(1, 4))
def test_deterministic(frames, p):
    p = min(p, frames.shape[0])
    assert auto_segment(frames, p) == auto_segment(frames, p)


@given(frame_arrays, st.integers(1, 3))
def test_plain_sweep_terminates_within_max_iter(frames, max_iter):
    p = min(3, frames.shape[0])
    assert auto_segment(frames, p, max_iter=max_iter, refine=False).iterations <= max_iter


@given(frame_arrays)
def test_refinement_never_increases_error(frames):
    p = min(4, frames.shape[0])
    plain = auto_segment(frames, p, refine=False)
    refined = auto_segment(frames, p)
    assert partition_sse(frames, refined.last_index) <= partition_sse(frames, plain.last_index) + 1e-9
