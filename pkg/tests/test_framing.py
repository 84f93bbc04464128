import numpy as np
import pytest

from regar.framing import (FrameLayout, frame_layout, overlap_add, segment,
                           sine_window)


def test_single_frame_layout():
    x = np.arange(6, dtype=float)
    layout = frame_layout(6, 6, 6)
    frames = segment(x, layout)
    assert layout.n_frames == 1 and layout.pad_end == 0
    np.testing.assert_array_equal(frames[0], x)


def test_segment_examples():
    frames = segment([1.0, 2.0, 3.0, 4.0], frame_layout(4, 2, 2))
    np.testing.assert_array_equal(frames[0], [1.0, 2.0])
    np.testing.assert_array_equal(frames[1], [3.0, 4.0])

    layout = frame_layout(6, 4, 2)
    frames = segment(np.arange(1.0, 7.0), layout)
    assert layout.n_frames == 3 and layout.pad_end == 2
    np.testing.assert_array_equal(frames[2], [5.0, 6.0, 0.0, 0.0])


def test_layout_validation():
    with pytest.raises(ValueError):
        frame_layout(0, 4, 2)
    with pytest.raises(ValueError):
        frame_layout(8, 4, 0)
    with pytest.raises(ValueError):
        frame_layout(8, 4, 5)
    with pytest.raises(ValueError):
        FrameLayout(frame_length=4, hop=2, n_frames=1, n_samples=10)
    with pytest.raises(ValueError):
        segment([], frame_layout(1, 1, 1))


def test_sine_window_values():
    w2 = sine_window(2)
    np.testing.assert_allclose(w2, [np.sqrt(2) / 2] * 2, atol=1e-15)
    w4 = sine_window(4)
    np.testing.assert_allclose(w4, [0.3827, 0.9239, 0.9239, 0.3827], atol=5e-5)


def test_sine_window_symmetric_with_peak_below_one():
    for w in (2, 4, 16, 2048):
        g = sine_window(w)
        np.testing.assert_allclose(g, g[::-1], atol=1e-15)
        assert 0.0 < g.max() < 1.0


def test_overlap_add_single_frame_rectangular():
    x = np.array([0.4, -0.2, 0.9])
    layout = frame_layout(3, 3, 3)
    out = overlap_add([x], layout, np.ones(3))
    np.testing.assert_allclose(out, x, atol=1e-15)


@pytest.mark.parametrize("w,h", [(2048, 512), (8192, 2048), (64, 17), (32, 32)])
def test_round_trip_identity(w, h):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(44100)
    layout = frame_layout(x.size, w, h)
    out = overlap_add(segment(x, layout), layout, sine_window(w))
    assert np.max(np.abs(out - x)) <= 1e-12 * np.max(np.abs(x))


def test_constant_input_stays_constant():
    layout = frame_layout(10, 4, 2)
    x = np.full(10, 0.7)
    frames = segment(x, layout)
    out = overlap_add(frames, layout, sine_window(4))
    np.testing.assert_allclose(out, x, atol=1e-14)


def test_analysis_synthesis_linearity():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(300)
    z = rng.standard_normal(300)
    layout = frame_layout(300, 64, 16)
    win = sine_window(64)

    def chain(v):
        return overlap_add(segment(v, layout), layout, win)

    lhs = chain(2.0 * x - 3.0 * z)
    rhs = 2.0 * chain(x) - 3.0 * chain(z)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_zero_window_sum_is_an_error():
    layout = frame_layout(8, 4, 4)
    frames = segment(np.ones(8), layout)
    window = np.array([1.0, 1.0, 0.0, 0.0])
    with pytest.raises(ValueError, match="window sum vanishes"):
        overlap_add(frames, layout, window)


def test_overlap_add_validation():
    layout = frame_layout(8, 4, 2)
    frames = segment(np.ones(8), layout)
    with pytest.raises(ValueError):
        overlap_add(frames[:-1], layout, sine_window(4))
    with pytest.raises(ValueError):
        overlap_add(frames, layout, sine_window(3))
