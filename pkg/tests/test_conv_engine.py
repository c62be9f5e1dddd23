import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from modelock import (
    EmptyBankError,
    FilterSpec,
    FilterTooLargeError,
    InvalidArgumentError,
    as_image,
    bank_response,
    correlate,
    correlate_direct,
    correlate_fft,
    make_filter,
    make_filter_bank,
)
from modelock.conv_engine import next_smooth


def naive(img, taps):
    h, w = img.shape
    kh, kw = taps.shape
    ar, ac = kh // 2, kw // 2
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for r in range(kh):
                for c in range(kw):
                    yy, xx = y + r - ar, x + c - ac
                    if 0 <= yy < h and 0 <= xx < w:
                        acc += taps[r, c] * img[yy, xx]
            out[y, x] = acc
    return out


def rel_linf(a, b):
    return np.abs(a - b).max() / max(np.abs(b).max(), 1e-300)


def test_delta_kernel_is_identity():
    img = np.random.default_rng(0).random((9, 13))
    for fn in (correlate_direct, correlate_fft):
        assert np.allclose(fn(img, np.ones((1, 1))), img, atol=1e-12)


def test_zero_image_gives_zero():
    f = make_filter(FilterSpec(9, 3, 0.4))
    assert not correlate_direct(np.zeros((20, 20)), f).any()
    assert np.abs(correlate_fft(np.zeros((20, 20)), f)).max() < 1e-12


def test_direct_matches_naive_small():
    rng = np.random.default_rng(1)
    img, taps = rng.random((16, 16)), rng.standard_normal((5, 5))
    assert np.abs(correlate_direct(img, taps) - naive(img, taps)).max() <= 1e-10


def test_fft_matches_direct_seeded():
    rng = np.random.default_rng(2)
    for _ in range(20):
        img, taps = rng.random((64, 64)), rng.standard_normal((15, 15))
        assert rel_linf(correlate_fft(img, taps), correlate_direct(img, taps)) <= 1e-4


def test_filter_larger_than_image():
    rng = np.random.default_rng(3)
    img, taps = rng.random((6, 9)), rng.standard_normal((21, 23))
    d = correlate_direct(img, taps)
    assert d.shape == img.shape
    assert np.abs(d - naive(img, taps)).max() <= 1e-10
    assert rel_linf(correlate_fft(img, taps), d) <= 1e-4


def test_filter_too_large():
    with pytest.raises(FilterTooLargeError):
        correlate_direct(np.zeros((4, 4)), np.ones((17, 3)))
    with pytest.raises(FilterTooLargeError):
        correlate_fft(np.zeros((4, 4)), np.ones((3, 17)))


def test_rejects_even_or_bad_input():
    with pytest.raises(InvalidArgumentError):
        correlate_direct(np.zeros((4, 4)), np.ones((2, 3)))
    with pytest.raises(InvalidArgumentError):
        correlate_direct(np.zeros((4, 4, 3)), np.ones((3, 3)))
    with pytest.raises(InvalidArgumentError):
        as_image([[0.0, math.nan]])
    with pytest.raises(InvalidArgumentError):
        correlate(np.zeros((4, 4)), np.ones((3, 3)), method="gpu")


def test_as_image_clamps():
    assert np.array_equal(as_image([[-1.0, 0.5, 3.0]]), [[0.0, 0.5, 1.0]])


@settings(max_examples=60, deadline=None)
@given(
    img=arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=st.floats(0, 1)),
    kh=st.integers(0, 3), kw=st.integers(0, 3), seed=st.integers(0, 2**31),
)
def test_paths_agree_property(img, kh, kw, seed):
    taps = np.random.default_rng(seed).standard_normal((2 * kh + 1, 2 * kw + 1))
    if taps.shape[0] > 4 * img.shape[0] or taps.shape[1] > 4 * img.shape[1]:
        return
    ref = naive(img, taps)
    d = correlate_direct(img, taps)
    assert np.abs(d - ref).max() <= 1e-10
    assert np.abs(correlate_fft(img, taps) - ref).max() <= 1e-4 * max(np.abs(ref).max(), 1.0)


def test_linearity():
    rng = np.random.default_rng(4)
    a, b = rng.random((30, 25)) * 0.5, rng.random((30, 25)) * 0.5
    f = make_filter(FilterSpec(11, 4, 1.0))
    lhs = correlate_direct(0.7 * a + 0.6 * b, f)
    rhs = 0.7 * correlate_direct(a, f) + 0.6 * correlate_direct(b, f)
    assert np.abs(lhs - rhs).max() <= 1e-9


def test_translation_equivariance_interior():
    rng = np.random.default_rng(5)
    img = np.zeros((60, 60))
    img[20:40, 20:40] = rng.random((20, 20))
    shifted = np.roll(img, (3, -4), axis=(0, 1))
    f = make_filter(FilterSpec(9, 3, 0.5))
    r0, r1 = correlate_direct(img, f), correlate_direct(shifted, f)
    assert np.array_equal(np.roll(r0, (3, -4), axis=(0, 1))[10:50, 10:50], r1[10:50, 10:50])


def test_next_smooth():
    assert [next_smooth(n) for n in (1, 7, 11, 13, 17, 97, 121)] == [1, 8, 12, 15, 18, 100, 125]


def test_auto_dispatch_agrees():
    rng = np.random.default_rng(6)
    img = rng.random((40, 40))
    big = make_filter(FilterSpec(21, 4, 0.0))
    small = np.ones((3, 3))
    assert np.allclose(correlate(img, big), correlate_direct(img, big), atol=1e-9)
    assert np.array_equal(correlate(img, small), correlate_direct(img, small))


def test_bank_single_filter():
    img = np.random.default_rng(7).random((20, 20))
    f = make_filter(FilterSpec(7, 2, 0.0))
    resp, idx = bank_response(img, [f], method="direct")
    assert np.array_equal(resp, correlate_direct(img, f))
    assert not idx.any()


def test_bank_ties_lowest_index():
    img = np.random.default_rng(8).random((20, 20))
    f = make_filter(FilterSpec(7, 2, 0.0))
    _, idx = bank_response(img, [f, f, f], method="direct")
    assert not idx.any()


def test_bank_empty():
    with pytest.raises(EmptyBankError):
        bank_response(np.zeros((5, 5)), [])


def test_bank_gains_length_checked():
    f = make_filter(FilterSpec(7, 2, 0.0))
    with pytest.raises(InvalidArgumentError):
        bank_response(np.zeros((9, 9)), [f], gains=[1.0, 2.0])


def test_bank_max_and_argmax_brute_force():
    rng = np.random.default_rng(9)
    img = rng.random((32, 32))
    bank = make_filter_bank([7, 11], [0, math.pi / 4, math.pi / 2], 3)
    resp, idx = bank_response(img, bank)
    stack = np.stack([correlate(img, f) for f in bank])
    assert np.array_equal(resp, stack.max(axis=0))
    assert np.array_equal(idx, stack.argmax(axis=0))


def test_bank_orientation_at_axis():
    # vertical bar: the vertical-axis cavity filter wins on the axis
    img = np.zeros((64, 64))
    img[8:56, 22:42] = 1
    thetas = [0, math.pi / 4, math.pi / 2, 3 * math.pi / 4]
    bank = make_filter_bank([20], thetas, 4, 9, kind="cavity")
    resp, idx = bank_response(img, bank)
    stack = np.stack([correlate(img, f) for f in bank])
    assert idx[32, 32] == int(np.argmax(stack[:, 32, 32])) == 2
