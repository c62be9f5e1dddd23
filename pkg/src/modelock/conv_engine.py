"""Same-size 2D correlation: direct and FFT paths, plus bank aggregation.

Both paths compute ``out[y, x] = sum taps[r, c] * img[y + r - ar, x + c - ac]``
with ``(ar, ac)`` the anchor and zero padding outside the image, so edge
responses are attenuated on images with a nonzero background.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import EmptyBankError, FilterTooLargeError, InvalidArgumentError


def as_image(pixels) -> np.ndarray:
    """Validate a grayscale image and clamp it to ``[0, 1]`` as float64."""
    a = np.asarray(pixels, dtype=float)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidArgumentError(f"image must be a nonempty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgumentError("image contains non-finite values")
    return np.clip(a, 0.0, 1.0)


def _taps(f) -> np.ndarray:
    taps = np.asarray(getattr(f, "taps", f), dtype=float)
    if taps.ndim != 2 or taps.shape[0] % 2 == 0 or taps.shape[1] % 2 == 0:
        raise InvalidArgumentError(f"filter taps must be odd x odd, got {taps.shape}")
    return taps


def _check_fit(img, taps):
    if taps.shape[0] > 4 * img.shape[0] or taps.shape[1] > 4 * img.shape[1]:
        raise FilterTooLargeError(f"filter {taps.shape} exceeds 4x image {img.shape}")


def correlate_direct(img, f) -> np.ndarray:
    img = as_image(img)
    taps = _taps(f)
    _check_fit(img, taps)
    kh, kw = taps.shape
    ar, ac = kh // 2, kw // 2
    h, w = img.shape
    padded = np.zeros((h + 2 * ar, w + 2 * ac))
    padded[ar : ar + h, ac : ac + w] = img
    out = np.zeros((h, w))
    for r, c in zip(*np.nonzero(taps)):
        out += taps[r, c] * padded[r : r + h, c : c + w]
    return out


@lru_cache(maxsize=None)
def next_smooth(n: int) -> int:
    """Smallest integer >= n whose only prime factors are 2, 3 and 5."""
    m = max(int(n), 1)
    while True:
        k = m
        for p in (2, 3, 5):
            while k % p == 0:
                k //= p
        if k == 1:
            return m
        m += 1


def correlate_fft(img, f) -> np.ndarray:
    img = as_image(img)
    taps = _taps(f)
    _check_fit(img, taps)
    h, w = img.shape
    kh, kw = taps.shape
    fh, fw = next_smooth(h + kh - 1), next_smooth(w + kw - 1)
    spec = np.fft.rfft2(img, s=(fh, fw)) * np.fft.rfft2(taps[::-1, ::-1], s=(fh, fw))
    full = np.fft.irfft2(spec, s=(fh, fw))
    ar, ac = kh // 2, kw // 2
    return full[ar : ar + h, ac : ac + w]


def correlate(img, f, method: str = "auto") -> np.ndarray:
    """Dispatch to the direct or FFT path.

    ``auto`` picks FFT once the kernel has more than 81 nonzero taps.
    """
    if method == "direct":
        return correlate_direct(img, f)
    if method == "fft":
        return correlate_fft(img, f)
    if method != "auto":
        raise InvalidArgumentError(f"unknown method {method!r}")
    taps = _taps(f)
    return correlate_fft(img, f) if np.count_nonzero(taps) > 81 else correlate_direct(img, f)


def bank_response(img, bank, method: str = "auto", gains=None) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel max over the bank and the index of the winning filter.

    Ties go to the lowest bank index.  ``gains`` optionally scales each
    filter's response before the max.
    """
    bank = list(bank)
    if not bank:
        raise EmptyBankError("bank_response needs at least one filter")
    if gains is None:
        gains = [1.0] * len(bank)
    gains = [float(g) for g in gains]
    if len(gains) != len(bank):
        raise InvalidArgumentError(f"got {len(gains)} gains for {len(bank)} filters")
    img = as_image(img)

    def response(k):
        r = correlate(img, bank[k], method)
        return r if gains[k] == 1.0 else r * gains[k]

    best = response(0)
    index = np.zeros(img.shape, dtype=np.int32)
    for k in range(1, len(bank)):
        r = response(k)
        better = r > best
        best = np.where(better, r, best)
        index[better] = k
    return best, index
