"""File formats: MLAR1 float arrays, binary PGM, min-max heatmaps."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError

MLAR1_MAGIC = b"MLAR1\n"


def write_mlar1(path, array) -> None:
    """ASCII ``MLAR1\\n<rows> <cols>\\n`` then little-endian float32, row-major."""
    a = np.asarray(array)
    if a.ndim != 2:
        raise InvalidArgumentError(f"MLAR1 holds 2-D arrays, got shape {a.shape}")
    header = MLAR1_MAGIC + f"{a.shape[0]} {a.shape[1]}\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(a, dtype="<f4").tobytes())


def read_mlar1(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(MLAR1_MAGIC):
        raise InvalidArgumentError(f"{path}: not an MLAR1 file")
    end = data.find(b"\n", len(MLAR1_MAGIC))
    if end < 0:
        raise InvalidArgumentError(f"{path}: truncated MLAR1 header")
    try:
        rows, cols = (int(t) for t in data[len(MLAR1_MAGIC) : end].split())
    except ValueError:
        raise InvalidArgumentError(f"{path}: malformed MLAR1 dimensions") from None
    body = data[end + 1 :]
    if rows < 1 or cols < 1 or len(body) != 4 * rows * cols:
        raise InvalidArgumentError(f"{path}: MLAR1 payload size does not match {rows}x{cols}")
    return np.frombuffer(body, dtype="<f4").reshape(rows, cols).copy()


def write_pgm(path, array, maxval: int = 255) -> None:
    """Binary P5 PGM.  ``array`` must already hold integers in ``[0, maxval]``."""
    a = np.asarray(array)
    if a.ndim != 2:
        raise InvalidArgumentError(f"PGM holds 2-D arrays, got shape {a.shape}")
    if a.size and (a.min() < 0 or a.max() > maxval):
        raise InvalidArgumentError(f"PGM values must lie in [0, {maxval}]")
    header = f"P5\n{a.shape[1]} {a.shape[0]}\n{maxval}\n".encode("ascii")
    dtype = np.uint8 if maxval < 256 else ">u2"
    Path(path).write_bytes(header + np.ascontiguousarray(a, dtype=dtype).tobytes())


def _pgm_tokens(data: bytes, count: int):
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise InvalidArgumentError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1  # single whitespace byte follows maxval


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Return ``(pixels, maxval)`` with pixels as uint8 or uint16."""
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise InvalidArgumentError(f"{path}: not a binary PGM (P5)")
    (magic, w, h, maxval), offset = _pgm_tokens(data, 4)
    w, h, maxval = int(w), int(h), int(maxval)
    if not 0 < maxval < 65536:
        raise InvalidArgumentError(f"{path}: bad maxval {maxval}")
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    need = w * h * np.dtype(dtype).itemsize
    body = data[offset : offset + need]
    if len(body) != need:
        raise InvalidArgumentError(f"{path}: PGM payload too short")
    pixels = np.frombuffer(body, dtype=dtype).reshape(h, w)
    return pixels.astype(np.uint16 if maxval >= 256 else np.uint8), maxval


def read_binary_pgm(path) -> np.ndarray:
    pixels, _ = read_pgm(path)
    return pixels > 0


def write_binary_pgm(path, mask) -> None:
    write_pgm(path, np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))


def read_map(path) -> np.ndarray:
    """Load a 2-D float map from MLAR1 or PGM, chosen by magic bytes.

    PGM values are scaled by ``1/maxval``.
    """
    with open(path, "rb") as fh:
        head = fh.read(len(MLAR1_MAGIC))
    if head == MLAR1_MAGIC:
        return read_mlar1(path).astype(float)
    if head[:2] == b"P5":
        pixels, maxval = read_pgm(path)
        return pixels.astype(float) / maxval
    raise InvalidArgumentError(f"{path}: unrecognized map format (expected MLAR1 or P5 PGM)")


def heatmap(array) -> np.ndarray:
    """Min-max normalize to 0..255 uint8; a constant array maps to 0."""
    a = np.asarray(array, dtype=float)
    lo, hi = float(a.min()), float(a.max())
    if hi == lo:
        return np.zeros(a.shape, dtype=np.uint8)
    return np.round((a - lo) * (255.0 / (hi - lo))).astype(np.uint8)


def write_heatmap(path, array) -> None:
    write_pgm(path, heatmap(array))
