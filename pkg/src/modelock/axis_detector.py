"""Symmetry-axis detection: bank response -> NMS -> relative threshold -> thinning."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .conv_engine import as_image, bank_response
from .errors import InvalidArgumentError
from .filter_bank import bar_response, make_filter_bank

NORMALIZATIONS = ("bar", "none")


@dataclass(frozen=True)
class DetectorConfig:
    spans: tuple[float, ...] = (16, 24, 32, 48, 64)
    orientations: tuple[float, ...] = (0.0, math.pi / 2)
    n: int = 4
    length: float | None = 9.0
    envelope: str = "boxcar"
    sigma: float | None = None
    kind: str = "cavity"
    nms_radius: int = 2
    threshold: float = 0.7
    method: str = "auto"
    normalize: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(float(s) for s in self.spans))
        object.__setattr__(self, "orientations", tuple(float(t) for t in self.orientations))
        if not self.spans or not self.orientations:
            raise InvalidArgumentError("spans and orientations must be nonempty")
        if not 0 < self.threshold <= 1:
            raise InvalidArgumentError(f"threshold must lie in (0, 1], got {self.threshold}")
        if int(self.nms_radius) != self.nms_radius or self.nms_radius < 1:
            raise InvalidArgumentError(f"nms_radius must be an integer >= 1, got {self.nms_radius}")
        if self.normalize is not None and self.normalize not in NORMALIZATIONS:
            raise InvalidArgumentError(f"normalize must be one of {NORMALIZATIONS}, got {self.normalize!r}")

    @property
    def normalization(self) -> str:
        """``bar`` for cavity filters, ``none`` for pulse filters unless set."""
        if self.normalize is not None:
            return self.normalize
        return "bar" if self.kind == "cavity" else "none"

    def build_bank(self):
        return make_filter_bank(self.spans, self.orientations, self.n, self.length,
                                self.envelope, self.sigma, self.kind)

    def gains(self, bank) -> list[float]:
        """Per-filter response scale.

        ``bar`` scales each filter so its matched bar scores 1.  A single
        edge then scores at most 0.5, below the default threshold, and spans
        of different size compete on equal terms.
        """
        if self.normalization == "none":
            return [1.0] * len(bank)
        out = []
        for f in bank:
            peak = bar_response(f)
            if peak <= 0:
                raise InvalidArgumentError(f"filter {f.spec} has no positive bar response; use normalize='none'")
            out.append(1.0 / peak)
        return out


def dataset_defaults(canvas, axis_mode: str = "vertical", width_choices=None) -> dict:
    """Spans and orientations that cover a scene_gen dataset.

    Spans step through the drawn rectangle extents (canvas/8 .. canvas/2)
    every ``max(2, canvas // 64)`` pixels, or are the dataset's explicit
    width choices.  Orientations follow the labelled axes.
    """
    H, W = (int(c) for c in canvas)
    if width_choices:
        spans = sorted({float(c) for c in width_choices})
    else:
        extents = {"vertical": (W,), "horizontal": (H,), "both": (H, W)}[axis_mode]
        spans = sorted({float(s) for e in extents
                        for s in range(math.ceil(e / 8), e // 2 + 1, max(2, e // 64))})
    orientations = {"vertical": (math.pi / 2,), "horizontal": (0.0,), "both": (0.0, math.pi / 2)}[axis_mode]
    return {"spans": tuple(spans), "orientations": orientations}


def _bilinear(a: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Sample ``a`` at fractional array coordinates, clamping to the edge."""
    h, w = a.shape
    rows = np.clip(rows, 0, h - 1)
    cols = np.clip(cols, 0, w - 1)
    r0 = np.minimum(np.floor(rows).astype(int), h - 1)
    c0 = np.minimum(np.floor(cols).astype(int), w - 1)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    fr = rows - r0
    fc = cols - c0
    # lerp form keeps constant regions exact, which the tie rule relies on
    top = a[r0, c0] + fc * (a[r0, c1] - a[r0, c0])
    bot = a[r1, c0] + fc * (a[r1, c1] - a[r1, c0])
    return top + fr * (bot - top)


def nms(resp, orient, radius: int = 2) -> np.ndarray:
    """Keep pixels that are >= every bilinear sample across their axis.

    ``orient`` holds the per-pixel axis orientation (radians).  Samples are
    taken at offsets ``k * (-sin, cos)`` for ``0 < |k| <= radius``; ties are
    kept, suppressed pixels become 0.
    """
    if int(radius) != radius or radius < 1:
        raise InvalidArgumentError(f"radius must be an integer >= 1, got {radius}")
    resp = np.asarray(resp, dtype=float)
    orient = np.broadcast_to(np.asarray(orient, dtype=float), resp.shape)
    rows, cols = np.indices(resp.shape, dtype=float)
    dc = -np.sin(orient)
    dr = np.cos(orient)
    keep = np.ones(resp.shape, dtype=bool)
    for k in range(1, int(radius) + 1):
        for sgn in (1, -1):
            other = _bilinear(resp, rows + sgn * k * dr, cols + sgn * k * dc)
            keep &= resp >= other
    return np.where(keep, resp, 0.0)


# Neighbour bits, counter-clockwise from east: x1=E, x2=NE, x3=N, x4=NW,
# x5=W, x6=SW, x7=S, x8=SE.  (drow, dcol) per bit.
_NEIGHBOURS = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))


def _thin_luts() -> tuple[np.ndarray, np.ndarray]:
    first = np.zeros(256, dtype=bool)
    second = np.zeros(256, dtype=bool)
    for code in range(256):
        x = [bool(code >> i & 1) for i in range(8)]
        X = lambda i: x[(i - 1) % 8]  # 1-based, cyclic
        crossings = sum(1 for i in range(1, 5) if not X(2 * i - 1) and (X(2 * i) or X(2 * i + 1)))
        n1 = sum(1 for k in range(1, 5) if X(2 * k - 1) or X(2 * k))
        n2 = sum(1 for k in range(1, 5) if X(2 * k) or X(2 * k + 1))
        base = crossings == 1 and 2 <= min(n1, n2) <= 3
        first[code] = base and not ((X(2) or X(3) or not X(8)) and X(1))
        second[code] = base and not ((X(6) or X(7) or not X(4)) and X(5))
    return first, second


_LUT_FIRST, _LUT_SECOND = _thin_luts()


def _neighbour_codes(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    p = np.zeros((h + 2, w + 2), dtype=np.uint16)
    p[1:-1, 1:-1] = img
    code = np.zeros((h, w), dtype=np.uint16)
    for bit, (dr, dc) in enumerate(_NEIGHBOURS):
        code |= p[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w] << bit
    return code


def thin(binary) -> np.ndarray:
    """Two-subiteration parallel thinning (Guo-Hall conditions) to a fixpoint.

    Removes only simple border pixels, so 8-connected components survive
    (a 2x2 block shrinks to one pixel instead of vanishing).
    """
    img = np.asarray(binary).astype(bool).astype(np.uint16)
    if img.ndim != 2:
        raise InvalidArgumentError("thin expects a 2-D map")
    while True:
        changed = False
        for lut in (_LUT_FIRST, _LUT_SECOND):
            delete = lut[_neighbour_codes(img)] & (img == 1)
            if delete.any():
                img[delete] = 0
                changed = True
        if not changed:
            return img.astype(bool)


def orientation_map(index: np.ndarray, bank) -> np.ndarray:
    angles = np.array([f.spec.orientation for f in bank], dtype=float)
    return angles[index]


def detect(img, cfg: DetectorConfig | None = None, bank=None, gains=None, return_response: bool = False):
    """Thinned binary axis map for ``img``.

    Pass a prebuilt ``bank`` (``cfg.build_bank()``) and its ``gains``
    (``cfg.gains(bank)``) when detecting many images with one configuration.
    """
    cfg = cfg or DetectorConfig()
    img = as_image(img)
    if bank is None:
        bank = cfg.build_bank()
        gains = None
    if gains is None:
        gains = cfg.gains(bank)
    resp, index = bank_response(img, bank, cfg.method, gains)
    suppressed = nms(resp, orientation_map(index, bank), cfg.nms_radius)
    peak = suppressed.max()
    if peak > 0:
        skeleton = thin((suppressed >= cfg.threshold * peak) & (suppressed > 0))
    else:
        skeleton = np.zeros(img.shape, dtype=bool)
    if return_response:
        return skeleton, resp, index
    return skeleton
