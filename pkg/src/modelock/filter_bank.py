"""Oriented 2D mode-locked filters.

Two profiles are extruded along the filter axis:

``pulse``
    The superposition itself, ``y(s + L/2)`` for cross-axis offset
    ``|s| <= L/2``: central excitation band with inhibitory flanks.

``cavity``
    A kernel over ``|s| <= L`` whose correlation with a filled bar of width
    ``L`` is exactly ``2 * y(d)``, where ``d`` is the distance to the bar's
    left side.  Each tap is a first difference of ``sign(s) * y(|s|)``, so the
    kernel links the two sides of an object ``L`` apart and the pulse forms
    in the response on the object's axis.  A zero-mean pulse kernel whose
    support lies entirely inside a filled object returns zero on its axis,
    which is why the detector defaults to this profile.

Coordinates: tap offsets ``(u, v)`` are (column, row) from the anchor, the
axis direction is ``(cos t, sin t)`` in those coordinates, and the cross-axis
coordinate is ``s = -u sin t + v cos t``.  Orientation 0 is a horizontal
axis, ``pi/2`` a vertical one.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateFilterError, InvalidArgumentError
from .wave_core import make_bank, superpose

ENVELOPES = ("boxcar", "gaussian")
KINDS = ("pulse", "cavity")
_EPS = 1e-9


def normalize_orientation(theta: float) -> float:
    """Map to ``[0, pi)``, rounded to 12 decimals so ``t`` and ``t + pi`` agree exactly."""
    t = round(math.fmod(float(theta), math.pi), 12)
    if t < 0:
        t = round(t + math.pi, 12)
    if t >= round(math.pi, 12):
        t = 0.0
    return t


@dataclass(frozen=True)
class FilterSpec:
    span_L: float
    n: int
    orientation: float = 0.0
    length: float | None = None
    envelope: str = "boxcar"
    sigma: float | None = None
    kind: str = "pulse"

    def __post_init__(self):
        if not (math.isfinite(self.span_L) and self.span_L > 0):
            raise InvalidArgumentError(f"span_L must be > 0, got {self.span_L!r}")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise InvalidArgumentError(f"n must be an integer >= 1, got {self.n!r}")
        length = self.span_L if self.length is None else self.length
        if not (math.isfinite(length) and length > 0):
            raise InvalidArgumentError(f"length must be > 0, got {length!r}")
        if self.envelope not in ENVELOPES:
            raise InvalidArgumentError(f"envelope must be one of {ENVELOPES}, got {self.envelope!r}")
        if self.envelope == "gaussian" and not (self.sigma is not None and self.sigma > 0):
            raise InvalidArgumentError("gaussian envelope needs sigma > 0")
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not math.isfinite(self.orientation):
            raise InvalidArgumentError("orientation must be finite")
        object.__setattr__(self, "span_L", float(self.span_L))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(length))
        object.__setattr__(self, "orientation", normalize_orientation(self.orientation))

    @property
    def cross_half_extent(self) -> float:
        return self.span_L / 2.0 if self.kind == "pulse" else self.span_L

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "FilterSpec":
        known = {"span_L", "n", "orientation", "length", "envelope", "sigma", "kind"}
        unknown = set(d) - known
        if unknown:
            raise InvalidArgumentError(f"unknown FilterSpec fields: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class OrientedFilter:
    spec: FilterSpec
    taps: np.ndarray

    @property
    def anchor(self) -> tuple[int, int]:
        return self.taps.shape[0] // 2, self.taps.shape[1] // 2

    @property
    def shape(self) -> tuple[int, int]:
        return self.taps.shape


def _envelope(spec: FilterSpec, t):
    if spec.envelope == "boxcar":
        return np.ones_like(t)
    return np.exp(-0.5 * (t / spec.sigma) ** 2)


def cavity_profile(span_L: float, n: int, s) -> np.ndarray:
    """Cross-axis taps of the cavity kernel at integer offsets ``s``."""
    bank = make_bank(span_L, n)

    def signed(t):
        a = np.abs(t)
        y = np.where(a <= span_L, superpose(bank, np.minimum(a, span_L)), 0.0)
        return np.sign(t) * y

    s = np.asarray(s, dtype=float)
    return signed(s + 0.5) - signed(s - 0.5)


def make_filter(spec: FilterSpec) -> OrientedFilter:
    """Discretize ``spec`` into a zero-mean, unit-L2, 180-degree symmetric kernel."""
    theta = spec.orientation
    c, s_ = math.cos(theta), math.sin(theta)
    half_t = spec.length / 2.0
    half_s = spec.cross_half_extent
    hc = int(math.floor(abs(c) * half_t + abs(s_) * half_s + _EPS))
    hr = int(math.floor(abs(s_) * half_t + abs(c) * half_s + _EPS))
    v, u = np.mgrid[-hr : hr + 1, -hc : hc + 1].astype(float)
    t = u * c + v * s_
    s = -u * s_ + v * c
    support = (np.abs(s) <= half_s + _EPS) & (np.abs(t) <= half_t + _EPS)

    if spec.kind == "pulse":
        profile = superpose(make_bank(spec.span_L, spec.n), s + spec.span_L / 2.0)
    else:
        profile = cavity_profile(spec.span_L, spec.n, s)
    taps = np.where(support, _envelope(spec, t) * profile, 0.0)
    # exact 180-degree symmetry; float evaluation of the profile is not
    taps = 0.5 * (taps + taps[::-1, ::-1])
    if not support.any() or not np.any(taps):
        raise DegenerateFilterError(f"all taps are zero for {spec}")
    taps = np.where(support, taps - taps[support].mean(), 0.0)
    norm = float(np.sqrt(np.sum(taps * taps)))
    if norm == 0.0:
        raise DegenerateFilterError(f"filter for {spec} is constant on its support")
    taps = taps / norm
    taps = _trim(taps)
    taps.setflags(write=False)
    return OrientedFilter(spec, taps)


def _trim(taps: np.ndarray) -> np.ndarray:
    # drop all-zero outer rings symmetrically so the kernel stays odd x odd
    while taps.shape[0] > 1 and not taps[0].any() and not taps[-1].any():
        taps = taps[1:-1]
    while taps.shape[1] > 1 and not taps[:, 0].any() and not taps[:, -1].any():
        taps = taps[:, 1:-1]
    return np.ascontiguousarray(taps)


def make_filter_bank(
    spans,
    orientations,
    n: int,
    length: float | None = None,
    envelope: str = "boxcar",
    sigma: float | None = None,
    kind: str = "pulse",
) -> list[OrientedFilter]:
    """All ``spans x orientations`` filters, span-major.

    ``length=None`` makes each filter as long as its span.
    """
    spans = list(spans)
    orientations = list(orientations)
    if not spans or not orientations:
        raise InvalidArgumentError("spans and orientations must be nonempty")
    return [
        make_filter(FilterSpec(L, n, theta, length, envelope, sigma, kind))
        for L in spans
        for theta in orientations
    ]


def save_filter(f: OrientedFilter, path) -> None:
    """Write taps as MLAR1 plus a ``.json`` sidecar with the spec."""
    from .formats import write_mlar1

    path = Path(path)
    write_mlar1(path, f.taps)
    path.with_suffix(".json").write_text(f.spec.to_json() + "\n")


def load_filter(path) -> OrientedFilter:
    from .formats import read_mlar1

    path = Path(path)
    spec = FilterSpec.from_dict(json.loads(path.with_suffix(".json").read_text()))
    taps = read_mlar1(path).astype(float)
    if taps.shape[0] % 2 == 0 or taps.shape[1] % 2 == 0:
        raise InvalidArgumentError(f"{path}: filter taps must be odd x odd, got {taps.shape}")
    taps.setflags(write=False)
    return OrientedFilter(spec, taps)


def bar_response(f: OrientedFilter) -> float:
    """Peak response of ``f`` to an ideal filled bar of width ``span_L`` on its axis.

    Bars of even width are shifted half a pixel so they cover exactly
    ``span_L`` pixel rows when the filter is axis-aligned.
    """
    from .conv_engine import correlate_direct

    spec = f.spec
    kh, kw = f.shape
    pad = int(math.ceil(spec.span_L)) + 2
    v, u = np.mgrid[-(kh // 2 + pad) : kh // 2 + pad + 1, -(kw // 2 + pad) : kw // 2 + pad + 1].astype(float)
    s = -u * math.sin(spec.orientation) + v * math.cos(spec.orientation)
    shift = 0.5 if round(spec.span_L) % 2 == 0 else 0.0
    bar = (np.abs(s - shift) < spec.span_L / 2.0).astype(float)
    return float(correlate_direct(bar, f).max())
