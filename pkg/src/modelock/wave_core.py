"""Mode-locked sine banks and their pulse superposition.

A bank over span ``L`` holds ``n`` sine components.  Component ``i`` has the
odd mode number ``q = 2i + 1``, wavelength ``2L/q`` and phase ``(i mod 2)*pi``,
so every component vanishes at ``x = 0`` and ``x = L`` and peaks at ``x = L/2``.
Averaging the components yields a narrow pulse at ``L/2`` with negative flanks.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError

TWO_PI = 2.0 * math.pi


def _check_positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value) and value > 0):
        raise InvalidArgumentError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True)
class Wave:
    amplitude: float
    wavelength: float
    phase: float = 0.0

    def __post_init__(self):
        _check_positive("amplitude", self.amplitude)
        _check_positive("wavelength", self.wavelength)
        phase = math.fmod(float(self.phase), TWO_PI)
        if phase < 0:
            phase += TWO_PI
        if phase >= TWO_PI:
            phase = 0.0
        object.__setattr__(self, "phase", phase)


def phase_distance(a: float, b: float) -> float:
    """Shortest distance between two phases on the circle."""
    d = math.fmod(abs(a - b), TWO_PI)
    return min(d, TWO_PI - d)


@dataclass(frozen=True)
class ModeLockedBank:
    span_L: float
    n: int
    amplitude: float
    waves: tuple[Wave, ...]
    include_fundamental: bool = False

    @property
    def mode_numbers(self) -> tuple[int, ...]:
        start = 0 if self.include_fundamental else 1
        return tuple(2 * i + 1 for i in range(start, self.n + 1))


def make_bank(span_L: float, n: int, amplitude: float = 1.0, include_fundamental: bool = False) -> ModeLockedBank:
    """Build the ``n``-component mode-locked bank over ``span_L``.

    With ``include_fundamental`` the ``q = 1`` mode (phase 0) is prepended; it
    obeys the same node/peak constraints but is not part of the default bank.
    """
    _check_positive("span_L", span_L)
    _check_positive("amplitude", amplitude)
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgumentError(f"n must be an integer >= 1, got {n!r}")
    start = 0 if include_fundamental else 1
    waves = tuple(
        Wave(amplitude=float(amplitude), wavelength=2.0 * span_L / (2 * i + 1), phase=(i % 2) * math.pi)
        for i in range(start, int(n) + 1)
    )
    return ModeLockedBank(float(span_L), int(n), float(amplitude), waves, include_fundamental)


def eval_wave(w: Wave, x):
    """``A * sin(2*pi*x/lambda + phi)``; ``x`` may be a scalar or an array."""
    return w.amplitude * np.sin(TWO_PI * np.asarray(x, dtype=float) / w.wavelength + w.phase)


def superpose(bank: ModeLockedBank, x):
    """Mean of the bank's components at ``x``."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for w in bank.waves:
        total = total + eval_wave(w, x)
    out = total / len(bank.waves)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SampledWaveform:
    samples: np.ndarray
    x0: float
    dx: float

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise InvalidArgumentError("samples must be a nonempty 1-D sequence")
        if not (self.dx > 0):
            raise InvalidArgumentError(f"dx must be > 0, got {self.dx!r}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "dx", float(self.dx))

    def __len__(self):
        return self.samples.size

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.samples.size)

    def to_csv(self, path=None) -> str:
        """Write ``x,y`` rows with 9 significant digits; returns the text."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "y"])
        for xv, yv in zip(self.x, self.samples):
            writer.writerow([_fmt9(xv), _fmt9(yv)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "SampledWaveform":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [c.strip() for c in rows[0]] != ["x", "y"]:
            raise InvalidArgumentError(f"{path}: expected header 'x,y'")
        xs = np.array([float(r[0]) for r in rows[1:]])
        ys = np.array([float(r[1]) for r in rows[1:]])
        if xs.size < 2:
            return cls(ys, xs[0] if xs.size else 0.0, 1.0)
        return cls(ys, xs[0], (xs[-1] - xs[0]) / (xs.size - 1))


def _fmt9(v: float) -> str:
    s = f"{v:.9g}"
    return "0" if s == "-0" else s


def sample_superposition(bank: ModeLockedBank, x0: float, x1: float, num_samples: int) -> SampledWaveform:
    if not (math.isfinite(x0) and math.isfinite(x1) and x1 > x0):
        raise InvalidArgumentError(f"need x1 > x0, got [{x0}, {x1}]")
    if isinstance(num_samples, bool) or not isinstance(num_samples, (int, np.integer)) or num_samples < 2:
        raise InvalidArgumentError(f"num_samples must be an integer >= 2, got {num_samples!r}")
    xs = np.linspace(x0, x1, int(num_samples))
    dx = (x1 - x0) / (num_samples - 1)
    return SampledWaveform(superpose(bank, xs), x0, dx)


@dataclass(frozen=True)
class PulseMetrics:
    peak_x: float
    peak_value: float
    fwhm: float
    min_sidelobe: float
    lobe: tuple[float, float] = field(default=(math.nan, math.nan), compare=False)

    def as_dict(self) -> dict:
        return {"peak_x": self.peak_x, "peak_value": self.peak_value, "fwhm": self.fwhm, "min_sidelobe": self.min_sidelobe}


def _crossing(xa, ya, xb, yb, level):
    if yb == ya:
        return xa
    return xa + (level - ya) * (xb - xa) / (yb - ya)


def pulse_metrics(wf: SampledWaveform) -> PulseMetrics:
    """Peak location, full width at half maximum and deepest sidelobe.

    The main lobe is the run of strictly positive samples containing the
    peak; ``min_sidelobe`` is the minimum outside it within ``3*fwhm`` of the
    peak (``nan`` when no such sample exists).  Half-max crossings are
    linearly interpolated; a lobe that runs off the grid is cut at the edge.
    """
    y = wf.samples
    if y.size < 3:
        raise InvalidArgumentError("pulse_metrics needs at least 3 samples")
    if np.ptp(y) == 0:
        raise DegenerateInputError("waveform is constant")
    x = wf.x
    k = int(np.argmax(y))
    peak = float(y[k])
    if peak <= 0:
        raise DegenerateInputError("waveform has no positive peak")
    half = peak / 2.0

    i = k
    while i > 0 and y[i - 1] >= half:
        i -= 1
    left = x[0] if i == 0 else _crossing(x[i - 1], y[i - 1], x[i], y[i], half)
    j = k
    while j < y.size - 1 and y[j + 1] >= half:
        j += 1
    right = x[-1] if j == y.size - 1 else _crossing(x[j], y[j], x[j + 1], y[j + 1], half)
    fwhm = float(right - left)
    if fwhm <= 0:
        # single-sample lobe at the grid edge; fall back to one sample spacing
        fwhm = wf.dx

    a = k
    while a > 0 and y[a - 1] > 0:
        a -= 1
    b = k
    while b < y.size - 1 and y[b + 1] > 0:
        b += 1
    near = np.abs(x - x[k]) <= 3.0 * fwhm
    outside = np.ones(y.size, dtype=bool)
    outside[a : b + 1] = False
    window = y[near & outside]
    min_side = float(window.min()) if window.size else math.nan
    return PulseMetrics(float(x[k]), peak, fwhm, min_side, (float(x[a]), float(x[b])))
