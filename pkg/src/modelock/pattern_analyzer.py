"""Score response / feature maps for the mode-locking signature.

A map is read along an axis hypothesis: perpendicular cross-sections are
averaged into one profile, which is then matched by normalized
cross-correlation against mode-locked templates over a grid of spans and
component counts.  Two flags summarize the three-level reading of the
profile: a central excitation band above the background and inhibitory
flanks below it.

Map coordinates are continuous: array element ``[row, col]`` covers
``[col, col+1) x [row, row+1)`` and its value sits at the pixel centre
``(col + 0.5, row + 0.5)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import AxisOutOfBoundsError, DegenerateProfileError, InvalidArgumentError
from .wave_core import SampledWaveform, make_bank, pulse_metrics, sample_superposition, superpose

SOURCES = ("ground_truth", "detected", "user_supplied")

# flag thresholds in background standard deviations
EXCITATION_SIGMAS = 2.0
INHIBITION_SIGMAS = 0.5


@dataclass(frozen=True)
class AxisHypothesis:
    segment: tuple[float, float, float, float]
    source: str = "user_supplied"

    def __post_init__(self):
        seg = tuple(float(v) for v in self.segment)
        if len(seg) != 4 or not all(math.isfinite(v) for v in seg):
            raise InvalidArgumentError(f"segment must be 4 finite numbers, got {self.segment!r}")
        if seg[0] == seg[2] and seg[1] == seg[3]:
            raise InvalidArgumentError("axis segment has zero length")
        if self.source not in SOURCES:
            raise InvalidArgumentError(f"source must be one of {SOURCES}, got {self.source!r}")
        object.__setattr__(self, "segment", seg)

    @property
    def length(self) -> float:
        x0, y0, x1, y1 = self.segment
        return math.hypot(x1 - x0, y1 - y0)


@dataclass(frozen=True)
class ModeLockReport:
    ncc_score: float
    fitted_L: float
    fitted_n: int
    center_excitation: bool
    lateral_inhibition: bool
    profile: SampledWaveform
    background_stats: tuple[float, float]
    fwhm: float = math.nan
    center_mean: float = math.nan
    flank_means: tuple[float, float] = (math.nan, math.nan)

    def as_dict(self) -> dict:
        mean, std = self.background_stats
        return {
            "ncc_score": self.ncc_score,
            "fitted_L": self.fitted_L,
            "fitted_n": self.fitted_n,
            "center_excitation": self.center_excitation,
            "lateral_inhibition": self.lateral_inhibition,
            "background_mean": mean,
            "background_std": std,
            "fwhm": self.fwhm,
            "center_mean": self.center_mean,
            "flank_means": list(self.flank_means),
            "profile_x0": self.profile.x0,
            "profile_dx": self.profile.dx,
            "profile_len": len(self.profile),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True)


def _sample(a: np.ndarray, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    # continuous -> array coordinates, then bilinear with edge clamping
    from .axis_detector import _bilinear

    return _bilinear(a, py - 0.5, px - 0.5)


def extract_profile(resp, axis: AxisHypothesis, num_cuts: int = 32, half_extent: float = 32.0) -> SampledWaveform:
    """Mean of ``num_cuts`` cross-sections perpendicular to ``axis``.

    Cuts sit at the centres of ``num_cuts`` equal pieces of the segment; each
    is sampled at unit spacing over ``[-half_extent, half_extent]`` (rounded
    to whole pixels) along the normal ``(-dy, dx)``.  Every sample point
    must lie inside the map.
    """
    a = np.asarray(resp, dtype=float)
    if a.ndim != 2:
        raise InvalidArgumentError(f"map must be 2-D, got shape {a.shape}")
    if isinstance(num_cuts, bool) or int(num_cuts) != num_cuts or num_cuts < 3:
        raise InvalidArgumentError(f"num_cuts must be an integer >= 3, got {num_cuts!r}")
    m = int(round(half_extent))
    if m < 1:
        raise InvalidArgumentError(f"half_extent must be >= 1, got {half_extent!r}")
    x0, y0, x1, y1 = axis.segment
    length = axis.length
    tx, ty = (x1 - x0) / length, (y1 - y0) / length
    nx, ny = -ty, tx
    frac = (np.arange(num_cuts) + 0.5) / num_cuts
    cx = x0 + frac * (x1 - x0)
    cy = y0 + frac * (y1 - y0)
    offsets = np.arange(-m, m + 1, dtype=float)
    px = cx[:, None] + offsets[None, :] * nx
    py = cy[:, None] + offsets[None, :] * ny
    h, w = a.shape
    tol = 1e-9
    if px.min() < -tol or py.min() < -tol or px.max() > w + tol or py.max() > h + tol:
        raise AxisOutOfBoundsError(
            f"axis {axis.segment} with half_extent {m} leaves the {h}x{w} map"
        )
    cuts = _sample(a, px, py)
    return SampledWaveform(cuts.mean(axis=0), -m, 1.0)


def _template(L: float, n: int, x: np.ndarray) -> np.ndarray:
    return superpose(make_bank(L, n), x + L / 2.0)


@lru_cache(maxsize=65536)
def _window_template(L: float, n: int, x0: float, dx: float, size: int) -> np.ndarray | None:
    """Normalized template on the profile grid, zero outside ``|x| <= L/2``."""
    x = x0 + dx * np.arange(size)
    support = np.abs(x) <= L / 2.0 + 1e-9
    t = np.zeros(size)
    t[support] = _template(L, n, x[support])
    t = _normalized(t)
    if t is not None:
        t.setflags(write=False)
    return t


def _normalized(v: np.ndarray) -> np.ndarray | None:
    v = v - v.mean()
    norm = math.sqrt(float(np.dot(v, v)))
    if norm <= 1e-12 * max(1.0, float(np.abs(v).max(initial=0.0))) or norm == 0.0:
        return None
    return v / norm


def _grid(lo, hi, step):
    vals = np.arange(lo, hi + step * 0.5, step)
    return [float(v) for v in vals if v <= hi + 1e-9]


def modelock_score(profile: SampledWaveform, L_range=(10.0, 80.0), n_range=(1, 16), L_step: float = 1.0) -> ModeLockReport:
    """Best NCC of ``profile`` against mode-locked templates, plus flags.

    For every span ``L`` on the grid and every ``n`` in ``n_range`` the
    template is the bank superposition centred on the profile centre
    (``x = 0``) on ``|x| <= L/2`` and zero elsewhere.  Profile and template
    are both mean-subtracted and L2-normalized over the whole profile, so
    scores for different spans share one window and stay comparable.  Ties
    go to the smallest ``L``, then the smallest ``n``.

    Flags use the fitted template's FWHM: the centre band is ``|x| <= FWHM/2``,
    flanks are ``FWHM <= |x| <= 3 FWHM`` on each side, background is
    ``|x| > 3 FWHM``.
    """
    y = np.asarray(profile.samples, dtype=float)
    x = profile.x
    if y.size < 3 or np.ptp(y) == 0:
        raise DegenerateProfileError("profile has zero variance")
    Lmin, Lmax = (float(v) for v in L_range)
    nmin, nmax = (int(v) for v in n_range)
    if not (0 < Lmin <= Lmax) or not (1 <= nmin <= nmax) or L_step <= 0:
        raise InvalidArgumentError(f"bad search ranges L={L_range}, n={n_range}, step={L_step}")

    p = _normalized(y)
    if p is None:
        raise DegenerateProfileError("profile has zero variance")
    best = (-math.inf, math.nan, 0)
    for L in _grid(Lmin, Lmax, L_step):
        support = np.abs(x) <= L / 2.0 + 1e-9
        if support.sum() < 3 or x[0] > -L / 2.0 + profile.dx or x[-1] < L / 2.0 - profile.dx:
            continue  # too narrow for the grid, or runs off the profile
        for n in range(nmin, nmax + 1):
            t = _window_template(L, n, profile.x0, profile.dx, y.size)
            if t is None:
                continue
            score = float(np.dot(p, t))
            if score > best[0]:
                best = (score, L, n)
    if not math.isfinite(best[0]):
        raise DegenerateProfileError("no template in the search range fits the profile")
    score, L, n = best

    dense = sample_superposition(make_bank(L, n), 0.0, L, max(201, int(20 * L) + 1))
    fwhm = pulse_metrics(dense).fwhm
    ax = np.abs(x)
    centre = y[ax <= fwhm / 2.0 + 1e-9]
    if centre.size == 0:
        centre = y[[int(np.argmin(ax))]]
    left = y[(x <= -fwhm) & (x >= -3 * fwhm)]
    right = y[(x >= fwhm) & (x <= 3 * fwhm)]
    background = y[ax > 3 * fwhm]
    centre_mean = float(centre.mean())
    flanks = (float(left.mean()) if left.size else math.nan, float(right.mean()) if right.size else math.nan)
    if background.size >= 2:
        bg_mean, bg_std = float(background.mean()), float(background.std())
        excitation = centre_mean > bg_mean + EXCITATION_SIGMAS * bg_std
        inhibition = (
            left.size > 0 and right.size > 0
            and flanks[0] < bg_mean - INHIBITION_SIGMAS * bg_std
            and flanks[1] < bg_mean - INHIBITION_SIGMAS * bg_std
        )
    else:
        bg_mean = bg_std = math.nan
        excitation = inhibition = False
    return ModeLockReport(
        ncc_score=min(1.0, max(-1.0, score)),
        fitted_L=L,
        fitted_n=n,
        center_excitation=bool(excitation),
        lateral_inhibition=bool(inhibition),
        profile=profile,
        background_stats=(bg_mean, bg_std),
        fwhm=float(fwhm),
        center_mean=centre_mean,
        flank_means=flanks,
    )


def analyze_map(resp, axis: AxisHypothesis, L_range=(10.0, 80.0), n_range=(1, 16), num_cuts: int = 32,
                half_extent: float | None = None, L_step: float = 1.0) -> ModeLockReport:
    """``extract_profile`` then ``modelock_score``; ``half_extent`` defaults to ``L_range[1]``."""
    half = float(L_range[1]) if half_extent is None else float(half_extent)
    profile = extract_profile(resp, axis, num_cuts, half)
    return modelock_score(profile, L_range, n_range, L_step)


def planted_profile(L: float, n: int, half_extent: int, amplitude: float = 1.0) -> np.ndarray:
    """Template ``(L, n)`` centred in a zero profile on ``[-half_extent, half_extent]``."""
    x = np.arange(-half_extent, half_extent + 1, dtype=float)
    inside = np.abs(x) <= L / 2.0
    out = np.zeros_like(x)
    out[inside] = amplitude * _template(L, n, x[inside])
    return out


def null_calibration(L_range=(10.0, 80.0), n_range=(1, 16), half_extent: int | None = None, trials: int = 200,
                     seed: int = 0, L_step: float = 1.0) -> np.ndarray:
    """Best-template NCC scores on unit Gaussian noise profiles."""
    m = int(round(L_range[1] if half_extent is None else half_extent))
    rng = np.random.default_rng(seed)
    scores = np.empty(trials)
    for k in range(trials):
        noise = SampledWaveform(rng.standard_normal(2 * m + 1), -m, 1.0)
        scores[k] = modelock_score(noise, L_range, n_range, L_step).ncc_score
    return scores
