"""Choice of the lumen and media regions from the nested series.

Each region is scored by the product of its boundary length, mean
intensity, and entropy; the stability of that score across consecutive
regions (its value over the change between its two neighbours) peaks where
the evolution saturates, which is where the anatomy sits.  The earlier of
the prominent peaks marks the lumen, the last peak the media; with few
peaks the media falls back to the outermost region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .erel import Region, RegionSeries
from .errors import DegenerateSelectionError

# Plateaus in the score vector make the stability ratio blow up; they are
# maximal stability by definition, encoded as a large finite sentinel so
# traces stay JSON-serialisable.
STABILITY_SENTINEL = 1e18

DEFAULT_Z_MIN = -3.0
DEFAULT_Z_MAX = 3.0
DEFAULT_MIN_PEAKS = 3


@dataclass
class StabilityProfile:
    """Decision record of the selection strategy.

    peaks and the chosen indices refer to positions in the (outlier-pruned)
    region series; omega[j] is the stability of series index j + 1.
    """

    v: np.ndarray
    omega: np.ndarray
    peaks: list[tuple[int, float]]
    lumen_index: int = -1
    media_index: int = -1
    degenerate: bool = False


def remove_outliers(
    series: RegionSeries,
    z_min: float = DEFAULT_Z_MIN,
    z_max: float = DEFAULT_Z_MAX,
) -> RegionSeries:
    """Drop regions whose area is a modified Z-score outlier.

    M_i = 0.6745 (A_i - median) / MAD; regions with M_i < z_min or
    M_i > z_max are removed.  A zero MAD keeps everything.  Outlier removal
    must never remove more than it keeps: a majority of "outliers" means
    the area distribution itself is not MAD-testable (e.g. two separated
    size clusters), which is the degenerate case the caller handles by
    keeping the unfiltered series.
    """
    if len(series) == 0:
        raise ValueError("cannot filter an empty series")
    areas = series.areas.astype(np.float64)
    med = float(np.median(areas))
    mad = float(np.median(np.abs(areas - med)))
    if mad == 0.0:
        return series
    m = 0.6745 * (areas - med) / mad
    keep = (m >= z_min) & (m <= z_max)
    dropped = len(series) - int(keep.sum())
    if dropped * 4 > len(series):
        raise DegenerateSelectionError(
            "selection degenerate: outlier screen would drop more than a "
            "quarter of the series"
        )
    return RegionSeries(regions=[r for r, k in zip(series.regions, keep) if k])


def feature_vector(series: RegionSeries) -> np.ndarray:
    """Per-region texture score: boundary length x mean intensity x entropy."""
    return np.array(
        [r.boundary_length * r.mean_intensity * r.entropy for r in series],
        dtype=np.float64,
    )


def stability_scores(v: np.ndarray) -> np.ndarray:
    """Stability of each interior score: v_i / (v_{i+1} - v_{i-1}).

    Defined for the interior indices only; a flat neighbourhood maps to the
    sentinel.  Vectors shorter than 3 yield an empty result.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.size < 3:
        return np.empty(0, dtype=np.float64)
    denom = v[2:] - v[:-2]
    omega = np.full(v.size - 2, STABILITY_SENTINEL)
    nz = denom != 0
    omega[nz] = v[1:-1][nz] / denom[nz]
    return omega


def find_peaks(values: np.ndarray) -> list[tuple[int, float]]:
    """Interior local maxima with topographic prominence, sorted by index.

    A peak is strictly greater than its neighbours (plateaus count once, at
    their leftmost index).  Prominence is the peak height above the higher
    of the two key saddles: on each side, the lowest value before a
    strictly higher value or the vector end.
    """
    vals = np.asarray(values, dtype=np.float64)
    n = vals.size
    peaks: list[tuple[int, float]] = []
    i = 1
    while i < n - 1:
        if vals[i] > vals[i - 1]:
            j = i
            while j + 1 < n and vals[j + 1] == vals[i]:
                j += 1
            if j < n - 1 and vals[j + 1] < vals[i]:
                peaks.append((i, _prominence(vals, i)))
            i = j + 1
        else:
            i += 1
    return peaks


def _prominence(vals: np.ndarray, idx: int) -> float:
    h = vals[idx]
    left_min = h
    for k in range(idx - 1, -1, -1):
        if vals[k] > h:
            break
        left_min = min(left_min, vals[k])
    right_min = h
    for k in range(idx + 1, vals.size):
        if vals[k] > h:
            break
        right_min = min(right_min, vals[k])
    return float(h - max(left_min, right_min))


def build_profile(series: RegionSeries) -> StabilityProfile:
    """Score the series and locate stability peaks (series coordinates)."""
    v = feature_vector(series)
    omega = stability_scores(v)
    peaks = [(idx + 1, prom) for idx, prom in find_peaks(omega)]
    return StabilityProfile(v=v, omega=omega, peaks=peaks)


def assign_lumen_media(
    series: RegionSeries,
    profile: StabilityProfile,
    min_peaks: int = DEFAULT_MIN_PEAKS,
) -> tuple[Region, Region]:
    """Label one region as lumen and one as media.

    The lumen is the higher-prominence peak among the first two (ties go to
    the earlier one).  With at least min_peaks peaks the media is the last
    peak; fewer peaks mean artifacts disturbed the evolution and the last
    region stands in.  Without any peak the lumen falls back to the most
    stable region.
    """
    n = len(series)
    if n == 0:
        raise ValueError("cannot select from an empty series")
    if n == 1:
        profile.lumen_index = profile.media_index = 0
        profile.degenerate = True
        return series[0], series[0]

    peaks = profile.peaks
    if not peaks:
        if profile.omega.size:
            lumen_idx = int(np.argmax(profile.omega)) + 1
        else:
            lumen_idx = 0
        media_idx = n - 1
    else:
        first_two = peaks[:2]
        best = first_two[0]
        if len(first_two) == 2 and first_two[1][1] > best[1]:
            best = first_two[1]
        lumen_idx = best[0]
        media_idx = peaks[-1][0] if len(peaks) >= min_peaks else n - 1

    if lumen_idx == media_idx:
        media_idx = n - 1
    profile.lumen_index = lumen_idx
    profile.media_index = media_idx
    return series[lumen_idx], series[media_idx]


def select_regions(
    series: RegionSeries,
    z_min: float = DEFAULT_Z_MIN,
    z_max: float = DEFAULT_Z_MAX,
    min_peaks: int = DEFAULT_MIN_PEAKS,
) -> tuple[Region, Region, StabilityProfile]:
    """Full selection: outlier pruning, scoring, peak analysis, labelling.

    Degenerate outlier removal (everything dropped) falls back to the
    unfiltered series.
    """
    try:
        pruned = remove_outliers(series, z_min=z_min, z_max=z_max)
    except DegenerateSelectionError:
        pruned = series
    profile = build_profile(pruned)
    lumen, media = assign_lumen_media(pruned, profile, min_peaks=min_peaks)
    return lumen, media, profile
