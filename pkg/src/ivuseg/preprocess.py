"""Ring-down and calibration-square removal via the sequence minimum image.

Catheter artifacts sit at fixed pixels with near-constant bright intensity
in every frame of a pullback, so the pixel-wise minimum over the sequence
leaves them bright while real tissue (which varies) goes dark.  Thresholding
the minimum image yields the artifact mask; masked pixels are then filled
from the surrounding speckle instead of being zeroed, which would punch a
false dark region straight into the extractor's dark-core topology.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMaskError, DimensionMismatchError
from .imaging import Frame, Sequence

DEFAULT_RINGDOWN_THRESHOLD = 40


@dataclass
class ArtifactModel:
    """Minimum image, derived artifact mask, and the threshold that made it."""

    min_image: Frame
    mask: np.ndarray
    threshold: int

    def __post_init__(self) -> None:
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != self.min_image.pixels.shape:
            raise DimensionMismatchError("artifact mask dimensions must match the minimum image")
        if not (self.min_image.pixels[mask] >= self.threshold).all():
            raise ValueError("every masked pixel must have minimum-image intensity >= threshold")
        self.mask = mask


def minimum_image(sequence: Sequence) -> Frame:
    """Pixel-wise minimum across all frames of the sequence."""
    stack = [f.pixels for f in sequence]
    return Frame(pixels=np.minimum.reduce(stack), mm_per_px=sequence.frames[0].mm_per_px)


def detect_artifact_mask(min_image: Frame, threshold: int = DEFAULT_RINGDOWN_THRESHOLD) -> np.ndarray:
    """Mask true exactly where the minimum image stays at or above threshold."""
    return min_image.pixels >= threshold


def build_artifact_model(sequence: Sequence, threshold: int = DEFAULT_RINGDOWN_THRESHOLD) -> ArtifactModel:
    mimg = minimum_image(sequence)
    return ArtifactModel(min_image=mimg, mask=detect_artifact_mask(mimg, threshold), threshold=threshold)


def _lower_median(values: np.ndarray) -> int:
    ordered = np.sort(values)
    return int(ordered[(ordered.size - 1) // 2])


def remove_artifacts(frame: Frame, model: ArtifactModel) -> Frame:
    """Replace masked pixels with the median of nearby unmasked pixels.

    Each masked pixel takes the median of unmasked pixels inside a 7x7
    window; the window grows by 2 px per side (up to 15x15) until at least
    5 unmasked samples exist, else the frame's global unmasked median is
    used.  Unmasked pixels are never modified, and every replacement is
    computed from the original frame so the result is order-independent.
    """
    mask = model.mask
    if mask.shape != frame.pixels.shape:
        raise DimensionMismatchError("artifact mask dimensions must match the frame")
    if mask.all():
        raise DegenerateMaskError("degenerate mask: artifact mask covers the entire frame")
    if not mask.any():
        return Frame(pixels=frame.pixels.copy(), mm_per_px=frame.mm_per_px)

    src = frame.pixels
    h, w = src.shape
    global_fill = _lower_median(src[~mask])
    out = src.copy()
    ys, xs = np.nonzero(mask)
    for y, x in zip(ys.tolist(), xs.tolist()):
        fill = global_fill
        for radius in (3, 5, 7):
            y0, y1 = max(0, y - radius), min(h, y + radius + 1)
            x0, x1 = max(0, x - radius), min(w, x + radius + 1)
            window = src[y0:y1, x0:x1]
            clean = window[~mask[y0:y1, x0:x1]]
            if clean.size >= 5:
                fill = _lower_median(clean)
                break
        out[y, x] = fill
    return Frame(pixels=out, mm_per_px=frame.mm_per_px)
