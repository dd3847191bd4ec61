"""Face localization: skin blob -> external edge -> box -> 50x50 chip.

The detector smooths each RGB channel with a small box filter, segments
skin in the CbCr plane, keeps the largest 8-connected skin component,
traces the external edge of its filled silhouette, and spans a box over
the edge pixels whose height is 1.3 times its width.  The box is cropped
from the original image and resampled to a 50x50 chip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import imaging
from .errors import InvalidBoxError, InvalidInputError, NoFaceFoundError
from .imaging import Component
from .skin import FisConfig, skin_mask

CHIP_SIZE = 50
HEIGHT_TO_WIDTH = 1.3


@dataclass(frozen=True)
class FaceBox:
    """Axis-aligned face rectangle with inclusive pixel bounds.

    `clipped` records that the 1.3-aspect bottom ran past the image and
    was pulled back to the last row.
    """

    left: int
    top: int
    right: int
    bottom: int
    clipped: bool = False

    def __post_init__(self):
        if not (self.left < self.right and self.top < self.bottom):
            raise InvalidBoxError(f"degenerate face box {self.as_tuple()}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.left, self.top, self.right, self.bottom)

    @property
    def width(self) -> int:
        return self.right - self.left

    @property
    def height(self) -> int:
        return self.bottom - self.top


@dataclass(frozen=True)
class DetectParams:
    """Knobs for the detection pipeline."""

    mean_filter_size: int = 3
    canny_sigma: float = 1.4
    canny_low: float | None = None
    canny_high: float | None = None
    chip_size: int = CHIP_SIZE


def largest_skin_component(mask) -> Component:
    """Largest 8-connected region; ties go to the topmost-then-leftmost
    bounding-box corner.  Raises when the mask is empty."""
    components = imaging.connected_components(mask)
    if not components:
        raise NoFaceFoundError("no skin pixels in the image")
    return min(components, key=lambda c: (-c.area, c.bbox[1], c.bbox[0]))


def external_edge(component: Component, shape: tuple[int, int],
                  params: DetectParams | None = None) -> np.ndarray:
    """Edge mask of the component's filled silhouette.

    The silhouette is rendered as a {0, 255} image with interior holes
    filled (eyes and other non-skin patches inside the face), so the edge
    detector sees only the outer outline.
    """
    p = params or DetectParams()
    silhouette = ndimage.binary_fill_holes(component.render(shape))
    gray = np.where(silhouette, 255.0, 0.0)
    return imaging.canny(gray, sigma=p.canny_sigma, low=p.canny_low, high=p.canny_high)


def face_box(edge_mask) -> FaceBox:
    """Span the edge pixels and extend the box to 1.3 times its width."""
    edge = np.asarray(edge_mask)
    if edge.ndim != 2:
        raise InvalidInputError(f"expected a 2-d edge mask, got shape {edge.shape}")
    ys, xs = np.nonzero(edge)
    if xs.size < 3:
        raise NoFaceFoundError(f"edge has only {xs.size} pixels")
    left, right = int(xs.min()), int(xs.max())
    top = int(ys.min())
    width = right - left
    if width < 1:
        raise NoFaceFoundError("edge spans a single column")
    bottom = top + round(HEIGHT_TO_WIDTH * width)
    clipped = False
    limit = edge.shape[0] - 1
    if bottom > limit:
        bottom = limit
        clipped = True
    if bottom <= top:
        raise NoFaceFoundError("face box collapsed after clipping")
    return FaceBox(left, top, right, bottom, clipped)


def crop_normalize(img, box: FaceBox, chip_size: int = CHIP_SIZE) -> np.ndarray:
    """Crop the box (intersected with the image) and resize to a square chip."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise InvalidInputError(f"expected an image, got shape {arr.shape}")
    h, w = arr.shape[:2]
    x0, x1 = max(box.left, 0), min(box.right, w - 1)
    y0, y1 = max(box.top, 0), min(box.bottom, h - 1)
    if x0 > x1 or y0 > y1:
        raise InvalidBoxError(f"box {box.as_tuple()} lies outside the {w}x{h} image")
    crop = arr[y0:y1 + 1, x0:x1 + 1]
    return imaging.resize_bilinear(crop, chip_size, chip_size)


def detect_face(img_rgb, fis: FisConfig | None = None,
                params: DetectParams | None = None) -> tuple[FaceBox, np.ndarray]:
    """Full detection pipeline; returns the face box and the RGB chip.

    The box filter runs on each RGB channel before the color-space
    conversion so the skin segmentation sees denoised chroma, but the chip
    is cropped from the original (unsmoothed) image.
    """
    p = params or DetectParams()
    cfg = fis or FisConfig()
    rgb = np.asarray(img_rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise InvalidInputError(f"expected an RGB image (h, w, 3), got shape {rgb.shape}")
    smoothed = np.stack(
        [imaging.mean_filter(rgb[..., c], p.mean_filter_size) for c in range(3)], axis=-1)
    ycc = imaging.rgb_to_ycbcr(smoothed)
    mask = skin_mask(ycc, cfg)
    component = largest_skin_component(mask)
    edge = external_edge(component, mask.shape, p)
    box = face_box(edge)
    chip = crop_normalize(rgb, box, p.chip_size)
    return box, chip
