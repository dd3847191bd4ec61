"""Raster primitives for the face pipeline.

Conventions used throughout the package:

* images are numpy arrays in row-major order, ``img[y, x]``, origin at the
  top-left with x growing right and y growing down;
* color images have shape ``(h, w, 3)``, single channels ``(h, w)``, and
  binary masks are boolean arrays of shape ``(h, w)``;
* pixel values stay float64 end to end and are quantized to 8 bits only at
  file I/O;
* every spatial filter handles the border by replicating edge pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError, InvalidParameterError

EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


def _as_gray(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a single-channel image, got shape {arr.shape}")
    return arr


def _as_mask(mask) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2-d mask, got shape {arr.shape}")
    return arr.astype(bool)


def rgb_to_ycbcr(img) -> np.ndarray:
    """Convert an RGB image to full-range YCbCr, clamped to [0, 255].

    The transform is the standard-definition one with chroma centered on
    128.  It is written in channel-difference form so that achromatic
    pixels (R = G = B) produce Cb = Cr = 128 exactly instead of picking up
    float round-off.
    """
    rgb = np.asarray(img, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise InvalidInputError(f"expected an RGB image (h, w, 3), got shape {rgb.shape}")
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = r + 0.587 * (g - r) + 0.114 * (b - r)
    cb = 128.0 + 0.168736 * (b - r) + 0.331264 * (b - g)
    cr = 128.0 + 0.418688 * (r - g) + 0.081312 * (r - b)
    return np.clip(np.stack([y, cb, cr], axis=-1), 0.0, 255.0)


def ycbcr_to_rgb(img) -> np.ndarray:
    """Inverse of :func:`rgb_to_ycbcr` (lossy once values were clamped)."""
    ycc = np.asarray(img, dtype=np.float64)
    if ycc.ndim != 3 or ycc.shape[2] != 3:
        raise InvalidInputError(f"expected a YCbCr image (h, w, 3), got shape {ycc.shape}")
    y = ycc[..., 0]
    cb = ycc[..., 1] - 128.0
    cr = ycc[..., 2] - 128.0
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return np.clip(np.stack([r, g, b], axis=-1), 0.0, 255.0)


def mean_filter(img, size: int = 3) -> np.ndarray:
    """Box average with an odd square window and replicated borders.

    The window sum is divided once at the end, so integral inputs stay
    exact (an impulse of 9 under a 3x3 window averages to exactly 1.0).
    """
    gray = _as_gray(img)
    if not isinstance(size, (int, np.integer)) or size < 1 or size % 2 == 0:
        raise InvalidParameterError(f"window size must be an odd integer >= 1, got {size!r}")
    if size == 1:
        return gray.copy()
    total = ndimage.convolve(gray, np.ones((size, size)), mode="nearest")
    return total / float(size * size)


_SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
_SOBEL_Y = _SOBEL_X.T


def _sobel_pair(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gx = ndimage.correlate(gray, _SOBEL_X, mode="nearest")
    gy = ndimage.correlate(gray, _SOBEL_Y, mode="nearest")
    return gx, gy


def sobel_magnitude(img) -> np.ndarray:
    """Gradient magnitude from the standard 3x3 horizontal/vertical pair."""
    gray = _as_gray(img)
    if gray.shape[0] < 3 or gray.shape[1] < 3:
        raise InvalidInputError(f"image too small for a 3x3 gradient, got shape {gray.shape}")
    gx, gy = _sobel_pair(gray)
    return np.hypot(gx, gy)


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized 1-d Gaussian sampled on integer offsets, cut at 3 sigma."""
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma!r}")
    radius = int(math.ceil(3.0 * sigma))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_smooth(img, sigma: float) -> np.ndarray:
    gray = _as_gray(img)
    k = gaussian_kernel1d(sigma)
    out = ndimage.correlate1d(gray, k, axis=0, mode="nearest")
    return ndimage.correlate1d(out, k, axis=1, mode="nearest")


# Non-maximum suppression compares each pixel against its two neighbors
# along the quantized gradient direction.  Offsets are (dx, dy) for sector
# k covering angles near k * 45 degrees, with y growing downward.
_NMS_OFFSETS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))


def _non_maximum_suppression(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    h, w = mag.shape
    sector = np.round(np.arctan2(gy, gx) / (math.pi / 4.0)).astype(int) % 8
    padded = np.zeros((h + 2, w + 2))
    padded[1:-1, 1:-1] = mag
    yy, xx = np.indices((h, w))
    uphill = np.zeros_like(mag)
    downhill = np.zeros_like(mag)
    for k, (dx, dy) in enumerate(_NMS_OFFSETS):
        sel = sector == k
        if not sel.any():
            continue
        uphill[sel] = padded[yy[sel] + 1 + dy, xx[sel] + 1 + dx]
        downhill[sel] = padded[yy[sel] + 1 - dy, xx[sel] + 1 - dx]
    # Strict against the uphill neighbor, lax against the downhill one: on
    # a tied two-pixel ridge (synthetic step edges) the survivor is the
    # pixel on the brighter side, which keeps silhouette outlines on the
    # silhouette itself.  Ties are taken up to a relative tolerance because
    # separable smoothing accumulates the two axes in different orders and
    # can split an exact tie by one ulp either way.
    tol = 1e-9
    keep = (mag > 0) & (mag * (1.0 - tol) > uphill) & (mag >= downhill * (1.0 - tol))
    return np.where(keep, mag, 0.0)


@dataclass(frozen=True)
class CannyStages:
    """Intermediate products of :func:`canny`, exposed for validation."""

    magnitude: np.ndarray
    suppressed: np.ndarray
    strong: np.ndarray
    weak: np.ndarray
    mask: np.ndarray
    low: float
    high: float


def canny_stages(img, sigma: float = 1.4, low: float | None = None,
                 high: float | None = None) -> CannyStages:
    """Run the edge detector and keep every stage.

    Stages: Gaussian smoothing (cut at 3 sigma), Sobel gradients,
    non-maximum suppression along the quantized gradient direction, and
    double-threshold hysteresis where weak pixels survive only when they
    reach a strong pixel through an 8-connected chain.

    When thresholds are omitted, ``high`` is the 90th percentile of the
    gradient magnitude (falling back to half the maximum when that
    percentile is zero, as happens on flat silhouettes) and ``low`` is
    0.4 * high.
    """
    gray = _as_gray(img)
    if not sigma > 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma!r}")
    if low is not None and high is not None and not (0 < low < high):
        raise InvalidParameterError(f"need 0 < low < high, got low={low!r} high={high!r}")

    smoothed = gaussian_smooth(gray, sigma)
    gx, gy = _sobel_pair(smoothed)
    mag = np.hypot(gx, gy)

    peak = float(mag.max()) if mag.size else 0.0
    if peak == 0.0:
        empty = np.zeros(gray.shape, dtype=bool)
        return CannyStages(mag, mag.copy(), empty, empty.copy(), empty.copy(), 0.0, 0.0)

    if high is None:
        high = float(np.percentile(mag, 90.0))
        if high <= 0.0:
            high = 0.5 * peak
    if low is None:
        low = 0.4 * high
    if not (0 < low < high):
        raise InvalidParameterError(f"need 0 < low < high, got low={low!r} high={high!r}")

    suppressed = _non_maximum_suppression(mag, gx, gy)
    strong = suppressed >= high
    weak = (suppressed >= low) & ~strong

    candidates = strong | weak
    labels, count = ndimage.label(candidates, structure=EIGHT_CONNECTED)
    if count == 0:
        mask = np.zeros(gray.shape, dtype=bool)
    else:
        anchored = np.zeros(count + 1, dtype=bool)
        anchored[labels[strong]] = True
        anchored[0] = False
        mask = anchored[labels]
    return CannyStages(mag, suppressed, strong, weak, mask, float(low), float(high))


def canny(img, sigma: float = 1.4, low: float | None = None,
          high: float | None = None) -> np.ndarray:
    """Binary edge mask; see :func:`canny_stages` for the stage breakdown."""
    return canny_stages(img, sigma=sigma, low=low, high=high).mask


def threshold(img, t: float) -> np.ndarray:
    """Boolean mask of pixels >= t."""
    return _as_gray(img) >= t


def disk_offsets(radius: float) -> np.ndarray:
    """Integer (dx, dy) offsets with dx^2 + dy^2 <= radius^2."""
    if radius < 0:
        raise InvalidParameterError(f"radius must be >= 0, got {radius!r}")
    r = int(math.floor(radius))
    span = np.arange(-r, r + 1)
    dx, dy = np.meshgrid(span, span)
    keep = dx * dx + dy * dy <= radius * radius
    return np.stack([dx[keep], dy[keep]], axis=1)


def dilate_disk(mask, radius: float) -> np.ndarray:
    """Binary dilation by the discrete disk of the given radius."""
    m = _as_mask(mask)
    if radius < 0:
        raise InvalidParameterError(f"radius must be >= 0, got {radius!r}")
    r = int(math.floor(radius))
    if r == 0:
        return m.copy()
    span = np.arange(-r, r + 1)
    dx, dy = np.meshgrid(span, span)
    structure = dx * dx + dy * dy <= radius * radius
    return ndimage.binary_dilation(m, structure=structure)


@dataclass(frozen=True)
class Component:
    """One 8-connected region of a binary mask.

    `bbox` is (left, top, right, bottom) with inclusive bounds, `centroid`
    is the (x, y) pixel-coordinate mean, and `pixels` is an (n, 2) array of
    (x, y) positions in scan order.
    """

    area: int
    centroid: tuple[float, float]
    bbox: tuple[int, int, int, int]
    pixels: np.ndarray

    def render(self, shape: tuple[int, int]) -> np.ndarray:
        """Paint the component onto a fresh boolean canvas of `shape`."""
        canvas = np.zeros(shape, dtype=bool)
        canvas[self.pixels[:, 1], self.pixels[:, 0]] = True
        return canvas


def connected_components(mask) -> list[Component]:
    """Label 8-connected regions; empty mask gives an empty list."""
    m = _as_mask(mask)
    labels, count = ndimage.label(m, structure=EIGHT_CONNECTED)
    if count == 0:
        return []
    ys, xs = np.nonzero(m)
    ids = labels[ys, xs]
    order = np.argsort(ids, kind="stable")
    ys, xs, ids = ys[order], xs[order], ids[order]
    bounds = np.searchsorted(ids, np.arange(1, count + 2))
    out = []
    for i in range(count):
        sl = slice(bounds[i], bounds[i + 1])
        cx, cy = xs[sl], ys[sl]
        out.append(Component(
            area=int(cx.size),
            centroid=(float(cx.mean()), float(cy.mean())),
            bbox=(int(cx.min()), int(cy.min()), int(cx.max()), int(cy.max())),
            pixels=np.stack([cx, cy], axis=1),
        ))
    return out


def _axis_positions(n_src: int, n_dst: int) -> np.ndarray:
    # Corner-aligned sampling: first and last output samples sit exactly on
    # the first and last input samples.
    if n_dst == 1:
        return np.array([(n_src - 1) / 2.0])
    return np.arange(n_dst, dtype=np.float64) * ((n_src - 1) / (n_dst - 1))


def resize_bilinear(img, width: int, height: int) -> np.ndarray:
    """Corner-aligned bilinear resize for single-channel or RGB images."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise InvalidInputError(f"expected a 2-d or 3-d image, got shape {arr.shape}")
    if not (isinstance(width, (int, np.integer)) and isinstance(height, (int, np.integer))) \
            or width < 1 or height < 1:
        raise InvalidParameterError(f"target size must be integers >= 1, got {width!r}x{height!r}")
    h, w = arr.shape[:2]
    if h < 1 or w < 1:
        raise InvalidInputError("cannot resize an empty image")

    xs = _axis_positions(w, width)
    ys = _axis_positions(h, height)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    if arr.ndim == 3:
        fx = fx[:, None]
    wy0, wy1 = (1.0 - fy), fy
    if arr.ndim == 3:
        wy0, wy1 = wy0[:, None, None], wy1[:, None, None]
    else:
        wy0, wy1 = wy0[:, None], wy1[:, None]

    rows = arr[y0] * wy0 + arr[y1] * wy1
    return rows[:, x0] * (1.0 - fx) + rows[:, x1] * fx


def sample_bilinear(img, xs, ys) -> np.ndarray:
    """Bilinear lookup at arbitrary positions with edge clamping.

    `xs` and `ys` are broadcast-compatible arrays of sample coordinates;
    the result has their broadcast shape (plus a channel axis for RGB).
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise InvalidInputError(f"expected a 2-d or 3-d image, got shape {arr.shape}")
    h, w = arr.shape[:2]
    xq = np.clip(np.asarray(xs, dtype=np.float64), 0.0, w - 1.0)
    yq = np.clip(np.asarray(ys, dtype=np.float64), 0.0, h - 1.0)
    x0 = np.floor(xq).astype(int)
    y0 = np.floor(yq).astype(int)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xq - x0
    fy = yq - y0
    if arr.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = arr[y0, x0] * (1.0 - fx) + arr[y0, x1] * fx
    bottom = arr[y1, x0] * (1.0 - fx) + arr[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy
