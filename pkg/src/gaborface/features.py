"""Feature extraction: Gabor jets at the fiducial points and geometric
distance vectors between them.

A Gabor channel is an oriented complex filter sampled as a quadrature
pair (cosine and sine phase).  The bank covers a set of orientations
(multiples of pi/8) crossed with five wavelengths {4, 4*sqrt(2), 8,
8*sqrt(2), 16}; the envelope width tracks the wavelength (sigma = lambda)
and the aspect ratio is 1.  A jet stacks, for one image point, the
magnitude of every channel's quadrature response; the feature vector for
a chip concatenates the jets of the ten fiducial points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, InvalidPointError
from .fiducial import ROLES, LandmarkSet

WAVELENGTHS = (4.0, 4.0 * math.sqrt(2.0), 8.0, 8.0 * math.sqrt(2.0), 16.0)

# Orientation subsets per bank size, as multiples of pi/8.  The single
# extra orientation at size 2 is the vertical one; growth alternates
# between spreading evenly and filling the diagonals.
ORIENTATION_STEPS = {
    1: (0,),
    2: (0, 4),
    3: (0, 2, 4),
    4: (0, 2, 4, 6),
    5: (0, 1, 2, 4, 6),
    8: (0, 1, 2, 3, 4, 5, 6, 7),
}

GEOMETRIC_NAMES = (
    "d_center_eye", "d_eye", "d_interior_eye", "d_nose",
    "d_eye_nose", "d_mouth", "d_nose_mouth",
)

FEATURE_KINDS = ("geom", "gabor", "fused")


@dataclass(frozen=True)
class GaborParams:
    """Parameters of one oriented filter."""

    theta: float
    wavelength: float
    phase: float = 0.0
    sigma: float | None = None
    gamma: float = 1.0

    def __post_init__(self):
        if not self.wavelength > 0:
            raise InvalidParameterError(f"wavelength must be positive, got {self.wavelength!r}")
        if self.sigma is not None and not self.sigma > 0:
            raise InvalidParameterError(f"sigma must be positive, got {self.sigma!r}")
        if not self.gamma > 0:
            raise InvalidParameterError(f"gamma must be positive, got {self.gamma!r}")

    @property
    def effective_sigma(self) -> float:
        return self.wavelength if self.sigma is None else self.sigma


def gabor_value(params: GaborParams, x, y):
    """Evaluate the filter at (x, y); accepts scalars or arrays.

    The carrier runs along the axis rotated by theta and the Gaussian
    envelope is isotropic at gamma = 1.  y follows the image convention
    (growing downward).
    """
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    ct, st = math.cos(params.theta), math.sin(params.theta)
    xr = xs * ct + ys * st
    yr = -xs * st + ys * ct
    sigma = params.effective_sigma
    envelope = np.exp(-(xr * xr + params.gamma ** 2 * yr * yr) / (2.0 * sigma * sigma))
    out = envelope * np.cos(2.0 * math.pi * xr / params.wavelength + params.phase)
    return float(out) if out.ndim == 0 else out


def kernel_half_extent(params: GaborParams) -> int:
    """Lattice half-width covering three envelope widths."""
    return int(math.ceil(3.0 * params.effective_sigma))


def gabor_kernel(params: GaborParams, half_extent: int | None = None) -> np.ndarray:
    """Sample the filter on the square lattice [-h, h]^2.

    The array is indexed [y + h, x + h], so kernel[h, h] is the origin.
    """
    h = kernel_half_extent(params) if half_extent is None else int(half_extent)
    if h < 1:
        raise InvalidParameterError(f"half extent must be >= 1, got {half_extent!r}")
    span = np.arange(-h, h + 1, dtype=np.float64)
    xs, ys = np.meshgrid(span, span)
    return gabor_value(params, xs, ys)


@dataclass(frozen=True)
class GaborChannel:
    """One (theta, lambda) slot with its sampled quadrature pair."""

    theta: float
    wavelength: float
    half_extent: int
    even: np.ndarray
    odd: np.ndarray


@dataclass(frozen=True)
class GaborBank:
    orientations: tuple[float, ...]
    wavelengths: tuple[float, ...]
    channels: tuple[GaborChannel, ...] = field(repr=False)

    @property
    def num_channels(self) -> int:
        return len(self.channels)

    @property
    def max_half_extent(self) -> int:
        return max(c.half_extent for c in self.channels)

    def channel_keys(self) -> list[tuple[float, float]]:
        return [(c.theta, c.wavelength) for c in self.channels]


def build_bank(num_orientations: int = 8, lambda_scale: float = 1.0,
               subsets: dict | None = None) -> GaborBank:
    """Build the quadrature filter bank for a supported orientation count.

    Channels are ordered orientation-major (all wavelengths of the first
    orientation, then the next).  `lambda_scale` shrinks or stretches all
    wavelengths together, for chips smaller than the filters were sized
    for.
    """
    table = ORIENTATION_STEPS if subsets is None else subsets
    if num_orientations not in table:
        raise InvalidParameterError(
            f"orientation count must be one of {sorted(table)}, got {num_orientations!r}")
    if not lambda_scale > 0:
        raise InvalidParameterError(f"lambda scale must be positive, got {lambda_scale!r}")
    orientations = tuple(step * math.pi / 8.0 for step in table[num_orientations])
    wavelengths = tuple(w * lambda_scale for w in WAVELENGTHS)
    channels = []
    for theta in orientations:
        for lam in wavelengths:
            even_p = GaborParams(theta=theta, wavelength=lam, phase=0.0)
            odd_p = GaborParams(theta=theta, wavelength=lam, phase=math.pi / 2.0)
            h = kernel_half_extent(even_p)
            channels.append(GaborChannel(
                theta=theta, wavelength=lam, half_extent=h,
                even=gabor_kernel(even_p, h), odd=gabor_kernel(odd_p, h)))
    return GaborBank(orientations, wavelengths, tuple(channels))


def subset_channel_indices(sub: GaborBank, full: GaborBank) -> list[int]:
    """Positions of `sub`'s channels inside `full` (same kernels), for
    slicing precomputed full-bank jets down to a smaller bank."""
    index = {key: i for i, key in enumerate(full.channel_keys())}
    try:
        return [index[key] for key in sub.channel_keys()]
    except KeyError as exc:
        raise InvalidInputError(f"channel {exc} missing from the full bank") from exc


def _pad_replicate(gray: np.ndarray, pad: int) -> np.ndarray:
    return np.pad(gray, pad, mode="edge")


def _point_to_pixel(point, shape) -> tuple[int, int]:
    if hasattr(point, "x"):
        x, y = point.x, point.y
    else:
        x, y = point
    px, py = int(round(float(x))), int(round(float(y)))
    h, w = shape
    if not (0 <= px < w and 0 <= py < h):
        raise InvalidPointError(f"point ({px}, {py}) outside the {w}x{h} image")
    return px, py


def _jet_from_padded(padded: np.ndarray, pad: int, px: int, py: int,
                     bank: GaborBank, magnitude: bool) -> np.ndarray:
    values = []
    for ch in bank.channels:
        h = ch.half_extent
        window = padded[py + pad - h:py + pad + h + 1, px + pad - h:px + pad + h + 1]
        r_even = float(np.sum(window * ch.even))
        r_odd = float(np.sum(window * ch.odd))
        if magnitude:
            values.append(math.hypot(r_even, r_odd))
        else:
            values.extend((r_even, r_odd))
    return np.array(values)


def jet_at(gray, point, bank: GaborBank, magnitude: bool = True) -> np.ndarray:
    """Quadrature responses of every channel centered at one point.

    The point is rounded to the nearest pixel and the window is read with
    replicated borders.  With magnitude=True (the default) the result has
    one value per channel, sqrt(even^2 + odd^2); magnitude=False keeps the
    raw (even, odd) pairs interleaved.
    """
    arr = np.asarray(gray, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a single-channel image, got shape {arr.shape}")
    px, py = _point_to_pixel(point, arr.shape)
    pad = bank.max_half_extent
    return _jet_from_padded(_pad_replicate(arr, pad), pad, px, py, bank, magnitude)


def jets(gray, lms: LandmarkSet, bank: GaborBank, magnitude: bool = True) -> np.ndarray:
    """Concatenated jets of all ten fiducial points in role order."""
    arr = np.asarray(gray, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a single-channel image, got shape {arr.shape}")
    pad = bank.max_half_extent
    padded = _pad_replicate(arr, pad)
    parts = []
    for role in ROLES:
        px, py = _point_to_pixel(lms[role], arr.shape)
        parts.append(_jet_from_padded(padded, pad, px, py, bank, magnitude))
    return np.concatenate(parts)


def kernel_image(channel: GaborChannel, odd: bool = False) -> np.ndarray:
    """Render one kernel to [0, 255] for visual inspection (midgray = 0)."""
    k = channel.odd if odd else channel.even
    peak = float(np.abs(k).max())
    if peak == 0.0:
        return np.full_like(k, 127.5)
    return (k / peak) * 127.5 + 127.5


@dataclass(frozen=True)
class GeometricVector:
    """Seven distances between fiducial points, in chip pixels.

    Order is fixed: center-eye, eye, interior-eye, nose, eye-nose, mouth,
    nose-mouth.
    """

    d_center_eye: float
    d_eye: float
    d_interior_eye: float
    d_nose: float
    d_eye_nose: float
    d_mouth: float
    d_nose_mouth: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in GEOMETRIC_NAMES])


def _dist(a, b) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def _mid_y(a, b) -> float:
    return 0.5 * (a.y + b.y)


def geometric_vector(lms: LandmarkSet) -> GeometricVector:
    """Distance features from the landmark set.

    Eye width averages the two eyes' corner spans; the two vertical
    distances run between the midpoint rows of the eye centroids, the
    nose corners, and the mouth corners.
    """
    d_center_eye = _dist(lms["P5"], lms["P6"])
    d_eye = 0.5 * (_dist(lms["P1"], lms["P2"]) + _dist(lms["P3"], lms["P4"]))
    d_interior_eye = _dist(lms["P2"], lms["P3"])
    d_nose = _dist(lms["P9"], lms["P10"])
    d_eye_nose = abs(_mid_y(lms["P9"], lms["P10"]) - _mid_y(lms["P5"], lms["P6"]))
    d_mouth = _dist(lms["P7"], lms["P8"])
    d_nose_mouth = abs(_mid_y(lms["P7"], lms["P8"]) - _mid_y(lms["P9"], lms["P10"]))
    return GeometricVector(d_center_eye, d_eye, d_interior_eye, d_nose,
                           d_eye_nose, d_mouth, d_nose_mouth)


@dataclass(frozen=True)
class FeatureVector:
    """A labeled feature payload: kind is one of geom / gabor / fused."""

    kind: str
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise InvalidParameterError(f"kind must be one of {FEATURE_KINDS}, got {self.kind!r}")


def fuse(geometric: GeometricVector, jet_vector: np.ndarray) -> FeatureVector:
    """Concatenate the geometric block before the jet block."""
    jv = np.asarray(jet_vector, dtype=np.float64).ravel()
    return FeatureVector("fused", np.concatenate([geometric.as_array(), jv]))
