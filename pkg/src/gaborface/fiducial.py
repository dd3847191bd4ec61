"""Ten fiducial points on the 50x50 face chip.

All locators work on band-limited search windows of the chip and share a
common recipe: build a response map, threshold it at a fraction of the
band maximum, keep the largest 8-connected component, and read points off
that component.

Roles and where they come from:

* P1/P2 -- outer/inner corner of the left eye stain, P3/P4 -- inner/outer
  corner of the right one.  The eye response is max(0, Cb - Cr) inside the
  eye band (rows 10..25); the band splits at x = 25 into the two halves,
  each half contributes its biggest stain, and the stain is thickened by a
  1-pixel disk before the horizontal extremes are read.
* P5/P6 -- centroids of the two (dilated) eye stains.
* P7/P8 -- mouth corners.  The mouth band (rows 32..48) is thresholded on
  Cr, the biggest component's silhouette is run through the gradient
  operator, and pixels above half the peak response form the contour whose
  horizontal extremes are the corners.
* P9/P10 -- nose-base corners.  The nose band sits between the eye
  centroids and the mouth (two rows of margin on both sides), limited to
  the columns between P5 and P6; its luminance gradient is thresholded at
  half the band maximum and the biggest component spans the nostril line.

Extreme points break ties toward the smallest row so that mirroring the
chip mirrors the landmark set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import imaging
from .errors import (
    EyeNotFoundError,
    InvalidInputError,
    InvalidParameterError,
    LandmarkInconsistencyError,
    MouthNotFoundError,
    NoseNotFoundError,
)
from .face_locate import CHIP_SIZE

ROLES = ("P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8", "P9", "P10")


@dataclass(frozen=True)
class Landmark:
    role: str
    x: float
    y: float

    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


class LandmarkSet:
    """The ten fiducial points, indexable by role name."""

    def __init__(self, points):
        pts = tuple(points)
        roles = tuple(p.role for p in pts)
        if roles != ROLES:
            raise InvalidInputError(f"expected roles {ROLES}, got {roles}")
        self.points = pts
        self._by_role = {p.role: p for p in pts}

    def __getitem__(self, role: str) -> Landmark:
        return self._by_role[role]

    def __iter__(self):
        return iter(self.points)

    def positions(self) -> np.ndarray:
        """(10, 2) array of (x, y) rows in role order."""
        return np.array([[p.x, p.y] for p in self.points])

    def validate(self) -> None:
        """Check the left-right and eye/nose/mouth ordering contracts."""
        for a, b in (("P1", "P2"), ("P3", "P4"), ("P5", "P6"),
                     ("P7", "P8"), ("P9", "P10")):
            if self[a].x > self[b].x:
                raise LandmarkInconsistencyError((a, b), f"{a}.x > {b}.x")
        eye_y = 0.5 * (self["P5"].y + self["P6"].y)
        mouth_y = 0.5 * (self["P7"].y + self["P8"].y)
        for role in ("P9", "P10"):
            if not eye_y < self[role].y < mouth_y:
                raise LandmarkInconsistencyError(
                    ("P5", "P6", role, "P7", "P8"),
                    f"{role}.y={self[role].y} not between eye level {eye_y} "
                    f"and mouth level {mouth_y}")


@dataclass(frozen=True)
class FiducialParams:
    """Band rows are inclusive; thresholds are fractions of the band max."""

    eye_band: tuple[int, int] = (10, 25)
    mouth_band: tuple[int, int] = (32, 48)
    tau_eye: float = 0.8
    tau_mouth: float = 0.85
    tau_nose: float = 0.5
    eye_dilation_radius: int = 1
    nose_margin: int = 2

    def __post_init__(self):
        for name, band in (("eye", self.eye_band), ("mouth", self.mouth_band)):
            lo, hi = band
            if not (0 <= lo < hi <= CHIP_SIZE - 1):
                raise InvalidParameterError(f"{name} band {band} must fit in the chip rows")
        for name, tau in (("tau_eye", self.tau_eye), ("tau_mouth", self.tau_mouth),
                          ("tau_nose", self.tau_nose)):
            if not 0.0 < tau < 1.0:
                raise InvalidParameterError(f"{name} must lie in (0, 1), got {tau}")
        if self.eye_dilation_radius < 0:
            raise InvalidParameterError("eye dilation radius must be >= 0")
        if self.nose_margin < 0:
            raise InvalidParameterError("nose margin must be >= 0")


def _check_chip(chip) -> np.ndarray:
    arr = np.asarray(chip, dtype=np.float64)
    if arr.shape != (CHIP_SIZE, CHIP_SIZE, 3):
        raise InvalidInputError(
            f"expected a {CHIP_SIZE}x{CHIP_SIZE} YCbCr chip, got shape {arr.shape}")
    return arr


def _biggest_component(mask) -> imaging.Component | None:
    components = imaging.connected_components(mask)
    if not components:
        return None
    return min(components, key=lambda c: (-c.area, c.bbox[1], c.bbox[0]))


def _extremes(pixels: np.ndarray) -> tuple[tuple[int, int], tuple[int, int]]:
    # Leftmost and rightmost pixels; ties resolved to the smallest row.
    xs, ys = pixels[:, 0], pixels[:, 1]
    left_x = xs.min()
    right_x = xs.max()
    left_y = ys[xs == left_x].min()
    right_y = ys[xs == right_x].min()
    return (int(left_x), int(left_y)), (int(right_x), int(right_y))


def locate_eyes(chip_ycbcr, params: FiducialParams | None = None) -> tuple[Landmark, ...]:
    """P1..P6 from the chroma eye response in the eye band."""
    p = params or FiducialParams()
    chip = _check_chip(chip_ycbcr)
    r0, r1 = p.eye_band
    band = chip[r0:r1 + 1]
    response = np.maximum(band[..., 1] - band[..., 2], 0.0)
    peak = float(response.max())
    if peak <= 0.0:
        raise EyeNotFoundError("left", "eye band has no positive chroma response")
    mask = response >= p.tau_eye * peak

    split = CHIP_SIZE // 2
    landmarks = []
    centroids = []
    for side, columns in (("left", slice(0, split)), ("right", slice(split, CHIP_SIZE))):
        x_offset = columns.start
        component = _biggest_component(mask[:, columns])
        if component is None:
            raise EyeNotFoundError(side, "no stain above threshold in this half")
        # Thicken on a full-width band canvas so the stain may grow across
        # the split line, but never out of the band rows.
        stain = np.zeros(response.shape, dtype=bool)
        stain[component.pixels[:, 1], component.pixels[:, 0] + x_offset] = True
        stain = imaging.dilate_disk(stain, p.eye_dilation_radius)
        pixels = np.argwhere(stain)[:, ::-1]  # rows of (x, y)
        (lx, ly), (rx, ry) = _extremes(pixels)
        landmarks.append((lx, ly + r0, rx, ry + r0))
        centroids.append((float(pixels[:, 0].mean()), float(pixels[:, 1].mean()) + r0))

    (l_lx, l_ly, l_rx, l_ry), (r_lx, r_ly, r_rx, r_ry) = landmarks
    (lcx, lcy), (rcx, rcy) = centroids
    return (
        Landmark("P1", float(l_lx), float(l_ly)),
        Landmark("P2", float(l_rx), float(l_ry)),
        Landmark("P3", float(r_lx), float(r_ly)),
        Landmark("P4", float(r_rx), float(r_ry)),
        Landmark("P5", lcx, lcy),
        Landmark("P6", rcx, rcy),
    )


def locate_mouth(chip_ycbcr, params: FiducialParams | None = None) -> tuple[Landmark, Landmark]:
    """P7/P8 from the Cr response in the mouth band."""
    p = params or FiducialParams()
    chip = _check_chip(chip_ycbcr)
    r0, r1 = p.mouth_band
    band_cr = chip[r0:r1 + 1, :, 2]
    peak = float(band_cr.max())
    if peak <= 0.0:
        raise MouthNotFoundError("mouth band has no chroma response")
    component = _biggest_component(band_cr >= p.tau_mouth * peak)
    if component is None:
        raise MouthNotFoundError("no stain above threshold")
    silhouette = np.where(component.render(band_cr.shape), 255.0, 0.0)
    grad = imaging.sobel_magnitude(silhouette)
    contour = grad > 0.5 * grad.max()
    if not contour.any():
        raise MouthNotFoundError("stain produced no contour")
    pixels = np.argwhere(contour)[:, ::-1]
    (lx, ly), (rx, ry) = _extremes(pixels)
    return (
        Landmark("P7", float(lx), float(ly + r0)),
        Landmark("P8", float(rx), float(ry + r0)),
    )


def locate_nose(chip_ycbcr, eyes, mouth,
                params: FiducialParams | None = None) -> tuple[Landmark, Landmark]:
    """P9/P10 from the luminance gradient between the eyes and the mouth."""
    p = params or FiducialParams()
    chip = _check_chip(chip_ycbcr)
    by_role = {lm.role: lm for lm in (*eyes, *mouth)}
    try:
        p5, p6 = by_role["P5"], by_role["P6"]
        p7, p8 = by_role["P7"], by_role["P8"]
    except KeyError as exc:
        raise InvalidInputError(f"missing landmark {exc} for the nose search") from exc

    top = int(np.ceil(max(p5.y, p6.y))) + p.nose_margin
    bottom = int(np.floor(min(p7.y, p8.y))) - p.nose_margin
    if bottom - top + 1 < 3:
        raise NoseNotFoundError(f"search band rows {top}..{bottom} too thin")
    # floor/ceil keep the column window mirror-symmetric.
    c0 = max(int(np.floor(min(p5.x, p6.x))), 0)
    c1 = min(int(np.ceil(max(p5.x, p6.x))), CHIP_SIZE - 1)
    if c1 - c0 < 1:
        raise NoseNotFoundError("eye centroids leave no column window")

    grad = imaging.sobel_magnitude(chip[..., 0])
    window = grad[top:bottom + 1, c0:c1 + 1]
    peak = float(window.max())
    if peak <= 0.0:
        raise NoseNotFoundError("flat luminance in the search band")
    component = _biggest_component(window >= p.tau_nose * peak)
    if component is None:
        raise NoseNotFoundError("no gradient component above threshold")
    (lx, ly), (rx, ry) = _extremes(component.pixels)
    return (
        Landmark("P9", float(lx + c0), float(ly + top)),
        Landmark("P10", float(rx + c0), float(ry + top)),
    )


def landmarks(chip_ycbcr, params: FiducialParams | None = None) -> LandmarkSet:
    """Locate all ten points and validate their ordering."""
    p = params or FiducialParams()
    eyes = locate_eyes(chip_ycbcr, p)
    mouth = locate_mouth(chip_ycbcr, p)
    nose = locate_nose(chip_ycbcr, eyes, mouth, p)
    found = LandmarkSet((*eyes, *mouth, *nose))
    found.validate()
    return found


def mirror_roles() -> tuple[tuple[str, str], ...]:
    """Role swaps induced by a horizontal chip flip."""
    return (("P1", "P4"), ("P2", "P3"), ("P5", "P6"), ("P7", "P8"), ("P9", "P10"))
