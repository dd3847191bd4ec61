"""Deterministic synthetic face scenes for demos and end-to-end tests.

A toy face is an upright skin-tone ellipse (height 1.3 times width) on a
neutral gray background, carrying chroma features where the locators
expect them: bluish eye blobs, a red mouth bar, a darker nose outline
shaped like a U, and optional skin-tone brow and cheek marks that change
texture without moving any landmark.  Person identities are parameter
bundles; samples of one person vary only by seeded rotation, translation,
scale, and lighting jitter.

Two of the five built-in identities share their geometry on purpose and
differ only in texture, so appearance features carry information that
pure distances cannot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import imgio
from .errors import InvalidParameterError
from .imaging import rgb_to_ycbcr

# Chroma anchors (full-range YCbCr).  Skin sits in the middle of the
# fuzzy classifier's acceptance region, eyes are blue-ish (high Cb, low
# Cr) so the chroma eye response fires, the mouth is strongly red, and
# the background is exactly neutral so it never leaks into chroma maps.
SKIN_CB, SKIN_CR = 105.0, 155.0
EYE_CB, EYE_CR = 170.0, 90.0
MOUTH_CB = 110.0
BACKGROUND_LUMA = 105.0

ASPECT = 1.3  # face height over width


def _ycc_to_rgb(y: float, cb: float, cr: float) -> np.ndarray:
    r = y + 1.402 * (cr - 128.0)
    g = y - 0.344136 * (cb - 128.0) - 0.714136 * (cr - 128.0)
    b = y + 1.772 * (cb - 128.0)
    return np.clip(np.array([r, g, b]), 0.0, 255.0)


@dataclass(frozen=True)
class FaceTraits:
    """Identity parameters in face-frame units.

    u and v span [-0.5, 0.5] across the face box (v grows downward); a
    50-pixel chip maps one unit to 49 pixels.
    """

    eye_dx: float = 0.204        # eye center offset from the midline
    eye_y: float = -0.194
    eye_rx: float = 0.050
    eye_ry: float = 0.040
    eye_luma: float = 70.0
    mouth_y: float = 0.316
    mouth_half_w: float = 0.14
    mouth_half_h: float = 0.028
    mouth_cr: float = 200.0
    nose_half_w: float = 0.058
    nose_top: float = 0.00
    nose_bottom: float = 0.145
    nose_luma: float = 95.0
    skin_luma: float = 150.0
    brow: bool = False
    brow_luma: float = 110.0
    cheeks: bool = False
    cheek_luma: float = 120.0


ARCHETYPES: tuple[FaceTraits, ...] = (
    FaceTraits(),
    # Same geometry as the first identity, different texture only.
    FaceTraits(eye_luma=35.0, nose_luma=55.0, brow=True, brow_luma=100.0,
               cheeks=True, cheek_luma=118.0),
    FaceTraits(eye_dx=0.26, eye_y=-0.175, eye_rx=0.062, eye_ry=0.048, eye_luma=60.0,
               mouth_y=0.330, mouth_half_w=0.20, mouth_half_h=0.032, mouth_cr=205.0,
               nose_half_w=0.082, nose_top=0.01, nose_bottom=0.17, nose_luma=85.0),
    FaceTraits(eye_dx=0.155, eye_y=-0.21, eye_rx=0.042, eye_ry=0.034, eye_luma=75.0,
               mouth_y=0.30, mouth_half_w=0.10, mouth_half_h=0.026, mouth_cr=198.0,
               nose_half_w=0.040, nose_top=0.02, nose_bottom=0.125, nose_luma=100.0,
               brow=True, brow_luma=115.0),
    FaceTraits(eye_dx=0.23, eye_y=-0.165, eye_rx=0.055, eye_ry=0.045, eye_luma=50.0,
               mouth_y=0.345, mouth_half_w=0.17, mouth_half_h=0.038, mouth_cr=210.0,
               nose_half_w=0.070, nose_top=-0.02, nose_bottom=0.16, nose_luma=75.0,
               cheeks=True, cheek_luma=125.0),
)


@dataclass(frozen=True)
class SampleJitter:
    """Per-sample imaging variation."""

    rotation_deg: float = 0.0
    shift_x: float = 0.0
    shift_y: float = 0.0
    lighting: float = 1.0
    scale: float = 1.0


def _paint(u: np.ndarray, v: np.ndarray, traits: FaceTraits,
           lighting: float) -> np.ndarray:
    """Rasterize the face over face-frame coordinate grids."""
    h, w = u.shape
    canvas = np.empty((h, w, 3))
    canvas[:] = _ycc_to_rgb(BACKGROUND_LUMA, 128.0, 128.0)

    head = u * u + v * v <= 0.25
    canvas[head] = _ycc_to_rgb(traits.skin_luma, SKIN_CB, SKIN_CR)

    def stamp(mask, color):
        canvas[mask & head] = color

    if traits.brow:
        brow = (np.abs(np.abs(u) - traits.eye_dx) <= 0.075) \
            & (v >= traits.eye_y - 0.115) & (v <= traits.eye_y - 0.07)
        stamp(brow, _ycc_to_rgb(traits.brow_luma, SKIN_CB, SKIN_CR))
    if traits.cheeks:
        cheek = ((np.abs(u) - 0.33) ** 2 / 0.045 ** 2 + (v - 0.10) ** 2 / 0.038 ** 2) <= 1.0
        stamp(cheek, _ycc_to_rgb(traits.cheek_luma, SKIN_CB, SKIN_CR))

    nose_line = (np.abs(np.abs(u) - traits.nose_half_w) <= 0.014) \
        & (v >= traits.nose_top) & (v <= traits.nose_bottom)
    nose_base = (np.abs(u) <= traits.nose_half_w) \
        & (v >= traits.nose_bottom - 0.030) & (v <= traits.nose_bottom)
    stamp(nose_line | nose_base, _ycc_to_rgb(traits.nose_luma, SKIN_CB, SKIN_CR))

    for sign in (-1.0, 1.0):
        eye = ((u - sign * traits.eye_dx) ** 2 / traits.eye_rx ** 2
               + (v - traits.eye_y) ** 2 / traits.eye_ry ** 2) <= 1.0
        stamp(eye, _ycc_to_rgb(traits.eye_luma, EYE_CB, EYE_CR))

    mouth = (np.abs(u) <= traits.mouth_half_w) \
        & (np.abs(v - traits.mouth_y) <= traits.mouth_half_h)
    stamp(mouth, _ycc_to_rgb(traits.skin_luma * 0.6, MOUTH_CB, traits.mouth_cr))

    return np.clip(canvas * lighting, 0.0, 255.0)


def render_scene(traits: FaceTraits, jitter: SampleJitter | None = None,
                 scene_width: int = 128, scene_height: int = 170,
                 face_width: float = 62.0,
                 center: tuple[float, float] = (64.0, 78.0)) -> np.ndarray:
    """Draw the face into a full scene; returns an RGB array."""
    j = jitter or SampleJitter()
    ys, xs = np.mgrid[0:scene_height, 0:scene_width].astype(np.float64)
    cx = center[0] + j.shift_x
    cy = center[1] + j.shift_y
    dx = xs - cx
    dy = ys - cy
    alpha = math.radians(j.rotation_deg)
    ca, sa = math.cos(alpha), math.sin(alpha)
    fx = ca * dx + sa * dy
    fy = -sa * dx + ca * dy
    fw = face_width * j.scale
    u = fx / fw
    v = fy / (fw * ASPECT)
    return _paint(u, v, traits, j.lighting)


def render_chip(traits: FaceTraits, jitter: SampleJitter | None = None,
                size: int = 50) -> np.ndarray:
    """Draw the face directly at chip resolution (RGB), skipping detection."""
    j = jitter or SampleJitter()
    ys, xs = np.mgrid[0:size, 0:size].astype(np.float64)
    u = xs / (size - 1) - 0.5
    v = ys / (size - 1) - 0.5
    # Rotate in physical proportions so angles mean the same as in scenes.
    pu = u
    pv = v * ASPECT
    alpha = math.radians(j.rotation_deg)
    ca, sa = math.cos(alpha), math.sin(alpha)
    ru = ca * pu + sa * pv
    rv = -sa * pu + ca * pv
    return _paint(ru, rv / ASPECT, traits, j.lighting)


def _clamp(value: float, lo: float, hi: float) -> float:
    return min(max(value, lo), hi)


def person_traits(person: int, seed: int = 0) -> FaceTraits:
    """Identity parameters for person index `person`.

    The first five indices are the built-in archetypes; higher indices
    perturb them deterministically from (seed, person).
    """
    if person < 0:
        raise InvalidParameterError(f"person index must be >= 0, got {person!r}")
    base = ARCHETYPES[person % len(ARCHETYPES)]
    if person < len(ARCHETYPES):
        return base
    rng = np.random.default_rng([seed, person])
    return replace(
        base,
        eye_dx=_clamp(base.eye_dx + rng.uniform(-0.02, 0.02), 0.15, 0.265),
        eye_y=_clamp(base.eye_y + rng.uniform(-0.012, 0.012), -0.215, -0.162),
        eye_rx=_clamp(base.eye_rx + rng.uniform(-0.006, 0.006), 0.036, 0.065),
        eye_luma=_clamp(base.eye_luma + rng.uniform(-18.0, 18.0), 25.0, 85.0),
        mouth_y=_clamp(base.mouth_y + rng.uniform(-0.014, 0.014), 0.295, 0.35),
        mouth_half_w=_clamp(base.mouth_half_w + rng.uniform(-0.025, 0.025), 0.09, 0.21),
        nose_half_w=_clamp(base.nose_half_w + rng.uniform(-0.012, 0.012), 0.036, 0.086),
        nose_luma=_clamp(base.nose_luma + rng.uniform(-15.0, 15.0), 50.0, 105.0),
        brow=bool(rng.integers(0, 2)),
        cheeks=bool(rng.integers(0, 2)),
    )


def sample_jitter(rng: np.random.Generator) -> SampleJitter:
    """Draw one sample's imaging variation."""
    return SampleJitter(
        rotation_deg=float(rng.uniform(-8.0, 8.0)),
        shift_x=float(rng.uniform(-2.0, 2.0)),
        shift_y=float(rng.uniform(-2.0, 2.0)),
        lighting=float(rng.uniform(0.90, 1.12)),
        scale=float(rng.uniform(0.96, 1.04)),
    )


def generate_toyset(out_dir, persons: int = 5, samples: int = 20,
                    seed: int = 0) -> list[tuple[str, Path]]:
    """Write a labeled dataset tree: person<NN>/s<MMM>.png.

    Returns (label, path) pairs in directory order.  Same arguments, same
    bytes.
    """
    if persons < 1 or samples < 1:
        raise InvalidParameterError("need at least one person and one sample")
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    written = []
    for p in range(persons):
        traits = person_traits(p, seed)
        label = f"person{p:02d}"
        person_dir = root / label
        person_dir.mkdir(exist_ok=True)
        for s in range(samples):
            rng = np.random.default_rng([seed, p, s])
            scene = render_scene(traits, sample_jitter(rng))
            path = person_dir / f"s{s:03d}.png"
            imgio.write_image(path, scene)
            written.append((label, path))
    return written


def random_chip(seed: int) -> np.ndarray:
    """One seeded synthetic chip in YCbCr, for locator tests."""
    rng = np.random.default_rng(seed)
    person = int(rng.integers(0, len(ARCHETYPES) + 5))
    traits = person_traits(person, seed=17)
    jitter = SampleJitter(
        rotation_deg=float(rng.uniform(-8.0, 8.0)),
        lighting=float(rng.uniform(0.90, 1.12)),
    )
    return rgb_to_ycbcr(render_chip(traits, jitter))
