"""End-to-end glue: datasets on disk to feature matrices.

A dataset is a directory of person subdirectories, each holding image
files; the subdirectory name is the class label.  Extraction runs the
full chain per image (smooth, skin, locate, chip, fiducial points) and
keeps both the distance vector and appearance jets from the widest
filter bank, so any narrower bank or fused variant can be assembled
later by column selection instead of re-filtering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imgio
from .config import RunConfig
from .errors import (FeatureNotFoundError, InvalidInputError,
                     InvalidParameterError, LandmarkInconsistencyError,
                     NoFaceFoundError)
from .face_locate import FaceBox, detect_face
from .features import (ORIENTATION_STEPS, GaborBank, build_bank,
                       geometric_vector, jets, subset_channel_indices)
from .fiducial import LandmarkSet, landmarks
from .imaging import rgb_to_ycbcr, sample_bilinear

IMAGE_SUFFIXES = (".png", ".pgm", ".ppm", ".pnm")

SKIP_EXCEPTIONS = (NoFaceFoundError, FeatureNotFoundError,
                   LandmarkInconsistencyError, InvalidInputError)


def scan_dataset(root) -> list[tuple[str, Path]]:
    """List (label, path) pairs for every image under label directories.

    Order is deterministic: labels sorted, then file names sorted.
    """
    root = Path(root)
    if not root.is_dir():
        raise InvalidInputError(f"dataset directory not found: {root}")
    entries = []
    for person_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for f in sorted(person_dir.iterdir()):
            if f.is_file() and f.suffix.lower() in IMAGE_SUFFIXES:
                entries.append((person_dir.name, f))
    if not entries:
        raise InvalidInputError(f"no images found under {root}")
    return entries


@dataclass(frozen=True)
class ImageRecord:
    """Everything extracted from one image."""

    label: str
    path: Path
    box: FaceBox
    points: LandmarkSet
    geometric: np.ndarray   # (7,)
    jets: np.ndarray        # (10 * channels,) from the extraction bank


def extract_one(img_rgb: np.ndarray, config: RunConfig,
                bank: GaborBank) -> tuple[FaceBox, LandmarkSet, np.ndarray, np.ndarray]:
    """Run the full chain on an in-memory RGB image."""
    box, chip = detect_face(img_rgb, fis=config.skin, params=config.detect)
    chip_ycc = rgb_to_ycbcr(chip)
    points = landmarks(chip_ycc, config.fiducial)
    geom = geometric_vector(points).as_array()
    jet_vec = jets(chip_ycc[:, :, 0], points, bank,
                   magnitude=config.gabor.magnitude)
    return box, points, geom, jet_vec


def extraction_bank(config: RunConfig) -> GaborBank:
    """The widest bank consistent with the configuration.

    Narrower orientation subsets reuse these responses by column
    selection, so extraction always filters with all eight orientations.
    """
    return build_bank(8, lambda_scale=config.gabor.lambda_scale)


def extract_features(entries, config: RunConfig, bank: GaborBank | None = None,
                     progress=None, augment: int = 0, augment_seed: int = 0):
    """Extract records for (label, path) pairs.

    Images where no face or a required point is found are skipped, not
    fatal; returns (records, skips) with skips as (path, reason) pairs.
    With augment > 0, each readable image also contributes that many
    jittered variants (seeded per entry, so the order of successes does
    not matter); variants are reported under the source name plus an
    "#augK" suffix.
    """
    if augment < 0:
        raise InvalidParameterError(f"augment must be >= 0, got {augment!r}")
    if bank is None:
        bank = extraction_bank(config)
    records = []
    skips = []
    total = len(entries) * (1 + augment)
    done = 0
    for index, (label, path) in enumerate(entries):
        try:
            img = imgio.read_image(path)
            if img.ndim != 3:
                img = np.repeat(img[:, :, None], 3, axis=2)
            box, points, geom, jet_vec = extract_one(img, config, bank)
        except SKIP_EXCEPTIONS as exc:
            skips.append((Path(path), f"{type(exc).__name__}: {exc}"))
            done += 1 + augment
            continue
        records.append(ImageRecord(label=label, path=Path(path), box=box,
                                   points=points, geometric=geom, jets=jet_vec))
        done += 1
        if progress is not None:
            progress(done, total)
        if augment:
            rng = np.random.default_rng([int(augment_seed), index])
            for k, variant in enumerate(augment_variants(img, augment, rng), 1):
                vpath = path.with_name(f"{path.name}#aug{k}")
                try:
                    parts = extract_one(variant, config, bank)
                except SKIP_EXCEPTIONS as exc:
                    skips.append((vpath, f"{type(exc).__name__}: {exc}"))
                    done += 1
                    continue
                records.append(ImageRecord(label=label, path=vpath, box=parts[0],
                                           points=parts[1], geometric=parts[2],
                                           jets=parts[3]))
                done += 1
                if progress is not None:
                    progress(done, total)
    return records, skips


def jet_columns(num_orientations: int, bank: GaborBank,
                magnitude: bool = True, num_points: int = 10) -> np.ndarray:
    """Column indices selecting a narrower bank out of full-bank jets."""
    sub = build_bank(num_orientations, lambda_scale=bank.wavelengths[0] / 4.0)
    idx = np.asarray(subset_channel_indices(sub, bank), dtype=np.intp)
    width = 1 if magnitude else 2
    per_point = bank.num_channels * width
    cols = []
    for p in range(num_points):
        base = p * per_point
        for c in idx:
            for k in range(width):
                cols.append(base + c * width + k)
    return np.asarray(cols, dtype=np.intp)


def feature_matrix(records, kind: str, num_orientations: int,
                   bank: GaborBank, magnitude: bool = True):
    """Assemble (matrix, labels) for one feature variant."""
    if not records:
        raise InvalidInputError("no extracted records to assemble")
    labels = [r.label for r in records]
    geom = np.vstack([r.geometric for r in records])
    if kind == "geom":
        return geom, labels
    cols = jet_columns(num_orientations, bank, magnitude=magnitude)
    jet = np.vstack([r.jets for r in records])[:, cols]
    if kind == "gabor":
        return jet, labels
    if kind == "fused":
        return np.hstack([geom, jet]), labels
    raise InvalidParameterError(f"unknown feature kind {kind!r}")


def experiment_feature_sets(records, bank: GaborBank, magnitude: bool = True):
    """The full comparison table rows: distances, jets at five bank
    sizes, and their fusion.  Returns (names, matrices, labels)."""
    names = ["geometric"]
    geom, labels = feature_matrix(records, "geom", 8, bank, magnitude)
    matrices = [geom]
    sizes = [n for n in sorted(ORIENTATION_STEPS) if n != 8]
    for kind in ("gabor", "fused"):
        for n in sizes:
            mat, _ = feature_matrix(records, kind, n, bank, magnitude)
            names.append(f"{kind}-{n * len(bank.wavelengths)}")
            matrices.append(mat)
    return names, matrices, labels


def augment_variants(img_rgb: np.ndarray, count: int, rng,
                     max_rotation: float = 10.0, max_shift: float = 2.0,
                     brightness: tuple[float, float] = (0.8, 1.2)) -> list[np.ndarray]:
    """Seeded in-plane perturbations of a scene, for enlarging small sets."""
    if count < 0:
        raise InvalidParameterError(f"count must be >= 0, got {count!r}")
    h, w = img_rgb.shape[:2]
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    out = []
    for _ in range(count):
        ang = math.radians(float(rng.uniform(-max_rotation, max_rotation)))
        tx = float(rng.uniform(-max_shift, max_shift))
        ty = float(rng.uniform(-max_shift, max_shift))
        gain = float(rng.uniform(*brightness))
        ca, sa = math.cos(ang), math.sin(ang)
        dx = xs - cx
        dy = ys - cy
        sx = ca * dx + sa * dy + cx - tx
        sy = -sa * dx + ca * dy + cy - ty
        if img_rgb.ndim == 3:
            warped = np.stack([sample_bilinear(img_rgb[:, :, c], sx, sy)
                               for c in range(img_rgb.shape[2])], axis=2)
        else:
            warped = sample_bilinear(img_rgb, sx, sy)
        out.append(np.clip(warped * gain, 0.0, 255.0))
    return out
