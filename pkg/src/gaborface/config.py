"""Run configuration: one JSON document covering every tunable stage.

Sections mirror the pipeline: "skin" (fuzzy classifier), "detect"
(smoothing and edge parameters), "fiducial" (band placement and
thresholds), "gabor" (filter bank), "features" (which vector to build),
"train" and "split" (recognizer and evaluation protocol).  Every section
is optional in the file; omitted fields keep their defaults, and the
effective configuration can be written back out in full.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidParameterError
from .face_locate import DetectParams
from .features import FEATURE_KINDS, ORIENTATION_STEPS
from .fiducial import FiducialParams
from .recognizer import SplitSpec, TrainConfig
from .skin import FisConfig


@dataclass(frozen=True)
class GaborSettings:
    """Filter bank choices."""

    orientations: int = 8
    lambda_scale: float = 1.0
    magnitude: bool = True

    def __post_init__(self):
        if self.orientations not in ORIENTATION_STEPS:
            allowed = sorted(ORIENTATION_STEPS)
            raise InvalidParameterError(
                f"orientations must be one of {allowed}, got {self.orientations!r}")
        if not self.lambda_scale > 0:
            raise InvalidParameterError(
                f"lambda_scale must be positive, got {self.lambda_scale!r}")


@dataclass(frozen=True)
class RunConfig:
    skin: FisConfig = field(default_factory=FisConfig)
    detect: DetectParams = field(default_factory=DetectParams)
    fiducial: FiducialParams = field(default_factory=FiducialParams)
    gabor: GaborSettings = field(default_factory=GaborSettings)
    feature_kind: str = "fused"
    train: TrainConfig = field(default_factory=TrainConfig)
    split: SplitSpec = field(default_factory=SplitSpec)

    def __post_init__(self):
        if self.feature_kind not in FEATURE_KINDS:
            raise InvalidParameterError(
                f"feature_kind must be one of {FEATURE_KINDS}, got {self.feature_kind!r}")

    def to_dict(self) -> dict:
        return {
            "skin": self.skin.to_dict(),
            "detect": dataclasses.asdict(self.detect),
            "fiducial": dataclasses.asdict(self.fiducial),
            "gabor": dataclasses.asdict(self.gabor),
            "features": {"kind": self.feature_kind},
            "train": dataclasses.asdict(self.train),
            "split": dataclasses.asdict(self.split),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise InvalidParameterError("configuration root must be an object")
        known = {"skin", "detect", "fiducial", "gabor", "features", "train", "split"}
        unknown = set(data) - known
        if unknown:
            raise InvalidParameterError(
                f"unknown configuration sections: {sorted(unknown)}")

        def section(name, builder, default):
            raw = data.get(name)
            if raw is None:
                return default()
            if not isinstance(raw, dict):
                raise InvalidParameterError(f"section {name!r} must be an object")
            try:
                return builder(raw)
            except TypeError as exc:
                raise InvalidParameterError(f"bad {name} section: {exc}") from exc

        skin = section("skin", FisConfig.from_dict, FisConfig)
        detect = section("detect", lambda d: DetectParams(**d), DetectParams)
        fiducial = section("fiducial", _fiducial_from_dict, FiducialParams)
        gabor = section("gabor", lambda d: GaborSettings(**d), GaborSettings)
        train = section("train", lambda d: TrainConfig(**d), TrainConfig)
        split = section("split", _split_from_dict, SplitSpec)
        feats = data.get("features") or {}
        if not isinstance(feats, dict):
            raise InvalidParameterError("section 'features' must be an object")
        kind = feats.get("kind", "fused")
        return cls(skin=skin, detect=detect, fiducial=fiducial, gabor=gabor,
                   feature_kind=kind, train=train, split=split)


def _fiducial_from_dict(data: dict) -> FiducialParams:
    fixed = dict(data)
    for key in ("eye_band", "mouth_band"):
        if key in fixed:
            fixed[key] = tuple(fixed[key])
    return FiducialParams(**fixed)


def _split_from_dict(data: dict) -> SplitSpec:
    fixed = dict(data)
    if "fractions" in fixed:
        fixed["fractions"] = tuple(fixed["fractions"])
    return SplitSpec(**fixed)


def default_config() -> RunConfig:
    return RunConfig()


def load_config(path) -> RunConfig:
    """Read a JSON configuration file."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"invalid JSON in {path}: {exc}") from exc
    return RunConfig.from_dict(data)


def save_config(config: RunConfig, path) -> None:
    """Write the full effective configuration as JSON."""
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n")
