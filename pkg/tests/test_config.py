"""Configuration serialization tests."""

import dataclasses
import json
from importlib import resources

import pytest

from gaborface.config import (
    GaborSettings,
    RunConfig,
    default_config,
    load_config,
    save_config,
)
from gaborface.errors import InvalidParameterError
from gaborface.face_locate import DetectParams
from gaborface.fiducial import FiducialParams
from gaborface.recognizer import SplitSpec, TrainConfig


class TestGaborSettings:
    def test_defaults(self):
        g = GaborSettings()
        assert g.orientations == 8
        assert g.lambda_scale == 1.0
        assert g.magnitude is True

    @pytest.mark.parametrize("n", [0, 6, 7, 16])
    def test_orientation_whitelist(self, n):
        with pytest.raises(InvalidParameterError):
            GaborSettings(orientations=n)

    def test_lambda_scale_positive(self):
        with pytest.raises(InvalidParameterError):
            GaborSettings(lambda_scale=-1.0)


class TestRunConfig:
    def test_dict_round_trip(self):
        cfg = RunConfig(
            detect=DetectParams(canny_sigma=2.0),
            fiducial=FiducialParams(tau_eye=0.7),
            gabor=GaborSettings(orientations=4),
            feature_kind="gabor",
            train=TrainConfig(hidden=8, seed=9),
            split=SplitSpec(fractions=(0.5,), combinations=2, base_seed=7),
        )
        again = RunConfig.from_dict(cfg.to_dict())
        assert again == cfg

    def test_empty_dict_gives_defaults(self):
        assert RunConfig.from_dict({}) == default_config()

    def test_partial_section_keeps_other_defaults(self):
        cfg = RunConfig.from_dict({"train": {"hidden": 4}})
        assert cfg.train.hidden == 4
        assert cfg.train.epochs == TrainConfig().epochs
        assert cfg.detect == DetectParams()

    def test_unknown_section_rejected(self):
        with pytest.raises(InvalidParameterError):
            RunConfig.from_dict({"sknn": {}})

    def test_unknown_field_rejected(self):
        with pytest.raises(InvalidParameterError):
            RunConfig.from_dict({"detect": {"blur": 3}})

    def test_non_object_section_rejected(self):
        with pytest.raises(InvalidParameterError):
            RunConfig.from_dict({"detect": 5})
        with pytest.raises(InvalidParameterError):
            RunConfig.from_dict({"features": [1, 2]})

    def test_bad_feature_kind(self):
        with pytest.raises(InvalidParameterError):
            RunConfig.from_dict({"features": {"kind": "spectral"}})

    def test_band_lists_become_tuples(self):
        cfg = RunConfig.from_dict({"fiducial": {"eye_band": [8, 20]}})
        assert cfg.fiducial.eye_band == (8, 20)
        cfg2 = RunConfig.from_dict({"split": {"fractions": [0.7, 0.4]}})
        assert cfg2.split.fractions == (0.7, 0.4)


class TestFiles:
    def test_file_round_trip(self, tmp_path):
        cfg = RunConfig(feature_kind="geom", gabor=GaborSettings(orientations=2))
        path = tmp_path / "run.json"
        save_config(cfg, path)
        assert load_config(path) == cfg
        # File is plain JSON with the expected sections.
        data = json.loads(path.read_text())
        assert set(data) == {"skin", "detect", "fiducial", "gabor", "features",
                             "train", "split"}

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(InvalidParameterError):
            load_config(path)

    def test_bundled_default_matches_code_defaults(self):
        with resources.as_file(
                resources.files("gaborface.data") / "default_config.json") as path:
            cfg = load_config(path)
        assert cfg == default_config()

    def test_config_is_immutable(self):
        cfg = default_config()
        with pytest.raises(dataclasses.FrozenInstanceError):
            cfg.feature_kind = "geom"
