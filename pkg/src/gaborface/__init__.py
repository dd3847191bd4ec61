"""Face finding and recognition from skin color, facial distances, and
Gabor filter responses.

The processing chain: smooth the image, classify skin chroma with a
small fuzzy rule system, keep the largest skin region, trace its outer
edge, box the face at a fixed height-to-width ratio, resample to a
50x50 chip, locate ten facial points, then describe the face either by
seven inter-point distances, by Gabor filter responses at the points,
or by both together.  A per-person ensemble of tiny sigmoid networks
does the recognition.
"""

__version__ = "0.1.0"

from .config import GaborSettings, RunConfig, default_config, load_config, save_config
from .errors import (
    DegenerateTaskError,
    EyeNotFoundError,
    FeatureNotFoundError,
    GaborFaceError,
    InvalidBoxError,
    InvalidInputError,
    InvalidParameterError,
    InvalidPointError,
    LandmarkInconsistencyError,
    ModelFormatError,
    MouthNotFoundError,
    NoFaceFoundError,
    NoseNotFoundError,
)
from .face_locate import CHIP_SIZE, DetectParams, FaceBox, detect_face
from .features import (
    GaborBank,
    GaborParams,
    GeometricVector,
    build_bank,
    gabor_kernel,
    gabor_value,
    geometric_vector,
    jet_at,
    jets,
)
from .fiducial import FiducialParams, Landmark, LandmarkSet, landmarks
from .imaging import canny, mean_filter, resize_bilinear, rgb_to_ycbcr, ycbcr_to_rgb
from .recognizer import (
    Ensemble,
    SplitSpec,
    TrainConfig,
    evaluate,
    load_model,
    predict,
    run_experiment,
    save_model,
    stratified_split,
    train,
)
from .skin import FisConfig, crisp_skin, fis_evaluate, skin_mask, skin_probability

__all__ = [
    "__version__",
    "CHIP_SIZE",
    "DegenerateTaskError",
    "DetectParams",
    "Ensemble",
    "EyeNotFoundError",
    "FaceBox",
    "FeatureNotFoundError",
    "FiducialParams",
    "FisConfig",
    "GaborBank",
    "GaborFaceError",
    "GaborParams",
    "GaborSettings",
    "GeometricVector",
    "InvalidBoxError",
    "InvalidInputError",
    "InvalidParameterError",
    "InvalidPointError",
    "Landmark",
    "LandmarkInconsistencyError",
    "LandmarkSet",
    "ModelFormatError",
    "MouthNotFoundError",
    "NoFaceFoundError",
    "NoseNotFoundError",
    "RunConfig",
    "SplitSpec",
    "TrainConfig",
    "build_bank",
    "canny",
    "crisp_skin",
    "default_config",
    "detect_face",
    "evaluate",
    "fis_evaluate",
    "gabor_kernel",
    "gabor_value",
    "geometric_vector",
    "jet_at",
    "jets",
    "landmarks",
    "load_config",
    "load_model",
    "mean_filter",
    "predict",
    "resize_bilinear",
    "rgb_to_ycbcr",
    "run_experiment",
    "save_config",
    "save_model",
    "skin_mask",
    "skin_probability",
    "stratified_split",
    "train",
    "ycbcr_to_rgb",
]
