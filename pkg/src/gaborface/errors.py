"""Exception types shared across the pipeline.

The CLI maps these onto exit codes: detection and fiducial misses
(:class:`NoFaceFoundError`, :class:`FeatureNotFoundError`,
:class:`LandmarkInconsistencyError`) exit with 2, every other library
error with 1.
"""

from __future__ import annotations


class GaborFaceError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(GaborFaceError, ValueError):
    """A tuning parameter is outside its documented range."""


class InvalidInputError(GaborFaceError, ValueError):
    """An input value violates a precondition (shape, range, file format)."""


class InvalidBoxError(InvalidInputError):
    """A crop rectangle does not intersect the image."""


class InvalidPointError(InvalidInputError):
    """A sample point lies outside the image."""


class NoFaceFoundError(GaborFaceError):
    """The image contains no usable skin region or face edge."""


class FeatureNotFoundError(GaborFaceError):
    """A facial feature could not be located on the chip."""

    def __init__(self, feature: str, detail: str = ""):
        self.feature = feature
        msg = f"{feature} not found"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class EyeNotFoundError(FeatureNotFoundError):
    """No candidate stain in one half of the eye band; `side` says which."""

    def __init__(self, side: str, detail: str = ""):
        self.side = side
        super().__init__(f"{side} eye", detail)


class MouthNotFoundError(FeatureNotFoundError):
    def __init__(self, detail: str = ""):
        super().__init__("mouth", detail)


class NoseNotFoundError(FeatureNotFoundError):
    def __init__(self, detail: str = ""):
        super().__init__("nose", detail)


class LandmarkInconsistencyError(GaborFaceError):
    """Located points violate the geometric ordering contract.

    `roles` carries the offending point names.
    """

    def __init__(self, roles, detail: str = ""):
        self.roles = tuple(roles)
        msg = f"inconsistent landmarks {', '.join(self.roles)}"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)


class DegenerateTaskError(GaborFaceError):
    """Training was requested for fewer than two persons."""


class ModelFormatError(GaborFaceError):
    """A model file is malformed; `field` names the offending part."""

    def __init__(self, field: str, detail: str = ""):
        self.field = field
        msg = f"bad model file ({field})"
        if detail:
            msg = f"{msg}: {detail}"
        super().__init__(msg)
