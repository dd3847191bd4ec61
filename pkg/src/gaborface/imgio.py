"""Image file I/O: 8-bit PNG plus the PGM/PPM family (P2/P3/P5/P6).

Arrays come back as float64 in [0, 255]; grayscale files give (h, w),
color files (h, w, 3).  Writing quantizes with round-half-even and clamps
to [0, 255].  Binary masks serialize as PGM with values {0, 255}.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidInputError

_PNM_SUFFIXES = {".pgm", ".ppm", ".pnm"}


def _quantize(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    return np.clip(np.rint(arr), 0, 255).astype(np.uint8)


def read_image(path) -> np.ndarray:
    """Read a PNG or PGM/PPM file into a float64 array."""
    p = Path(path)
    if not p.exists():
        raise InvalidInputError(f"no such image file: {p}")
    if p.suffix.lower() in _PNM_SUFFIXES:
        return read_pnm(p)
    with Image.open(p) as im:
        if im.mode in ("L", "I;16", "I"):
            return np.asarray(im.convert("L"), dtype=np.float64)
        return np.asarray(im.convert("RGB"), dtype=np.float64)


def write_image(path, img) -> None:
    """Write PNG or PGM/PPM depending on the file extension."""
    p = Path(path)
    if p.suffix.lower() in _PNM_SUFFIXES:
        write_pnm(p, img)
        return
    arr = _quantize(img)
    if arr.ndim == 2:
        Image.fromarray(arr, mode="L").save(p, format="PNG")
    elif arr.ndim == 3 and arr.shape[2] == 3:
        Image.fromarray(arr, mode="RGB").save(p, format="PNG")
    else:
        raise InvalidInputError(f"cannot write image of shape {arr.shape}")


def _tokenize_pnm_header(data: bytes):
    # Yields whitespace-separated tokens, skipping '#' comments, and
    # reports the offset just past the last consumed byte.
    pos = 0
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c.isspace():
            pos += 1
            continue
        if c == b"#":
            nl = data.find(b"\n", pos)
            pos = n if nl < 0 else nl + 1
            continue
        m = re.match(rb"[^\s#]+", data[pos:])
        tok = m.group(0)
        pos += len(tok)
        yield tok.decode("ascii"), pos


def read_pnm(path) -> np.ndarray:
    """Read P2/P3 (ASCII) or P5/P6 (binary) with maxval <= 255."""
    data = Path(path).read_bytes()
    tokens = _tokenize_pnm_header(data)

    def next_token():
        try:
            return next(tokens)
        except StopIteration:
            raise InvalidInputError(f"truncated PNM header in {path}") from None

    magic, _ = next_token()
    if magic not in ("P2", "P3", "P5", "P6"):
        raise InvalidInputError(f"unsupported PNM magic {magic!r} in {path}")
    fields = []
    end = 0
    for _ in range(3):
        tok, end = next_token()
        if not tok.isdigit():
            raise InvalidInputError(f"bad PNM header token {tok!r} in {path}")
        fields.append(int(tok))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise InvalidInputError(f"bad PNM dimensions {width}x{height} in {path}")
    if not 0 < maxval <= 255:
        raise InvalidInputError(f"unsupported PNM maxval {maxval} in {path}")
    channels = 3 if magic in ("P3", "P6") else 1
    count = width * height * channels

    if magic in ("P2", "P3"):
        values = []
        for tok, end in tokens:
            if not re.fullmatch(r"\d+", tok):
                raise InvalidInputError(f"bad PNM sample {tok!r} in {path}")
            values.append(int(tok))
            if len(values) == count:
                break
        if len(values) < count:
            raise InvalidInputError(f"truncated PNM data in {path}")
        flat = np.array(values, dtype=np.float64)
    else:
        # One whitespace byte separates the header from binary samples.
        raster = data[end + 1:end + 1 + count]
        if len(raster) < count:
            raise InvalidInputError(f"truncated PNM data in {path}")
        flat = np.frombuffer(raster, dtype=np.uint8).astype(np.float64)
    if flat.max(initial=0) > maxval:
        raise InvalidInputError(f"PNM sample exceeds maxval in {path}")
    if channels == 1:
        return flat.reshape(height, width)
    return flat.reshape(height, width, 3)


def write_pnm(path, img, binary: bool = True) -> None:
    """Write PGM (single channel) or PPM (RGB); ASCII when binary=False."""
    arr = _quantize(img)
    p = Path(path)
    if arr.ndim == 2:
        magic = "P5" if binary else "P2"
    elif arr.ndim == 3 and arr.shape[2] == 3:
        magic = "P6" if binary else "P3"
    else:
        raise InvalidInputError(f"cannot write PNM of shape {arr.shape}")
    height, width = arr.shape[:2]
    header = f"{magic}\n{width} {height}\n255\n".encode("ascii")
    if binary:
        p.write_bytes(header + arr.tobytes())
        return
    lines = []
    flat = arr.reshape(height, -1)
    for row in flat:
        lines.append(" ".join(str(int(v)) for v in row))
    p.write_bytes(header + ("\n".join(lines) + "\n").encode("ascii"))


def write_mask(path, mask) -> None:
    """Serialize a boolean mask as an 8-bit image with values {0, 255}."""
    m = np.asarray(mask)
    if m.ndim != 2:
        raise InvalidInputError(f"expected a 2-d mask, got shape {m.shape}")
    write_image(path, np.where(m, 255.0, 0.0))


def read_mask(path) -> np.ndarray:
    """Read a mask written by :func:`write_mask` back to booleans."""
    img = read_image(path)
    if img.ndim != 2:
        raise InvalidInputError(f"mask file {path} is not single-channel")
    return img >= 128.0
