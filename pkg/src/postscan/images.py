"""In-memory RGB images plus file decoding (PPM always, PNG via Pillow)."""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class ImageBuffer:
    """Row-major 8-bit RGB image. `pixels` holds 3 * width * height bytes."""

    width: int
    height: int
    pixels: bytes

    def __post_init__(self):
        if self.width < 0 or self.height < 0:
            raise DataError("image dimensions must be non-negative")
        if len(self.pixels) != 3 * self.width * self.height:
            raise DataError(
                f"pixel buffer has {len(self.pixels)} bytes, expected "
                f"{3 * self.width * self.height} for {self.width}x{self.height} RGB"
            )

    def to_array(self) -> np.ndarray:
        """(height, width, 3) uint8 view of the pixel data."""
        return np.frombuffer(self.pixels, dtype=np.uint8).reshape(
            self.height, self.width, 3
        )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ImageBuffer":
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise DataError(f"expected (h, w, 3) array, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            raise DataError(f"expected uint8 array, got {arr.dtype}")
        h, w = arr.shape[:2]
        return cls(width=w, height=h, pixels=arr.tobytes())


def _read_ppm_token(buf: io.BufferedReader) -> bytes:
    # Skips whitespace and '#' comments between header fields.
    token = b""
    while True:
        ch = buf.read(1)
        if not ch:
            break
        if ch == b"#":
            while ch and ch != b"\n":
                ch = buf.read(1)
            continue
        if ch.isspace():
            if token:
                break
            continue
        token += ch
    return token


def _parse_ppm(f, where: str) -> ImageBuffer:
    magic = _read_ppm_token(f)
    if magic != b"P6":
        raise DataError(f"{where}: not a P6 PPM file (magic {magic!r})")
    try:
        width = int(_read_ppm_token(f))
        height = int(_read_ppm_token(f))
        maxval = int(_read_ppm_token(f))
    except ValueError as e:
        raise DataError(f"{where}: malformed PPM header") from e
    if maxval != 255:
        raise DataError(f"{where}: only 8-bit PPM supported (maxval {maxval})")
    data = f.read(3 * width * height)
    if len(data) != 3 * width * height:
        raise DataError(f"{where}: truncated PPM pixel data")
    return ImageBuffer(width=width, height=height, pixels=data)


def read_ppm(path: str | Path) -> ImageBuffer:
    """Decode a binary (P6) 8-bit PPM file."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"image file not found: {path}")
    with open(path, "rb") as f:
        return _parse_ppm(f, str(path))


def decode_ppm(data: bytes) -> ImageBuffer:
    """Decode P6 PPM bytes already in memory."""
    return _parse_ppm(io.BytesIO(data), "<bytes>")


def write_ppm(img: ImageBuffer, path: str | Path) -> None:
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (img.width, img.height))
        f.write(img.pixels)


def read_png(path: str | Path) -> ImageBuffer:
    """Decode a PNG file. Requires the optional Pillow dependency."""
    try:
        from PIL import Image
    except ImportError as e:  # pragma: no cover
        raise DataError(
            f"{path}: PNG support requires Pillow (pip install postscan[png])"
        ) from e
    path = Path(path)
    if not path.exists():
        raise DataError(f"image file not found: {path}")
    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except Exception as e:
        raise DataError(f"{path}: cannot decode PNG: {e}") from e
    return ImageBuffer.from_array(arr)


def read_image(path: str | Path) -> ImageBuffer:
    """Decode an image file by extension: .ppm (native) or .png (Pillow)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".ppm":
        return read_ppm(path)
    if suffix == ".png":
        return read_png(path)
    raise DataError(f"{path}: unsupported image format {suffix!r} (use .ppm or .png)")
