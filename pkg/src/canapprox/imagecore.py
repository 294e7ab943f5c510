"""Image substrate: float32 HxWxC arrays, 8-bit PNG I/O, resizing, luma.

Images are plain ``numpy`` arrays of shape ``(height, width, channels)`` with
``channels`` in {1, 3} and dtype float32, nominal range [0, 1].
"""

import math
import os

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


class ImageError(Exception):
    """Base class for image I/O failures."""


class ImageNotFoundError(ImageError, FileNotFoundError):
    pass


class UnsupportedImageError(ImageError):
    """Bit depth or color type outside 8-bit gray / RGB."""


class MalformedImageError(ImageError):
    pass


class ImageWriteError(ImageError, OSError):
    pass


def as_image(arr):
    """Validate ``arr`` and return it as a float32 HxWxC image.

    2-D input is promoted to a single channel.
    """
    a = np.asarray(arr, dtype=np.float32)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise ValueError(f"expected HxWx1 or HxWx3 image, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    if not np.all(np.isfinite(a)):
        raise ValueError("image contains non-finite samples")
    return a


def load_image(path):
    """Read an 8-bit grayscale or RGB PNG into a float32 image in [0, 1]."""
    path = os.fspath(path)
    if not os.path.exists(path):
        raise ImageNotFoundError(f"no such file: {path}")
    try:
        with PILImage.open(path) as im:
            if im.format != "PNG":
                raise UnsupportedImageError(f"{path}: not a PNG ({im.format})")
            mode = im.mode
            if mode not in ("L", "RGB"):
                raise UnsupportedImageError(
                    f"{path}: unsupported PNG mode {mode!r} (need 8-bit L or RGB)")
            data = np.asarray(im, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        if isinstance(exc, ImageError):
            raise
        raise MalformedImageError(f"{path}: {exc}") from exc
    if data.ndim == 2:
        data = data[:, :, None]
    return data.astype(np.float32) / np.float32(255.0)


def quantize(img):
    """Clamp to [0, 1] and quantize to uint8 with round-half-up."""
    a = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    return np.floor(a * 255.0 + 0.5).astype(np.uint8)


def save_image(img, path):
    img = as_image(img)
    q = quantize(img)
    pil = PILImage.fromarray(q[:, :, 0] if q.shape[2] == 1 else q)
    try:
        pil.save(os.fspath(path), format="PNG")
    except OSError as exc:
        raise ImageWriteError(f"cannot write {path}: {exc}") from exc


def _interp_axis(n_in, n_out):
    scale = n_in / n_out
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    return i0, i1, frac


def resize_bilinear(img, out_h, out_w):
    """Bilinear resize with half-pixel centers and border clamping."""
    img = as_image(img)
    if out_h < 1 or out_w < 1:
        raise ValueError("output size must be at least 1x1")
    h, w, _ = img.shape
    if (h, w) == (out_h, out_w):
        return img.copy()
    a = img.astype(np.float64)
    r0, r1, fr = _interp_axis(h, out_h)
    a = a[r0] * (1.0 - fr)[:, None, None] + a[r1] * fr[:, None, None]
    c0, c1, fc = _interp_axis(w, out_w)
    a = a[:, c0] * (1.0 - fc)[None, :, None] + a[:, c1] * fc[None, :, None]
    return a.astype(np.float32)


def scaled_width(h_src, w_src, out_h):
    return max(1, int(math.floor(out_h * w_src / h_src + 0.5)))


def draw_height(min_h, max_h, rng):
    """Integer drawn uniformly from [min_h, max_h]."""
    if not 1 <= min_h <= max_h:
        raise ValueError("need 1 <= min_h <= max_h")
    return int(rng.integers(min_h, max_h + 1))


def random_resize(img, min_h, max_h, rng):
    """Resize to a height drawn uniformly from [min_h, max_h], keeping aspect."""
    img = as_image(img)
    out_h = draw_height(min_h, max_h, rng)
    return resize_bilinear(img, out_h, scaled_width(img.shape[0], img.shape[1], out_h))


def to_gray(img):
    img = as_image(img)
    if img.shape[2] == 1:
        return img
    wr, wg, wb = LUMA_WEIGHTS
    a = img.astype(np.float64)
    g = wr * a[:, :, 0] + wg * a[:, :, 1] + wb * a[:, :, 2]
    return g[:, :, None].astype(np.float32)
