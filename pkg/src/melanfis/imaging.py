"""Image loading and preprocessing.

Rasters are plain numpy arrays:

    RgbRaster   (height, width, 3) uint8
    GrayRaster  (height, width)    float64 in [0, 1]
"""

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import ImageFormatError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def as_rgb(img):
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) raster, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("raster must be at least 1x1")
    if arr.dtype != np.uint8:
        if np.any(arr < 0) or np.any(arr > 255):
            raise ValueError("RGB channels must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def load_image(path):
    """Decode a PNG, JPEG or binary PPM (P6) file into an RGB raster."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image: {path}")
    try:
        with Image.open(path) as im:
            im.load()
            rgb = im.convert("RGB")
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise ImageFormatError(path, str(exc)) from exc
    return np.asarray(rgb, dtype=np.uint8).copy()


def save_image(img, path):
    """Write an RGB raster or a boolean/0-255 mask. Format follows the suffix."""
    arr = np.asarray(img)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8) * 255
    Image.fromarray(arr.astype(np.uint8)).save(Path(path))


def _bilinear_axis(n_src, n_dst):
    # half-pixel centre alignment; resizing to the same size is exact
    pos = (np.arange(n_dst) + 0.5) * (n_src / n_dst) - 0.5
    pos = np.clip(pos, 0.0, n_src - 1)
    lo = np.floor(pos).astype(np.intp)
    hi = np.minimum(lo + 1, n_src - 1)
    frac = pos - lo
    return lo, hi, frac


def resize(img, w, h):
    """Bilinear resize to exactly ``w`` x ``h`` pixels."""
    if w < 1 or h < 1:
        raise ValueError(f"target size must be >= 1x1, got {w}x{h}")
    src = as_rgb(img).astype(np.float64)
    sh, sw = src.shape[:2]
    if (sh, sw) == (h, w):
        return src.astype(np.uint8)
    y0, y1, fy = _bilinear_axis(sh, h)
    x0, x1, fx = _bilinear_axis(sw, w)
    fy = fy[:, None, None]
    fx = fx[None, :, None]
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    out = top * (1 - fy) + bottom * fy
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def to_gray(img):
    """Luminance in [0, 1] using fixed 0.299/0.587/0.114 weights."""
    rgb = as_rgb(img).astype(np.float64)
    wr, wg, wb = LUMA_WEIGHTS
    gray = (wr * rgb[..., 0] + wg * rgb[..., 1] + wb * rgb[..., 2]) / 255.0
    return np.clip(gray, 0.0, 1.0)


def median_filter(img, window=3):
    """Per-channel median over a ``window`` x ``window`` neighbourhood.

    Borders use edge replication. Accepts RGB or gray rasters and returns
    the same type.
    """
    arr = np.asarray(img)
    if arr.ndim not in (2, 3):
        raise ValueError(f"expected a 2-D or 3-D raster, got shape {arr.shape}")
    h, w = arr.shape[:2]
    if window < 1 or window % 2 == 0:
        raise ValueError(f"median window must be an odd integer >= 1, got {window}")
    if window > min(h, w):
        raise ValueError(f"median window {window} exceeds raster size {w}x{h}")
    if window == 1:
        return arr.copy()
    size = (window, window) if arr.ndim == 2 else (window, window, 1)
    return ndimage.median_filter(arr, size=size, mode="nearest")


def preprocess(img, size=500, window=3):
    """Resize to ``size`` x ``size`` then median-filter."""
    return median_filter(resize(img, size, size), window)
