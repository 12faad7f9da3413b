"""Pixel-level primitives: color conversion, block statistics, filtering, resampling.

Planes are 2-D ``float64`` arrays of shape ``(height, width)``; RGB/Lab/LCh
images are ``(height, width, 3)`` arrays. Every function here is pure.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from PIL import Image
from scipy import signal

log = logging.getLogger(__name__)

# sRGB primaries, D65 white, 2 degree observer
XYZ_FROM_RGB = np.array(
    [
        [0.412453, 0.357580, 0.180423],
        [0.212671, 0.715160, 0.072169],
        [0.019334, 0.119193, 0.950227],
    ]
)
RGB_FROM_XYZ = np.linalg.inv(XYZ_FROM_RGB)
D65_WHITE = np.array([0.95047, 1.0, 1.08883])

_LAB_DELTA = 6.0 / 29.0

INTERPOLATIONS = ("bicubic", "bilinear", "nearest")


def as_plane(p) -> np.ndarray:
    """Validate and return a finite, non-empty 2-D float plane."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D plane, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("plane contains non-finite samples")
    return p


def as_image(img) -> np.ndarray:
    """Validate and return a finite ``(h, w, 3)`` float image."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected an (h, w, 3) image, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite samples")
    return img


def load_rgb(path) -> np.ndarray:
    """Decode an 8-bit PNG/BMP/JPEG file into a float RGB image in [0, 255]."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64)


def save_gray(plane: np.ndarray, path) -> None:
    """Write a plane as an 8-bit grayscale image, min-max normalized."""
    plane = np.asarray(plane, dtype=np.float64)
    lo, hi = float(plane.min()), float(plane.max())
    scaled = np.zeros_like(plane) if hi <= lo else (plane - lo) / (hi - lo)
    Image.fromarray(np.round(scaled * 255.0).astype(np.uint8), mode="L").save(path)


# -- color spaces ----------------------------------------------------------


def _srgb_decode(c):
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _srgb_encode(c):
    c = np.clip(c, 0.0, None)
    return np.where(c <= 0.0031308, 12.92 * c, 1.055 * c ** (1.0 / 2.4) - 0.055)


def _lab_f(t):
    return np.where(t > _LAB_DELTA**3, np.cbrt(t), t / (3 * _LAB_DELTA**2) + 4.0 / 29.0)


def _lab_finv(t):
    return np.where(t > _LAB_DELTA, t**3, 3 * _LAB_DELTA**2 * (t - 4.0 / 29.0))


def srgb_to_lab(img) -> np.ndarray:
    """Convert an sRGB image with channels in [0, 255] to CIELAB (D65).

    Out-of-range samples are clamped; the number clamped is logged.
    """
    img = as_image(img)
    clipped = np.clip(img, 0.0, 255.0)
    n_out = int(np.count_nonzero(clipped != img))
    if n_out:
        log.warning("srgb_to_lab: clamped %d samples to [0, 255]", n_out)
    linear = _srgb_decode(clipped / 255.0)
    xyz = linear @ XYZ_FROM_RGB.T / D65_WHITE
    fx, fy, fz = (_lab_f(xyz[..., i]) for i in range(3))
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)


def lab_to_srgb(lab) -> np.ndarray:
    """Inverse of :func:`srgb_to_lab`; output clamped to [0, 255]."""
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack([_lab_finv(fx), _lab_finv(fy), _lab_finv(fz)], axis=-1) * D65_WHITE
    linear = xyz @ RGB_FROM_XYZ.T
    return np.clip(_srgb_encode(linear) * 255.0, 0.0, 255.0)


def lab_to_lch(lab) -> np.ndarray:
    """Lab to LCh with hue in degrees on [0, 360); hue is 0 where chroma is 0."""
    lab = np.asarray(lab, dtype=np.float64)
    a, b = lab[..., 1], lab[..., 2]
    chroma = np.hypot(a, b)
    hue = np.mod(np.degrees(np.arctan2(b, a)), 360.0)
    hue = np.where((chroma == 0) | (hue >= 360.0), 0.0, hue)
    return np.stack([lab[..., 0], chroma, hue], axis=-1)


# -- block statistics ------------------------------------------------------


def _check_window(w: int) -> int:
    if int(w) != w or w < 1:
        raise ValueError(f"window size must be a positive integer, got {w}")
    return int(w)


def _block_sum(p: np.ndarray, w: int) -> np.ndarray:
    rows = np.add.reduceat(p, np.arange(0, p.shape[0], w), axis=0)
    return np.add.reduceat(rows, np.arange(0, p.shape[1], w), axis=1)


def _block_counts(shape, w: int) -> np.ndarray:
    h, wd = shape
    rh = np.minimum(w, h - np.arange(0, h, w))
    rw = np.minimum(w, wd - np.arange(0, wd, w))
    return np.outer(rh, rw).astype(np.float64)


def _expand(blocks: np.ndarray, w: int, shape) -> np.ndarray:
    """Broadcast per-window values back onto the full pixel grid."""
    return np.repeat(np.repeat(blocks, w, axis=0), w, axis=1)[: shape[0], : shape[1]]


def mean_pool(p, w: int) -> np.ndarray:
    """Mean over non-overlapping ``w x w`` windows.

    Output shape is ``(ceil(h/w), ceil(w_img/w))``. Partial windows on the
    right/bottom edges average only their in-image pixels.
    """
    p = as_plane(p)
    w = _check_window(w)
    return _block_sum(p, w) / _block_counts(p.shape, w)


def std_pool(p, w: int, means=None) -> np.ndarray:
    """Population standard deviation over the same windows as :func:`mean_pool`."""
    p = as_plane(p)
    w = _check_window(w)
    if means is None:
        means = mean_pool(p, w)
    dev = p - _expand(means, w, p.shape)
    return np.sqrt(_block_sum(dev * dev, w) / _block_counts(p.shape, w))


def local_normalize(p, w: int, eps: float = 1e-6) -> np.ndarray:
    """Subtract each window's mean and divide by its std (plus ``eps``)."""
    p = as_plane(p)
    means = mean_pool(p, w)
    stds = std_pool(p, w, means)
    return (p - _expand(means, w, p.shape)) / (_expand(stds, w, p.shape) + eps)


def pooled_shape(shape, w: int) -> tuple[int, int]:
    return (-(-shape[0] // w), -(-shape[1] // w))


# -- filtering -------------------------------------------------------------


def log_kernel(sigma: float, side: int) -> np.ndarray:
    """Sample a Laplacian-of-Gaussian kernel on a ``side x side`` grid.

    Uses a ``1/sqrt(2 pi sigma^2)`` lead factor and no renormalization.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if int(side) != side or side < 1 or side % 2 == 0:
        raise ValueError(f"kernel side must be a positive odd integer, got {side}")
    half = int(side) // 2
    m, n = np.mgrid[-half : half + 1, -half : half + 1].astype(np.float64)
    r2 = m * m + n * n
    s2 = sigma * sigma
    return (r2 - 2 * s2) / (s2 * s2) * np.exp(-r2 / (2 * s2)) / math.sqrt(2 * math.pi * s2)


def convolve(p, kernel) -> np.ndarray:
    """2-D convolution with symmetric (mirror) border padding; same-size output."""
    p = as_plane(p)
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1] or kernel.shape[0] % 2 == 0:
        raise ValueError("kernel must be square with odd side")
    half = kernel.shape[0] // 2
    padded = np.pad(p, half, mode="symmetric")
    return signal.convolve(padded, kernel, mode="valid")


# -- resampling ------------------------------------------------------------


def _cubic(x: np.ndarray, a: float = -0.5) -> np.ndarray:
    x = np.abs(x)
    x2, x3 = x * x, x * x * x
    near = (a + 2) * x3 - (a + 3) * x2 + 1
    far = a * x3 - 5 * a * x2 + 8 * a * x - 4 * a
    return np.where(x <= 1, near, np.where(x < 2, far, 0.0))


def _resample_matrix(n_src: int, n_dst: int, method: str) -> np.ndarray:
    mat = np.zeros((n_dst, n_src))
    rows = np.arange(n_dst)
    if method == "nearest":
        mat[rows, rows * n_src // n_dst] = 1.0
        return mat
    # pixel-center alignment, edge samples replicated
    x = (rows + 0.5) * (n_src / n_dst) - 0.5
    base = np.floor(x).astype(int)
    if method == "bilinear":
        taps, weight = (0, 1), lambda d: np.maximum(0.0, 1.0 - np.abs(d))
    elif method == "bicubic":
        taps, weight = (-1, 0, 1, 2), _cubic
    else:
        raise ValueError(f"unknown interpolation {method!r}; expected one of {INTERPOLATIONS}")
    for t in taps:
        idx = base + t
        np.add.at(mat, (rows, np.clip(idx, 0, n_src - 1)), weight(x - idx))
    return mat


def resample(p, target_w: int, target_h: int, method: str = "bicubic") -> np.ndarray:
    """Separable resize of a plane to ``(target_h, target_w)``."""
    p = as_plane(p)
    if target_w < 1 or target_h < 1:
        raise ValueError("target dimensions must be >= 1")
    if method not in INTERPOLATIONS:
        raise ValueError(f"unknown interpolation {method!r}; expected one of {INTERPOLATIONS}")
    rows = _resample_matrix(p.shape[0], int(target_h), method)
    cols = _resample_matrix(p.shape[1], int(target_w), method)
    return rows @ p @ cols.T
