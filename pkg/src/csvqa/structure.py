"""Structural (SD) and retinal-ganglion-cell (RGCD) difference maps."""

from __future__ import annotations

import numpy as np

from .imaging import as_image, convolve, local_normalize


def geometric_fuse(channels) -> np.ndarray:
    """Per-pixel geometric mean of three non-negative planes.

    Computed as the cube root of the product so exact zeros stay zero.
    """
    x, y, z = (np.asarray(c, dtype=np.float64) for c in channels)
    if not (x.shape == y.shape == z.shape):
        raise ValueError("channel planes must share dimensions")
    if np.any(x < 0) or np.any(y < 0) or np.any(z < 0):
        raise ValueError("geometric_fuse requires non-negative samples")
    return np.cbrt(x * y * z)


def _pair(ref, dist):
    ref, dist = as_image(ref), as_image(dist)
    if ref.shape != dist.shape:
        raise ValueError(f"dimension mismatch: {ref.shape} vs {dist.shape}")
    return ref, dist


def sd_channels(ref, dist, w: int, eps: float = 1e-6) -> list[np.ndarray]:
    ref, dist = _pair(ref, dist)
    return [
        np.abs(local_normalize(ref[..., j], w, eps) - local_normalize(dist[..., j], w, eps))
        for j in range(3)
    ]


def sd_map(ref, dist, w: int, eps: float = 1e-6) -> np.ndarray:
    """Structural difference: locally normalized RGB channels, abs diff, geometric mean."""
    return geometric_fuse(sd_channels(ref, dist, w, eps))


def rgcd_channels(ref, dist, kernel) -> list[np.ndarray]:
    ref, dist = _pair(ref, dist)
    return [
        np.abs(convolve(ref[..., j], kernel) - convolve(dist[..., j], kernel))
        for j in range(3)
    ]


def rgcd_map(ref, dist, kernel) -> np.ndarray:
    """Absolute difference of LoG-filtered RGB channels, fused by geometric mean."""
    return geometric_fuse(rgcd_channels(ref, dist, kernel))
