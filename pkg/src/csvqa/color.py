"""Perceptual color difference: CIEDE2000 maps and color-name distance maps."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .imaging import lab_to_srgb, srgb_to_lab
from .transport import emd

COLOR_NAMES = (
    "black", "blue", "brown", "grey", "green", "orange",
    "pink", "purple", "red", "white", "yellow",
)
N_NAMES = len(COLOR_NAMES)
N_BINS = 32 * 32 * 32

SIMILAR_PAIRS = (
    ("black", "brown"),
    ("black", "grey"),
    ("brown", "grey"),
    ("grey", "white"),
    ("orange", "red"),
)

# sRGB prototypes for the built-in soft color-name table
_PROTOTYPES = {
    "black": (0, 0, 0),
    "blue": (0, 0, 255),
    "brown": (139, 69, 19),
    "grey": (128, 128, 128),
    "green": (0, 128, 0),
    "orange": (255, 165, 0),
    "pink": (255, 192, 203),
    "purple": (128, 0, 128),
    "red": (255, 0, 0),
    "white": (255, 255, 255),
    "yellow": (255, 255, 0),
}


@dataclass(frozen=True)
class Ciede2000Params:
    kL: float = 1.0
    kC: float = 1.0
    kH: float = 1.0
    T: float = 20.0

    def __post_init__(self):
        if min(self.kL, self.kC, self.kH) <= 0 or self.T <= 0:
            raise ValueError("CIEDE2000 parameters must be positive")


def ciede2000(lab1, lab2, kL: float = 1.0, kC: float = 1.0, kH: float = 1.0):
    """CIEDE2000 color difference between Lab arrays of shape ``(..., 3)``.

    Symmetric in its arguments; returns a float for single triples.
    """
    lab1 = np.asarray(lab1, dtype=np.float64)
    lab2 = np.asarray(lab2, dtype=np.float64)
    L1, a1, b1 = lab1[..., 0], lab1[..., 1], lab1[..., 2]
    L2, a2, b2 = lab2[..., 0], lab2[..., 1], lab2[..., 2]

    c_bar = (np.hypot(a1, b1) + np.hypot(a2, b2)) / 2.0
    c_bar7 = c_bar**7
    g = 0.5 * (1.0 - np.sqrt(c_bar7 / (c_bar7 + 25.0**7)))
    a1p, a2p = (1.0 + g) * a1, (1.0 + g) * a2
    c1p, c2p = np.hypot(a1p, b1), np.hypot(a2p, b2)
    h1p = np.where((a1p == 0) & (b1 == 0), 0.0, np.mod(np.degrees(np.arctan2(b1, a1p)), 360.0))
    h2p = np.where((a2p == 0) & (b2 == 0), 0.0, np.mod(np.degrees(np.arctan2(b2, a2p)), 360.0))

    dl = L2 - L1
    dc = c2p - c1p
    cprod = c1p * c2p
    dh = h2p - h1p
    dh = np.where(dh > 180.0, dh - 360.0, np.where(dh < -180.0, dh + 360.0, dh))
    dh = np.where(cprod == 0, 0.0, dh)
    dH = 2.0 * np.sqrt(cprod) * np.sin(np.radians(dh / 2.0))

    l_bar = (L1 + L2) / 2.0
    cp_bar = (c1p + c2p) / 2.0
    hsum = h1p + h2p
    h_bar = np.where(
        np.abs(h1p - h2p) <= 180.0,
        hsum / 2.0,
        np.where(hsum < 360.0, (hsum + 360.0) / 2.0, (hsum - 360.0) / 2.0),
    )
    h_bar = np.where(cprod == 0, hsum, h_bar)

    t = (
        1.0
        - 0.17 * np.cos(np.radians(h_bar - 30.0))
        + 0.24 * np.cos(np.radians(2.0 * h_bar))
        + 0.32 * np.cos(np.radians(3.0 * h_bar + 6.0))
        - 0.20 * np.cos(np.radians(4.0 * h_bar - 63.0))
    )
    d_theta = 30.0 * np.exp(-(((h_bar - 275.0) / 25.0) ** 2))
    cp_bar7 = cp_bar**7
    r_c = 2.0 * np.sqrt(cp_bar7 / (cp_bar7 + 25.0**7))
    l50 = (l_bar - 50.0) ** 2
    s_l = 1.0 + 0.015 * l50 / np.sqrt(20.0 + l50)
    s_c = 1.0 + 0.045 * cp_bar
    s_h = 1.0 + 0.015 * cp_bar * t
    r_t = -np.sin(np.radians(2.0 * d_theta)) * r_c

    tl = dl / (kL * s_l)
    tc = dc / (kC * s_c)
    th = dH / (kH * s_h)
    de = np.sqrt(np.maximum(tl * tl + tc * tc + th * th + r_t * tc * th, 0.0))
    return float(de) if de.ndim == 0 else de


def _check_same_shape(x, y):
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")


def ciede_map(mu_ref, mu_dist, params: Ciede2000Params = Ciede2000Params()) -> np.ndarray:
    """Per-pixel CIEDE2000 between two Lab maps, capped at ``params.T``."""
    mu_ref = np.asarray(mu_ref, dtype=np.float64)
    mu_dist = np.asarray(mu_dist, dtype=np.float64)
    _check_same_shape(mu_ref, mu_dist)
    de = ciede2000(mu_ref, mu_dist, params.kL, params.kC, params.kH)
    return np.minimum(de, params.T)


# -- color names -----------------------------------------------------------


def bin_index(rgb) -> np.ndarray:
    """Quantized lookup index ``R//8 + 32*(G//8) + 1024*(B//8)``."""
    q = np.clip(np.floor(np.asarray(rgb, dtype=np.float64) / 8.0), 0, 31).astype(np.int64)
    return q[..., 0] + 32 * q[..., 1] + 1024 * q[..., 2]


class ColorNameTable:
    """Immutable 32768 x 11 lookup from quantized RGB to color-name probabilities."""

    def __init__(self, probs, renorm_tol: float = 1e-3):
        probs = np.array(probs, dtype=np.float64)
        if probs.shape != (N_BINS, N_NAMES):
            raise ValueError(f"color-name table must be {N_BINS}x{N_NAMES}, got {probs.shape}")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise ValueError("color-name table has negative or non-finite entries")
        sums = probs.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > renorm_tol)
        if bad.size:
            raise ValueError(f"color-name table row {bad[0]} sums to {sums[bad[0]]:.6g}")
        probs /= sums[:, None]
        probs.setflags(write=False)
        self.probs = probs

    @classmethod
    def load(cls, path) -> "ColorNameTable":
        """Read a whitespace-separated text table (one row per bin)."""
        probs = np.loadtxt(path, dtype=np.float64, ndmin=2)
        return cls(probs)

    @classmethod
    def builtin(cls) -> "ColorNameTable":
        return _builtin_table()

    def save(self, path) -> None:
        np.savetxt(path, self.probs, fmt="%.10g")

    def lookup(self, rgb) -> np.ndarray:
        """Descriptor(s) for RGB values in [0, 255]; shape ``(..., 11)``."""
        return self.probs[bin_index(rgb)]


def lookup_descriptor(rgb, table: ColorNameTable) -> np.ndarray:
    return table.lookup(rgb)


@lru_cache(maxsize=1)
def _builtin_table(spread: float = 12.0) -> ColorNameTable:
    """Soft assignment of each bin center to the nearest color-name prototypes in Lab."""
    q = np.arange(32) * 8.0 + 3.5
    b, g, r = np.meshgrid(q, q, q, indexing="ij")
    centers = np.stack([r.ravel(), g.ravel(), b.ravel()], axis=-1)
    lab = srgb_to_lab(centers[None])[0]
    protos = srgb_to_lab(np.array([_PROTOTYPES[n] for n in COLOR_NAMES], float)[None])[0]
    d2 = ((lab[:, None, :] - protos[None, :, :]) ** 2).sum(axis=-1)
    logits = -d2 / (2.0 * spread**2)
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    return ColorNameTable(w / w.sum(axis=1, keepdims=True))


def default_ground_distance(similar: float = 0.5) -> np.ndarray:
    """Zero diagonal, ``similar`` for the perceptually close pairs, 1 elsewhere."""
    d = np.ones((N_NAMES, N_NAMES)) - np.eye(N_NAMES)
    for x, y in SIMILAR_PAIRS:
        i, j = COLOR_NAMES.index(x), COLOR_NAMES.index(y)
        d[i, j] = d[j, i] = similar
    return d


def validate_ground_distance(d) -> np.ndarray:
    d = np.array(d, dtype=np.float64)
    if d.shape != (N_NAMES, N_NAMES):
        raise ValueError(f"ground distance must be {N_NAMES}x{N_NAMES}, got {d.shape}")
    if not np.allclose(d, d.T, atol=1e-12, rtol=0):
        raise ValueError("ground distance must be symmetric")
    if np.any(np.diag(d) != 0):
        raise ValueError("ground distance must have a zero diagonal")
    if np.any(d < 0) or np.any(d > 1):
        raise ValueError("ground distance entries must lie in [0, 1]")
    d.setflags(write=False)
    return d


def load_ground_distance(path) -> np.ndarray:
    return validate_ground_distance(np.loadtxt(Path(path), dtype=np.float64, ndmin=2))


def cnd_map(mu_ref, mu_dist, table: ColorNameTable, ground=None) -> np.ndarray:
    """Per-pixel EMD between color-name descriptors of two pooled Lab maps.

    Pooled Lab values are mapped back to sRGB for table indexing.
    """
    mu_ref = np.asarray(mu_ref, dtype=np.float64)
    mu_dist = np.asarray(mu_dist, dtype=np.float64)
    _check_same_shape(mu_ref, mu_dist)
    ground = default_ground_distance() if ground is None else np.asarray(ground)
    idx_r = bin_index(lab_to_srgb(mu_ref)).ravel()
    idx_d = bin_index(lab_to_srgb(mu_dist)).ravel()
    out = np.zeros(idx_r.size)
    cache: dict[tuple[int, int], float] = {}
    for k, (i, j) in enumerate(zip(idx_r.tolist(), idx_d.tolist())):
        if i == j:
            continue
        key = (i, j) if i < j else (j, i)
        if key not in cache:
            cache[key] = emd(table.probs[key[0]], table.probs[key[1]], ground)
        out[k] = cache[key]
    return out.reshape(mu_ref.shape[:2])
