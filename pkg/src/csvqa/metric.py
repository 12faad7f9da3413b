"""End-to-end CSV score: color, structure and visual-system maps fused into one number."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np

from . import color
from .imaging import (
    INTERPOLATIONS,
    as_image,
    log_kernel,
    mean_pool,
    resample,
    srgb_to_lab,
)
from .structure import rgcd_map, sd_map

CONFIG_SCHEMA_VERSION = 1
COLOR_MODES = ("ciede2000", "euclidean")
VARIANTS = {"b": {"interp": "bilinear"}, "n": {"interp": "nearest"}, "e": {"color_mode": "euclidean"}}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class CsvConfig:
    """All tunables of the estimator. Defaults reproduce the published setting."""

    w: int = 20
    kL: float = 1.0
    kC: float = 1.0
    kH: float = 1.0
    T: float = 20.0
    N: int = 11
    sigma: float = 50.0
    kernel_side: Optional[int] = None  # None: w rounded up to odd
    A: float = 0.9
    P: float = 4.0
    interp: str = "bicubic"
    color_mode: str = "ciede2000"
    table: Optional[str] = None  # None: built-in prototype table
    ground: Optional[str] = None  # None: default ground distances
    eps: float = 1e-6

    def __post_init__(self):
        if int(self.w) != self.w or self.w < 1:
            raise ConfigError("w must be a positive integer")
        if not 0.0 <= self.A <= 1.0:
            raise ConfigError("A must lie in [0, 1]")
        if self.P < 1:
            raise ConfigError("P must be >= 1")
        if self.sigma <= 0:
            raise ConfigError("sigma must be positive")
        if self.N != color.N_NAMES:
            raise ConfigError(f"only N={color.N_NAMES} color names are supported")
        if self.interp not in INTERPOLATIONS:
            raise ConfigError(f"interp must be one of {INTERPOLATIONS}")
        if self.color_mode not in COLOR_MODES:
            raise ConfigError(f"color_mode must be one of {COLOR_MODES}")
        if self.kernel_side is not None and (self.kernel_side < 1 or self.kernel_side % 2 == 0):
            raise ConfigError("kernel_side must be a positive odd integer")
        if min(self.kL, self.kC, self.kH) <= 0 or self.T <= 0 or self.eps < 0:
            raise ConfigError("kL, kC, kH, T must be positive and eps non-negative")

    @property
    def log_side(self) -> int:
        if self.kernel_side is not None:
            return self.kernel_side
        return self.w if self.w % 2 else self.w + 1

    @property
    def ciede_params(self) -> color.Ciede2000Params:
        return color.Ciede2000Params(self.kL, self.kC, self.kH, self.T)

    def variant(self, code: str) -> "CsvConfig":
        """Return the b (bilinear), n (nearest) or e (Euclidean color) variant."""
        try:
            return dataclasses.replace(self, **VARIANTS[code])
        except KeyError:
            raise ConfigError(f"unknown variant {code!r}; expected one of b, n, e") from None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CsvConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def config_hash(self) -> str:
        """Digest over every field plus the contents of referenced files."""
        payload = {"schema": CONFIG_SCHEMA_VERSION, "fields": self.to_dict()}
        for key in ("table", "ground"):
            path = getattr(self, key)
            if path is not None:
                payload[f"{key}_sha256"] = _file_digest(path)
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_config(path) -> CsvConfig:
    """Read a JSON object of CsvConfig fields."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a JSON object")
    return CsvConfig.from_dict(data)


def _file_digest(path) -> str:
    try:
        return hashlib.sha256(Path(path).read_bytes()).hexdigest()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


@lru_cache(maxsize=8)
def _table(path: Optional[str]) -> color.ColorNameTable:
    if path is None:
        return color.ColorNameTable.builtin()
    return color.ColorNameTable.load(path)


@lru_cache(maxsize=8)
def _ground(path: Optional[str]) -> np.ndarray:
    if path is None:
        return color.validate_ground_distance(color.default_ground_distance())
    return color.load_ground_distance(path)


def resources(cfg: CsvConfig):
    """Load (and cache) the color-name table and ground distance for ``cfg``."""
    try:
        return _table(cfg.table), _ground(cfg.ground)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"invalid color-name resources: {exc}") from None


@dataclass
class FeatureMaps:
    ciede: np.ndarray
    cnd: np.ndarray
    sd: np.ndarray
    rgcd: np.ndarray

    def items(self):
        return (("ciede", self.ciede), ("cnd", self.cnd), ("sd", self.sd), ("rgcd", self.rgcd))


@dataclass
class CsvScore:
    value: float
    maps: Optional[FeatureMaps] = field(default=None, repr=False)


def _pooled_lab(img: np.ndarray, w: int) -> np.ndarray:
    lab = srgb_to_lab(img)
    return np.stack([mean_pool(lab[..., j], w) for j in range(3)], axis=-1)


def _upsample(small: np.ndarray, shape, method: str) -> np.ndarray:
    big = resample(small, shape[1], shape[0], method)
    # cubic overshoot must not leave the pooled map's range
    return np.clip(big, small.min(), small.max())


def compute_feature_maps(ref, dist, cfg: CsvConfig = CsvConfig()) -> FeatureMaps:
    """All four difference maps at full input resolution."""
    ref, dist = as_image(ref), as_image(dist)
    if ref.shape != dist.shape:
        raise ValueError(f"dimension mismatch: {ref.shape} vs {dist.shape}")
    table, ground = resources(cfg)
    shape = ref.shape[:2]

    mu_r = _pooled_lab(ref, cfg.w)
    mu_d = _pooled_lab(dist, cfg.w)
    if cfg.color_mode == "ciede2000":
        color_small = color.ciede_map(mu_r, mu_d, cfg.ciede_params)
    else:
        color_small = np.abs(mu_r - mu_d).mean(axis=-1)
    cnd_small = color.cnd_map(mu_r, mu_d, table, ground)

    return FeatureMaps(
        ciede=_upsample(color_small, shape, cfg.interp),
        cnd=_upsample(cnd_small, shape, cfg.interp),
        sd=sd_map(ref, dist, cfg.w, cfg.eps),
        rgcd=rgcd_map(ref, dist, log_kernel(cfg.sigma, cfg.log_side)),
    )


def fuse(maps: FeatureMaps, cfg: CsvConfig) -> np.ndarray:
    """Per-pixel multiplicative fusion of the four maps."""
    return maps.rgcd * maps.sd * (cfg.A * maps.cnd + (1.0 - cfg.A) * maps.ciede)


def pool(fused: np.ndarray, p: float) -> float:
    """One minus the P-th root of the mean fused distortion."""
    return float(1.0 - np.mean(fused) ** (1.0 / p))


def compute_csv(ref, dist, cfg: CsvConfig = CsvConfig(), keep_maps: bool = False) -> CsvScore:
    """Quality of ``dist`` relative to ``ref``; 1.0 means identical."""
    maps = compute_feature_maps(ref, dist, cfg)
    value = pool(fuse(maps, cfg), cfg.P)
    return CsvScore(value, maps if keep_maps else None)
