"""CSV: full-reference image quality from color, structure and visual-system cues."""

__version__ = "0.1.0"

from .metric import CsvConfig, CsvScore, FeatureMaps, compute_csv, compute_feature_maps  # noqa: E402

__all__ = ["CsvConfig", "CsvScore", "FeatureMaps", "compute_csv", "compute_feature_maps", "__version__"]
