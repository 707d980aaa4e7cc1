"""Multifractal and turbulence signatures, feature watermarks and provenance artifacts for raster art."""
from .errors import FractalMarkError
from .fractal import analyze_fractal, capacity_dimension
from .turbulence import turbulence_stats
from .watermark import EmbedConfig, build_watermark, detect, embed, extract, verify

__version__ = "0.1.0"

__all__ = [
    "EmbedConfig", "FractalMarkError", "analyze_fractal", "build_watermark",
    "capacity_dimension", "detect", "embed", "extract", "turbulence_stats", "verify",
]
