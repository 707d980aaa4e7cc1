"""Chaotic feature watermark: bit generation, embedding, detection and capacity analysis."""
from .capacity import (capacity_bound, correlation_detector_rate, detection_bound,
                       gaussian_tail, local_variance, optimize_strength)
from .chaos import ChaoticBits, LorenzConfig, lorenz_bits, lorenz_trajectory
from .embed import (DEFAULT_ALPHA, DEFAULT_BAND, DEFAULT_THRESHOLD, DetectionResult,
                    EmbedConfig, EmbedReceipt, detect, embed, embedding_plan, extract,
                    local_dimensions, local_strength, pearson, verify)
from .features import WatermarkMatrix, build_watermark, image_features, multiscale_features

__all__ = [
    "ChaoticBits", "DEFAULT_ALPHA", "DEFAULT_BAND", "DEFAULT_THRESHOLD", "DetectionResult",
    "EmbedConfig", "EmbedReceipt", "LorenzConfig", "WatermarkMatrix", "build_watermark",
    "capacity_bound", "correlation_detector_rate", "detect", "detection_bound", "embed",
    "embedding_plan", "extract", "gaussian_tail", "image_features", "local_dimensions",
    "local_strength", "local_variance", "lorenz_bits", "lorenz_trajectory",
    "multiscale_features", "optimize_strength", "pearson", "verify",
]
