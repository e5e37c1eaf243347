"""Benchmark PSNR and BRISQUE under seeded salt-and-pepper, Gaussian and rotation corruption."""
from .brisque import brisque_score, extract_features, image_features
from .datasets import load_dataset, sample_images
from .estimators import BrisqueFeatures, BrisqueRegressor, Corruptor, RangeScaler
from .errors import (BenchError, ConfigError, DataFormatError, IncompleteGroupError, IncompleteInputsError,
                     ProvenanceError)
from .image import Image
from .perturb import REGISTRY_NAMES, apply_condition, parse_condition
from .psnr import UNDEFINED, psnr
from .stats import summarize
from .svr import load_range_file, load_svr_model

__version__ = "0.1.0"

__all__ = [
    "BrisqueFeatures", "BrisqueRegressor", "Corruptor", "RangeScaler",
    "BenchError", "ConfigError", "DataFormatError", "Image", "IncompleteGroupError", "IncompleteInputsError",
    "ProvenanceError", "REGISTRY_NAMES", "UNDEFINED", "apply_condition", "brisque_score", "extract_features",
    "image_features", "load_dataset", "load_range_file", "load_svr_model", "parse_condition", "psnr",
    "sample_images", "summarize",
]
