"""Scale-and-texture augmentation, click simulation and metrics for small-structure segmentation."""

from .clicks import ClickLabel, ClickPrompt, PromptSession, error_map, initial_click, mock_predictor, next_click, simulate_session
from .errors import EmptyMask, EmptySourceSet, EmptyWindow, InvalidInput, PredictorContractViolation, SasError
from .metrics import BootstrapCI, MetricConfig, MetricResult, bootstrap_ci, dsc, evaluate_dataset, nsd
from .preprocess import PreprocConfig, RawPair, crop_us_window, preprocess_pair
from .raster import Connectivity
from .sas import NoiseKind, NoiseSpec, Placement, Sample, SasConfig, SizeClass, augment_batch, augment_one, classify_size, inject_noise, sas_transform

__version__ = "0.1.0"

__all__ = [
    "BootstrapCI", "ClickLabel", "ClickPrompt", "Connectivity", "EmptyMask", "EmptySourceSet",
    "EmptyWindow", "InvalidInput", "MetricConfig", "MetricResult", "NoiseKind", "NoiseSpec",
    "Placement", "PredictorContractViolation", "PreprocConfig", "PromptSession", "RawPair",
    "Sample", "SasConfig", "SasError", "SizeClass", "augment_batch", "augment_one", "bootstrap_ci",
    "classify_size", "crop_us_window", "dsc", "error_map", "evaluate_dataset", "initial_click",
    "inject_noise", "mock_predictor", "next_click", "nsd", "preprocess_pair", "sas_transform",
    "simulate_session",
]
