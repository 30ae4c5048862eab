"""Augmentation-graph laboratory for contrastive pretraining and targeted augmentation."""

from .errors import AugmentationError, NumericalError, ValidationError
from .numerics import Rng

__all__ = ["AugmentationError", "NumericalError", "Rng", "ValidationError"]
__version__ = "0.1.0"
