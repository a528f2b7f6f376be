"""Reconstruction of broken contour lines in scanned contour maps."""

from .raster import BinaryImage, GrayImage, PixelCoord
from .pipeline import PipelineConfig, run

__all__ = ["BinaryImage", "GrayImage", "PixelCoord", "PipelineConfig", "run"]
__version__ = "0.1.0"
