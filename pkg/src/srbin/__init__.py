"""Super-resolution pre-processing harness for document image binarization."""

from srbin.errors import SrBinError
from srbin.raster import BinaryMask, Raster

__version__ = "0.1.0"

__all__ = ["BinaryMask", "Raster", "SrBinError", "__version__"]
