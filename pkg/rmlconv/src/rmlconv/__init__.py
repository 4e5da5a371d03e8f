"""RadioML 2016.10A pickle archive to IQDS dataset converter."""

from .convert import (
    ArchiveError,
    CLASS_NAMES,
    ConvertSpec,
    DEFAULT_SNRS,
    FilterError,
    convert,
    load_archive,
)

__version__ = "0.1.0"

__all__ = [
    "ArchiveError",
    "CLASS_NAMES",
    "ConvertSpec",
    "DEFAULT_SNRS",
    "FilterError",
    "convert",
    "load_archive",
]
