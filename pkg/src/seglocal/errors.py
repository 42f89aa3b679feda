"""Exception hierarchy shared across the library.

Argument/contract violations double as ``ValueError`` so callers that do not
care about the fine-grained type can catch the usual built-in.
"""


class SegLocalError(Exception):
    """Base class for all library errors."""


class EmptyInput(SegLocalError, ValueError):
    """An operation that requires at least one element received none."""


class InvalidArgument(SegLocalError, ValueError):
    """A parameter is outside its documented domain."""


# --- file I/O -----------------------------------------------------------

class ParseError(SegLocalError):
    """A cloud file does not parse under its declared format."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class UnsupportedFormat(SegLocalError):
    """File format (or format feature) the loaders do not handle."""


class VersionMismatch(SegLocalError):
    """A binary container declares a format version we cannot read."""


class CorruptFile(SegLocalError):
    """Magic, structure, or checksum of a binary container is wrong."""


class NonFiniteRowWarning(UserWarning):
    """Rows with NaN/Inf coordinates were dropped while loading a cloud."""

    def __init__(self, count, path=""):
        self.count = count
        self.path = str(path)
        super().__init__(f"dropped {count} non-finite row(s) from {path}")


# --- labeling / swathes --------------------------------------------------

class InvalidRadii(SegLocalError, ValueError):
    """match_radius must be strictly smaller than non_match_radius."""


class NonMonotonicTimestamps(SegLocalError, ValueError):
    """Scan timestamps went backwards while accumulating a swathe."""


# --- sampling ------------------------------------------------------------

class BadSampleSize(SegLocalError, ValueError):
    """Requested sample size is outside [1, number of points]."""


class BadSeed(SegLocalError, ValueError):
    """Seed index does not address a valid point."""


class RaggedBatch(SegLocalError, ValueError):
    """Sample size exceeds the valid point count of some batch entry."""


# --- preprocessing / descriptors ----------------------------------------

class EmptySegment(SegLocalError, ValueError):
    """A segment with zero points cannot be resampled or described."""


class InsufficientNeighbors(SegLocalError, ValueError):
    """K*D exceeds the number of input points available to a layer."""


class ModelNotLoaded(SegLocalError):
    """Descriptor inference was requested before a model was provided."""


class ShapeMismatch(SegLocalError, ValueError):
    """Tensor or input shapes disagree with the model configuration."""


class DegenerateCovariance(SegLocalError, ValueError):
    """Too few points (or rank-0 spread) for covariance shape features."""


# --- matching / registration --------------------------------------------

class KindMismatch(SegLocalError, ValueError):
    """Descriptors of different kinds (or lengths) cannot be compared."""


class EmptyMap(SegLocalError, ValueError):
    """Matching against a map with no segments."""


class MissingQuality(SegLocalError, ValueError):
    """An operation requiring quality scores got correspondences without."""


class DegenerateConfiguration(SegLocalError, ValueError):
    """Point pairs are collinear/coincident; no unique rigid transform."""


class TooFewCorrespondences(SegLocalError, ValueError):
    """Robust pose estimation needs at least three correspondences."""


# --- evaluation ----------------------------------------------------------

class SingleClass(SegLocalError, ValueError):
    """ROC analysis needs both match and non-match examples."""


class TooFewSegments(SegLocalError, ValueError):
    """Rotation-variation normalization needs at least two segments."""


class ConfigMismatch(SegLocalError, ValueError):
    """Pipeline configuration is inconsistent with the map it is run on."""
