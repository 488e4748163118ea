"""
Exception hierarchy shared by every FSG module

Library code raises these; the CLI turns them into exit codes.
"""


class FSGError(Exception):
    """Base class for all pipeline errors"""


class DimensionError(FSGError):
    """Array shapes do not line up"""

    def __init__(self, message, axis=None):
        self.axis = axis
        super().__init__(message)


class ParameterError(FSGError):
    """A numeric parameter is outside its valid range"""


class ConfigurationError(FSGError):
    """Inconsistent configuration (layer table, run config, camera setup)"""


class NumericalError(FSGError):
    """NaN or Inf reached a tensor"""


class DataError(FSGError):
    """Dataset or image content is unusable"""


class LabelError(DataError):
    """A grasp rectangle cannot be encoded"""

    def __init__(self, message, grasp_index=None):
        self.grasp_index = grasp_index
        super().__init__(message)


class SkipSample(DataError):
    """Augmentation could not keep any grasp in frame"""


class SampleFormatError(DataError):
    """On-disk sample is malformed"""


class MissingFileError(SampleFormatError):
    """A file of the sample triple is missing"""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(message)


class MetadataError(SampleFormatError):
    """Metadata JSON cannot be parsed or lacks fields"""


class BitDepthError(SampleFormatError):
    """Image stored with the wrong bit depth or channel count"""


class ImageSizeMismatchError(SampleFormatError):
    """RGB and depth images differ in size"""


class ValidationError(SampleFormatError):
    """Metadata parsed but violates an invariant"""


class CheckpointError(FSGError):
    """Checkpoint file cannot be loaded"""


class BadMagicError(CheckpointError):
    """File does not start with the checkpoint magic"""


class TruncatedCheckpointError(CheckpointError):
    """Header or tensor blobs are shorter than declared"""


class ShapeMismatchError(CheckpointError):
    """Manifest shape disagrees with the layer table"""

    def __init__(self, message, layer=None):
        self.layer = layer
        super().__init__(message)


class GeometryError(FSGError):
    """Camera geometry cannot be evaluated"""


class GenerationError(FSGError):
    """Scene generation exhausted its placement retries"""


class PlanConsistencyError(FSGError):
    """An emitted plan violates its own height ordering"""
