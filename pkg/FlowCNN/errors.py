# errors.py
#
# Exceptions raised by FlowCNN. The base classes decide the exit code of the
# command line tool: ValueError -> 1, IOError -> 2, ArithmeticError -> 3.
################################################################################


class ConfigurationError(ValueError):
    """Layer / parameter shapes do not agree"""
    pass

class ShapeError(ValueError):
    """Image, flow or derivative extents do not agree"""
    pass

class AdmissibilityError(ValueError):
    """Input extents cannot be processed by the network"""
    pass

class DegenerateInputError(ValueError):
    """Image too small to downsample"""
    pass

class StateError(RuntimeError):
    """Operation called in the wrong state, e.g. backward without a forward"""
    pass

class NumericalError(ArithmeticError):
    """A loss or parameter became non-finite"""
    pass

class EmptyDatasetError(IOError):
    """No usable frame pairs found"""
    pass

class CheckpointError(IOError):
    """Checkpoint file could not be decoded"""
    pass

class FlowFormatError(IOError):
    """Bad .flo file"""
    pass

class TruncationError(FlowFormatError):
    """.flo payload does not match the header size"""
    pass

class ImageFormatError(IOError):
    """Image file could not be decoded"""
    pass
