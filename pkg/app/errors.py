"""
Exception hierarchy shared by the physics, analysis and command layers
"""


class WellEchoError(Exception):
    """Base class for every error raised by the well-echo package"""


class InvalidModelError(WellEchoError, ValueError):
    """Raised when the expansion factor cannot describe a sudden expansion"""


class InvalidTimeError(WellEchoError, ValueError):
    """Raised for malformed rational or real times"""


class GridError(WellEchoError, ValueError):
    """Raised for grids that are empty, unsorted or leave [0, lambda]"""


class UnderResolvedGridError(GridError):
    """Raised when a grid is too coarse for the requested detector"""


class GridMismatchError(GridError):
    """Raised when two profiles are compared on different grids"""


class ThresholdError(WellEchoError, ValueError):
    """Raised when a fragmentation construction is requested below its threshold"""


class SingularParameterError(WellEchoError, ValueError):
    """Raised when a closed form is evaluated at one of its poles"""


class QuadratureError(WellEchoError, RuntimeError):
    """Raised when a numerical integral fails to converge"""


class ConfigurationError(WellEchoError, ValueError):
    """Raised for invalid run configurations"""


class InvalidParameterError(WellEchoError, ValueError):
    """Raised for out-of-range numerical parameters such as tolerances or cutoffs"""
