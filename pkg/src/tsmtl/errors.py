"""Exception types raised across the package."""


class TSMTLError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(TSMTLError, ValueError):
    pass


class InvalidParameterError(TSMTLError, ValueError):
    pass


class StaleCacheError(TSMTLError, RuntimeError):
    """A factorization cache was built for a different shift than requested."""


class DegenerateTargetError(TSMTLError, ValueError):
    pass


class DegenerateFeatureError(TSMTLError, ValueError):
    pass


class SchemaError(TSMTLError, ValueError):
    pass


class ParseError(TSMTLError, ValueError):
    pass


class EmptyTaskError(TSMTLError, ValueError):
    pass


class SplitError(TSMTLError, ValueError):
    pass


class AllRunsDivergedError(TSMTLError, RuntimeError):
    pass
