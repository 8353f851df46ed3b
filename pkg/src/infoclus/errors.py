"""Exception hierarchy. Every error raised on bad input derives from InfoClusError."""


class InfoClusError(Exception):
    """Base class for all library errors."""


class ParseError(InfoClusError):
    pass


class MixedDataError(InfoClusError):
    """Some columns are numeric and others categorical."""


class SizeError(InfoClusError):
    pass


class KindMismatchError(InfoClusError):
    pass


class ArityMismatchError(InfoClusError):
    pass


class EmptyComplementError(InfoClusError):
    pass


class NegativeMassError(InfoClusError):
    pass


class SupportError(InfoClusError):
    """Cluster distribution puts mass on a category the reference never sees."""


class EmptyClusterError(InfoClusError):
    pass


class MinSizeError(InfoClusError):
    pass


class NoCandidateError(InfoClusError):
    pass


class ConfigError(InfoClusError):
    pass
