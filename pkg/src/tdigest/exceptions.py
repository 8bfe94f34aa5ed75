class TDigestError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(TDigestError, ValueError):
    pass


class DomainError(TDigestError, ValueError):
    """An argument lies outside the domain of the operation."""


class EmptyDigestError(TDigestError, ValueError):
    def __init__(self, msg="empty digest"):
        super().__init__(msg)


class InvalidSampleError(TDigestError, ValueError):
    """NaN/infinite values or nonpositive weights."""


class IncompatibleDigestError(TDigestError, ValueError):
    pass


class NotInstrumentedError(TDigestError):
    pass


class CodecError(TDigestError, ValueError):
    pass


class BadMagicError(CodecError):
    pass


class UnsupportedVersionError(CodecError):
    pass


class TruncatedPayloadError(CodecError):
    def __init__(self, msg="truncated payload"):
        super().__init__(msg)


class NonMonotoneMeansError(CodecError):
    pass


class MalformedImageError(CodecError):
    """Unknown encoding tag or scale kind, trailing bytes and similar."""
