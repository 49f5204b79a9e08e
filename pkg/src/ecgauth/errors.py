"""Exception hierarchy shared by every ecgauth module."""


class EcgAuthError(Exception):
    """Base class for all errors raised by ecgauth."""


# ingest
class TruncatedInput(EcgAuthError, ValueError):
    pass


class UnsupportedFormat(EcgAuthError, ValueError):
    pass


class MalformedHeader(EcgAuthError, ValueError):
    pass


class EmptyInput(EcgAuthError, ValueError):
    pass


class ParseError(EcgAuthError, ValueError):
    def __init__(self, line, message="could not parse sample"):
        self.line = line
        super().__init__(f"line {line}: {message}")


# dsp / features / matching
class InputTooShort(EcgAuthError, ValueError):
    pass


class NotEnoughPeaks(EcgAuthError, ValueError):
    pass


class FlatSegment(EcgAuthError, ValueError):
    pass


class LengthMismatch(EcgAuthError, ValueError):
    pass


class DegenerateInput(EcgAuthError, ValueError):
    pass


class FingerprintMismatch(EcgAuthError, ValueError):
    pass


# authflow
class InvalidBudget(EcgAuthError, ValueError):
    pass


class InvalidThreshold(EcgAuthError, ValueError):
    pass


class SessionTerminal(EcgAuthError, RuntimeError):
    pass


class EmptyTemplateSet(EcgAuthError, ValueError):
    pass


# store
class CorruptStore(EcgAuthError, ValueError):
    def __init__(self, line, message="unreadable record"):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DuplicateSubject(EcgAuthError, KeyError):
    def __str__(self):
        return f"subject already enrolled: {self.args[0]}"


# proto
class ProtoError(EcgAuthError):
    """Anything that goes wrong on the wire."""


class PayloadTooLarge(ProtoError, ValueError):
    pass


class NeedMoreData(ProtoError):
    """The buffer holds less than one complete frame. Not a failure."""


class FrameError(ProtoError, ValueError):
    """A received frame is invalid; the peer or the line is at fault."""


class BadMagic(FrameError):
    pass


class BadVersion(FrameError):
    pass


class CrcMismatch(FrameError):
    pass


class UnknownType(FrameError):
    pass


class MalformedPayload(FrameError):
    pass


class ConnectionFailed(ProtoError, ConnectionError):
    pass


class ProtocolError(ProtoError):
    """The peer sent a well-formed message that makes no sense here."""
