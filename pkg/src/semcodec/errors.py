"""Exception types raised by the codec."""


class SemcodecError(Exception):
    """Base class for every error raised by this package."""


class FormatError(SemcodecError, ValueError):
    """A file or stream is not in the expected format."""


class LabelOutOfRange(SemcodecError, ValueError):
    pass


class DimensionMismatch(SemcodecError, ValueError):
    pass


class MalformedPathSet(SemcodecError, ValueError):
    pass


class LoopNotClosed(FormatError):
    pass


class TruncatedStream(FormatError):
    pass


class CorruptStream(FormatError):
    pass


class BadMagic(FormatError):
    pass


class UnsupportedVersion(FormatError):
    pass


class TruncatedContainer(FormatError):
    pass


class UnknownBackbone(SemcodecError, KeyError):
    pass


class AdapterError(SemcodecError):
    """Backbone adapter failed; ``adapter_id`` names the culprit."""

    def __init__(self, adapter_id, message):
        super().__init__(f"[{adapter_id}] {message}")
        self.adapter_id = adapter_id


class AdapterProcessFailed(AdapterError):
    def __init__(self, adapter_id, message, returncode=None, stderr=""):
        super().__init__(adapter_id, message)
        self.returncode = returncode
        self.stderr = stderr
