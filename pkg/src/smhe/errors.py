"""Exception hierarchy shared by every layer of the package."""


class SMHEError(Exception):
    """Base class; the CLI maps these to exit code 1."""


class ParameterError(SMHEError):
    pass


class RingMismatchError(SMHEError, ValueError):
    """Operands live in different rings or in different representations."""


class KeyMismatchError(SMHEError):
    """Public keys disagree on the CRS, or material belongs to another party."""


class MissingMaterialError(SMHEError):
    """A key, mask or partial decryption needed by an operation is absent."""


class PlaintextRangeError(SMHEError, ValueError):
    pass


class NoiseBudgetExceeded(SMHEError):
    """The tracked noise bound would no longer guarantee correct decryption."""


class SerializationError(SMHEError):
    pass


class ConfigError(SMHEError):
    pass
