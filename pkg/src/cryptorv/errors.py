"""Exception hierarchy shared by all modules."""


class CryptoRVError(Exception):
    pass


# primitives

class SizeMismatchError(CryptoRVError, ValueError):
    pass


class InvalidLengthError(CryptoRVError, ValueError):
    pass


class InvalidSeedError(CryptoRVError, ValueError):
    pass


# isa

class EncodingError(CryptoRVError, ValueError):
    pass


class IllegalInstructionError(CryptoRVError):
    def __init__(self, message, word=None):
        super().__init__(message)
        self.word = word


class AssemblyError(CryptoRVError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ProgramFormatError(CryptoRVError, ValueError):
    pass


# memsys

class OutOfBoundsError(CryptoRVError, IndexError):
    pass


class TransferSizeError(CryptoRVError, ValueError):
    pass


class ChannelBusyError(CryptoRVError):
    pass


class DmaConflictError(CryptoRVError):
    """A buffer transfer touched DM words that an in-flight DMA is still writing."""


# units

class EngineBusyError(CryptoRVError):
    pass


class ModeMismatchError(CryptoRVError, ValueError):
    pass


class InvalidModeError(CryptoRVError, ValueError):
    pass


class BufferRangeError(CryptoRVError, ValueError):
    pass


class BufferConflictError(CryptoRVError):
    """Access to buffer words owned by a busy engine."""


# core

class TrapError(CryptoRVError):
    """Raised by the core when an instruction traps; carries the pc."""

    def __init__(self, message, pc=None, cycle=None):
        super().__init__(message)
        self.pc = pc
        self.cycle = cycle


class RunawayError(CryptoRVError):
    def __init__(self, message, state=None, trace=None):
        super().__init__(message)
        self.state = state
        self.trace = trace


# scheduler / bench

class LayoutError(CryptoRVError, ValueError):
    pass


class AnalysisError(CryptoRVError):
    pass


class ConfigError(CryptoRVError, ValueError):
    pass


class VectorFileError(CryptoRVError, ValueError):
    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(loc + message)
        self.path = path
        self.line = line
