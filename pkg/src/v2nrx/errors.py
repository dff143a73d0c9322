"""Exception hierarchy shared by every module of the simulator."""


class V2nrxError(Exception):
    """Base class for all simulator errors."""


class ConfigError(V2nrxError, ValueError):
    """Invalid configuration (bad sizes, inconsistent options, missing inputs)."""


class InputFormatError(V2nrxError, ValueError):
    """A file or text document could not be parsed."""


class AlistParseError(InputFormatError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class PayloadFormatError(InputFormatError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset


class CorruptCheckpointError(InputFormatError):
    """Checkpoint file is truncated, has a bad magic or mismatching shapes."""


class FramingError(V2nrxError, ValueError):
    """Bit or sample counts do not fit the requested framing."""


class CapacityError(FramingError):
    def __init__(self, expected: int, actual: int):
        super().__init__(f"grid holds {expected} data symbols, got {actual}")
        self.expected = expected
        self.actual = actual


class InvalidNoiseError(V2nrxError, ValueError):
    """Noise variance outside its admissible range."""


class InvalidInputError(V2nrxError, ValueError):
    """Numerical input violates a precondition (e.g. non-finite LLRs)."""


class EncoderConstructionError(V2nrxError):
    def __init__(self, rank: int, rows: int):
        super().__init__(f"parity-check matrix has GF(2) rank {rank} < {rows} rows")
        self.rank = rank


class SingularChannelError(V2nrxError, ArithmeticError):
    """Channel vector (or pilot value) too small to divide by."""


class ShapeError(V2nrxError, ValueError):
    def __init__(self, op: str, a, b):
        super().__init__(f"{op}: incompatible shapes {tuple(a)} and {tuple(b)}")


class InvalidLabelError(V2nrxError, ValueError):
    """Training labels outside {0, 1}."""


class DivergedError(V2nrxError, RuntimeError):
    def __init__(self, iteration: int):
        super().__init__(f"training loss became non-finite at iteration {iteration}")
        self.iteration = iteration


class MetricError(V2nrxError, ValueError):
    """Metric inputs have mismatching shapes."""
