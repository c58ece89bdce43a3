"""Exception hierarchy shared by every module in the package."""


class ImcSortError(ValueError):
    """Base class for validation errors raised by the toolchain."""


class DimensionError(ImcSortError):
    pass


class ConstantRowWriteError(ImcSortError):
    pass


class ValueRangeError(ImcSortError):
    pass


class RowRangeError(ImcSortError):
    pass


class InstructionError(ImcSortError):
    """An instruction breaks the two-wordline execution rules."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NetworkSizeError(ImcSortError):
    pass


class StageIndexError(ImcSortError):
    pass


class TraceError(ImcSortError):
    pass


class PerfModelError(ImcSortError):
    pass


class BaselineError(ImcSortError):
    pass
