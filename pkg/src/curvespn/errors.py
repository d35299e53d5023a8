"""Exception and warning types raised across the package."""


class CurveSpnError(Exception):
    """Base class for all package errors."""


class ChartInputError(CurveSpnError):
    """Unreadable or invalid input (image, sidecar, config)."""


class AnalysisError(CurveSpnError):
    """A pipeline stage could not produce its output."""

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    def __str__(self):
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class NoCurvesError(AnalysisError):
    pass


class FragmentedCurveError(AnalysisError):
    pass


class DegenerateCurveError(AnalysisError):
    pass


class TickMismatchError(ChartInputError):
    pass


class NoAxesWarning(UserWarning):
    pass


class AmbiguousMatchWarning(UserWarning):
    pass
