class GMMBError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(GMMBError):
    pass


class DataError(GMMBError):
    pass


class ParseError(DataError):
    def __init__(self, message: str, row=None, column=None):
        location = ""
        if row is not None or column is not None:
            location = f" (row {row}, column {column})"
        super().__init__(f"{message}{location}")
        self.row = row
        self.column = column


class DimensionMismatchError(DataError):
    pass


class BoundaryViolationError(DataError):
    def __init__(self, report):
        shown = ", ".join(f"({r}, {c})" for r, c in report.violations[:10])
        more = len(report.violations) - 10
        suffix = f" and {more} more" if more > 0 else ""
        super().__init__(
            f"{len(report.violations)} cell(s) outside the open support: {shown}{suffix}"
        )
        self.report = report


class TransformDomainError(GMMBError, ValueError):
    pass


class FitError(GMMBError):
    pass


class DegenerateFitError(FitError):
    pass


class EmptyComponentError(DegenerateFitError):
    pass


class SingularCovarianceError(DegenerateFitError):
    pass


class VarianceFloorError(DegenerateFitError):
    pass


class InitializationError(FitError):
    pass


class AscentError(FitError):
    pass


class DownloadError(GMMBError, OSError):
    pass
