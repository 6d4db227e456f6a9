"""Exception hierarchy shared by all spinrf modules."""


class SpinRFError(Exception):
    """Base class for every error raised by spinrf."""


class DomainError(SpinRFError, ValueError):
    """An argument is outside the domain of a physical model."""


class StructuralError(SpinRFError, ValueError):
    """Array shapes, grids or layer dimensions do not agree."""


class ParseError(SpinRFError, ValueError):
    """A data file is malformed. ``row`` is 1-based when known."""

    def __init__(self, message, path=None, row=None):
        self.path = path
        self.row = row
        where = ""
        if path is not None:
            where += f"{path}"
        if row is not None:
            where += f":{row}"
        super().__init__(f"{where}: {message}" if where else message)


class CheckpointError(SpinRFError):
    """A checkpoint cannot be read: truncated, corrupted or wrong version."""


class DivergenceError(SpinRFError, FloatingPointError):
    """Training produced a non-finite loss or gradient."""


class FitError(SpinRFError):
    """A curve fit failed to converge. ``best`` carries the best-so-far result."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
