"""Exception hierarchy shared by the solver modules."""


class VBLError(Exception):
    """Base class for every error raised by this package."""


class DomainError(VBLError, ValueError):
    """An expression was evaluated where it is undefined."""


class ParseError(VBLError, ValueError):
    """Malformed model file or expression."""

    def __init__(self, message, line=None, column=None, path=None):
        self.line = line
        self.column = column
        self.path = path
        where = []
        if line is not None:
            where.append(f"line {line}, column {column}")
        if path:
            where.append(f"at {path}")
        super().__init__(f"{message} ({'; '.join(where)})" if where else message)


class NotFound(VBLError):
    pass


class QuadratureFailure(VBLError):
    pass


class BlowUp(VBLError):
    pass


class StiffnessFailure(VBLError):
    pass


class NoConvergence(VBLError):
    pass


class DegenerateOrbit(VBLError):
    pass


class NoHomoclinic(VBLError):
    pass


class PeriodOverflow(VBLError):
    pass


class ResolutionExceeded(VBLError):
    pass


class BoundaryContamination(VBLError):
    pass


class NotUnstable(VBLError):
    pass


class NonFinite(VBLError, FloatingPointError):
    pass


class WindowTooShort(VBLError):
    pass
