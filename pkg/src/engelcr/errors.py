"""Exception hierarchy shared by all modules."""


class EngelCRError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(EngelCRError, ValueError):
    """Jets with different order or base point were combined."""


class SingularJet(EngelCRError, ZeroDivisionError):
    """Inversion of a jet whose constant term vanishes."""


class DomainError(EngelCRError, ValueError):
    """Analytic function applied outside its domain."""


class OrderExhausted(EngelCRError):
    """Differentiation of an order-0 jet."""


class InsufficientOrder(EngelCRError):
    """Requested quantity needs more Taylor orders than were supplied."""


class EngelDegenerate(EngelCRError):
    """The frame X, Y, [X,Y], [X,[X,Y]] is not a basis at a point."""

    def __init__(self, point, detail=""):
        self.point = tuple(point)
        msg = f"Engel condition fails at {self.point}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NotD0Aligned(EngelCRError):
    """Y does not annihilate the second Levi-Tanaka bracket."""

    def __init__(self, point, residual=None):
        self.point = tuple(point)
        self.residual = residual
        msg = f"Y is not a section of the D0 line at {self.point}"
        if residual is not None:
            msg += f" (residual {residual:.3e})"
        super().__init__(msg)


class NormalizationFailed(EngelCRError):
    """The scale equation for Y could not be solved."""


class ManifoldFileError(EngelCRError):
    """Malformed manifold description file."""

    def __init__(self, message, line=None, column=None, path=None):
        self.line = line
        self.column = column
        self.path = path
        where = []
        if line is not None:
            where.append(f"line {line}, column {column}")
        if path:
            where.append(f"at {path}")
        if where:
            message = f"{message} ({'; '.join(where)})"
        super().__init__(message)
