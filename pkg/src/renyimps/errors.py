"""Exception hierarchy shared by all renyimps modules."""


class RenyiMpsError(Exception):
    """Base class for every error raised by this package."""


class NonSquare(RenyiMpsError, ValueError):
    pass


class DimensionMismatch(RenyiMpsError, ValueError):
    pass


class NumericalFailure(RenyiMpsError, ArithmeticError):
    pass


class NotGapped(RenyiMpsError):
    """The dominant eigenvalue of a transfer operator is not unique in modulus."""

    def __init__(self, message, moduli=None):
        super().__init__(message)
        self.moduli = list(moduli) if moduli is not None else []


class DegenerateDominant(NotGapped):
    """Two eigenvalues share the largest modulus within tolerance."""


class NotPrimitive(RenyiMpsError):
    pass


class InputNotOnCircle(RenyiMpsError, ValueError):
    pass


class BudgetExceeded(RenyiMpsError):
    pass


class ZeroState(RenyiMpsError):
    pass


class BadSiteList(RenyiMpsError, ValueError):
    pass


class InvalidAlpha(RenyiMpsError, ValueError):
    pass


class InvariantViolation(RenyiMpsError, ValueError):
    pass


class SchemaError(RenyiMpsError, ValueError):
    """Malformed input file; ``field`` and ``line`` locate the problem when known."""

    def __init__(self, message, field=None, line=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(field)
        super().__init__(f"{': '.join(loc)}: {message}" if loc else message)
        self.field = field
        self.line = line
