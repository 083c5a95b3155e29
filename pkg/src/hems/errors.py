"""Exception hierarchy shared by every hems module."""


class HemsError(Exception):
    """Base class; the CLI maps subclasses of ``ValidationError`` to exit 1."""


class ValidationError(HemsError):
    pass


class RangeError(ValidationError):
    """Malformed bound or out-of-range field in a config or override."""


class AssumptionViolated(ValidationError):
    """One of the three controllability inequalities does not hold."""

    def __init__(self, which: str, lhs: float, rhs: float, detail: str = ""):
        self.which = which
        self.lhs = lhs
        self.rhs = rhs
        msg = f"assumption ({which}) violated: lhs={lhs!r}, rhs={rhs!r}"
        if detail:
            msg += f" [{detail}]"
        super().__init__(msg)


class InfeasibleParameters(ValidationError):
    """No controller parameters satisfy the feasibility guarantees."""


class ParseError(ValidationError):
    def __init__(self, message: str, line: int | None = None, column: str | None = None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class MissingColumn(ParseError):
    pass


class BoundsError(ValidationError):
    def __init__(self, slot: int, field: str, value: float, detail: str = ""):
        self.slot = slot
        self.field = field
        self.value = value
        super().__init__(f"slot {slot}: {field}={value!r} out of bounds {detail}".rstrip())


class WindowTooShort(ValidationError):
    pass


class TraceLengthMismatch(ValidationError):
    pass


class InfeasibleInitialState(ValidationError):
    pass


class EmptyRun(HemsError):
    pass


class NumericalFailure(HemsError):
    """Multiplier search in the slot solver failed to converge."""
