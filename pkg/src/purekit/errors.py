"""Exception hierarchy shared by all purekit modules."""


class PurekitError(Exception):
    pass


class ValidationError(PurekitError, ValueError):
    """An object violates its invariants (bad weights, bad partition...)."""


class ParameterError(PurekitError, ValueError):
    """An argument is outside the range an operation accepts."""


class SizeError(ParameterError):
    pass


class ResolutionError(PurekitError):
    """A discretization would exceed its configured size cap."""


class ConditionalUndefinedError(PurekitError):
    """Conditioning on a slice of zero marginal density."""


class ParseError(PurekitError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if column is not None:
            parts.append(f"column {column}")
        where = ", ".join(parts) + ": " if parts else ""
        super().__init__(where + message)
        self.message = message


class BudgetInfeasibleError(PurekitError):
    """A purification stage could not meet its allocated budget."""

    def __init__(self, stage, message, best=None):
        self.stage = stage
        self.best = best
        extra = "" if best is None else f" (best achieved: {best!r})"
        super().__init__(f"[{stage}] {message}{extra}")
