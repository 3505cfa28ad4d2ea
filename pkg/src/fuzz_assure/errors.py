"""Exception types shared across the package."""


class FuzzAssureError(Exception):
    """Base class for all errors raised by fuzz_assure."""


class EmptyCampaign(FuzzAssureError, ValueError):
    """An estimate was requested from a campaign with no test inputs."""


class InvalidThreshold(FuzzAssureError, ValueError):
    """A residual-risk threshold outside the open interval (0, 1)."""


class ModelError(FuzzAssureError, ValueError):
    """Invalid ground-truth model parameters."""


class SeriesTooShort(FuzzAssureError, ValueError):
    """Fewer than three observations for the turning point test."""


class DegenerateSeries(FuzzAssureError, ValueError):
    """Series has fewer than three distinct runs after collapsing ties."""


class ParseError(FuzzAssureError, ValueError):
    """Malformed campaign input.

    ``source`` names the file (if known) and ``line`` the 1-based line number.
    """

    def __init__(self, message, *, source=None, line=None):
        self.source = source
        self.line = line
        where = []
        if source is not None:
            where.append(str(source))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
