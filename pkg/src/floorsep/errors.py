class FloorsepError(Exception):
    """Base class for all errors raised by this package."""


class IngestError(FloorsepError):
    pass


class FormatError(IngestError):
    pass


class IntegrityError(IngestError):
    def __init__(self, message, rows=()):
        self.rows = list(rows)
        if self.rows:
            shown = ", ".join(str(r) for r in self.rows[:20])
            more = "" if len(self.rows) <= 20 else f" (+{len(self.rows) - 20} more)"
            message = f"{message}: {shown}{more}"
        super().__init__(message)


class ConfigurationError(FloorsepError):
    pass


class ValidationError(FloorsepError):
    pass
