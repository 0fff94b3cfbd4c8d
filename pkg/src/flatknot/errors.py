"""Exception hierarchy shared across the package."""


class FlatknotError(Exception):
    """Base class for all diagram/invariant errors."""


class ParseError(FlatknotError):
    """Malformed input text (Gauss code, polynomial, JSON schema)."""


class ValidationError(FlatknotError):
    """Structurally invalid diagram data (pairing, sign, embedding)."""


class PreconditionError(FlatknotError):
    """Valid data outside an operation's domain (e.g. no underpass)."""


class BudgetExceeded(FlatknotError):
    """A configured enumeration cap or search budget was exhausted."""
