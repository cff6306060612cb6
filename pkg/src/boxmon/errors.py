"""Exception hierarchy shared across the package.

Everything derives from BoxmonError so callers can catch broadly; most
classes also inherit a matching builtin so the package plays well with
code that only knows ValueError/IndexError.
"""


class BoxmonError(Exception):
    """Base class for all boxmon errors."""


class ConfigError(BoxmonError, ValueError):
    """Invalid hyper-parameter or configuration value."""


class InputShapeError(BoxmonError, ValueError):
    """A vector or matrix has the wrong dimensionality."""


class EmptyDataError(BoxmonError, ValueError):
    """An operation that needs data received none."""


class ConstructionError(BoxmonError, ValueError):
    """Monitor construction is impossible for the given data (e.g. k
    exceeds the number of distinct feature vectors)."""


class OutOfBoxError(BoxmonError, ValueError):
    """A feature vector lies outside the box it should be encoded in."""


class NotACornerError(BoxmonError, ValueError):
    """A bit string is not a corner string (some block is a proper
    staircase rather than all-zeros/all-ones)."""


class EnumerationCapError(BoxmonError, ValueError):
    """Exhaustive corner enumeration requested above the dimension cap."""


class DataError(BoxmonError, ValueError):
    """Dataset contents violate an invariant (e.g. labels that are not
    probability vectors)."""


class ParseError(BoxmonError, ValueError):
    """A file could not be parsed; the message names the offending row
    or field."""


class LayerIndexError(BoxmonError, IndexError):
    """A network layer index is outside [1, L]."""


class VariableIndexError(BoxmonError, IndexError):
    """A BDD variable index is outside [1, variable_count]."""


class ManagerMismatchError(BoxmonError, ValueError):
    """BDD refs from different managers were combined."""
