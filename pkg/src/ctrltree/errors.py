"""Exception taxonomy shared by all ctrltree modules.

Every domain error derives from :class:`CtrlTreeError` so callers (CLI,
HTTP service) can report a stable ``kind`` string without matching on
module-specific classes.
"""


class CtrlTreeError(Exception):
    """Base class for all domain errors raised by this package."""

    @property
    def kind(self) -> str:
        return type(self).__name__


class ParseError(CtrlTreeError):
    """Syntax error in an input file or expression, with position info."""

    def __init__(self, reason: str, line: int | None = None, column: int | None = None):
        self.reason = reason
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc += f" at line {line}"
        if column is not None:
            loc += f"{',' if line is not None else ' at'} column {column}"
        super().__init__(f"{reason}{loc}")


# --- controller / tree semantics ------------------------------------------

class StateNotFound(CtrlTreeError):
    pass


class UnknownCategoricalValue(CtrlTreeError):
    """A categorical coordinate fell outside every group / the dictionary."""


class EmptyController(CtrlTreeError):
    pass


# --- ingest ----------------------------------------------------------------

class DuplicateStateInDeterministicFile(CtrlTreeError):
    pass


class ArityMismatch(CtrlTreeError):
    pass


class UnknownCategoricalToken(CtrlTreeError):
    """Token not present in the variable's declared value dictionary."""


class OverlappingColumnTypes(CtrlTreeError):
    pass


class GapInColumnCoverage(CtrlTreeError):
    pass


class MalformedJson(CtrlTreeError):
    pass


class EmptyActionList(CtrlTreeError):
    pass


class UndeclaredCoefficient(CtrlTreeError):
    pass


# --- predicate generation ----------------------------------------------------

class DegenerateSplit(CtrlTreeError):
    """The variable has a single value on the view; no split possible."""


class EnumerationBlowup(CtrlTreeError):
    pass


class NonEvaluableExpression(CtrlTreeError):
    """Domain error while evaluating an expression (log of <= 0, x/0, ...)."""


# --- impurity ---------------------------------------------------------------

class UnsupportedAtNodeLevel(CtrlTreeError):
    """Measure is defined for whole splits only (entropy ratio, twoing)."""


# --- builder ------------------------------------------------------------------

class NoValidPredicate(CtrlTreeError):
    pass


class SessionClosed(CtrlTreeError):
    pass


class InvalidPredicate(CtrlTreeError):
    pass


class UnknownNode(CtrlTreeError):
    pass


# --- export -------------------------------------------------------------------

class SchemaVersionMismatch(CtrlTreeError):
    pass


class UnsupportedFunction(CtrlTreeError):
    pass


# --- simulation ------------------------------------------------------------

class DisallowedAction(CtrlTreeError):
    pass


class UnknownSuccessor(CtrlTreeError):
    pass
