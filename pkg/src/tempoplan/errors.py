"""Exception hierarchy shared by every layer of the planner."""


class TempoplanError(Exception):
    """Base class for everything this package raises on purpose."""


class InputError(TempoplanError):
    """Problems in user-supplied text (domains, problems, plans)."""

    def __init__(self, message, line=None, col=None, filename=None):
        self.message = message
        self.line = line
        self.col = col
        self.filename = filename
        super().__init__(str(self))

    def __str__(self):
        prefix = self.filename or "<input>"
        if self.line is not None:
            return f"{prefix}:{self.line}:{self.col or 0}: {self.message}"
        return f"{prefix}: {self.message}"


class SyntaxDiagnostic(InputError):
    """Parse failure with a source span and the token set that was expected."""

    def __init__(self, message, line, col, expected=(), filename=None):
        self.expected = tuple(expected)
        super().__init__(message, line, col, filename)


class DuplicateRuleName(InputError):
    pass


class ModelError(TempoplanError):
    """Cross-reference or typing failures while building a domain model."""


class UnknownSort(ModelError):
    pass


class UnknownFluent(ModelError):
    pass


class UnknownResource(ModelError):
    pass


class UnknownObject(ModelError):
    pass


class UnknownName(ModelError):
    pass


class UnknownMacro(ModelError):
    pass


class UnknownEntry(ModelError):
    pass


class ArityMismatch(ModelError):
    pass


class TypeMismatch(ModelError):
    pass


class CyclicMacro(ModelError):
    pass


class CyclicSortHierarchy(ModelError):
    pass


class EffectOutsideDuration(ModelError):
    pass


class ContradictoryObservation(ModelError):
    pass


class UnsupportedGoalFragment(ModelError):
    pass


class EvalError(TempoplanError):
    """Runtime failures while evaluating formulas or terms."""


class UnboundVariable(EvalError):
    pass


class TimepointBeyondHorizon(EvalError):
    pass


class NoInitialValue(EvalError):
    pass


class DivisionByZero(EvalError):
    pass


class NumericOutOfBounds(EvalError):
    pass


class NegativeCost(EvalError):
    pass


class TimelineFault(TempoplanError):
    """Timeline-level inconsistencies; the search turns these into prunes."""


class Conflict(TimelineFault):
    """Two effects assert different values for one fluent at one timepoint."""


class BoundsViolation(TimelineFault):
    pass


class ExclusiveOverlap(TimelineFault):
    pass


class BudgetExceeded(TempoplanError):
    def __init__(self, explored):
        self.explored = explored
        super().__init__(f"node budget exceeded after {explored} expansions")


class PlanFormatError(TempoplanError):
    pass


class MalformedLine(PlanFormatError):
    def __init__(self, lineno, text):
        self.lineno = lineno
        self.text = text
        super().__init__(f"line {lineno}: cannot parse plan line: {text!r}")


class UnknownAction(PlanFormatError):
    pass
