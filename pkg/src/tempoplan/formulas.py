"""Abstract syntax for temporal fluent formulas and value terms.

Two layers share these nodes. The parser produces a *surface* tree where
identifiers are `Name` and every application is an `App`; the domain builder
resolves that into a *core* tree (`VarRef`, `ConstRef`, `FluentVal`,
`MacroApp`, ...) that the evaluator consumes. Connectives, quantifiers,
temporal fixes and comparisons are the same nodes in both layers.

A temporal fix `[tau] phi` sets the evaluation timepoint for every fluent
read in phi that is not re-fixed by a nested `[tau']`; it therefore scopes
over chains of & and | but stops at -> (so rule antecedents read the way
they are written).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .fixedpoint import Fixed


@dataclass(frozen=True)
class TimeExpr:
    """var + const, optionally + dur (the evaluated operator duration)."""

    var: str | None = None
    const: int = 0
    plus_dur: bool = False

    def shift(self, delta: int) -> "TimeExpr":
        return TimeExpr(self.var, self.const + delta, self.plus_dur)

    def __str__(self):
        parts = []
        if self.var is not None:
            parts.append(self.var)
        if self.plus_dur:
            parts.append("dur")
        body = "+".join(parts)
        if self.const or not body:
            if body:
                body += f"+{self.const}" if self.const >= 0 else str(self.const)
            else:
                body = str(self.const)
        return body


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Name:
    """Surface identifier; becomes VarRef or ConstRef when resolved."""

    ident: str


@dataclass(frozen=True)
class App:
    """Surface application; args may be formulas or terms (sorted out later)."""

    ident: str
    args: tuple = ()


@dataclass(frozen=True)
class Num:
    value: Fixed


@dataclass(frozen=True)
class Arith:
    op: str  # + - * /
    left: object
    right: object


@dataclass(frozen=True)
class NegT:
    operand: object


@dataclass(frozen=True)
class ValueAt:
    """value(tau, x): evaluate x with the fluent-read timepoint set to tau."""

    time: TimeExpr
    term: object


@dataclass(frozen=True)
class Aspect:
    """$init / $consumed / $produced / $borrowed / $borrowed-nonex /
    $available / $minimum / $maximum of a resource instance."""

    name: str
    resource: object  # App (surface) or ResourceRef (core)


@dataclass(frozen=True)
class SumAgg:
    """$sum(<v>, phi, term): sum of term over bindings of v satisfying phi."""

    var: str
    formula: object
    term: object
    sort: str | None = None  # filled in by resolution


# core-layer terms


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class ConstRef:
    name: str


@dataclass(frozen=True)
class FluentVal:
    name: str
    args: tuple = ()


@dataclass(frozen=True)
class ResourceRef:
    name: str
    args: tuple = ()


@dataclass(frozen=True)
class MacroApp:
    name: str
    args: tuple = ()


@dataclass(frozen=True)
class DistApp:
    feature: str
    args: tuple = ()  # leading extra bindings, then (from, to)


@dataclass(frozen=True)
class MinDistApp:
    feature: str
    args: tuple = ()  # leading extra bindings, then the source node
    var: str = ""
    predicate: object = None
    var_sort: str | None = None


# ---------------------------------------------------------------------------
# Formulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class FalseF:
    pass


@dataclass(frozen=True)
class Fix:
    time: TimeExpr
    body: object


@dataclass(frozen=True)
class FixIntv:
    lo: TimeExpr
    hi: TimeExpr
    body: object
    lo_open: bool = False
    hi_open: bool = False


@dataclass(frozen=True)
class Cmp:
    op: str  # == != < <= > >=
    left: object
    right: object


@dataclass(frozen=True)
class Not:
    operand: object


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Implies:
    left: object
    right: object


@dataclass(frozen=True)
class Iff:
    left: object
    right: object


@dataclass(frozen=True)
class Quant:
    kind: str  # forall | exists
    vars: tuple  # of (name, sort-or-None); sorts resolved during model build
    body: object


@dataclass(frozen=True)
class GoalF:
    body: object


FORMULA_NODES = (
    TrueF,
    FalseF,
    Fix,
    FixIntv,
    Cmp,
    Not,
    And,
    Or,
    Implies,
    Iff,
    Quant,
    GoalF,
)


def walk(node):
    """Yield node and all descendants (terms and formulas alike)."""
    yield node
    for f in getattr(node, "__dataclass_fields__", {}):
        child = getattr(node, f)
        if isinstance(child, tuple):
            for item in child:
                if hasattr(item, "__dataclass_fields__"):
                    yield from walk(item)
        elif hasattr(child, "__dataclass_fields__"):
            yield from walk(child)


def time_exprs(node):
    """All TimeExpr occurrences in a tree."""
    return [n for n in walk(node) if isinstance(n, TimeExpr)]


def max_offset_from(node, var: str) -> int:
    """Largest constant offset attached to timepoint variable `var`.

    Used to compute a control rule's horizon span. Offsets never use `dur`
    inside rules (enforced at build time).
    """
    best = 0
    for te in time_exprs(node):
        if te.var == var:
            best = max(best, te.const)
    return best
