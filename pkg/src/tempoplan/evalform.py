"""Evaluate core formulas and terms over a timeline under a binding.

Evaluation carries a current timepoint (set by the innermost enclosing
temporal fix), the invocation-relative duration for operator clauses, and an
optional freeze limit that turns reads at not-yet-final timepoints into
errors. `GoalAbstraction` answers goal(phi) queries by three-valued
evaluation over the problem's goal literal set, strengthened by functional
fluent markers; entailment holds only on definite truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import (
    EvalError,
    TimepointBeyondHorizon,
    TypeMismatch,
    UnboundVariable,
    UnknownObject,
    UnsupportedGoalFragment,
)
from .fixedpoint import Fixed, ZERO
from .formulas import (
    And,
    Arith,
    Aspect,
    Cmp,
    ConstRef,
    DistApp,
    FalseF,
    Fix,
    FixIntv,
    FluentVal,
    GoalF,
    Iff,
    Implies,
    MacroApp,
    MinDistApp,
    NegT,
    Not,
    Num,
    Or,
    Quant,
    SumAgg,
    TimeExpr,
    TrueF,
    ValueAt,
    VarRef,
)
from .model import BOOLEAN, FALSE, TRUE, DomainModel, ProblemInstance


@dataclass
class EvalContext:
    model: DomainModel
    problem: ProblemInstance
    timeline: object
    goals: "GoalAbstraction"
    binding: dict
    time: int | None = None
    dur: int | None = None
    freeze: int | None = None  # reads at t >= freeze raise
    paths: object = None  # PathOracle, set lazily by callers that need it

    def at(self, t: int) -> "EvalContext":
        return replace(self, time=t)

    def bound(self, extra: dict) -> "EvalContext":
        b = dict(self.binding)
        b.update(extra)
        return replace(self, binding=b)

    def resolve_time(self, te: TimeExpr) -> int:
        t = te.const
        if te.var is not None:
            v = self.binding.get(te.var)
            if v is None:
                raise UnboundVariable(f"unbound timepoint variable {te.var!r}")
            t += v
        if te.plus_dur:
            if self.dur is None:
                raise EvalError("'dur' used outside an operator context")
            t += self.dur
        return t


def eval_formula(node, ctx: EvalContext) -> bool:
    v = _eval(node, ctx)
    if not isinstance(v, bool):
        raise TypeMismatch(f"expected a truth value, got {v!r}")
    return v


def eval_term(node, ctx: EvalContext):
    return _eval(node, ctx)


def _read_fluent(name: str, argvals: tuple, ctx: EvalContext):
    if ctx.time is None:
        raise EvalError(f"fluent {name!r} read outside a temporal context")
    if ctx.freeze is not None and ctx.time >= ctx.freeze:
        raise TimepointBeyondHorizon(
            f"read of {name}{argvals} at {ctx.time} beyond freeze {ctx.freeze}"
        )
    return ctx.timeline.value_at((name, argvals), ctx.time)


def _object_arg(value, where: str) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return TRUE if value else FALSE
    raise TypeMismatch(f"{where}: expected an object, got {value!r}")


def _eval(node, ctx: EvalContext):
    if isinstance(node, TrueF):
        return True
    if isinstance(node, FalseF):
        return False
    if isinstance(node, Num):
        return node.value
    if isinstance(node, VarRef):
        try:
            return ctx.binding[node.name]
        except KeyError:
            raise UnboundVariable(f"unbound variable {node.name!r}") from None
    if isinstance(node, ConstRef):
        if node.name == TRUE:
            return True
        if node.name == FALSE:
            return False
        if node.name not in ctx.problem.objects.objects:
            raise UnknownObject(f"unknown object {node.name!r}")
        return node.name
    if isinstance(node, FluentVal):
        args = tuple(_object_arg(_eval(a, ctx), node.name) for a in node.args)
        return _read_fluent(node.name, args, ctx)
    if isinstance(node, Fix):
        return _eval(node.body, ctx.at(ctx.resolve_time(node.time)))
    if isinstance(node, FixIntv):
        lo = ctx.resolve_time(node.lo) + (1 if node.lo_open else 0)
        hi = ctx.resolve_time(node.hi) - (1 if node.hi_open else 0)
        for t in range(lo, hi + 1):
            if not eval_formula(node.body, ctx.at(t)):
                return False
        return True
    if isinstance(node, Not):
        return not eval_formula(node.operand, ctx)
    if isinstance(node, And):
        return all(eval_formula(i, ctx) for i in node.items)
    if isinstance(node, Or):
        return any(eval_formula(i, ctx) for i in node.items)
    if isinstance(node, Implies):
        return (not eval_formula(node.left, ctx)) or eval_formula(node.right, ctx)
    if isinstance(node, Iff):
        return eval_formula(node.left, ctx) == eval_formula(node.right, ctx)
    if isinstance(node, Quant):
        return _eval_quant(node, ctx)
    if isinstance(node, GoalF):
        return ctx.goals.entails(node.body, ctx)
    if isinstance(node, Cmp):
        return _eval_cmp(node, ctx)
    if isinstance(node, Arith):
        left = _num(_eval(node.left, ctx))
        right = _num(_eval(node.right, ctx))
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            return left / right
        raise EvalError(f"unknown arithmetic op {node.op!r}")
    if isinstance(node, NegT):
        return -_num(_eval(node.operand, ctx))
    if isinstance(node, ValueAt):
        return _eval(node.term, ctx.at(ctx.resolve_time(node.time)))
    if isinstance(node, Aspect):
        if ctx.time is None:
            raise EvalError(f"${node.name} read outside a temporal context")
        if ctx.freeze is not None and ctx.time >= ctx.freeze:
            raise TimepointBeyondHorizon(
                f"${node.name} at {ctx.time} beyond freeze {ctx.freeze}"
            )
        res = node.resource
        args = tuple(_object_arg(_eval(a, ctx), res.name) for a in res.args)
        return ctx.timeline.resource_aspect((res.name, args), ctx.time, node.name)
    if isinstance(node, SumAgg):
        total = ZERO
        for obj in ctx.problem.objects.members(node.sort):
            inner = ctx.bound({node.var: obj})
            if eval_formula(node.formula, inner):
                total = total + _num(_eval(node.term, inner))
        return total
    if isinstance(node, MacroApp):
        macro = ctx.model.macros[node.name]
        argvals = [_eval(a, ctx) for a in node.args]
        binding = {name: val for (name, _sort), val in zip(macro.params, argvals)}
        if ctx.time is None:
            raise EvalError(f"macro {node.name!r} applied outside a temporal context")
        binding[macro.timevar] = ctx.time
        inner = replace(ctx, binding=binding)
        return _eval(macro.body, inner)
    if isinstance(node, (DistApp, MinDistApp)):
        if ctx.paths is None:
            raise EvalError("distance features need a path oracle")
        return ctx.paths.evaluate(node, ctx)
    raise EvalError(f"cannot evaluate node {node!r}")


def _num(v) -> Fixed:
    if isinstance(v, Fixed):
        return v
    raise TypeMismatch(f"expected a number, got {v!r}")


def _eval_quant(node: Quant, ctx: EvalContext) -> bool:
    def rec(i: int, ctx: EvalContext) -> bool:
        if i == len(node.vars):
            return eval_formula(node.body, ctx)
        name, sort = node.vars[i]
        members = ctx.problem.objects.members(sort)
        if node.kind == "forall":
            return all(rec(i + 1, ctx.bound({name: obj})) for obj in members)
        return any(rec(i + 1, ctx.bound({name: obj})) for obj in members)

    return rec(0, ctx)


def _eval_cmp(node: Cmp, ctx: EvalContext) -> bool:
    left = _eval(node.left, ctx)
    right = _eval(node.right, ctx)
    if isinstance(left, Fixed) and isinstance(right, Fixed):
        return {
            "==": left == right,
            "!=": left != right,
            "<": left < right,
            "<=": left <= right,
            ">": left > right,
            ">=": left >= right,
        }[node.op]
    # object / boolean comparisons: identity only
    lid = _object_arg(left, "comparison")
    rid = _object_arg(right, "comparison")
    if node.op == "==":
        return lid == rid
    if node.op == "!=":
        return lid != rid
    raise TypeMismatch(f"ordered comparison {node.op!r} needs numbers")


def expand_macro(model: DomainModel, name: str, args: tuple):
    """Capture-avoiding substitution of `args` into the macro body.

    Arguments are core terms (VarRef/ConstRef/...). The timepoint parameter
    stays symbolic so the expansion can be fixed by any enclosing context.
    """
    from .errors import ArityMismatch, UnknownMacro

    macro = model.macros.get(name)
    if macro is None:
        raise UnknownMacro(f"unknown macro {name!r}")
    if len(args) != len(macro.params):
        raise ArityMismatch(
            f"macro {name!r} takes {len(macro.params)} arguments, got {len(args)}"
        )
    subst = {pname: arg for (pname, _sort), arg in zip(macro.params, args)}
    free_in_args = set()
    for a in args:
        for n in _walk_vars(a):
            free_in_args.add(n)
    return _substitute(macro.body, subst, free_in_args, [0])


def _walk_vars(node):
    from .formulas import walk

    for n in walk(node):
        if isinstance(n, VarRef):
            yield n.name


def _substitute(node, subst: dict, avoid: set, counter: list):
    if isinstance(node, VarRef):
        return subst.get(node.name, node)
    if isinstance(node, Quant):
        inner = dict(subst)
        new_vars = []
        renames = {}
        for vname, vsort in node.vars:
            if vname in avoid:
                counter[0] += 1
                fresh = f"{vname}_{counter[0]}"
                renames[vname] = fresh
                new_vars.append((fresh, vsort))
            else:
                new_vars.append((vname, vsort))
            inner.pop(vname, None)
        for old, new in renames.items():
            inner[old] = VarRef(new)
        return Quant(node.kind, tuple(new_vars), _substitute(node.body, inner, avoid, counter))
    if isinstance(node, SumAgg):
        inner = dict(subst)
        var = node.var
        if var in avoid:
            counter[0] += 1
            fresh = f"{var}_{counter[0]}"
            inner[var] = VarRef(fresh)
            var = fresh
        else:
            inner.pop(var, None)
        return SumAgg(
            var,
            _substitute(node.formula, inner, avoid, counter),
            _substitute(node.term, inner, avoid, counter),
            node.sort,
        )
    if isinstance(node, MinDistApp):
        inner = dict(subst)
        var = node.var
        if var in avoid:
            counter[0] += 1
            fresh = f"{var}_{counter[0]}"
            inner[var] = VarRef(fresh)
            var = fresh
        else:
            inner.pop(var, None)
        return MinDistApp(
            node.feature,
            tuple(_substitute(a, subst, avoid, counter) for a in node.args),
            var,
            _substitute(node.predicate, inner, avoid, counter),
            node.var_sort,
        )
    if not hasattr(node, "__dataclass_fields__"):
        return node
    changed = False
    values = {}
    for f in node.__dataclass_fields__:
        child = getattr(node, f)
        if isinstance(child, tuple):
            new = tuple(
                _substitute(i, subst, avoid, counter)
                if hasattr(i, "__dataclass_fields__")
                else i
                for i in child
            )
        elif hasattr(child, "__dataclass_fields__") and not isinstance(child, TimeExpr):
            new = _substitute(child, subst, avoid, counter)
        else:
            new = child
        values[f] = new
        if new is not child:
            changed = True
    if not changed:
        return node
    return type(node)(**values)


# ---------------------------------------------------------------------------
# Goal abstraction
# ---------------------------------------------------------------------------

_UNKNOWN = object()


class GoalAbstraction:
    """goal(phi): phi must hold in every total state satisfying the goal
    literals under the functional-fluent constraints."""

    def __init__(self, model: DomainModel, problem: ProblemInstance):
        self.model = model
        self.problem = problem
        self.pos: dict[tuple, object] = {}  # (fluent, args) -> True | value
        self.neg: set[tuple] = set()
        # (fluent, args-without-functional-position) -> pinned object
        self.pinned: dict[tuple, str] = {}
        for lit in problem.goal_literals:
            decl = model.fluents[lit.fluent]
            key = (lit.fluent, lit.args)
            if decl.is_boolean:
                if lit.positive:
                    self.pos[key] = True
                    k = decl.functional_arg
                    if k is not None:
                        rest = lit.args[:k] + lit.args[k + 1:]
                        self.pinned[(lit.fluent, k, rest)] = lit.args[k]
                else:
                    self.neg.add(key)
            else:
                self.pos[key] = lit.value

    def entails(self, formula, ctx: EvalContext) -> bool:
        return self._eval3(formula, ctx) is True

    def literal3(self, fluent: str, args: tuple, wanted):
        """Three-valued truth of `fluent(args) == wanted` in all goal states."""
        decl = self.model.fluents[fluent]
        key = (fluent, args)
        if decl.is_boolean:
            v = self.pos.get(key)
            if v is True:
                return wanted is True
            if key in self.neg:
                return wanted is False
            k = decl.functional_arg
            if k is not None:
                rest = args[:k] + args[k + 1:]
                pin = self.pinned.get((fluent, k, rest))
                if pin is not None and pin != args[k]:
                    return wanted is False
            return _UNKNOWN
        v = self.pos.get(key)
        if v is None:
            return _UNKNOWN
        if isinstance(v, Fixed) or isinstance(wanted, Fixed):
            return v == wanted if isinstance(v, type(wanted)) else _UNKNOWN
        return v == wanted

    def _eval3(self, node, ctx: EvalContext):
        if isinstance(node, TrueF):
            return True
        if isinstance(node, FalseF):
            return False
        if isinstance(node, Not):
            v = self._eval3(node.operand, ctx)
            return _UNKNOWN if v is _UNKNOWN else (not v)
        if isinstance(node, And):
            vs = [self._eval3(i, ctx) for i in node.items]
            if any(v is False for v in vs):
                return False
            if all(v is True for v in vs):
                return True
            return _UNKNOWN
        if isinstance(node, Or):
            vs = [self._eval3(i, ctx) for i in node.items]
            if any(v is True for v in vs):
                return True
            if all(v is False for v in vs):
                return False
            return _UNKNOWN
        if isinstance(node, Implies):
            return self._eval3(Or((Not(node.left), node.right)), ctx)
        if isinstance(node, Quant):
            return self._quant3(node, ctx)
        if isinstance(node, FluentVal):
            args = tuple(
                _object_arg(_eval(a, ctx), node.name) for a in node.args
            )
            return self.literal3(node.name, args, True)
        if isinstance(node, Cmp):
            return self._cmp3(node, ctx)
        raise UnsupportedGoalFragment(
            f"goal(...) supports boolean combinations of literals, not {type(node).__name__}"
        )

    def _quant3(self, node: Quant, ctx: EvalContext):
        def rec(i, ctx):
            if i == len(node.vars):
                return self._eval3(node.body, ctx)
            name, sort = node.vars[i]
            vs = [
                rec(i + 1, ctx.bound({name: obj}))
                for obj in ctx.problem.objects.members(sort)
            ]
            if node.kind == "forall":
                if any(v is False for v in vs):
                    return False
                if all(v is True for v in vs):
                    return True
                return _UNKNOWN
            if any(v is True for v in vs):
                return True
            if vs and all(v is False for v in vs):
                return False
            return False if not vs else _UNKNOWN

        return rec(0, ctx)

    def _cmp3(self, node: Cmp, ctx: EvalContext):
        # fluent == value inside goal(); plain object equalities are definite
        if isinstance(node.left, FluentVal) and node.op in ("==", "!="):
            args = tuple(
                _object_arg(_eval(a, ctx), node.left.name) for a in node.left.args
            )
            wanted = _eval(node.right, ctx)
            if isinstance(wanted, bool) or isinstance(wanted, (str, Fixed)):
                v = self.literal3(node.left.name, args, wanted)
                if v is _UNKNOWN:
                    # a functional-style exclusion for single-valued fluents:
                    # goal pins f(args)=w, so f(args)=v is false for v != w
                    decl = self.model.fluents[node.left.name]
                    if not decl.is_boolean:
                        pinned = self.pos.get((node.left.name, args))
                        if pinned is not None and pinned != wanted:
                            v = False
                if v is _UNKNOWN:
                    return _UNKNOWN
                return v if node.op == "==" else (not v)
        left = _eval(node.left, ctx)
        right = _eval(node.right, ctx)
        lid = _object_arg(left, "goal comparison")
        rid = _object_arg(right, "goal comparison")
        if node.op == "==":
            return lid == rid
        if node.op == "!=":
            return lid != rid
        raise UnsupportedGoalFragment("ordered comparisons are outside the goal fragment")
