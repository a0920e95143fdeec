"""Typed in-memory representation of a planning domain and problem instance.

`build_domain` turns a parsed statement list into cross-checked declaration
tables and resolves every formula from the parser's surface syntax (Name/App
nodes) into the core syntax the evaluator consumes (VarRef/ConstRef/
FluentVal/...). `build_problem` merges problem statements, materializes a
complete initial assignment under the closed-world rule, and indexes goals
for entailment.

Identifier resolution inside formulas: a name bound by an enclosing
quantifier or parameter list is a variable; otherwise, if stripping trailing
digits and primes yields a declared sort, it is a variable of that sort
(free rule variables are implicitly universally quantified); otherwise it is
an object constant, validated once the problem's objects are known.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from .errors import (
    ArityMismatch,
    ContradictoryObservation,
    CyclicMacro,
    CyclicSortHierarchy,
    EffectOutsideDuration,
    ModelError,
    NoInitialValue,
    TypeMismatch,
    UnknownFluent,
    UnknownName,
    UnknownObject,
    UnknownSort,
    UnsupportedGoalFragment,
)
from .fixedpoint import Fixed, NumericDomain
from .formulas import (
    And,
    App,
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
    Name,
    NegT,
    Not,
    Num,
    Or,
    Quant,
    ResourceRef,
    SumAgg,
    TimeExpr,
    TrueF,
    ValueAt,
    VarRef,
    max_offset_from,
    time_exprs,
    walk,
)
from .parser import Param, Statement

BOOLEAN = "boolean"
TRUE = "true"
FALSE = "false"


def base_sort_name(ident: str) -> str:
    """city2 -> city, loc' -> loc, flevel1 -> flevel."""
    s = ident.rstrip("'")
    return s.rstrip("0123456789")


class SortTable:
    """Sort forest plus object membership, with the builtin boolean sort."""

    def __init__(self):
        self.parent: dict[str, str | None] = {BOOLEAN: None}
        self.objects: dict[str, str] = {TRUE: BOOLEAN, FALSE: BOOLEAN}
        self._member_cache: dict[str, tuple] = {}

    def copy(self) -> "SortTable":
        t = SortTable.__new__(SortTable)
        t.parent = dict(self.parent)
        t.objects = dict(self.objects)
        t._member_cache = {}
        return t

    @property
    def sorts(self):
        return set(self.parent)

    def add_sort(self, name: str, parent: str | None = None):
        if name in self.parent:
            raise ModelError(f"sort {name!r} declared twice")
        if parent is not None and parent not in self.parent:
            raise UnknownSort(f"unknown parent sort {parent!r} for {name!r}")
        self.parent[name] = parent
        self._check_acyclic(name)
        self._member_cache.clear()

    def _check_acyclic(self, start: str):
        seen = set()
        cur = start
        while cur is not None:
            if cur in seen:
                raise CyclicSortHierarchy(f"sort hierarchy cycle through {start!r}")
            seen.add(cur)
            cur = self.parent[cur]

    def add_object(self, name: str, sort: str):
        if sort not in self.parent:
            raise UnknownSort(f"unknown sort {sort!r} for object {name!r}")
        prev = self.objects.get(name)
        if prev is not None and prev != sort:
            raise ModelError(f"object {name!r} declared with two sorts ({prev}, {sort})")
        self.objects[name] = sort
        self._member_cache.clear()

    def has_sort(self, name: str) -> bool:
        return name in self.parent

    def sort_of(self, obj: str) -> str:
        try:
            return self.objects[obj]
        except KeyError:
            raise UnknownObject(f"unknown object {obj!r}") from None

    def is_subsort(self, sub: str, sup: str) -> bool:
        cur: str | None = sub
        while cur is not None:
            if cur == sup:
                return True
            cur = self.parent.get(cur)
        return False

    def members(self, sort: str) -> tuple:
        """Objects belonging to `sort`, directly or through subsorts,
        in declaration order."""
        if sort not in self.parent:
            raise UnknownSort(f"unknown sort {sort!r}")
        cached = self._member_cache.get(sort)
        if cached is None:
            cached = tuple(
                o for o, s in self.objects.items() if self.is_subsort(s, sort)
            )
            self._member_cache[sort] = cached
        return cached


@dataclass(frozen=True)
class FluentDecl:
    name: str
    arg_sorts: tuple
    value: object  # BOOLEAN | sort name | NumericDomain
    functional_arg: int | None = None

    @property
    def is_boolean(self):
        return self.value == BOOLEAN

    @property
    def is_numeric(self):
        return isinstance(self.value, NumericDomain)


@dataclass(frozen=True)
class ResourceDecl:
    name: str
    arg_sorts: tuple
    domain: NumericDomain


@dataclass(frozen=True)
class EffectTemplate:
    lo: TimeExpr
    hi: TimeExpr | None
    fluent: str
    args: tuple  # core terms
    value: object  # core term
    condition: object = None
    quantified: tuple = ()  # of (name, sort)


@dataclass(frozen=True)
class ResourceEffectTemplate:
    lo: TimeExpr
    hi: TimeExpr | None
    kind: str
    resource: str
    args: tuple
    amount: object


@dataclass(frozen=True)
class PrevailTemplate:
    lo: TimeExpr
    hi: TimeExpr
    formula: object


@dataclass(frozen=True)
class OperatorSchema:
    name: str
    index: int  # declaration order, used for candidate ordering
    params: tuple  # of (name, sort)
    timevar: str
    duration: object  # core term
    precond: object  # core formula
    prevails: tuple = ()
    effects: tuple = ()
    resource_effects: tuple = ()


@dataclass(frozen=True)
class ControlRule:
    name: str
    timevar: str
    variables: tuple  # of (name, sort) - implicitly universal object variables
    formula: object
    span: int  # max forward offset from the timepoint variable


@dataclass(frozen=True)
class MacroDef:
    name: str
    timevar: str
    params: tuple  # of (name, sort)
    body: object
    is_term: bool


@dataclass(frozen=True)
class DistFeature:
    name: str
    params: tuple  # of (name, sort); last two are (from, to)
    domain: NumericDomain
    link: str
    cost: str | None


@dataclass(frozen=True)
class MinDistFeature:
    name: str
    distfeature: str
    domain: NumericDomain


class DomainModel:
    def __init__(self):
        self.sorts = SortTable()
        self.fluents: dict[str, FluentDecl] = {}
        self.resources: dict[str, ResourceDecl] = {}
        self.operators: list[OperatorSchema] = []
        self.rules: list[ControlRule] = []
        self.macros: dict[str, MacroDef] = {}
        self.dist_features: dict[str, DistFeature] = {}
        self.mindist_features: dict[str, MinDistFeature] = {}
        self.options: dict[str, str] = {}

    def operator(self, name: str) -> OperatorSchema:
        for op in self.operators:
            if op.name == name:
                return op
        raise UnknownName(f"unknown operator {name!r}")

    def max_rule_span(self) -> int:
        return max((r.span for r in self.rules), default=0)

    def without_operators(self, *names: str) -> "DomainModel":
        """A copy lacking the named operators (indices are preserved)."""
        m = self._shallow()
        m.operators = [op for op in self.operators if op.name not in names]
        return m

    def with_rules(self, names) -> "DomainModel":
        """A copy keeping only the named control rules."""
        wanted = set(names)
        missing = wanted - {r.name for r in self.rules}
        if missing:
            raise UnknownName(f"unknown control rules: {sorted(missing)}")
        m = self._shallow()
        m.rules = [r for r in self.rules if r.name in wanted]
        return m

    def without_rules(self, *names: str) -> "DomainModel":
        m = self._shallow()
        m.rules = [r for r in self.rules if r.name not in names]
        return m

    def _shallow(self) -> "DomainModel":
        m = DomainModel.__new__(DomainModel)
        m.sorts = self.sorts
        m.fluents = self.fluents
        m.resources = self.resources
        m.operators = list(self.operators)
        m.rules = list(self.rules)
        m.macros = self.macros
        m.dist_features = self.dist_features
        m.mindist_features = self.mindist_features
        m.options = dict(self.options)
        return m


@dataclass(frozen=True)
class GoalLiteral:
    fluent: str
    args: tuple  # object names
    value: object  # object name or Fixed
    positive: bool


class ProblemInstance:
    def __init__(self, model: DomainModel):
        self.model = model
        self.objects = model.sorts.copy()
        self.init: dict[tuple, object] = {}  # (fluent, args) -> value
        self.resource_init: dict[tuple, Fixed] = {}  # (resource, args) -> level
        self.goal_literals: list[GoalLiteral] = []
        self.options: dict[str, str] = dict(model.options)

    def goal_index(self) -> dict:
        idx: dict[tuple, object] = {}
        for lit in self.goal_literals:
            idx[(lit.fluent, lit.args, lit.positive)] = lit.value
        return idx


# ---------------------------------------------------------------------------
# Resolution of surface formulas into core formulas
# ---------------------------------------------------------------------------

TERM_SHAPED = (Num, Arith, NegT, ValueAt, Aspect, SumAgg, DistApp, MinDistApp)


class Resolver:
    def __init__(self, model: DomainModel, collect_free: bool = False):
        self.model = model
        self.collect_free = collect_free
        self.free_vars: dict[str, str] = {}

    def _var_sort(self, param: Param, where: str) -> tuple:
        if param.sort is not None:
            if not self.model.sorts.has_sort(param.sort):
                raise UnknownSort(f"{where}: unknown sort {param.sort!r}")
            return param.name, param.sort
        base = base_sort_name(param.name)
        if not self.model.sorts.has_sort(base):
            raise UnknownSort(
                f"{where}: cannot infer a sort for {param.name!r}"
                f" (no sort named {base!r}); annotate it with ': sort'"
            )
        return param.name, base

    def params(self, params, where: str) -> tuple:
        out = []
        seen = set()
        for p in params:
            name, sort = self._var_sort(p, where)
            if name in seen:
                raise ModelError(f"{where}: duplicate parameter {name!r}")
            seen.add(name)
            out.append((name, sort))
        return tuple(out)

    def formula(self, node, env: dict, timevars: set) -> object:
        f = self._resolve(node, env, timevars)
        return f

    def _name(self, ident: str, env: dict, timevars: set):
        if ident in env:
            return VarRef(ident)
        if ident in timevars:
            raise ModelError(f"timepoint variable {ident!r} used as a term")
        decl = self.model.fluents.get(ident)
        if decl is not None and not decl.arg_sorts:
            return FluentVal(ident, ())
        macro = self.model.macros.get(ident)
        if macro is not None and not macro.params:
            return MacroApp(ident, ())
        base = base_sort_name(ident)
        if self.collect_free and self.model.sorts.has_sort(base) \
                and ident not in self.model.sorts.objects:
            self.free_vars.setdefault(ident, base)
            return VarRef(ident)
        # object constant; may only become known once the problem is built
        return ConstRef(ident)

    def _resolve(self, node, env: dict, timevars: set):
        if isinstance(node, (TrueF, FalseF, Num)):
            return node
        if isinstance(node, Name):
            return self._name(node.ident, env, timevars)
        if isinstance(node, App):
            return self._app(node, env, timevars)
        if isinstance(node, Fix):
            self._check_time(node.time, env, timevars)
            return Fix(node.time, self._resolve(node.body, env, timevars))
        if isinstance(node, FixIntv):
            self._check_time(node.lo, env, timevars)
            self._check_time(node.hi, env, timevars)
            return FixIntv(
                node.lo,
                node.hi,
                self._resolve(node.body, env, timevars),
                node.lo_open,
                node.hi_open,
            )
        if isinstance(node, Not):
            return Not(self._resolve(node.operand, env, timevars))
        if isinstance(node, NegT):
            return NegT(self._resolve(node.operand, env, timevars))
        if isinstance(node, And):
            return And(tuple(self._resolve(i, env, timevars) for i in node.items))
        if isinstance(node, Or):
            return Or(tuple(self._resolve(i, env, timevars) for i in node.items))
        if isinstance(node, Implies):
            return Implies(
                self._resolve(node.left, env, timevars),
                self._resolve(node.right, env, timevars),
            )
        if isinstance(node, Iff):
            return Iff(
                self._resolve(node.left, env, timevars),
                self._resolve(node.right, env, timevars),
            )
        if isinstance(node, Cmp):
            return Cmp(
                node.op,
                self._resolve(node.left, env, timevars),
                self._resolve(node.right, env, timevars),
            )
        if isinstance(node, Quant):
            inner = dict(env)
            resolved_vars = []
            for vname, vsort in node.vars:
                name, sort = self._var_sort(Param(vname, vsort), "quantifier")
                inner[name] = sort
                resolved_vars.append((name, sort))
            return Quant(node.kind, tuple(resolved_vars), self._resolve(node.body, inner, timevars))
        if isinstance(node, GoalF):
            return GoalF(self._resolve(node.body, env, timevars))
        if isinstance(node, Arith):
            return Arith(
                node.op,
                self._resolve(node.left, env, timevars),
                self._resolve(node.right, env, timevars),
            )
        if isinstance(node, ValueAt):
            self._check_time(node.time, env, timevars)
            return ValueAt(node.time, self._resolve(node.term, env, timevars))
        if isinstance(node, Aspect):
            res = node.resource
            decl = self.model.resources.get(res.ident)
            if decl is None:
                raise UnknownName(f"${node.name} of unknown resource {res.ident!r}")
            args = tuple(self._resolve(a, env, timevars) for a in res.args)
            self._check_args(res.ident, decl.arg_sorts, args, env)
            return Aspect(node.name, ResourceRef(res.ident, args))
        if isinstance(node, SumAgg):
            base = base_sort_name(node.var)
            if not self.model.sorts.has_sort(base):
                raise UnknownSort(f"$sum variable {node.var!r} has no sort prefix")
            inner = dict(env)
            inner[node.var] = base
            return SumAgg(
                node.var,
                self._resolve(node.formula, inner, timevars),
                self._resolve(node.term, inner, timevars),
                base,
            )
        raise ModelError(f"cannot resolve node {node!r}")

    def _check_time(self, te: TimeExpr, env: dict, timevars: set):
        if te.var is None:
            return
        if te.var in env:
            raise ModelError(
                f"object variable {te.var!r} used as a timepoint"
            )
        if te.var not in timevars:
            raise ModelError(f"unknown timepoint variable {te.var!r}")

    def _check_args(self, name: str, arg_sorts: tuple, args: tuple, env: dict):
        if len(arg_sorts) != len(args):
            raise ArityMismatch(
                f"{name!r} takes {len(arg_sorts)} arguments, got {len(args)}"
            )
        for sort, arg in zip(arg_sorts, args):
            if isinstance(arg, VarRef):
                argsort = env.get(arg.name) or self.free_vars.get(arg.name)
                if argsort and not (
                    self.model.sorts.is_subsort(argsort, sort)
                    or self.model.sorts.is_subsort(sort, argsort)
                ):
                    raise TypeMismatch(
                        f"{name!r}: variable {arg.name!r} of sort {argsort!r}"
                        f" cannot fill a {sort!r} argument"
                    )
            elif isinstance(arg, ConstRef):
                declared = self.model.sorts.objects.get(arg.name)
                if declared is not None and not self.model.sorts.is_subsort(declared, sort):
                    raise TypeMismatch(
                        f"{name!r}: object {arg.name!r} of sort {declared!r}"
                        f" cannot fill a {sort!r} argument"
                    )
            elif isinstance(arg, (TrueF, FalseF)):
                if sort != BOOLEAN:
                    raise TypeMismatch(f"{name!r}: boolean literal in {sort!r} argument")
            else:
                raise TypeMismatch(
                    f"{name!r}: argument must be a variable or object, got {arg!r}"
                )

    def _app(self, node: App, env: dict, timevars: set):
        name = node.ident
        if name in self.model.fluents:
            decl = self.model.fluents[name]
            args = tuple(self._resolve(a, env, timevars) for a in node.args)
            self._check_args(name, decl.arg_sorts, args, env)
            return FluentVal(name, args)
        if name in self.model.macros:
            macro = self.model.macros[name]
            args = tuple(self._resolve(a, env, timevars) for a in node.args)
            if len(args) != len(macro.params):
                raise ArityMismatch(
                    f"macro {name!r} takes {len(macro.params)} arguments, got {len(args)}"
                )
            return MacroApp(name, args)
        if name in self.model.dist_features:
            feat = self.model.dist_features[name]
            args = tuple(self._resolve(a, env, timevars) for a in node.args)
            if len(args) != len(feat.params):
                raise ArityMismatch(
                    f"dist feature {name!r} takes {len(feat.params)} arguments"
                )
            return DistApp(name, args)
        if name in self.model.mindist_features:
            feat = self.model.mindist_features[name]
            dist = self.model.dist_features[feat.distfeature]
            # call shape: (extra..., from, <candidate var>, formula)
            if len(node.args) != len(dist.params) + 1:
                raise ArityMismatch(
                    f"mindist feature {name!r} takes {len(dist.params) + 1} arguments"
                )
            *lead, var_node, pred = node.args
            if not isinstance(var_node, Name):
                raise ModelError(
                    f"mindist feature {name!r}: candidate argument must be a variable"
                )
            var_sort = dist.params[-1][1]
            lead_args = tuple(self._resolve(a, env, timevars) for a in lead)
            inner = dict(env)
            inner[var_node.ident] = var_sort
            predicate = self._resolve(pred, inner, timevars)
            return MinDistApp(name, lead_args, var_node.ident, predicate, var_sort)
        if name in self.model.resources:
            raise ModelError(
                f"resource {name!r} used as a fluent; query an aspect like $available"
            )
        raise UnknownFluent(f"unknown fluent or macro {name!r}")


# ---------------------------------------------------------------------------
# build_domain
# ---------------------------------------------------------------------------


def build_domain(statements: list[Statement]) -> DomainModel:
    model = DomainModel()
    macro_stmts = []
    operator_stmts = []
    control_stmts = []

    # declarations first, in order; formula-bearing statements after
    for stmt in statements:
        kind, p = stmt.kind, stmt.payload
        if kind == "sorts":
            for group in p:
                for n in group.names:
                    model.sorts.add_sort(n, group.parent)
        elif kind == "objects":
            for group in p:
                for n in group.names:
                    model.sorts.add_object(n, group.sort)
        elif kind == "fluents":
            for sig in p:
                _declare_fluent(model, sig)
        elif kind == "resources":
            for sig in p:
                _declare_resource(model, sig)
        elif kind == "option":
            model.options[p.key] = p.value
        elif kind == "define":
            macro_stmts.append(p)
        elif kind == "operator":
            operator_stmts.append(p)
        elif kind == "control":
            control_stmts.append(p)
        elif kind == "distfeature":
            _declare_distfeature(model, p)
        elif kind == "mindistfeature":
            _declare_mindistfeature(model, p)
        elif kind in ("obs", "goal"):
            raise ModelError(f"#{kind} belongs in a problem file, not the domain")
        else:
            raise ModelError(f"unsupported statement kind {kind!r}")

    _build_macros(model, macro_stmts)
    for idx, p in enumerate(operator_stmts):
        model.operators.append(_build_operator(model, p, idx))
    for p in control_stmts:
        model.rules.append(_build_rule(model, p))
    return model


def _declare_fluent(model: DomainModel, sig):
    if sig.name in model.fluents or sig.name in model.resources:
        raise ModelError(f"fluent {sig.name!r} declared twice")
    for s in sig.arg_sorts:
        if not model.sorts.has_sort(s):
            raise UnknownSort(f"fluent {sig.name!r}: unknown argument sort {s!r}")
    value = sig.value
    if isinstance(value, str) and value != BOOLEAN and not model.sorts.has_sort(value):
        raise UnknownSort(f"fluent {sig.name!r}: unknown value sort {value!r}")
    if sig.functional_arg is not None and value != BOOLEAN:
        raise ModelError(
            f"fluent {sig.name!r}: functional markers are only legal on boolean fluents"
        )
    model.fluents[sig.name] = FluentDecl(sig.name, sig.arg_sorts, value, sig.functional_arg)


def _declare_resource(model: DomainModel, sig):
    if sig.name in model.resources or sig.name in model.fluents:
        raise ModelError(f"resource {sig.name!r} declared twice")
    for s in sig.arg_sorts:
        if not model.sorts.has_sort(s):
            raise UnknownSort(f"resource {sig.name!r}: unknown argument sort {s!r}")
    model.resources[sig.name] = ResourceDecl(sig.name, sig.arg_sorts, sig.domain)


def _declare_distfeature(model: DomainModel, p):
    r = Resolver(model)
    params = r.params(p.params, f"distfeature {p.name}")
    if len(params) < 2:
        raise ModelError(f"distfeature {p.name!r} needs at least (from, to) parameters")
    link = model.fluents.get(p.link)
    if link is None:
        raise UnknownFluent(f"distfeature {p.name!r}: unknown link predicate {p.link!r}")
    if not link.is_boolean or len(link.arg_sorts) != len(params):
        raise TypeMismatch(
            f"distfeature {p.name!r}: link predicate {p.link!r} must be boolean"
            f" with {len(params)} arguments"
        )
    if p.cost is not None:
        cost = model.fluents.get(p.cost)
        if cost is None:
            raise UnknownFluent(f"distfeature {p.name!r}: unknown cost fluent {p.cost!r}")
        if not cost.is_numeric or len(cost.arg_sorts) != len(params):
            raise TypeMismatch(
                f"distfeature {p.name!r}: cost fluent must be numeric"
                f" with {len(params)} arguments"
            )
    model.dist_features[p.name] = DistFeature(p.name, params, p.domain, p.link, p.cost)


def _declare_mindistfeature(model: DomainModel, p):
    if p.distfeature not in model.dist_features:
        raise UnknownName(
            f"mindistfeature {p.name!r}: unknown dist feature {p.distfeature!r}"
        )
    model.mindist_features[p.name] = MinDistFeature(p.name, p.distfeature, p.domain)


def _build_macros(model: DomainModel, payloads):
    # declare headers first so bodies can call other macros, then detect cycles
    headers = {}
    for p in payloads:
        if p.name in model.macros or p.name in headers:
            raise ModelError(f"macro {p.name!r} defined twice")
        headers[p.name] = p
    # provisional entries for arity checking during body resolution
    resolver = Resolver(model)
    for p in payloads:
        params = resolver.params(p.params, f"macro {p.name}")
        model.macros[p.name] = MacroDef(p.name, p.timevar, params, TrueF(), False)
    bodies = {}
    for p in payloads:
        r = Resolver(model)
        params = r.params(p.params, f"macro {p.name}")
        env = dict(params)
        body = r.formula(p.body, env, {p.timevar})
        bodies[p.name] = (params, body)
    # cycle check over the call graph
    graph = {
        name: [n.name for n in walk(body) if isinstance(n, MacroApp)]
        for name, (_, body) in bodies.items()
    }
    state: dict[str, int] = {}

    def visit(n, trail):
        if state.get(n) == 2:
            return
        if state.get(n) == 1:
            raise CyclicMacro(f"recursive macro expansion: {' -> '.join(trail + [n])}")
        state[n] = 1
        for m in graph.get(n, ()):
            visit(m, trail + [n])
        state[n] = 2

    for name in graph:
        visit(name, [])
    for p in payloads:
        params, body = bodies[p.name]
        is_term = _is_term_shaped(model, body)
        model.macros[p.name] = MacroDef(p.name, p.timevar, params, body, is_term)


def _is_term_shaped(model: DomainModel, body) -> bool:
    if isinstance(body, TERM_SHAPED):
        return True
    if isinstance(body, FluentVal):
        return not model.fluents[body.name].is_boolean
    if isinstance(body, MacroApp):
        return model.macros[body.name].is_term
    if isinstance(body, Fix):
        return _is_term_shaped(model, body.body)
    return False


def _offset_bounds(te: TimeExpr, timevar: str, where: str):
    if te.var is None:
        raise ModelError(f"{where}: offsets must be relative to the invocation time")
    if te.var != timevar:
        raise ModelError(f"{where}: offset uses {te.var!r}, expected {timevar!r}")


def _check_offset_within(te: TimeExpr, duration, where: str, lo_ok=1):
    """Static containment check when the duration is a constant."""
    if isinstance(duration, Num):
        d = duration.value
        if d.decimals == 0:
            dticks = d.mantissa
            if te.plus_dur:
                eff = dticks + te.const
            else:
                eff = te.const
            if eff < lo_ok or eff > dticks:
                raise EffectOutsideDuration(
                    f"{where}: offset {te} falls outside [1, duration={dticks}]"
                )


def _build_operator(model: DomainModel, p, index: int) -> OperatorSchema:
    r = Resolver(model)
    params = r.params(p.params, f"operator {p.name}")
    env = dict(params)
    timevars = {p.timevar}
    duration = r.formula(p.duration, env, timevars)
    precond = r.formula(p.precond, env, timevars)
    prevails = []
    for pv in p.prevails:
        _offset_bounds(pv.lo, p.timevar, f"operator {p.name} prevail")
        hi = pv.hi if pv.hi is not None else pv.lo
        _offset_bounds(hi, p.timevar, f"operator {p.name} prevail")
        _check_offset_within(pv.lo, duration, f"operator {p.name} prevail")
        _check_offset_within(hi, duration, f"operator {p.name} prevail")
        prevails.append(PrevailTemplate(pv.lo, hi, r.formula(pv.formula, env, timevars)))
    effects = []
    for e in p.effects:
        eenv = dict(env)
        quantified = r.params(e.quantified, f"operator {p.name} effect")
        eenv.update(quantified)
        _offset_bounds(e.lo, p.timevar, f"operator {p.name} effect")
        _check_offset_within(e.lo, duration, f"operator {p.name} effect")
        if e.hi is not None:
            _offset_bounds(e.hi, p.timevar, f"operator {p.name} effect")
            _check_offset_within(e.hi, duration, f"operator {p.name} effect")
        target = r._app(e.fluent, eenv, timevars)
        if not isinstance(target, FluentVal):
            raise UnknownFluent(
                f"operator {p.name}: effect target {e.fluent.ident!r} is not a fluent"
            )
        value = r.formula(e.value, eenv, timevars)
        decl = model.fluents[target.name]
        _check_value_type(model, decl, value, f"operator {p.name} effect")
        condition = (
            r.formula(e.condition, eenv, timevars) if e.condition is not None else None
        )
        effects.append(
            EffectTemplate(e.lo, e.hi, target.name, target.args, value, condition, quantified)
        )
    resource_effects = []
    for re_ in p.resource_effects:
        decl = model.resources.get(re_.resource.ident)
        if decl is None:
            raise UnknownName(
                f"operator {p.name}: unknown resource {re_.resource.ident!r}"
            )
        args = tuple(r.formula(a, env, timevars) for a in re_.resource.args)
        r._check_args(re_.resource.ident, decl.arg_sorts, args, env)
        _offset_bounds(re_.lo, p.timevar, f"operator {p.name} resources")
        _check_offset_within(re_.lo, duration, f"operator {p.name} resources")
        hi = re_.hi
        if hi is not None:
            _offset_bounds(hi, p.timevar, f"operator {p.name} resources")
            _check_offset_within(hi, duration, f"operator {p.name} resources")
        if re_.kind in ("consume", "produce", "assign") and hi is not None:
            raise ModelError(
                f"operator {p.name}: :{re_.kind} takes a single timepoint"
            )
        if re_.kind.startswith("borrow") and hi is None:
            hi = re_.lo
        amount = r.formula(re_.amount, env, timevars)
        resource_effects.append(
            ResourceEffectTemplate(re_.lo, hi, re_.kind, re_.resource.ident, args, amount)
        )
    return OperatorSchema(
        p.name,
        index,
        params,
        p.timevar,
        duration,
        precond,
        tuple(prevails),
        tuple(effects),
        tuple(resource_effects),
    )


def _check_value_type(model: DomainModel, decl: FluentDecl, value, where: str):
    if decl.is_boolean:
        if not isinstance(value, (TrueF, FalseF)):
            raise TypeMismatch(f"{where}: boolean fluent {decl.name!r} takes true/false")
    elif decl.is_numeric:
        if isinstance(value, (TrueF, FalseF, ConstRef)):
            ok = isinstance(value, ConstRef) and value.name not in (TRUE, FALSE)
            if not ok:
                raise TypeMismatch(f"{where}: numeric fluent {decl.name!r} takes a number")
    else:
        if isinstance(value, (TrueF, FalseF, Num)):
            raise TypeMismatch(
                f"{where}: fluent {decl.name!r} takes objects of sort {decl.value!r}"
            )


def _build_rule(model: DomainModel, p) -> ControlRule:
    r = Resolver(model, collect_free=True)
    # find the timepoint variable: names used in time position only
    tvars = {te.var for te in time_exprs(p.formula) if te.var is not None}
    if not tvars:
        raise ModelError(f"control rule {p.name!r} has no timepoint variable")
    if len(tvars) > 1:
        raise ModelError(
            f"control rule {p.name!r} uses several timepoint variables: {sorted(tvars)}"
        )
    timevar = tvars.pop()
    for te in time_exprs(p.formula):
        if te.plus_dur:
            raise ModelError(f"control rule {p.name!r}: 'dur' is not allowed in rules")
    formula = r.formula(p.formula, {}, {timevar})
    span = max(0, max_offset_from(formula, timevar))
    variables = tuple(sorted(r.free_vars.items()))
    return ControlRule(p.name, timevar, variables, formula, span)


# ---------------------------------------------------------------------------
# build_problem
# ---------------------------------------------------------------------------


def build_problem(model: DomainModel, statements: list[Statement]) -> ProblemInstance:
    prob = ProblemInstance(model)
    obs_payloads = []
    goal_formulas = []
    for stmt in statements:
        kind, p = stmt.kind, stmt.payload
        if kind == "objects":
            for group in p:
                for n in group.names:
                    prob.objects.add_object(n, group.sort)
        elif kind == "obs":
            if p.time != 0:
                raise ModelError("observations are only supported at time 0")
            obs_payloads.append(p)
        elif kind == "goal":
            goal_formulas.append(p)
        elif kind == "option":
            prob.options[p.key] = p.value
        elif kind == "sorts":
            raise ModelError("sorts belong in the domain, not the problem")
        else:
            raise ModelError(f"#{kind} is not a problem statement")

    for p in obs_payloads:
        for fluent, args, value, positive in _literals(model, prob, p.formula, "#obs"):
            if fluent in model.resources:
                if not positive:
                    raise ModelError("resource levels cannot be negated in #obs")
                key = (fluent, args)
                level = model.resources[fluent].domain.check(value, f"$init({fluent})")
                if key in prob.resource_init and prob.resource_init[key] != level:
                    raise ContradictoryObservation(
                        f"resource {fluent}{args} observed with two levels"
                    )
                prob.resource_init[key] = level
                continue
            decl = model.fluents[fluent]
            if decl.is_boolean:
                val = positive if value is None else (value == TRUE) == positive
            else:
                if value is None or not positive:
                    raise ModelError(
                        f"#obs: non-boolean fluent {fluent!r} needs 'f == value'"
                    )
                val = value
            if decl.is_numeric and isinstance(val, Fixed):
                val = decl.value.check(val, f"{fluent}{args}")
            key = (fluent, args)
            if key in prob.init and prob.init[key] != val:
                raise ContradictoryObservation(
                    f"fluent {fluent}{args} observed with two values"
                )
            prob.init[key] = val

    # closed world: booleans default to false, everything else must be given
    for name, decl in model.fluents.items():
        for args in ground_args(prob.objects, decl.arg_sorts):
            key = (name, args)
            if key not in prob.init:
                if decl.is_boolean:
                    prob.init[key] = False
                else:
                    raise NoInitialValue(
                        f"no initial value observed for {name}{args}"
                    )
    # resources default to their declared maximum
    for name, decl in model.resources.items():
        for args in ground_args(prob.objects, decl.arg_sorts):
            prob.resource_init.setdefault((name, args), decl.domain.maximum)

    for f in goal_formulas:
        for fluent, args, value, positive in _literals(model, prob, f, "#goal"):
            if fluent in model.resources:
                raise UnsupportedGoalFragment("resource levels cannot appear in goals")
            decl = model.fluents[fluent]
            if decl.is_boolean:
                if value is None:
                    lit = GoalLiteral(fluent, args, True, positive)
                else:
                    lit = GoalLiteral(fluent, args, True, (value == TRUE) == positive)
            else:
                if value is None:
                    raise UnsupportedGoalFragment(
                        f"goal on non-boolean fluent {fluent!r} needs 'f == value'"
                    )
                if not positive:
                    raise UnsupportedGoalFragment(
                        "negated assignments are outside the goal fragment"
                    )
                lit = GoalLiteral(fluent, args, value, True)
            prob.goal_literals.append(lit)
    return prob


def _literals(model, prob, formula, where):
    """Flatten a ground literal conjunction; yields (fluent, args, value, positive)."""
    items = _flatten_and(formula)
    for item in items:
        positive = True
        while isinstance(item, Not):
            positive = not positive
            item = item.operand
        if isinstance(item, TrueF):
            continue
        if isinstance(item, FalseF):
            raise UnsupportedGoalFragment(f"{where}: literal 'false' is unsatisfiable")
        if isinstance(item, Cmp):
            if item.op != "==":
                raise UnsupportedGoalFragment(
                    f"{where}: only '==' comparisons are supported, not {item.op!r}"
                )
            lhs, rhs = item.left, item.right
            if not isinstance(lhs, App):
                raise UnsupportedGoalFragment(f"{where}: assignment must start with a fluent")
            name, args = _ground_app(model, prob, lhs, where)
            if isinstance(rhs, Num):
                yield name, args, rhs.value, positive
            elif isinstance(rhs, Name):
                _known_object(prob, rhs.ident, where)
                yield name, args, rhs.ident, positive
            elif isinstance(rhs, (TrueF, FalseF)):
                yield name, args, TRUE if isinstance(rhs, TrueF) else FALSE, positive
            else:
                raise UnsupportedGoalFragment(f"{where}: unsupported assignment value")
        elif isinstance(item, (App, Name)):
            app = item if isinstance(item, App) else App(item.ident, ())
            name, args = _ground_app(model, prob, app, where)
            yield name, args, None, positive
        else:
            raise UnsupportedGoalFragment(
                f"{where}: only conjunctions of ground literals are supported"
            )


def _flatten_and(f):
    if isinstance(f, And):
        out = []
        for i in f.items:
            out.extend(_flatten_and(i))
        return out
    return [f]


def _known_object(prob, ident, where):
    if ident not in prob.objects.objects:
        raise UnknownObject(f"{where}: unknown object {ident!r}")


def _ground_app(model, prob, app: App, where):
    name = app.ident
    decl = model.fluents.get(name) or model.resources.get(name)
    if decl is None:
        raise UnknownFluent(f"{where}: unknown fluent {name!r}")
    if len(app.args) != len(decl.arg_sorts):
        raise ArityMismatch(
            f"{where}: {name!r} takes {len(decl.arg_sorts)} arguments, got {len(app.args)}"
        )
    args = []
    for a, sort in zip(app.args, decl.arg_sorts):
        if not isinstance(a, Name):
            raise UnsupportedGoalFragment(f"{where}: arguments must be object constants")
        _known_object(prob, a.ident, where)
        declared = prob.objects.sort_of(a.ident)
        if not prob.objects.is_subsort(declared, sort):
            raise TypeMismatch(
                f"{where}: object {a.ident!r} of sort {declared!r}"
                f" cannot fill a {sort!r} argument of {name!r}"
            )
        args.append(a.ident)
    return name, tuple(args)


def ground_args(objects: SortTable, arg_sorts: tuple):
    pools = [objects.members(s) for s in arg_sorts]
    return itertools.product(*pools)


def ground_instances(model: DomainModel, name: str, objects: SortTable) -> list:
    """All ground instances of a fluent or resource over the given objects."""
    decl = model.fluents.get(name) or model.resources.get(name)
    if decl is None:
        raise UnknownName(f"unknown fluent or resource {name!r}")
    return [(name, args) for args in ground_args(objects, decl.arg_sorts)]


def validate_constants(model: DomainModel, prob: ProblemInstance):
    """Every ConstRef in operators, rules and macros must name a real object."""

    def check(node, where):
        for n in walk(node):
            if isinstance(n, ConstRef) and n.name not in prob.objects.objects:
                raise UnknownObject(f"{where}: unknown object {n.name!r}")

    for op in model.operators:
        check(op.precond, f"operator {op.name}")
        check(op.duration, f"operator {op.name}")
        for pv in op.prevails:
            check(pv.formula, f"operator {op.name}")
        for e in op.effects:
            for a in e.args:
                check(a, f"operator {op.name}")
            check(e.value, f"operator {op.name}")
            if e.condition is not None:
                check(e.condition, f"operator {op.name}")
    for rule in model.rules:
        check(rule.formula, f"control rule {rule.name}")
    for macro in model.macros.values():
        check(macro.body, f"macro {macro.name}")
