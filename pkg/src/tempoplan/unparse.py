"""Render parsed statements back to source text.

`parse(unparse(stmt))` returns a structurally identical statement; the
property test drives this over generated trees. Only ASCII spellings are
emitted. A temporal fix's body is parenthesized unless it is atomic, which
keeps the fix-scope rule (swallow &/|, stop at ->) reversible.
"""

from __future__ import annotations

from .fixedpoint import NumericDomain
from .formulas import (
    And,
    App,
    Arith,
    Aspect,
    Cmp,
    FalseF,
    Fix,
    FixIntv,
    GoalF,
    Iff,
    Implies,
    Name,
    NegT,
    Not,
    Num,
    Or,
    Quant,
    SumAgg,
    TimeExpr,
    TrueF,
    ValueAt,
)
from .parser import (
    ControlPayload,
    DefinePayload,
    DistFeaturePayload,
    EffectSpec,
    FluentSig,
    MinDistFeaturePayload,
    ObjectGroup,
    ObsPayload,
    OperatorPayload,
    OptionPayload,
    Param,
    PrevailSpec,
    ResourceEffectSpec,
    ResourceSig,
    SortGroup,
    Statement,
)

# precedence levels: higher binds tighter
_IFF, _IMPL, _OR, _AND, _UNARY, _CMP, _ADD, _MUL, _PRIM = range(9)


def expr(node, level=_IFF) -> str:
    text, prec = _expr(node)
    if prec < level:
        return f"({text})"
    return text


def _window(lo: TimeExpr, hi, lo_open=False, hi_open=False) -> str:
    lo_b = "(" if lo_open else "["
    hi_b = ")" if hi_open else "]"
    if hi is None:
        return f"[{lo}]"
    return f"{lo_b}{lo}, {hi}{hi_b}"


def _expr(node):
    if isinstance(node, TrueF):
        return "true", _PRIM
    if isinstance(node, FalseF):
        return "false", _PRIM
    if isinstance(node, Name):
        return node.ident, _PRIM
    if isinstance(node, Num):
        return str(node.value), _PRIM
    if isinstance(node, App):
        args = ", ".join(expr(a) for a in node.args)
        return f"{node.ident}({args})", _PRIM
    if isinstance(node, GoalF):
        return f"goal({expr(node.body)})", _PRIM
    if isinstance(node, ValueAt):
        return f"value({node.time}, {expr(node.term)})", _PRIM
    if isinstance(node, Aspect):
        return f"${node.name}({expr(node.resource)})", _PRIM
    if isinstance(node, SumAgg):
        return (
            f"$sum(<{node.var}>, {expr(node.formula)}, {expr(node.term)})",
            _PRIM,
        )
    # a rendered fix swallows & and | chains to its right when reparsed, so it
    # reports implication-level precedence and gets parenthesized inside chains
    if isinstance(node, Fix):
        return f"{_window(node.time, None)} {expr(node.body, _PRIM)}", _IMPL
    if isinstance(node, FixIntv):
        w = _window(node.lo, node.hi, node.lo_open, node.hi_open)
        return f"{w} {expr(node.body, _PRIM)}", _IMPL
    if isinstance(node, Not):
        return f"!{expr(node.operand, _UNARY)}", _UNARY
    if isinstance(node, NegT):
        return f"-{expr(node.operand, _PRIM)}", _MUL
    if isinstance(node, Quant):
        vs = ", ".join(n if s is None else f"{n} : {s}" for n, s in node.vars)
        return f"{node.kind} {vs} [ {expr(node.body)} ]", _UNARY
    if isinstance(node, And):
        return " & ".join(expr(i, _UNARY) for i in node.items), _AND
    if isinstance(node, Or):
        return " | ".join(expr(i, _AND) for i in node.items), _OR
    if isinstance(node, Implies):
        return f"{expr(node.left, _OR)} -> {expr(node.right, _IMPL)}", _IMPL
    if isinstance(node, Iff):
        return f"{expr(node.left, _IMPL)} <-> {expr(node.right, _IMPL)}", _IFF
    if isinstance(node, Cmp):
        return f"{expr(node.left, _ADD)} {node.op} {expr(node.right, _ADD)}", _CMP
    if isinstance(node, Arith):
        if node.op in "+-":
            lhs = expr(node.left, _ADD)
            rhs = expr(node.right, _MUL)
            return f"{lhs} {node.op} {rhs}", _ADD
        lhs = expr(node.left, _MUL)
        rhs = expr(node.right, _PRIM)
        return f"{lhs} {node.op} {rhs}", _MUL
    raise TypeError(f"cannot unparse {node!r}")


def _numdomain(dom: NumericDomain) -> str:
    if dom.kind == "integer":
        return f"integer [{dom.minimum}, {dom.maximum}]"
    return f"fixed {dom.decimals} [{dom.minimum}, {dom.maximum}]"


def _valuespec(value) -> str:
    if value == "boolean":
        return "boolean"
    if isinstance(value, NumericDomain):
        return _numdomain(value)
    return str(value)


def _params(params) -> str:
    return ", ".join(p.name if p.sort is None else f"{p.name} : {p.sort}" for p in params)


def _fluent_sig(sig: FluentSig) -> str:
    args = []
    for i, a in enumerate(sig.arg_sorts):
        args.append(("^" if sig.functional_arg == i else "") + a)
    head = sig.name if not args else f"{sig.name}({', '.join(args)})"
    if sig.value == "boolean":
        return head
    return f"{head} : {_valuespec(sig.value)}"


def _effect(e: EffectSpec) -> str:
    parts = []
    if e.quantified:
        parts.append(f"forall({_params(e.quantified)})")
    parts.append(_window(e.lo, e.hi))
    parts.append(f"{expr(e.fluent)} := {expr(e.value)}")
    text = " ".join(parts)
    if e.condition is not None:
        text += f" when {expr(e.condition)}"
    return text


def _resource_effect(r: ResourceEffectSpec) -> str:
    return f"{_window(r.lo, r.hi)} :{r.kind} {expr(r.resource)} :amount {expr(r.amount)}"


def unparse(stmt: Statement) -> str:
    kind, p = stmt.kind, stmt.payload
    if kind == "sorts":
        return "#sorts " + "; ".join(
            ", ".join(g.names) + (f" : {g.parent}" if g.parent else "") for g in p
        )
    if kind == "objects":
        return "#objects " + "; ".join(f"{', '.join(g.names)} : {g.sort}" for g in p)
    if kind == "fluents":
        return "#fluents " + ", ".join(_fluent_sig(s) for s in p)
    if kind == "resources":
        return "#resources " + ", ".join(
            (f"{s.name}({', '.join(s.arg_sorts)})" if s.arg_sorts else s.name)
            + f" : {_numdomain(s.domain)}"
            for s in p
        )
    if kind == "obs":
        return f"#obs [{p.time}] {expr(p.formula)}"
    if kind == "goal":
        return f"#goal {expr(p)}"
    if kind == "option":
        return f"#option {p.key} {p.value}"
    if kind == "control":
        return f'#control :name "{p.name}"\n  {expr(p.formula)}'
    if kind == "define":
        head = p.name if not p.params else f"{p.name}({_params(p.params)})"
        return f"#define [{p.timevar}] {head}:\n  {expr(p.body)}"
    if kind == "distfeature":
        text = f"#distfeature {p.name}({_params(p.params)})"
        text += f" :domain {_numdomain(p.domain)} :link {p.link}"
        if p.cost:
            text += f" :cost {p.cost}"
        return text
    if kind == "mindistfeature":
        return (
            f"#mindistfeature {p.name} :distfeature {p.distfeature}"
            f" :domain {_numdomain(p.domain)}"
        )
    if kind == "operator":
        lines = [f"#operator {p.name}({_params(p.params)}) :at {p.timevar}"]
        if not (isinstance(p.duration, Num) and str(p.duration.value) == "1"):
            lines.append(f":duration {expr(p.duration)}")
        if not isinstance(p.precond, TrueF):
            lines.append(f":precond {expr(p.precond)}")
        if p.prevails:
            lines.append(
                ":prevail "
                + ", ".join(f"{_window(v.lo, v.hi)} {expr(v.formula)}" for v in p.prevails)
            )
        if p.effects:
            lines.append(":effects " + ",\n          ".join(_effect(e) for e in p.effects))
        if p.resource_effects:
            lines.append(
                ":resources " + ", ".join(_resource_effect(r) for r in p.resource_effects)
            )
        return "\n".join(lines)
    raise TypeError(f"cannot unparse statement kind {kind!r}")


def unparse_all(statements) -> str:
    return "\n\n".join(unparse(s) for s in statements) + "\n"
