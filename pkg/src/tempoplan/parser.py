"""Parser and unparser for the `#`-statement domain language.

Statements start at a `#keyword` and run to the next `#` or end of input.
The parser is total: `parse` returns every statement it could read plus a
diagnostic (with span and expected-token set) for every statement it could
not; it never raises on malformed input. `parse_strict` raises the first
diagnostic instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DuplicateRuleName, SyntaxDiagnostic
from .fixedpoint import Fixed, NumericDomain
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
from .lexer import Token, tokenize

STATEMENT_KINDS = {
    "sorts",
    "objects",
    "fluents",
    "resources",
    "obs",
    "goal",
    "operator",
    "control",
    "define",
    "distfeature",
    "mindistfeature",
    "option",
}

REJECTED_KINDS = {"dep", "dom", "occ", "acs"}

ASPECTS = {
    "init",
    "consumed",
    "produced",
    "borrowed",
    "borrowed-nonex",
    "available",
    "minimum",
    "maximum",
}

RESOURCE_KINDS = {
    "consume",
    "produce",
    "borrow-exclusive",
    "borrow-nonexclusive",
    "assign",
}

CMP_OPS = {"==", "!=", "<", "<=", ">", ">="}


@dataclass(frozen=True)
class Param:
    name: str
    sort: str | None = None  # None: derived from the name's sort prefix


@dataclass(frozen=True)
class FluentSig:
    name: str
    arg_sorts: tuple
    value: object  # "boolean" | sort name | NumericDomain
    functional_arg: int | None = None  # 0-based designated argument


@dataclass(frozen=True)
class ResourceSig:
    name: str
    arg_sorts: tuple
    domain: NumericDomain


@dataclass(frozen=True)
class EffectSpec:
    lo: TimeExpr
    hi: TimeExpr | None
    fluent: App
    value: object
    condition: object = None
    quantified: tuple = ()  # of Param


@dataclass(frozen=True)
class ResourceEffectSpec:
    lo: TimeExpr
    hi: TimeExpr | None
    kind: str
    resource: App
    amount: object


@dataclass(frozen=True)
class PrevailSpec:
    lo: TimeExpr
    hi: TimeExpr | None
    formula: object


@dataclass(frozen=True)
class Statement:
    kind: str
    payload: object
    line: int
    col: int


# payload dataclasses per statement kind


@dataclass(frozen=True)
class SortGroup:
    names: tuple
    parent: str | None


@dataclass(frozen=True)
class ObjectGroup:
    names: tuple
    sort: str


@dataclass(frozen=True)
class ObsPayload:
    time: int
    formula: object


@dataclass(frozen=True)
class OperatorPayload:
    name: str
    params: tuple
    timevar: str
    duration: object
    precond: object
    prevails: tuple
    effects: tuple
    resource_effects: tuple


@dataclass(frozen=True)
class ControlPayload:
    name: str
    formula: object


@dataclass(frozen=True)
class DefinePayload:
    name: str
    timevar: str
    params: tuple
    body: object


@dataclass(frozen=True)
class DistFeaturePayload:
    name: str
    params: tuple
    domain: NumericDomain
    link: str
    cost: str | None


@dataclass(frozen=True)
class MinDistFeaturePayload:
    name: str
    distfeature: str
    domain: NumericDomain


@dataclass(frozen=True)
class OptionPayload:
    key: str
    value: str


@dataclass
class ParseResult:
    statements: list
    diagnostics: list

    def ok(self) -> bool:
        return not self.diagnostics


DEFAULT_INT_BOUNDS = (0, 2_147_483_647)


class _Parser:
    def __init__(self, tokens: list[Token], filename: str):
        self.toks = tokens
        self.pos = 0
        self.filename = filename

    # -- token plumbing ------------------------------------------------------

    @property
    def cur(self) -> Token:
        return self.toks[self.pos]

    def advance(self) -> Token:
        t = self.cur
        if t.kind != "EOF":
            self.pos += 1
        return t

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.cur
        return t.kind == kind and (text is None or t.text == text)

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        if self.at(kind, text):
            return self.advance()
        return None

    def expect(self, kind: str, text: str | None = None) -> Token:
        if self.at(kind, text):
            return self.advance()
        t = self.cur
        want = text if text is not None else kind
        found = t.text or t.kind
        raise SyntaxDiagnostic(
            f"expected {want!r}, found {found!r}",
            t.line,
            t.col,
            [want],
            self.filename,
        )

    def fail(self, message: str, expected=()):
        t = self.cur
        raise SyntaxDiagnostic(message, t.line, t.col, expected, self.filename)

    def clause(self, word: str) -> bool:
        """True when the next tokens are `: word` (a clause keyword)."""
        t = self.cur
        if t.kind == "PUNCT" and t.text == ":":
            nxt = self.toks[self.pos + 1]
            return nxt.kind == "IDENT" and nxt.text == word
        return False

    def any_clause(self) -> str | None:
        t = self.cur
        if t.kind == "PUNCT" and t.text == ":":
            nxt = self.toks[self.pos + 1]
            if nxt.kind == "IDENT":
                return nxt.text
        return None

    def take_clause(self, word: str):
        self.expect("PUNCT", ":")
        self.expect("IDENT", word)

    # -- statements ------------------------------------------------------------

    def statements(self) -> ParseResult:
        stmts, diags = [], []
        rule_names = set()
        while not self.at("EOF"):
            if not self.at("HASH"):
                t = self.cur
                diags.append(
                    SyntaxDiagnostic(
                        f"expected a '#' statement, found {t.text!r}",
                        t.line,
                        t.col,
                        ["#statement"],
                        self.filename,
                    )
                )
                self.skip_to_next_statement()
                continue
            start = self.cur
            try:
                stmt = self.statement()
                if stmt.kind == "control":
                    nm = stmt.payload.name
                    if nm in rule_names:
                        raise DuplicateRuleName(
                            f"control rule {nm!r} declared twice",
                            start.line,
                            start.col,
                            self.filename,
                        )
                    rule_names.add(nm)
                stmts.append(stmt)
            except SyntaxDiagnostic as d:
                diags.append(d)
                self.skip_to_next_statement()
            except DuplicateRuleName as d:
                diags.append(d)
                self.skip_to_next_statement()
        return ParseResult(stmts, diags)

    def skip_to_next_statement(self):
        if self.at("HASH"):
            self.advance()
        while not self.at("EOF") and not self.at("HASH"):
            self.advance()

    def statement(self) -> Statement:
        head = self.expect("HASH")
        kind = head.text
        if kind in REJECTED_KINDS:
            raise SyntaxDiagnostic(
                f"#{kind} statements are not supported by this planner",
                head.line,
                head.col,
                sorted(STATEMENT_KINDS),
                self.filename,
            )
        if kind not in STATEMENT_KINDS:
            raise SyntaxDiagnostic(
                f"unknown statement kind #{kind}",
                head.line,
                head.col,
                sorted(STATEMENT_KINDS),
                self.filename,
            )
        payload = getattr(self, f"stmt_{kind}")()
        if kind == "control" and payload.name is None:
            payload = ControlPayload(f"rule-line-{head.line}", payload.formula)
        return Statement(kind, payload, head.line, head.col)

    def stmt_sorts(self):
        groups = [self.sort_group(need_parent=False)]
        while self.accept("PUNCT", ";"):
            groups.append(self.sort_group(need_parent=False))
        return tuple(groups)

    def stmt_objects(self):
        groups = [self.sort_group(need_parent=True)]
        while self.accept("PUNCT", ";"):
            groups.append(self.sort_group(need_parent=True))
        return tuple(ObjectGroup(g.names, g.parent) for g in groups)

    def sort_group(self, need_parent: bool) -> SortGroup:
        names = [self.expect("IDENT").text]
        while self.accept("PUNCT", ","):
            names.append(self.expect("IDENT").text)
        parent = None
        if self.accept("PUNCT", ":"):
            parent = self.expect("IDENT").text
        elif need_parent:
            self.fail("object declarations need ': sort'", [":"])
        return SortGroup(tuple(names), parent)

    def stmt_fluents(self):
        decls = [self.fluent_decl()]
        while self.accept("PUNCT", ","):
            decls.append(self.fluent_decl())
        return tuple(decls)

    def fluent_decl(self) -> FluentSig:
        name = self.expect("IDENT").text
        args, functional = [], None
        if self.accept("PUNCT", "("):
            if not self.at("PUNCT", ")"):
                while True:
                    mark = bool(self.accept("PUNCT", "^"))
                    args.append(self.expect("IDENT").text)
                    if mark:
                        functional = len(args) - 1
                    if not self.accept("PUNCT", ","):
                        break
            self.expect("PUNCT", ")")
        value: object = "boolean"
        if self.at("PUNCT", ":"):
            self.advance()
            value = self.value_spec()
        return FluentSig(name, tuple(args), value, functional)

    def value_spec(self):
        t = self.expect("IDENT")
        if t.text == "boolean":
            return "boolean"
        if t.text == "integer":
            lo, hi = self.bounds_opt(decimals=0, default=DEFAULT_INT_BOUNDS)
            return NumericDomain("integer", 0, lo, hi)
        if t.text == "fixed":
            dec = int(self.expect("NUMBER").text)
            lo, hi = self.bounds_opt(decimals=dec, default=None)
            return NumericDomain("fixed", dec, lo, hi)
        return t.text  # a sort name

    def bounds_opt(self, decimals: int, default):
        if not self.at("PUNCT", "["):
            if default is None:
                self.fail("fixed-point domains need explicit [min, max] bounds", ["["])
            return default
        self.expect("PUNCT", "[")
        lo = self.signed_number().scaled(decimals).mantissa
        self.expect("PUNCT", ",")
        hi = self.signed_number().scaled(decimals).mantissa
        self.expect("PUNCT", "]")
        return lo, hi

    def signed_number(self) -> Fixed:
        neg = bool(self.accept("PUNCT", "-"))
        t = self.expect("NUMBER")
        v = Fixed.parse(t.text)
        return -v if neg else v

    def stmt_resources(self):
        decls = [self.resource_decl()]
        while self.accept("PUNCT", ","):
            decls.append(self.resource_decl())
        return tuple(decls)

    def resource_decl(self) -> ResourceSig:
        name = self.expect("IDENT").text
        args = []
        if self.accept("PUNCT", "("):
            if not self.at("PUNCT", ")"):
                while True:
                    args.append(self.expect("IDENT").text)
                    if not self.accept("PUNCT", ","):
                        break
            self.expect("PUNCT", ")")
        self.expect("PUNCT", ":")
        dom = self.value_spec()
        if not isinstance(dom, NumericDomain):
            self.fail("resources take numeric domains", ["integer", "fixed"])
        return ResourceSig(name, tuple(args), dom)

    def stmt_obs(self):
        self.expect("PUNCT", "[")
        t = self.expect("NUMBER")
        time = int(t.text)
        self.expect("PUNCT", "]")
        return ObsPayload(time, self.formula())

    def stmt_goal(self):
        return self.formula()

    def stmt_option(self):
        key = self.expect("IDENT").text
        if self.cur.kind in ("IDENT", "NUMBER"):
            value = self.advance().text
        else:
            self.fail("option value expected", ["identifier", "number"])
        return OptionPayload(key, value)

    def stmt_operator(self):
        name = self.expect("IDENT").text
        params = self.param_list()
        timevar = None
        duration = Num(Fixed(1))
        precond: object = TrueF()
        prevails: list = []
        effects: list = []
        reseffects: list = []
        seen = set()
        while (cl := self.any_clause()) is not None:
            if cl in seen and cl not in ("prevail", "effects", "resources"):
                self.fail(f"duplicate :{cl} clause")
            seen.add(cl)
            self.take_clause(cl)
            if cl == "at":
                timevar = self.expect("IDENT").text
            elif cl == "duration":
                duration = self.term()
            elif cl == "precond":
                precond = self.formula()
            elif cl == "prevail":
                prevails.append(self.prevail_item())
                while self.accept("PUNCT", ","):
                    prevails.append(self.prevail_item())
            elif cl == "effects":
                effects.append(self.effect_item())
                while self.accept("PUNCT", ","):
                    effects.append(self.effect_item())
            elif cl == "resources":
                reseffects.append(self.resource_effect_item())
                while self.accept("PUNCT", ","):
                    reseffects.append(self.resource_effect_item())
            else:
                self.fail(f"unknown operator clause :{cl}",
                          ["at", "duration", "precond", "prevail", "effects", "resources"])
        if timevar is None:
            self.fail("operator needs an ':at <timevar>' clause", [":at"])
        return OperatorPayload(
            name,
            params,
            timevar,
            duration,
            precond,
            tuple(prevails),
            tuple(effects),
            tuple(reseffects),
        )

    def param_list(self) -> tuple:
        self.expect("PUNCT", "(")
        params = []
        if not self.at("PUNCT", ")"):
            while True:
                pname = self.expect("IDENT").text
                psort = None
                if self.accept("PUNCT", ":"):
                    psort = self.expect("IDENT").text
                params.append(Param(pname, psort))
                if not self.accept("PUNCT", ","):
                    break
        self.expect("PUNCT", ")")
        return tuple(params)

    def time_window(self):
        self.expect("PUNCT", "[")
        lo = self.time_expr()
        hi = None
        if self.accept("PUNCT", ","):
            hi = self.time_expr()
        self.expect("PUNCT", "]")
        return lo, hi

    def prevail_item(self) -> PrevailSpec:
        lo, hi = self.time_window()
        return PrevailSpec(lo, hi, self.formula())

    def effect_item(self) -> EffectSpec:
        quantified = ()
        if self.at("IDENT", "forall"):
            self.advance()
            quantified = self.param_list()
        lo, hi = self.time_window()
        target = self.term()
        if not isinstance(target, (App, Name)):
            self.fail("effect target must be a fluent instance")
        if isinstance(target, Name):
            target = App(target.ident, ())
        self.expect("PUNCT", ":=")
        value = self.term()
        condition = None
        if self.at("IDENT", "when"):
            self.advance()
            condition = self.formula()
        return EffectSpec(lo, hi, target, value, condition, quantified)

    def resource_effect_item(self) -> ResourceEffectSpec:
        lo, hi = self.time_window()
        kind = self.any_clause()
        if kind not in RESOURCE_KINDS:
            self.fail("resource effect kind expected", sorted(RESOURCE_KINDS))
        self.take_clause(kind)
        res = self.term()
        if isinstance(res, Name):
            res = App(res.ident, ())
        if not isinstance(res, App):
            self.fail("resource effect target must be a resource instance")
        self.take_clause("amount")
        amount = self.term()
        return ResourceEffectSpec(lo, hi, kind, res, amount)

    def stmt_control(self):
        name = None
        if self.clause("name"):
            self.take_clause("name")
            name = self.expect("STRING").text
        return ControlPayload(name, self.formula())

    def stmt_define(self):
        self.expect("PUNCT", "[")
        timevar = self.expect("IDENT").text
        self.expect("PUNCT", "]")
        name = self.expect("IDENT").text
        params: tuple = ()
        if self.at("PUNCT", "("):
            params = self.param_list()
        self.expect("PUNCT", ":")
        return DefinePayload(name, timevar, params, self.formula())

    def stmt_distfeature(self):
        name = self.expect("IDENT").text
        params = self.param_list()
        domain = link = cost = None
        while (cl := self.any_clause()) is not None:
            self.take_clause(cl)
            if cl == "domain":
                domain = self.value_spec()
            elif cl == "link":
                link = self.expect("IDENT").text
            elif cl == "cost":
                cost = self.expect("IDENT").text
            else:
                self.fail(f"unknown distfeature clause :{cl}", ["domain", "link", "cost"])
        if not isinstance(domain, NumericDomain):
            self.fail("distfeature needs a numeric :domain")
        if link is None:
            self.fail("distfeature needs a :link predicate", [":link"])
        return DistFeaturePayload(name, params, domain, link, cost)

    def stmt_mindistfeature(self):
        name = self.expect("IDENT").text
        dist = domain = None
        while (cl := self.any_clause()) is not None:
            self.take_clause(cl)
            if cl == "distfeature":
                dist = self.expect("IDENT").text
            elif cl == "domain":
                domain = self.value_spec()
            else:
                self.fail(f"unknown mindistfeature clause :{cl}", ["distfeature", "domain"])
        if dist is None or not isinstance(domain, NumericDomain):
            self.fail("mindistfeature needs :distfeature and a numeric :domain")
        return MinDistFeaturePayload(name, dist, domain)

    # -- formulas and terms -----------------------------------------------------

    def formula(self):
        return self.iff()

    def iff(self):
        left = self.implication()
        while self.accept("PUNCT", "<->"):
            left = Iff(left, self.implication())
        return left

    def implication(self):
        left = self.disjunction()
        if self.accept("PUNCT", "->"):
            return Implies(left, self.implication())
        return left

    def disjunction(self):
        items = [self.conjunction()]
        while self.accept("PUNCT", "|"):
            items.append(self.conjunction())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conjunction(self):
        items = [self.unary()]
        while self.accept("PUNCT", "&"):
            items.append(self.unary())
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self):
        if self.accept("PUNCT", "!"):
            return Not(self.unary())
        if self.at("IDENT", "forall") or self.at("IDENT", "exists"):
            kind = self.advance().text
            vars_ = []
            while True:
                vname = self.expect("IDENT").text
                vsort = None
                if self.accept("PUNCT", ":"):
                    vsort = self.expect("IDENT").text
                vars_.append((vname, vsort))
                if not self.accept("PUNCT", ","):
                    break
            self.expect("PUNCT", "[")
            body = self.formula()
            self.expect("PUNCT", "]")
            return Quant(kind, tuple(vars_), body)
        if self.at("PUNCT", "["):
            return self.fixed(lo_open=False)
        if self.at("PUNCT", "("):
            intv = self.try_semiopen_interval()
            if intv is not None:
                return intv
        return self.atom()

    def fixed(self, lo_open: bool):
        self.advance()  # [ or (
        lo = self.time_expr()
        hi = None
        hi_open = False
        if self.accept("PUNCT", ","):
            hi = self.time_expr()
        if self.accept("PUNCT", ")"):
            hi_open = True
        else:
            self.expect("PUNCT", "]")
        # scope: swallow & and | chains, stop at -> (and at iff)
        body = self.disjunction()
        if hi is None:
            return Fix(lo, body)
        return FixIntv(lo, hi, body, lo_open, hi_open)

    def try_semiopen_interval(self):
        """`(a, b]` style interval fix; backtracks when it is a paren formula."""
        save = self.pos
        try:
            self.advance()  # (
            self.time_expr()
            if not self.at("PUNCT", ","):
                raise SyntaxDiagnostic("not an interval", 0, 0)
            self.advance()
            self.time_expr()
            if not (self.at("PUNCT", "]") or self.at("PUNCT", ")")):
                raise SyntaxDiagnostic("not an interval", 0, 0)
        except SyntaxDiagnostic:
            self.pos = save
            return None
        self.pos = save
        return self.fixed(lo_open=True)

    def atom(self):
        left = self.term()
        for op in CMP_OPS:
            if self.at("PUNCT", op):
                self.advance()
                return Cmp(op, left, self.term())
        return left

    def term(self):
        return self.additive()

    def additive(self):
        left = self.multiplicative()
        while True:
            if self.accept("PUNCT", "+"):
                left = Arith("+", left, self.multiplicative())
            elif self.accept("PUNCT", "-"):
                left = Arith("-", left, self.multiplicative())
            else:
                return left

    def multiplicative(self):
        left = self.unary_term()
        while True:
            if self.accept("PUNCT", "*"):
                left = Arith("*", left, self.unary_term())
            elif self.accept("PUNCT", "/"):
                left = Arith("/", left, self.unary_term())
            else:
                return left

    def unary_term(self):
        if self.accept("PUNCT", "-"):
            inner = self.unary_term()
            if isinstance(inner, Num):
                return Num(-inner.value)
            return NegT(inner)
        return self.primary()

    def primary(self):
        t = self.cur
        if t.kind == "NUMBER":
            self.advance()
            return Num(Fixed.parse(t.text))
        if t.kind == "DOLLAR":
            return self.dollar()
        if t.kind == "IDENT":
            if t.text in ("forall", "exists"):
                return self.unary()
            if t.text == "true":
                self.advance()
                return TrueF()
            if t.text == "false":
                self.advance()
                return FalseF()
            if t.text == "goal":
                self.advance()
                self.expect("PUNCT", "(")
                body = self.formula()
                self.expect("PUNCT", ")")
                return GoalF(body)
            if t.text == "value":
                self.advance()
                self.expect("PUNCT", "(")
                te = self.time_expr()
                self.expect("PUNCT", ",")
                inner = self.formula_or_term_arg()
                self.expect("PUNCT", ")")
                return ValueAt(te, inner)
            self.advance()
            if self.at("PUNCT", "("):
                return App(t.text, self.arg_list())
            return Name(t.text)
        if t.kind == "PUNCT" and t.text == "(":
            self.advance()
            inner = self.formula()
            self.expect("PUNCT", ")")
            return inner
        if t.kind == "PUNCT" and t.text == "[":
            # a temporal fix in term position (macro bodies): [t] <term>
            return self.fixed(lo_open=False)
        if t.kind == "PUNCT" and t.text == "!":
            return Not(self.unary())
        raise SyntaxDiagnostic(
            f"expected a term or formula, found {(t.text or t.kind)!r}",
            t.line,
            t.col,
            ["identifier", "number", "(", "["],
            self.filename,
        )

    def dollar(self):
        t = self.expect("DOLLAR")
        word = t.text
        if word == "sum":
            self.expect("PUNCT", "(")
            self.expect("PUNCT", "<")
            var = self.expect("IDENT").text
            self.expect("PUNCT", ">")
            self.expect("PUNCT", ",")
            phi = self.formula()
            self.expect("PUNCT", ",")
            body = self.term()
            self.expect("PUNCT", ")")
            return SumAgg(var, phi, body)
        if word in ASPECTS:
            self.expect("PUNCT", "(")
            res = self.term()
            self.expect("PUNCT", ")")
            if isinstance(res, Name):
                res = App(res.ident, ())
            if not isinstance(res, App):
                raise SyntaxDiagnostic(
                    "aspect argument must be a resource instance",
                    t.line,
                    t.col,
                    [],
                    self.filename,
                )
            return Aspect(word, res)
        raise SyntaxDiagnostic(
            f"unknown $-word ${word}", t.line, t.col, sorted(ASPECTS | {"sum"}), self.filename
        )

    def formula_or_term_arg(self):
        return self.formula()

    def arg_list(self) -> tuple:
        self.expect("PUNCT", "(")
        args = []
        if not self.at("PUNCT", ")"):
            while True:
                args.append(self.formula())
                if not self.accept("PUNCT", ","):
                    break
        self.expect("PUNCT", ")")
        return tuple(args)

    def time_expr(self) -> TimeExpr:
        t = self.cur
        var = None
        const = 0
        plus_dur = False
        if t.kind == "NUMBER":
            self.advance()
            const = int(t.text)
        elif t.kind == "IDENT":
            self.advance()
            if t.text == "dur":
                plus_dur = True
            else:
                var = t.text
        else:
            raise SyntaxDiagnostic(
                "timepoint expected", t.line, t.col, ["identifier", "number"], self.filename
            )
        while True:
            if self.accept("PUNCT", "+"):
                sign = 1
            elif self.accept("PUNCT", "-"):
                sign = -1
            else:
                break
            nxt = self.cur
            if nxt.kind == "NUMBER":
                self.advance()
                const += sign * int(nxt.text)
            elif nxt.kind == "IDENT" and nxt.text == "dur" and sign == 1 and not plus_dur:
                self.advance()
                plus_dur = True
            elif nxt.kind == "IDENT":
                raise SyntaxDiagnostic(
                    f"timepoint arithmetic beyond var+const is not supported "
                    f"(found {nxt.text!r})",
                    nxt.line,
                    nxt.col,
                    ["integer offset"],
                    self.filename,
                )
            else:
                raise SyntaxDiagnostic(
                    "offset expected after sign", nxt.line, nxt.col, ["integer"], self.filename
                )
        return TimeExpr(var, const, plus_dur)


def parse(text: str, filename: str = "<input>") -> ParseResult:
    """Parse source text; never raises, collects diagnostics instead."""
    try:
        toks = tokenize(text, filename)
    except SyntaxDiagnostic as d:
        return ParseResult([], [d])
    parser = _Parser(toks, filename)
    try:
        return parser.statements()
    except SyntaxDiagnostic as d:  # belt and braces: statements() should catch
        return ParseResult([], [d])


def parse_strict(text: str, filename: str = "<input>") -> list:
    result = parse(text, filename)
    if result.diagnostics:
        raise result.diagnostics[0]
    return result.statements
