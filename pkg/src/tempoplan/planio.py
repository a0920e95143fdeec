"""Plan text formats, plan parsing and the independent plan validator.

Plans print in two competition-style line formats:

    strips:  T: (name args)
    timed:   T: (name args) [D]

Internal time is integer ticks. With a time scale of 1000, printed values
carry three decimals (ticks were external durations multiplied by a
thousand); with scale 1 they print as integers. A delay of epsilon is
accumulated once per distinct start timepoint, shifting printed starts only,
never durations, so simultaneous actions stay simultaneous and no printed
fact is used at the instant it is asserted.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ArityMismatch, MalformedLine, UnknownAction
from .fixedpoint import Fixed

STRIPS = "strips"
TIMED = "timed"


@dataclass(frozen=True)
class PlanStep:
    start: int  # internal ticks
    name: str
    args: tuple
    duration: int  # internal ticks


@dataclass(frozen=True)
class Plan:
    steps: tuple

    @property
    def makespan(self) -> int:
        return max((s.start + s.duration for s in self.steps), default=0)

    def __len__(self):
        return len(self.steps)


def from_search_node(node) -> Plan:
    steps = tuple(
        PlanStep(a.s, a.schema.name, a.args, a.duration) for a in node.plan_actions()
    )
    return Plan(steps)


def _render_scaled(ticks: int, scale: int) -> str:
    if scale == 1:
        return str(ticks)
    decimals = len(str(scale)) - 1
    sign = "-" if ticks < 0 else ""
    whole, frac = divmod(abs(ticks), scale)
    return f"{sign}{whole}.{frac:0{decimals}d}"


def format_plan(plan: Plan, format: str = STRIPS, scale: int = 1,
                epsilon: Fixed | None = None) -> str:
    """Render plan text; the footer carries length and makespan."""
    if format not in (STRIPS, TIMED):
        raise ValueError(f"unknown plan format {format!r}")
    if scale < 1:
        raise ValueError("time scale must be >= 1")
    eps_ticks = 0
    if epsilon is not None:
        shifted = epsilon * Fixed(scale)
        try:
            eps_ticks = shifted.scaled(0).mantissa
        except ValueError:
            raise ValueError(
                f"epsilon {epsilon} is not a whole number of ticks at scale {scale}"
            ) from None
        if eps_ticks < 0:
            raise ValueError("epsilon must be >= 0")
    distinct = sorted({s.start for s in plan.steps})
    rank = {t: i + 1 for i, t in enumerate(distinct)}
    lines = []
    for step in plan.steps:
        printed = step.start + eps_ticks * rank[step.start]
        head = _render_scaled(printed, scale)
        body = " ".join((step.name,) + step.args)
        if format == TIMED:
            lines.append(f"{head}: ({body}) [{_render_scaled(step.duration, scale)}]")
        else:
            lines.append(f"{head}: ({body})")
    lines.append(f";; Plan length {len(plan)}, maxtime {_render_scaled(plan.makespan, scale)}")
    return "\n".join(lines) + "\n"


_LINE = re.compile(
    r"^\s*(?P<time>\d+(?:\.\d+)?)\s*:\s*\((?P<body>[^()]*)\)"
    r"(?:\s*\[\s*(?P<dur>\d+(?:\.\d+)?)\s*\])?\s*$"
)


def parse_plan(text: str, format: str = STRIPS, scale: int = 1,
               epsilon: Fixed | None = None) -> Plan:
    """Inverse of format_plan; epsilon shifts are stripped by ranking the
    distinct printed start times and subtracting rank * epsilon."""
    if format not in (STRIPS, TIMED):
        raise ValueError(f"unknown plan format {format!r}")
    eps_ticks = 0
    if epsilon is not None:
        eps_ticks = (epsilon * Fixed(scale)).scaled(0).mantissa
    raw = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(";;"):
            continue
        m = _LINE.match(stripped)
        if m is None:
            raise MalformedLine(lineno, line)
        if format == TIMED and m.group("dur") is None:
            raise MalformedLine(lineno, line)
        parts = m.group("body").split()
        if not parts:
            raise MalformedLine(lineno, line)
        printed = _to_ticks(m.group("time"), scale, lineno, line)
        dur = _to_ticks(m.group("dur"), scale, lineno, line) if m.group("dur") else 1
        raw.append((printed, parts[0], tuple(parts[1:]), dur))
    distinct = sorted({r[0] for r in raw})
    rank = {t: i + 1 for i, t in enumerate(distinct)}
    steps = [
        PlanStep(printed - eps_ticks * rank[printed], name, args, dur)
        for printed, name, args, dur in raw
    ]
    return Plan(tuple(steps))


def _to_ticks(text: str, scale: int, lineno: int, line: str) -> int:
    try:
        value = Fixed.parse(text) * Fixed(scale)
        return value.scaled(0).mantissa
    except ValueError:
        raise MalformedLine(lineno, line) from None


# ---------------------------------------------------------------------------
# Independent validator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    valid: bool
    makespan: int
    kind: str = ""  # precondition | prevail | conflict | resource | rule | goal | duration
    label: str = ""
    timepoint: int | None = None
    binding: tuple = ()
    detail: str = ""

    def __str__(self):
        if self.valid:
            return f"Valid, makespan {self.makespan}"
        parts = [f"FirstViolation({self.kind}, {self.label}"]
        if self.timepoint is not None:
            parts.append(f", t={self.timepoint}")
        if self.binding:
            parts.append(", " + ", ".join(f"{k}={v}" for k, v in self.binding))
        if self.detail:
            parts.append(f"; {self.detail}")
        return "".join(parts) + ")"


NAIVE_SWEEP_LIMIT = 2000


def validate(model, problem, plan: Plan) -> Verdict:
    """Replay a plan from scratch and re-check everything.

    This path shares only the model and the formula semantics with the
    search engine: effects are applied in one pass over a fresh timeline and
    preconditions, prevail intervals, resource bounds, every control rule
    instance in [0, makespan] and the final goals are then verified on the
    completed state sequence, with no frozen-horizon bookkeeping involved.
    """
    import itertools

    from .errors import (
        BoundsViolation,
        Conflict,
        EffectOutsideDuration,
        EvalError,
        ExclusiveOverlap,
        ModelError,
        NumericOutOfBounds,
    )
    from .evalform import EvalContext, GoalAbstraction, eval_formula
    from .pathfind import PathOracle
    from .search import SearchConfig, Searcher
    from .timeline import Timeline

    goals = GoalAbstraction(model, problem)

    def ctx(timeline, binding, time=None, dur=None):
        return EvalContext(
            model=model,
            problem=problem,
            timeline=timeline,
            goals=goals,
            binding=binding,
            time=time,
            dur=dur,
            paths=PathOracle(),
        )

    # signature check and per-step grounding
    grounded = []
    for step in sorted(plan.steps, key=lambda s: (s.start, s.name, s.args)):
        try:
            op = model.operator(step.name)
        except Exception:
            raise UnknownAction(f"plan mentions unknown operator {step.name!r}")
        if len(step.args) != len(op.params):
            raise ArityMismatch(
                f"{step.name} takes {len(op.params)} arguments, got {len(step.args)}"
            )
        grounded.append((step, op))

    timeline = Timeline.initial(problem)
    helper = Searcher(model, problem, SearchConfig(prune_with_rules=False))
    all_prevails = []
    for step, op in grounded:
        binding = dict(zip((n for n, _s in op.params), step.args))
        binding[op.timevar] = step.start
        try:
            dur = helper._duration_ticks(op, binding, timeline, step.start)
        except (EvalError, ModelError) as e:
            return Verdict(False, plan.makespan, "duration",
                           f"({' '.join((step.name,) + step.args)})", step.start,
                           detail=str(e))
        if dur != step.duration:
            return Verdict(
                False,
                plan.makespan,
                "duration",
                f"({' '.join((step.name,) + step.args)})",
                step.start,
                detail=f"declared {step.duration}, model says {dur}",
            )
        try:
            fev, rev, prevails = helper._ground_events(op, step.args, step.start, dur, timeline)
            timeline = timeline.extend(fev, rev)
        except (Conflict, BoundsViolation, ExclusiveOverlap,
                EffectOutsideDuration, NumericOutOfBounds) as e:
            kind = "conflict" if isinstance(e, Conflict) else "resource"
            if isinstance(e, EffectOutsideDuration):
                kind = "duration"
            return Verdict(
                False,
                plan.makespan,
                kind,
                f"({' '.join((step.name,) + step.args)})",
                step.start,
                detail=str(e),
            )
        all_prevails.extend(prevails)

    makespan = plan.makespan

    # preconditions on the completed model
    for step, op in grounded:
        binding = dict(zip((n for n, _s in op.params), step.args))
        binding[op.timevar] = step.start
        try:
            ok = eval_formula(op.precond, ctx(timeline, binding, time=step.start))
        except EvalError as e:
            return Verdict(False, makespan, "precondition",
                           f"({' '.join((step.name,) + step.args)})", step.start,
                           detail=str(e))
        if not ok:
            return Verdict(
                False,
                makespan,
                "precondition",
                f"({' '.join((step.name,) + step.args)})",
                step.start,
            )

    # prevail intervals, every timepoint
    for ob in sorted(all_prevails, key=lambda o: (o.lo, o.action_text)):
        binding = dict(ob.binding)
        for t in range(ob.lo, ob.hi + 1):
            if not eval_formula(ob.formula, ctx(timeline, binding, time=t)):
                return Verdict(False, makespan, "prevail", ob.action_text, t)

    # control rules over [0, makespan]
    changes = timeline.change_points()
    for rule in model.rules:
        if makespan <= NAIVE_SWEEP_LIMIT:
            points = range(0, makespan + 1)
        else:
            cand = {0}
            for c in changes:
                for k in range(rule.span + 1):
                    if 0 <= c - k <= makespan:
                        cand.add(c - k)
            points = sorted(cand)
        pools = [problem.objects.members(s) for _n, s in rule.variables]
        for t in points:
            for combo in itertools.product(*pools):
                binding = dict(zip((n for n, _s in rule.variables), combo))
                binding[rule.timevar] = t
                if not eval_formula(rule.formula, ctx(timeline, binding)):
                    return Verdict(
                        False,
                        makespan,
                        "rule",
                        rule.name,
                        t,
                        tuple(zip((n for n, _s in rule.variables), combo)),
                    )

    # goals in the final persistent state
    for lit in problem.goal_literals:
        v = timeline.value_at((lit.fluent, lit.args), makespan)
        decl = model.fluents[lit.fluent]
        ok = (v is lit.positive) if decl.is_boolean else (v == lit.value)
        if not ok:
            want = lit.positive if decl.is_boolean else lit.value
            return Verdict(
                False,
                makespan,
                "goal",
                f"{lit.fluent}{lit.args}",
                makespan,
                detail=f"wanted {want}, found {v}",
            )
    return Verdict(True, makespan)
