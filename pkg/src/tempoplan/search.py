"""Forward-chaining depth-first search over plan prefixes.

Sequential mode invokes each new action where the previous one ended;
concurrent mode allows any start between the latest invocation and the
latest end in the prefix, restricted to timepoints where something starts
or ends. Candidates at one timepoint follow operator declaration order,
then lexicographic arguments; a candidate sharing the previous action's
start must come strictly later in that order, so every simultaneous set is
enumerated exactly once.

Control rules and prevail conditions are checked incrementally: an instance
is evaluated as soon as every timepoint it references is below the frozen
horizon (no later action can write there), and a final sweep runs at goal
testing. Between candidate expansions the search yields at a checkpoint
where steering commands (pause, step, force-backtrack) take effect.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from .errors import (
    BoundsViolation,
    BudgetExceeded,
    Conflict,
    EffectOutsideDuration,
    EvalError,
    ExclusiveOverlap,
    ModelError,
    NumericOutOfBounds,
)
from .evalform import EvalContext, GoalAbstraction, eval_formula, eval_term
from .fixedpoint import Fixed
from .formulas import Num
from .model import DomainModel, ProblemInstance, ground_args
from .pathfind import PathOracle
from .timeline import DENSE, SPARSE, EffectEvent, ResourceEvent, Timeline

SEQUENTIAL = "sequential"
CONCURRENT = "concurrent"


@dataclass(frozen=True)
class ActionInstance:
    schema: object  # OperatorSchema
    args: tuple
    s: int
    duration: int

    @property
    def end(self) -> int:
        return self.s + self.duration

    @property
    def key(self) -> tuple:
        return (self.schema.index, self.args)

    def text(self) -> str:
        inner = " ".join((self.schema.name,) + self.args)
        return f"({inner})"

    def __str__(self):
        return f"[{self.s},{self.end}] {self.text()}"


@dataclass(frozen=True)
class Obligation:
    """A prevail interval still being verified as timepoints freeze."""

    lo: int
    hi: int
    formula: object
    binding: tuple  # sorted (name, value) pairs
    action_text: str
    cursor: int  # every t <= cursor has been verified


@dataclass
class SearchConfig:
    mode: str = SEQUENTIAL
    structure: str = SPARSE
    depth_bound: int | None = None  # default: 10 x goal literal count
    node_budget: int = 200_000
    prune_with_rules: bool = True
    trace: object = None  # callable(event dict) or None
    steer: object = None  # callable() -> command dict or None

    def __post_init__(self):
        if self.mode not in (SEQUENTIAL, CONCURRENT):
            raise ValueError(f"bad mode {self.mode!r}")
        if self.structure not in (SPARSE, DENSE):
            raise ValueError(f"bad state structure {self.structure!r}")
        if self.node_budget <= 0:
            raise ValueError("node budget must be positive")
        if self.depth_bound is not None and self.depth_bound <= 0:
            raise ValueError("depth bound must be positive")


@dataclass
class SearchNode:
    uid: int
    parent: object  # SearchNode | None
    action: ActionInstance | None
    timeline: Timeline
    latest_start: int
    max_end: int
    depth: int
    rule_cursors: tuple
    obligations: tuple

    def plan_actions(self) -> list:
        out = []
        node = self
        while node.action is not None:
            out.append(node.action)
            node = node.parent
        out.reverse()
        return out


@dataclass(frozen=True)
class Pruned:
    kind: str  # rule | prevail | conflict | resource | duration
    label: str  # rule name, action text or fault class
    timepoint: int | None = None
    binding: tuple = ()
    detail: str = ""

    def __str__(self):
        parts = [f"{self.kind} {self.label}"]
        if self.timepoint is not None:
            parts.append(f"at {self.timepoint}")
        if self.binding:
            parts.append("with " + ", ".join(f"{k}={v}" for k, v in self.binding))
        if self.detail:
            parts.append(f"({self.detail})")
        return " ".join(parts)


@dataclass(frozen=True)
class NoPlan:
    explored: int


class Searcher:
    def __init__(self, model: DomainModel, problem: ProblemInstance, config: SearchConfig):
        self.model = model
        self.problem = problem
        self.config = config
        self.goals = GoalAbstraction(model, problem)
        self.explored = 0
        self._next_uid = 0
        self._instances = self._ground_operator_instances()
        self._rules = model.rules if config.prune_with_rules else []
        self._rule_bindings = [
            [
                tuple(zip((n for n, _s in rule.variables), combo))
                for combo in itertools.product(
                    *(problem.objects.members(s) for _n, s in rule.variables)
                )
            ]
            for rule in self._rules
        ]
        if config.depth_bound is not None:
            self.depth_bound = config.depth_bound
        else:
            self.depth_bound = 10 * max(1, len(problem.goal_literals))

    # -- plumbing ----------------------------------------------------------------

    def _ground_operator_instances(self):
        out = []
        for op in self.model.operators:
            pools = [self.problem.objects.members(s) for _n, s in op.params]
            for args in sorted(itertools.product(*pools)):
                out.append((op, args))
        out.sort(key=lambda item: (item[0].index, item[1]))
        return out

    def _ctx(self, timeline, binding, time=None, dur=None, freeze=None) -> EvalContext:
        return EvalContext(
            model=self.model,
            problem=self.problem,
            timeline=timeline,
            goals=self.goals,
            binding=binding,
            time=time,
            dur=dur,
            freeze=freeze,
            paths=PathOracle(),
        )

    def _emit(self, event: dict):
        if self.config.trace is not None:
            self.config.trace(event)

    def _uid(self) -> int:
        u = self._next_uid
        self._next_uid += 1
        return u

    def root(self) -> SearchNode:
        timeline = Timeline.initial(self.problem, self.config.structure)
        return SearchNode(
            uid=self._uid(),
            parent=None,
            action=None,
            timeline=timeline,
            latest_start=0,
            max_end=0,
            depth=0,
            rule_cursors=tuple(-1 for _ in self._rules),
            obligations=(),
        )

    # -- candidate generation ------------------------------------------------------

    def candidate_expansions(self, node: SearchNode) -> list:
        """Applicable (s, operator, args) triples in exploration order."""
        if self.config.mode == SEQUENTIAL:
            times = [node.max_end if node.action is not None else 0]
        else:
            if node.action is None:
                times = [0]
            else:
                pts = set()
                cur = node
                while cur.action is not None:
                    pts.add(cur.action.s)
                    pts.add(cur.action.end)
                    cur = cur.parent
                times = sorted(
                    t for t in pts if node.latest_start <= t <= node.max_end
                )
        out = []
        for s in times:
            same_time = (
                self.config.mode == CONCURRENT
                and node.action is not None
                and s == node.latest_start
            )
            for op, args in self._instances:
                if same_time and (op.index, args) <= node.action.key:
                    continue
                binding = dict(zip((n for n, _s in op.params), args))
                binding[op.timevar] = s
                ctx = self._ctx(node.timeline, binding, time=s)
                try:
                    if eval_formula(op.precond, ctx):
                        out.append((s, op, args))
                except EvalError:
                    continue
        return out

    # -- expansion -------------------------------------------------------------------

    def _duration_ticks(self, op, binding, timeline, s) -> int:
        ctx = self._ctx(timeline, binding, time=s)
        value = eval_term(op.duration, ctx)
        if not isinstance(value, Fixed):
            raise ModelError(f"operator {op.name}: duration must be numeric")
        scale = int(self.problem.options.get("timescale", "1"))
        decimals = len(str(scale)) - 1
        try:
            ticks = value.scaled(decimals).mantissa
        except ValueError:
            raise ModelError(
                f"operator {op.name}: duration {value} not representable"
                f" at timescale {scale}"
            ) from None
        return ticks

    def _ground_events(self, op, args, s, dur, timeline):
        """Instantiate effects and resource events for one invocation."""
        binding = dict(zip((n for n, _s in op.params), args))
        binding[op.timevar] = s
        base_ctx = self._ctx(timeline, binding, time=s, dur=dur)
        owner = f"{op.name}{args}@{s}"
        fluent_events = []
        for eff in op.effects:
            combos = [()]
            if eff.quantified:
                pools = [self.problem.objects.members(srt) for _n, srt in eff.quantified]
                combos = list(itertools.product(*pools))
            for combo in combos:
                ctx = base_ctx
                if eff.quantified:
                    extra = dict(zip((n for n, _s in eff.quantified), combo))
                    ctx = base_ctx.bound(extra)
                if eff.condition is not None and not eval_formula(eff.condition, ctx):
                    continue
                lo = ctx.resolve_time(eff.lo)
                hi = ctx.resolve_time(eff.hi) if eff.hi is not None else None
                if hi is not None and hi < lo:
                    continue  # interval collapsed by a short duration
                for t in (lo,) + ((hi,) if hi is not None else ()):
                    off = t - s
                    if off < 1 or off > dur:
                        raise EffectOutsideDuration(
                            f"{owner}: effect offset {off} outside [1, {dur}]"
                        )
                argvals = tuple(
                    self._obj(eval_term(a, ctx)) for a in eff.args
                )
                value = eval_term(eff.value, ctx)
                decl = self.model.fluents[eff.fluent]
                if decl.is_numeric and isinstance(value, Fixed):
                    value = decl.value.check(value, f"{eff.fluent}{argvals}")
                fluent_events.append(
                    EffectEvent((eff.fluent, argvals), lo, hi, value, owner)
                )
        resource_events = []
        for re_ in op.resource_effects:
            lo = base_ctx.resolve_time(re_.lo)
            hi = base_ctx.resolve_time(re_.hi) if re_.hi is not None else None
            for t in (lo,) + ((hi,) if hi is not None else ()):
                off = t - s
                if off < 1 or off > dur:
                    raise EffectOutsideDuration(
                        f"{owner}: resource offset {off} outside [1, {dur}]"
                    )
            argvals = tuple(self._obj(eval_term(a, base_ctx)) for a in re_.args)
            amount = eval_term(re_.amount, base_ctx)
            if not isinstance(amount, Fixed):
                raise ModelError(f"{owner}: resource amount must be numeric")
            resource_events.append(
                ResourceEvent((re_.resource, argvals), re_.kind, lo, hi, amount, owner)
            )
        prevails = []
        for pv in op.prevails:
            lo = base_ctx.resolve_time(pv.lo)
            hi = base_ctx.resolve_time(pv.hi)
            if hi < lo:
                continue
            for t in (lo, hi):
                off = t - s
                if off < 1 or off > dur:
                    raise EffectOutsideDuration(
                        f"{owner}: prevail offset {off} outside [1, {dur}]"
                    )
            prevails.append(
                Obligation(
                    lo,
                    hi,
                    pv.formula,
                    tuple(sorted(binding.items())),
                    owner,
                    cursor=lo - 1,
                )
            )
        return fluent_events, resource_events, prevails

    @staticmethod
    def _obj(value) -> str:
        from .evalform import _object_arg

        return _object_arg(value, "effect argument")

    def expand(self, node: SearchNode, candidate):
        """Apply one candidate; a SearchNode on success, Pruned otherwise."""
        s, op, args = candidate
        self.explored += 1
        binding = dict(zip((n for n, _s in op.params), args))
        binding[op.timevar] = s
        try:
            dur = self._duration_ticks(op, binding, node.timeline, s)
        except (EvalError, NumericOutOfBounds) as e:
            return Pruned("duration", f"{op.name}{args}", s, detail=str(e))
        if dur < 1:
            return Pruned("duration", f"{op.name}{args}", s, detail=f"duration {dur} < 1")
        action = ActionInstance(op, args, s, dur)
        try:
            fevents, revents, prevails = self._ground_events(op, args, s, dur, node.timeline)
        except NumericOutOfBounds as e:
            return Pruned("resource", action.text(), s, detail=str(e))
        except EffectOutsideDuration as e:
            return Pruned("duration", action.text(), s, detail=str(e))
        try:
            timeline = node.timeline.extend(fevents, revents)
        except Conflict as e:
            return Pruned("conflict", action.text(), s, detail=str(e))
        except ExclusiveOverlap as e:
            return Pruned("resource", action.text(), s, detail=str(e))
        except BoundsViolation as e:
            return Pruned("resource", action.text(), s, detail=str(e))
        latest_start = s
        max_end = max(node.max_end, action.end)
        child = SearchNode(
            uid=self._uid(),
            parent=node,
            action=action,
            timeline=timeline,
            latest_start=latest_start,
            max_end=max_end,
            depth=node.depth + 1,
            rule_cursors=node.rule_cursors,
            obligations=node.obligations + tuple(prevails),
        )
        frozen = max_end if self.config.mode == SEQUENTIAL else latest_start
        verdict = self._advance_checks(child, frozen)
        if verdict is not None:
            return verdict
        return child

    # -- incremental rule / prevail verification -----------------------------------

    def _advance_checks(self, node: SearchNode, frozen: int, final: bool = False):
        """Verify rule instances and prevails whose window is now decidable.

        With `final`, everything up to node.max_end is checked regardless of
        the frozen bound (used by the goal test; the node is then complete).
        Returns Pruned on the first violation, else None (and updates the
        node's cursors in place).
        """
        timeline = node.timeline
        changes = timeline.change_points()
        freeze = None if final else frozen + 1

        new_obls = []
        for ob in node.obligations:
            limit = node.max_end if final else frozen
            upto = min(ob.hi, limit)
            if upto <= ob.cursor:
                new_obls.append(ob)
                continue
            start = ob.cursor + 1
            points = [start] + [c for c in changes if start < c <= upto]
            binding = dict(ob.binding)
            for t in points:
                ctx = self._ctx(timeline, binding, time=t, freeze=freeze)
                if not eval_formula(ob.formula, ctx):
                    return Pruned("prevail", ob.action_text, t)
            new_obls.append(replace(ob, cursor=upto))
        node.obligations = tuple(new_obls)

        cursors = list(node.rule_cursors)
        for idx, rule in enumerate(self._rules):
            limit = node.max_end if final else frozen - rule.span
            if limit <= cursors[idx]:
                continue
            start = cursors[idx] + 1
            cand = set()
            for c in changes:
                for k in range(rule.span + 1):
                    t = c - k
                    if start <= t <= limit:
                        cand.add(t)
            if start == 0:
                cand.add(0)
            for t in sorted(cand):
                for binding_pairs in self._rule_bindings[idx]:
                    binding = dict(binding_pairs)
                    binding[rule.timevar] = t
                    ctx = self._ctx(timeline, binding, time=None, freeze=freeze)
                    if not eval_formula(rule.formula, ctx):
                        return Pruned("rule", rule.name, t, binding_pairs)
            cursors[idx] = limit
        node.rule_cursors = tuple(cursors)
        return None

    # -- goal test -------------------------------------------------------------------

    def goals_hold_at(self, timeline: Timeline, t: int) -> bool:
        for lit in self.problem.goal_literals:
            v = timeline.value_at((lit.fluent, lit.args), t)
            decl = self.model.fluents[lit.fluent]
            if decl.is_boolean:
                if v is not lit.positive:
                    return False
            else:
                if v != lit.value:
                    return False
        return True

    def check_goal_final(self, node: SearchNode) -> bool:
        """Goals must hold in the persistent state at max-end; transient
        satisfaction earlier does not count."""
        return self.goals_hold_at(node.timeline, node.max_end)

    def _accepts(self, node: SearchNode) -> bool:
        if not self.check_goal_final(node):
            return False
        # full sweep over [0, max_end]: remaining rules and prevails
        probe = SearchNode(
            uid=node.uid,
            parent=node.parent,
            action=node.action,
            timeline=node.timeline,
            latest_start=node.latest_start,
            max_end=node.max_end,
            depth=node.depth,
            rule_cursors=node.rule_cursors,
            obligations=node.obligations,
        )
        return self._advance_checks(probe, probe.max_end, final=True) is None

    # -- driving the search -------------------------------------------------------

    def run(self, first_only: bool = True):
        """Depth-first search; yields accepting SearchNodes in discovery order."""
        root = self.root()
        self._emit(
            {
                "type": "expanded",
                "node": root.uid,
                "parent": None,
                "action": None,
                "time": 0,
                "delta": [],
            }
        )
        stack = [(root, iter(self.candidate_expansions(root)))]
        if self._accepts(root):
            self._emit({"type": "plan-found", "node": root.uid, "length": 0})
            yield root
            if first_only:
                return
        while stack:
            node, candidates = stack[-1]
            command = self._checkpoint(node)
            if command is not None and command.get("kind") == "force-backtrack":
                target = command.get("target")
                found = any(frame[0].uid == target for frame in stack)
                if found:
                    while stack and stack[-1][0].uid != target:
                        popped, _ = stack.pop()
                        self._emit(
                            {
                                "type": "backtrack",
                                "node": popped.uid,
                                "to": stack[-1][0].uid if stack else None,
                                "forced": True,
                            }
                        )
                    continue
            cand = None
            if node.depth < self.depth_bound:
                cand = next(candidates, None)
            if cand is None:
                stack.pop()
                if stack:
                    self._emit(
                        {
                            "type": "backtrack",
                            "node": node.uid,
                            "to": stack[-1][0].uid,
                            "forced": False,
                        }
                    )
                continue
            if self.explored >= self.config.node_budget:
                raise BudgetExceeded(self.explored)
            result = self.expand(node, cand)
            if isinstance(result, Pruned):
                s, op, args = cand
                self._emit(
                    {
                        "type": "pruned",
                        "parent": node.uid,
                        "action": ActionInstance(op, args, s, 1).text(),
                        "time": s,
                        "kind": result.kind,
                        "label": result.label,
                        "at": result.timepoint,
                        "binding": [list(p) for p in result.binding],
                        "detail": result.detail,
                    }
                )
                continue
            child = result
            self._emit(
                {
                    "type": "expanded",
                    "node": child.uid,
                    "parent": node.uid,
                    "action": child.action.text(),
                    "time": child.action.s,
                    "duration": child.action.duration,
                    "delta": _delta(child),
                }
            )
            stack.append((child, iter(self.candidate_expansions(child))))
            if self._accepts(child):
                self._emit(
                    {
                        "type": "plan-found",
                        "node": child.uid,
                        "length": child.depth,
                    }
                )
                yield child
                if first_only:
                    return

    def _checkpoint(self, node):
        if self.config.steer is None:
            return None
        command = self.config.steer()
        while command is not None and command.get("kind") == "pause":
            command = self.config.steer()
        if command is not None and command.get("kind") in ("resume", "step"):
            return None
        return command


def _delta(node: SearchNode) -> list:
    """Ground fluent changes introduced by this node's action (diff against
    the parent timeline's change set for each touched fluent)."""
    out = []
    parent_tl = node.parent.timeline
    for key, st in node.timeline.fluents.items():
        name, args = key
        if st.changes is None:
            st._build_changes()
        new_changes = set(zip(*st.changes)) if st.changes[0] else set()
        base = parent_tl._fluent_state(key)
        old_changes = set()
        if base is not None:
            if base.changes is None:
                base._build_changes()
            if base.changes[0]:
                old_changes = set(zip(*base.changes))
        for t, v in sorted(new_changes - old_changes, key=lambda c: c[0]):
            out.append([name, list(args), t, _jsonable(v)])
    out.sort(key=lambda item: (item[2], item[0], item[1]))
    return out


def _jsonable(v):
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, Fixed):
        return str(v)
    return v


def plan(model: DomainModel, problem: ProblemInstance, config: SearchConfig | None = None):
    """First plan found, or NoPlan(explored count) when the tree is exhausted."""
    config = config or SearchConfig()
    searcher = Searcher(model, problem, config)
    for node in searcher.run(first_only=True):
        return searcher, node
    return searcher, NoPlan(searcher.explored)
