"""State sequences over integer time, one per search node.

A `Timeline` is a persistent value: extending it builds a child that shares
unchanged per-fluent structure with its parent, so sibling branches can keep
reading the parent while a child is being built. Fluent lookups follow
persistence (inertia): the value at t is the value of the latest change at
or before t.

Two storage backends exist. The sparse one keeps per-fluent change lists
(interval effects cost O(1) regardless of duration); the dense one keeps a
value per timepoint, which is the faithful array representation whose write
cost grows with operator duration. Conflict bookkeeping is shared, so both
backends prune identically.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

from .errors import (
    BoundsViolation,
    Conflict,
    ExclusiveOverlap,
    NoInitialValue,
    UnknownResource,
)
from .fixedpoint import Fixed, NumericDomain, ZERO

SPARSE = "sparse"
DENSE = "dense"

ASPECT_NAMES = (
    "init",
    "consumed",
    "produced",
    "borrowed",
    "borrowed-nonex",
    "available",
    "minimum",
    "maximum",
)


@dataclass(frozen=True)
class EffectEvent:
    """A write of `value` to `fluent` at `lo`, or over [lo, hi] when hi is set.

    Interval writes assert the value at every point of [lo, hi] and revert to
    the prior value at hi+1 unless an explicit write at hi+1 overrides the
    revert.
    """

    fluent: tuple  # (name, args)
    lo: int
    hi: int | None
    value: object
    owner: str = ""


@dataclass(frozen=True)
class ResourceEvent:
    resource: tuple  # (name, args)
    kind: str  # consume | produce | assign | borrow-exclusive | borrow-nonexclusive
    lo: int
    hi: int | None
    amount: Fixed
    owner: str = ""


class _FluentState:
    """Per-ground-fluent assertions plus a lookup structure."""

    __slots__ = ("points", "intervals", "weak", "changes", "dense")

    def __init__(self, points, intervals, weak):
        self.points = points  # tuple of (t, value) strong point writes
        self.intervals = intervals  # tuple of (a, b, value)
        self.weak = weak  # tuple of (t, value) overridable reverts
        self.changes = None  # derived: (times tuple, values tuple)
        self.dense = None  # derived: list of values, index = timepoint

    @staticmethod
    def initial(value) -> "_FluentState":
        return _FluentState(((0, value),), (), ())

    def copy(self) -> "_FluentState":
        return _FluentState(self.points, self.intervals, self.weak)

    # -- writes ----------------------------------------------------------------

    def add_point(self, t: int, value, where: str):
        for (pt, pv) in self.points:
            if pt == t and pv != value:
                raise Conflict(f"{where}: conflicting writes at {t} ({pv!r} vs {value!r})")
        for (a, b, v) in self.intervals:
            if a <= t <= b and v != value:
                raise Conflict(
                    f"{where}: write {value!r} at {t} inside interval [{a},{b}]={v!r}"
                )
        self.points = self.points + ((t, value),)
        self.changes = self.dense = None

    def add_interval(self, a: int, b: int, value, prior, where: str):
        if b < a:
            raise ValueError(f"{where}: empty effect interval [{a},{b}]")
        for (pt, pv) in self.points:
            if a <= pt <= b and pv != value:
                raise Conflict(
                    f"{where}: interval [{a},{b}]={value!r} overlaps write {pv!r} at {pt}"
                )
        for (xa, xb, xv) in self.intervals:
            if xa <= b and a <= xb and xv != value:
                raise Conflict(
                    f"{where}: interval [{a},{b}]={value!r} overlaps [{xa},{xb}]={xv!r}"
                )
        for (wt, wv) in self.weak:
            if wt == b + 1 and wv != prior:
                raise Conflict(
                    f"{where}: two interval reverts disagree at {b + 1}"
                )
        self.intervals = self.intervals + ((a, b, value),)
        self.weak = self.weak + ((b + 1, prior),)
        self.changes = self.dense = None

    # -- lookup ----------------------------------------------------------------

    def _build_changes(self):
        strong: dict[int, object] = {}
        for (t, v) in self.points:
            strong[t] = v
        for (a, b, v) in self.intervals:
            strong[a] = v
        entries = dict(strong)
        for (t, v) in self.weak:
            if t in strong:
                continue
            if any(a <= t <= b for (a, b, _v) in self.intervals):
                continue
            entries[t] = v
        times = sorted(entries)
        self.changes = (times, [entries[t] for t in times])

    def value_sparse(self, t: int):
        if self.changes is None:
            self._build_changes()
        times, values = self.changes
        i = bisect_right(times, t) - 1
        if i < 0:
            return _MISSING
        return values[i]

    def value_dense(self, t: int):
        if self.dense is None:
            if self.changes is None:
                self._build_changes()
            times, values = self.changes
            arr = []
            for j, ct in enumerate(times):
                nxt = times[j + 1] if j + 1 < len(times) else ct + 1
                if not arr:
                    arr.extend([_MISSING] * ct)
                arr.extend([values[j]] * max(1, nxt - ct))
            self.dense = arr
        arr = self.dense
        if not arr:
            return _MISSING
        if t < len(arr):
            return arr[t]
        return arr[-1]


class _Missing:
    def __repr__(self):
        return "<missing>"


_MISSING = _Missing()


class ResourceLedger:
    __slots__ = ("domain", "init0", "consumed", "produced", "assigns", "excl", "nonex")

    def __init__(self, domain: NumericDomain, init0: Fixed):
        self.domain = domain
        self.init0 = init0
        self.consumed: dict[int, Fixed] = {}
        self.produced: dict[int, Fixed] = {}
        self.assigns: dict[int, Fixed] = {}
        self.excl: tuple = ()  # (a, b, amount, owner)
        self.nonex: tuple = ()

    def copy(self) -> "ResourceLedger":
        c = ResourceLedger(self.domain, self.init0)
        c.consumed = dict(self.consumed)
        c.produced = dict(self.produced)
        c.assigns = dict(self.assigns)
        c.excl = self.excl
        c.nonex = self.nonex
        return c

    def _activity_points(self):
        pts = set(self.consumed) | set(self.produced) | set(self.assigns)
        for (a, b, _m, _o) in self.excl:
            pts.add(a)
            pts.add(b)
        for (a, b, _m, _o) in self.nonex:
            pts.add(a)
            pts.add(b)
        return sorted(pts)

    def init_at(self, t: int) -> Fixed:
        level = self.init0
        for a in sorted(set(self.consumed) | set(self.produced) | set(self.assigns)):
            if a > t:
                break
            at_a = self.assigns.get(a, level)
            if a == t:
                return at_a
            level = at_a - self.consumed.get(a, ZERO) + self.produced.get(a, ZERO)
        return level

    def aspect(self, name: str, t: int) -> Fixed:
        if name == "minimum":
            return self.domain.minimum
        if name == "maximum":
            return self.domain.maximum
        if name == "init":
            return self.init_at(t)
        if name == "consumed":
            return self.consumed.get(t, ZERO)
        if name == "produced":
            return self.produced.get(t, ZERO)
        if name == "borrowed":
            total = ZERO
            for (a, b, m, _o) in self.excl:
                if a <= t <= b:
                    total = total + m
            return total
        if name == "borrowed-nonex":
            best = ZERO
            for (a, b, m, _o) in self.nonex:
                if a <= t <= b and m > best:
                    best = m
            return best
        if name == "available":
            return (
                self.init_at(t)
                - self.consumed.get(t, ZERO)
                + self.produced.get(t, ZERO)
                - self.aspect("borrowed", t)
                - self.aspect("borrowed-nonex", t)
            )
        raise UnknownResource(f"unknown resource aspect ${name}")

    def record(self, ev: ResourceEvent, where: str):
        if ev.amount < ZERO:
            raise BoundsViolation(f"{where}: negative amount {ev.amount}")
        if ev.kind == "consume":
            self._no_assign_clash(ev.lo, where)
            self.consumed[ev.lo] = self.consumed.get(ev.lo, ZERO) + ev.amount
        elif ev.kind == "produce":
            self._no_assign_clash(ev.lo, where)
            self.produced[ev.lo] = self.produced.get(ev.lo, ZERO) + ev.amount
        elif ev.kind == "assign":
            if ev.lo in self.consumed or ev.lo in self.produced:
                raise Conflict(
                    f"{where}: assign overlaps consume/produce at {ev.lo}"
                )
            prev = self.assigns.get(ev.lo)
            if prev is not None and prev != ev.amount:
                raise Conflict(f"{where}: two assigns disagree at {ev.lo}")
            self.assigns[ev.lo] = ev.amount
        elif ev.kind == "borrow-exclusive":
            hi = ev.hi if ev.hi is not None else ev.lo
            for (a, b, _m, owner) in self.excl:
                if a <= hi and ev.lo <= b:
                    raise ExclusiveOverlap(
                        f"{where}: exclusive borrow [{ev.lo},{hi}] overlaps"
                        f" [{a},{b}] held by {owner or 'another action'}"
                    )
            self.excl = self.excl + ((ev.lo, hi, ev.amount, ev.owner),)
        elif ev.kind == "borrow-nonexclusive":
            hi = ev.hi if ev.hi is not None else ev.lo
            self.nonex = self.nonex + ((ev.lo, hi, ev.amount, ev.owner),)
        else:
            raise ValueError(f"unknown resource event kind {ev.kind!r}")
        self._check_bounds(where, since=ev.lo)

    def _no_assign_clash(self, t: int, where: str):
        if t in self.assigns:
            raise Conflict(f"{where}: consume/produce overlaps assign at {t}")

    def _check_bounds(self, where: str, since: int):
        lo, hi = self.domain.minimum, self.domain.maximum
        for t in self._activity_points():
            if t < since:
                continue
            a = self.aspect("available", t)
            if a < lo or a > hi:
                raise BoundsViolation(
                    f"{where}: available {a} at {t} outside [{lo}, {hi}]"
                )


class Timeline:
    """Per-fluent change structure plus per-resource ledgers, persistent."""

    __slots__ = (
        "parent",
        "structure",
        "fluents",
        "ledgers",
        "horizon",
        "_defaults",
        "_change_cache",
    )

    def __init__(self, parent, structure, defaults):
        self.parent = parent
        self.structure = structure
        self.fluents: dict[tuple, _FluentState] = {}
        self.ledgers: dict[tuple, ResourceLedger] = {}
        self.horizon = parent.horizon if parent is not None else 0
        self._defaults = defaults
        self._change_cache = None

    @staticmethod
    def initial(problem, structure: str = SPARSE) -> "Timeline":
        tl = Timeline(None, structure, problem)
        for key, value in problem.init.items():
            tl.fluents[key] = _FluentState.initial(value)
        for key, level in problem.resource_init.items():
            dom = problem.model.resources[key[0]].domain
            tl.ledgers[key] = ResourceLedger(dom, level)
        return tl

    # -- lookup ---------------------------------------------------------------

    def _fluent_state(self, key) -> _FluentState | None:
        node = self
        while node is not None:
            st = node.fluents.get(key)
            if st is not None:
                return st
            node = node.parent
        return None

    def _ledger(self, key) -> ResourceLedger:
        node = self
        while node is not None:
            lg = node.ledgers.get(key)
            if lg is not None:
                return lg
            node = node.parent
        raise UnknownResource(f"unknown resource instance {key!r}")

    def value_at(self, key: tuple, t: int):
        if t < 0:
            raise NoInitialValue(f"{key}: no value before time 0")
        st = self._fluent_state(key)
        if st is None:
            raise NoInitialValue(f"no initial value for fluent instance {key!r}")
        v = st.value_dense(t) if self.structure == DENSE else st.value_sparse(t)
        if v is _MISSING:
            raise NoInitialValue(f"no initial value for fluent instance {key!r}")
        return v

    def resource_aspect(self, key: tuple, t: int, aspect: str) -> Fixed:
        if aspect not in ASPECT_NAMES:
            raise UnknownResource(f"unknown resource aspect ${aspect}")
        return self._ledger(key).aspect(aspect, t)

    # -- extension --------------------------------------------------------------

    def extend(self, fluent_events=(), resource_events=()) -> "Timeline":
        """New timeline with the events applied; this one stays valid.

        Raises Conflict / BoundsViolation / ExclusiveOverlap on inconsistency.
        """
        child = Timeline(self, self.structure, self._defaults)
        for ev in fluent_events:
            st = child.fluents.get(ev.fluent)
            if st is None:
                base = self._fluent_state(ev.fluent)
                if base is None:
                    raise NoInitialValue(
                        f"effect on unknown fluent instance {ev.fluent!r}"
                    )
                st = base.copy()
                child.fluents[ev.fluent] = st
            where = ev.owner or str(ev.fluent)
            if ev.hi is None:
                st.add_point(ev.lo, ev.value, where)
                child.horizon = max(child.horizon, ev.lo)
            else:
                prior_t = max(ev.lo - 1, 0)
                prior = st.value_sparse(prior_t)
                if prior is _MISSING:
                    prior = False
                st.add_interval(ev.lo, ev.hi, ev.value, prior, where)
                child.horizon = max(child.horizon, ev.hi + 1)
        for ev in resource_events:
            lg = child.ledgers.get(ev.resource)
            if lg is None:
                lg = self._ledger(ev.resource).copy()
                child.ledgers[ev.resource] = lg
            lg.record(ev, ev.owner or str(ev.resource))
            child.horizon = max(child.horizon, ev.hi if ev.hi is not None else ev.lo)
        return child

    def change_points(self, lo: int = 0, hi: int | None = None) -> list:
        """Distinct timepoints in [lo, hi] where any fluent changes or any
        resource has activity; used to bound rule sweeps."""
        if self._change_cache is None:
            pts = set()
            node = self
            seen_fluents = set()
            seen_res = set()
            while node is not None:
                for key, st in node.fluents.items():
                    if key in seen_fluents:
                        continue
                    seen_fluents.add(key)
                    if st.changes is None:
                        st._build_changes()
                    pts.update(st.changes[0])
                for key, lg in node.ledgers.items():
                    if key in seen_res:
                        continue
                    seen_res.add(key)
                    pts.update(lg._activity_points())
                node = node.parent
            self._change_cache = sorted(pts)
        if hi is None:
            hi = self.horizon
        return [t for t in self._change_cache if lo <= t <= hi]
