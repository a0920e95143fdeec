"""Shortest-path built-ins over graphs defined by the current state.

A `GraphView` snapshots the link predicate (and optional cost fluent) at one
timepoint; edges are directed. `shortest_cost` runs Dijkstra with early
exit at the target; `min_cost_to_satisfying` exits at the first settled node
whose predicate holds, which is the minimum since costs are nonnegative.
The unreachable sentinel is the feature's declared domain maximum, so
control formulas can compare distances without a separate undefined value.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .errors import NegativeCost
from .fixedpoint import Fixed, ZERO
from .formulas import DistApp, MinDistApp


@dataclass(frozen=True)
class GraphView:
    nodes: tuple
    edges: dict  # node -> tuple of (neighbor, cost: Fixed)
    timepoint: int

    def neighbors(self, node: str):
        return self.edges.get(node, ())


UNREACHABLE = object()


def view_at(ctx, feature, extra_args: tuple) -> GraphView:
    """Snapshot the feature's link predicate (bound to extra_args) at ctx.time."""
    model, problem, timeline = ctx.model, ctx.problem, ctx.timeline
    t = ctx.time
    from_sort = feature.params[-2][1]
    to_sort = feature.params[-1][1]
    nodes = list(dict.fromkeys(problem.objects.members(from_sort)
                               + problem.objects.members(to_sort)))
    link = feature.link
    cost_fluent = feature.cost
    edges: dict[str, list] = {}
    for u in problem.objects.members(from_sort):
        out = []
        for v in problem.objects.members(to_sort):
            if timeline.value_at((link, extra_args + (u, v)), t) is True:
                if cost_fluent is None:
                    cost = Fixed(1)
                else:
                    cost = timeline.value_at((cost_fluent, extra_args + (u, v)), t)
                if cost < ZERO:
                    raise NegativeCost(
                        f"negative edge cost {cost} on {link}{extra_args + (u, v)}"
                    )
                out.append((v, cost))
        if out:
            edges[u] = tuple(out)
    return GraphView(tuple(nodes), edges, t)


def shortest_cost(view: GraphView, source: str, target: str):
    """Minimal total edge cost over directed paths, or UNREACHABLE."""
    if source == target:
        return ZERO
    dist = _dijkstra(view, source, stop_at=target)
    return dist.get(target, UNREACHABLE)


def min_cost_to_satisfying(view: GraphView, source: str, predicate):
    """Min over nodes n with predicate(n) of shortest_cost(source, n).

    `predicate` is a callable on node names; evaluation order is settled
    order, so the first satisfying settled node gives the answer.
    """
    if predicate(source):
        return ZERO
    seen: dict[str, Fixed] = {source: ZERO}
    heap = [(ZERO.mantissa, ZERO.decimals, source)]
    settled = set()
    while heap:
        _m, _d, u = heapq.heappop(heap)
        if u in settled:
            continue
        settled.add(u)
        if predicate(u):
            return seen[u]
        for (v, w) in view.neighbors(u):
            cand = seen[u] + w
            if v not in seen or cand < seen[v]:
                seen[v] = cand
                key = _heap_key(cand)
                heapq.heappush(heap, (key[0], key[1], v))
    return UNREACHABLE


def _heap_key(cost: Fixed):
    # scale-stable ordering: compare mantissas at one shared promotion
    scaled = cost.scaled(9) if cost.decimals <= 9 else cost
    return (scaled.mantissa, scaled.decimals)


def _dijkstra(view: GraphView, source: str, stop_at: str | None = None) -> dict:
    dist: dict[str, Fixed] = {source: ZERO}
    heap = [(0, 0, source)]
    settled = set()
    while heap:
        _m, _d, u = heapq.heappop(heap)
        if u in settled:
            continue
        settled.add(u)
        if stop_at is not None and u == stop_at:
            break
        for (v, w) in view.neighbors(u):
            cand = dist[u] + w
            if v not in dist or cand < dist[v]:
                dist[v] = cand
                key = _heap_key(cand)
                heapq.heappush(heap, (key[0], key[1], v))
    return {u: c for u, c in dist.items() if u in settled or stop_at is None}


class PathOracle:
    """Per-evaluation-session memo for views and distance queries.

    A session always works over one persistent timeline, so a (feature,
    extras, t) view can never be invalidated within it; sessions are
    rebuilt per search node / per validator run.
    """

    def __init__(self):
        self._views: dict = {}
        self._dists: dict = {}

    def view(self, ctx, feature, extra_args: tuple) -> GraphView:
        key = (feature.name, extra_args, ctx.time)
        v = self._views.get(key)
        if v is None:
            v = view_at(ctx, feature, extra_args)
            self._views[key] = v
        return v

    def evaluate(self, node, ctx):
        from .evalform import _eval, _object_arg, eval_formula

        model = ctx.model
        if isinstance(node, DistApp):
            feature = model.dist_features[node.feature]
            args = tuple(
                _object_arg(_eval(a, ctx), node.feature) for a in node.args
            )
            extras, u, v = args[:-2], args[-2], args[-1]
            key = ("d", node.feature, extras, u, v, ctx.time)
            if key not in self._dists:
                view = self.view(ctx, feature, extras)
                cost = shortest_cost(view, u, v)
                self._dists[key] = (
                    feature.domain.maximum if cost is UNREACHABLE else cost
                )
            return self._dists[key]
        if isinstance(node, MinDistApp):
            mfeat = model.mindist_features[node.feature]
            feature = model.dist_features[mfeat.distfeature]
            args = tuple(
                _object_arg(_eval(a, ctx), node.feature) for a in node.args
            )
            extras, source = args[:-1], args[-1]
            view = self.view(ctx, feature, extras)

            def predicate(n):
                return eval_formula(node.predicate, ctx.bound({node.var: n}))

            cost = min_cost_to_satisfying(view, source, predicate)
            return mfeat.domain.maximum if cost is UNREACHABLE else cost
        raise TypeError(f"not a distance node: {node!r}")
