"""Dijkstra over route graphs with deterministic tie-breaking.

Node ids are 1-based: node 1 is the source, node m the sink. Costs live in
a dense symmetric matrix with math.inf marking absent edges (infinity, not
a large sentinel, so sums can never overflow into wrong comparisons).

Routes double as unit flows: a route with hops (i0, i1, ..., ik) is the 0/1
flow assigning 1 to every traversed arc. validate_flow certifies such a
vector against the unit-flow balance rules; objective sums cost over the
support and must equal the route cost.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .route_graph import RouteGraph

INFINITY = math.inf


class NoRouteError(Exception):
    """Sink unreachable from source."""


@dataclass(frozen=True)
class Route:
    path: tuple[int, ...]
    total_cost: float

    @property
    def hop_count(self) -> int:
        return len(self.path) - 1


@dataclass(frozen=True)
class SolverEntry:
    dist: float
    predecessor: int | None
    iteration: int


@dataclass
class SolverState:
    """Settled/tentative bookkeeping at termination.

    A node is never in both maps; settled distances are non-decreasing in
    iteration order.
    """

    settled: dict[int, SolverEntry] = field(default_factory=dict)
    tentative: dict[int, SolverEntry] = field(default_factory=dict)


def _check_ids(graph: RouteGraph, source: int, sink: int) -> None:
    m = graph.m
    if not (1 <= source <= m and 1 <= sink <= m):
        raise ValueError(f"node ids must be in 1..{m}")


def dijkstra_full(
    graph: RouteGraph, source: int = 1, sink: int | None = None
) -> tuple[Route | None, SolverState]:
    """Shortest route plus solver bookkeeping; None when unreachable.

    Ties break deterministically: lowest tentative distance first, then
    fewer hops, then the lexicographically smallest node-id sequence. The
    comparison rides on composite (dist, hops, path) labels, whose order is
    preserved under extension, so the usual label-setting argument applies
    unchanged. Search stops once the sink settles.
    """
    m = graph.m
    sink = m if sink is None else sink
    _check_ids(graph, source, sink)
    cost = graph.cost

    state = SolverState()
    best: dict[int, tuple[float, int, tuple[int, ...]]] = {
        source: (0.0, 0, (source,))
    }
    heap: list[tuple[float, int, tuple[int, ...]]] = [(0.0, 0, (source,))]
    iteration = 0

    while heap:
        dist, hops, path = heapq.heappop(heap)
        node = path[-1]
        if node in state.settled:
            continue
        pred = path[-2] if len(path) > 1 else None
        state.settled[node] = SolverEntry(dist, pred, iteration)
        iteration += 1
        if node == sink:
            break
        row = cost[node - 1]
        for other in range(1, m + 1):
            c = row[other - 1]
            if other == node or c == INFINITY or other in state.settled:
                continue
            label = (dist + c, hops + 1, path + (other,))
            known = best.get(other)
            if known is None or label < known:
                best[other] = label
                heapq.heappush(heap, label)

    for node, label in best.items():
        if node not in state.settled:
            state.tentative[node] = SolverEntry(
                label[0], label[2][-2] if len(label[2]) > 1 else None, -1
            )

    if sink not in state.settled:
        return None, state
    sink_label = best[sink]
    return Route(sink_label[2], sink_label[0]), state


def dijkstra(graph: RouteGraph, source: int = 1, sink: int | None = None) -> Route | None:
    route, _ = dijkstra_full(graph, source, sink)
    return route


FlowVector = dict[tuple[int, int], float]


def route_to_flow(route: Route) -> FlowVector:
    """0/1 flow vector carried by a route's arcs."""
    return {
        (route.path[k], route.path[k + 1]): 1.0 for k in range(len(route.path) - 1)
    }


@dataclass(frozen=True)
class FlowReport:
    ok: bool
    violations: tuple[str, ...]


def validate_flow(
    x: FlowVector, graph: RouteGraph, source: int = 1, sink: int | None = None
) -> FlowReport:
    """Certify a unit flow: source outflow 1, sink net inflow 1, interior
    conservation, 0 <= x <= 1, and zero flow on absent edges."""
    m = graph.m
    sink = m if sink is None else sink
    _check_ids(graph, source, sink)
    cost = graph.cost
    violations: list[str] = []

    for (i, j), v in x.items():
        if not (1 <= i <= m and 1 <= j <= m):
            violations.append(f"arc ({i},{j}) outside node range 1..{m}")
            continue
        if not (0.0 <= v <= 1.0):
            violations.append(f"x[{i},{j}]={v} outside [0, 1]")
        if v > 0.0 and cost[i - 1][j - 1] == INFINITY:
            violations.append(f"positive flow on absent edge ({i},{j})")

    def outflow(node: int) -> float:
        return sum(v for (i, _), v in x.items() if i == node)

    def inflow(node: int) -> float:
        return sum(v for (_, j), v in x.items() if j == node)

    if not math.isclose(outflow(source), 1.0, rel_tol=0.0, abs_tol=1e-12):
        violations.append(f"source outflow {outflow(source)} != 1")
    net_in = inflow(sink) - outflow(sink)
    if not math.isclose(net_in, 1.0, rel_tol=0.0, abs_tol=1e-12):
        violations.append(f"sink net inflow {net_in} != 1")
    for node in range(1, m + 1):
        if node in (source, sink):
            continue
        if not math.isclose(inflow(node), outflow(node), rel_tol=0.0, abs_tol=1e-12):
            violations.append(
                f"node {node} imbalance: in {inflow(node)} out {outflow(node)}"
            )
    return FlowReport(not violations, tuple(violations))


def objective(x: FlowVector, graph: RouteGraph) -> float:
    """Total cost of a valid flow; raises on an invalid one."""
    report = validate_flow(x, graph)
    if not report.ok:
        raise ValueError("invalid flow: " + "; ".join(report.violations))
    total = 0.0
    for (i, j), v in x.items():
        if v > 0.0:
            total += v * graph.cost[i - 1][j - 1]
    return total
