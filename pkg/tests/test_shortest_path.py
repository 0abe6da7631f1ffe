from __future__ import annotations

import itertools
import math
import random

import pytest

from _support import certify, random_graph
from warehouse_router import route_graph as rg
from warehouse_router.oracles import (
    brute_force_route,
    decompose_unit_flow,
    is_simple_path_flow,
)
from warehouse_router.shortest_path import (
    INFINITY,
    dijkstra,
    dijkstra_full,
    objective,
    route_to_flow,
    validate_flow,
)


def _graph(cost: list[list[float]]) -> rg.RouteGraph:
    m = len(cost)
    nodes = [rg.Node(1, "source", (0.0, 0.0))]
    for i in range(2, m):
        nodes.append(rg.Node(i, "corner", (float(i), 0.0), obstacle=0, corner=0))
    nodes.append(rg.Node(m, "sink", (float(m), 0.0)))
    return rg.RouteGraph(nodes, cost)


def test_two_node_single_edge():
    g = _graph([[0.0, 7.5], [7.5, 0.0]])
    route = dijkstra(g)
    assert route is not None
    assert route.path == (1, 2)
    assert route.total_cost == 7.5
    certify(route, g)


def test_triangle_prefers_cheaper_two_hop():
    g = _graph(
        [
            [0.0, 3.0, 10.0],
            [3.0, 0.0, 4.0],
            [10.0, 4.0, 0.0],
        ]
    )
    route = dijkstra(g)
    assert route.path == (1, 2, 3)
    assert route.total_cost == 7.0
    certify(route, g)


def test_unreachable_sink_returns_none():
    g = _graph(
        [
            [0.0, 5.0, INFINITY],
            [5.0, 0.0, INFINITY],
            [INFINITY, INFINITY, 0.0],
        ]
    )
    assert dijkstra(g) is None


def test_tie_breaks_prefer_fewer_hops_then_lower_ids():
    # both 1-3-4 and 1-2-4 cost 10; two-hop beats three-hop at equal cost,
    # and the lexicographically smaller two-hop wins
    g = _graph(
        [
            [0.0, 5.0, 5.0, INFINITY],
            [5.0, 0.0, INFINITY, 5.0],
            [5.0, INFINITY, 0.0, 5.0],
            [INFINITY, 5.0, 5.0, 0.0],
        ]
    )
    route = dijkstra(g)
    assert route.path == (1, 2, 4)
    direct = _graph(
        [
            [0.0, 5.0, 10.0],
            [5.0, 0.0, 5.0],
            [10.0, 5.0, 0.0],
        ]
    )
    assert dijkstra(direct).path == (1, 3)


def test_invalid_ids_rejected():
    g = _graph([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ValueError):
        dijkstra(g, source=0)
    with pytest.raises(ValueError):
        dijkstra(g, sink=5)


def test_matches_bruteforce_on_random_sample():
    rng = random.Random(101)
    for _ in range(60):
        g = random_graph(rng, rng.randint(3, 7), density=rng.uniform(0.3, 0.9))
        got = dijkstra(g)
        want = brute_force_route(g)
        assert (got is None) == (want is None)
        if got is not None:
            assert got.total_cost == want.total_cost
            assert got.path == want.path
            certify(got, g)


def test_settled_distances_nondecreasing():
    rng = random.Random(55)
    for _ in range(30):
        g = random_graph(rng, rng.randint(4, 8))
        _, state = dijkstra_full(g, 1, g.m)
        entries = sorted(state.settled.values(), key=lambda e: e.iteration)
        dists = [e.dist for e in entries]
        assert dists == sorted(dists)
        for node in state.settled:
            assert node not in state.tentative


def test_predecessor_chain_reaches_source():
    rng = random.Random(66)
    for _ in range(30):
        g = random_graph(rng, rng.randint(3, 8))
        route, state = dijkstra_full(g, 1, g.m)
        if route is None:
            continue
        node, hops = g.m, 0
        while node != 1:
            node = state.settled[node].predecessor
            hops += 1
            assert hops < g.m
        assert hops == route.hop_count


def test_uniform_scaling_preserves_path():
    rng = random.Random(77)
    for _ in range(25):
        g = random_graph(rng, rng.randint(3, 7))
        route = dijkstra(g)
        k = rng.uniform(0.1, 9.0)
        scaled_cost = [
            [c * k if c != INFINITY else INFINITY for c in row] for row in g.cost
        ]
        scaled = rg.RouteGraph(g.nodes, scaled_cost)
        got = dijkstra(scaled)
        if route is None:
            assert got is None
            continue
        assert got.path == route.path
        assert got.total_cost == pytest.approx(route.total_cost * k, rel=1e-12)


def test_flow_from_route_is_unit_indicator():
    g = _graph(
        [
            [0.0, 3.0, 10.0],
            [3.0, 0.0, 4.0],
            [10.0, 4.0, 0.0],
        ]
    )
    route = dijkstra(g)
    flow = route_to_flow(route)
    assert flow == {(1, 2): 1.0, (2, 3): 1.0}
    assert validate_flow(flow, g).ok


def test_broken_chain_violates_conservation_at_two_nodes():
    g = _graph(
        [
            [0.0, 3.0, INFINITY, INFINITY],
            [3.0, 0.0, 4.0, INFINITY],
            [INFINITY, 4.0, 0.0, 5.0],
            [INFINITY, INFINITY, 5.0, 0.0],
        ]
    )
    flow = route_to_flow(dijkstra(g))
    flow[(2, 3)] = 0.0
    report = validate_flow(flow, g)
    assert not report.ok
    conservation = [v for v in report.violations if "imbalance" in v]
    assert len(conservation) == 2


def test_flow_bounds_and_absent_edges_checked():
    g = _graph([[0.0, 2.0, INFINITY], [2.0, 0.0, 3.0], [INFINITY, 3.0, 0.0]])
    report = validate_flow({(1, 2): 1.5, (2, 3): 1.0}, g)
    assert any("outside [0, 1]" in v for v in report.violations)
    report = validate_flow({(1, 3): 1.0}, g)
    assert any("absent edge" in v for v in report.violations)


def test_random_binary_vectors_pass_iff_simple_path():
    rng = random.Random(202)
    agree = 0
    for _ in range(300):
        g = random_graph(rng, rng.randint(3, 5), density=0.7)
        arcs = [
            (i + 1, j + 1)
            for i in range(g.m)
            for j in range(g.m)
            if i != j and g.cost[i][j] != INFINITY
        ]
        flow = {arc: float(rng.random() < 0.3) for arc in arcs}
        ok = validate_flow(flow, g).ok
        path, leftover = decompose_unit_flow(flow, 1, g.m)
        is_path = is_simple_path_flow(flow, 1, g.m)
        if ok:
            # a passing vector must decompose into one simple path, except
            # for the lone blind spot: a path plus a disjoint circulation
            # also satisfies the flow constraints
            assert path is not None
            if not leftover:
                assert is_path
        if is_path:
            assert ok
        agree += 1
    assert agree == 300


def test_objective_equals_route_cost():
    rng = random.Random(31)
    for _ in range(40):
        g = random_graph(rng, rng.randint(3, 8))
        route = dijkstra(g)
        if route is None:
            continue
        flow = route_to_flow(route)
        assert objective(flow, g) == pytest.approx(route.total_cost, rel=1e-12)


def test_objective_rejects_invalid_flow():
    g = _graph([[0.0, 2.0], [2.0, 0.0]])
    with pytest.raises(ValueError):
        objective({(1, 2): 0.5}, g)


def test_route_is_cheapest_among_all_unit_flows():
    rng = random.Random(88)
    for _ in range(20):
        g = random_graph(rng, rng.randint(3, 6), density=0.8)
        route = dijkstra(g)
        if route is None:
            continue
        best = objective(route_to_flow(route), g)
        m = g.m
        interior = list(range(2, m))
        for k in range(len(interior) + 1):
            for mid in itertools.permutations(interior, k):
                path = (1,) + mid + (m,)
                cost = 0.0
                valid = True
                for a, b in zip(path, path[1:]):
                    c = g.cost[a - 1][b - 1]
                    if c == INFINITY:
                        valid = False
                        break
                    cost += c
                if not valid:
                    continue
                flow = {(a, b): 1.0 for a, b in zip(path, path[1:])}
                assert validate_flow(flow, g).ok
                assert best <= cost + 1e-9
                assert best <= objective(flow, g) + 1e-9


def test_no_overflow_with_absent_edges():
    g = _graph(
        [
            [0.0, INFINITY, 4.0],
            [INFINITY, 0.0, INFINITY],
            [4.0, INFINITY, 0.0],
        ]
    )
    route = dijkstra(g)
    assert route.path == (1, 3)
    assert math.isfinite(route.total_cost)
