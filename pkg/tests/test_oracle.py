import numpy as np
import pytest
from hypothesis import given, settings

from config import Config
from errors import InstanceTooLargeError, ScenarioError
from evacuation import cost, cost_left, left_clusters, right_clusters, scenario_profile
from models import FlowEventKind, PointOnPath, Scenario, Side
from oracle import (
    brute_clusters, brute_cost, brute_critical_weights, clustered_scenario, exhaustive_solve,
    pseudo_bipartite_grid, run_checks, sampled_max_regret, simulate_cost, simulate_side, trace_events
)
from path_network import build_network, random_network, random_point, random_scenario
from regret_solver import build_table, max_regret, regret, solve
from scenario_space import critical_set_for_vertex, critical_weights, universe
from strategies import networks, seeds

V = PointOnPath.vertex
E = PointOnPath.on_edge


@pytest.mark.parametrize("x,expected", [
    (V(2, 3.0), 5.0),
    (E(2, 3.5), 6.0),
    (V(1, 0.0), 8.0),
    (E(1, 0.5), 8.0),
])
def test_simulation_of_fixture_a(net_a, ones, x, expected):
    assert simulate_cost(net_a, ones, x) == pytest.approx(expected)


def test_simulation_of_merged_stream():
    net = build_network([0.0, 1.0, 3.0], [(5.0, 5.0), (1.0, 1.0), (1.0, 1.0)], 1.0, 1.0)
    s = Scenario(weights=(5.0, 1.0, 1.0))
    assert simulate_side(net, s, E(2, 2.0), Side.LEFT) == pytest.approx(24.0)


def test_simulation_of_single_vertex(single):
    assert simulate_cost(single, Scenario(weights=(1.5,)), V(1, 0.0)) == 0.0


def test_sink_events(net_a, ones):
    events = trace_events(net_a, ones, V(2, 3.0))
    assert [e.time for e in events] == sorted(e.time for e in events)
    at_sink = [(e.time, e.kind) for e in events if e.vertex == 0]
    assert at_sink == [
        (1.0, FlowEventKind.STREAM_START),
        (2.0, FlowEventKind.STREAM_END),
        (3.0, FlowEventKind.STREAM_START),
        (4.0, FlowEventKind.STREAM_END),
    ]
    drains = {e.vertex: e.time for e in events if e.kind == FlowEventKind.QUEUE_DRAIN}
    assert drains == {1: 1.0, 3: 1.0}


@settings(max_examples=80, deadline=None)
@given(networks(max_n=8), seeds)
def test_formula_matches_simulation(net, seed):
    rng = np.random.default_rng(seed)
    s = random_scenario(net, rng)
    x = random_point(net, rng)
    assert cost(net, s, x) == pytest.approx(simulate_cost(net, s, x), rel=Config.FORMULA_TOLERANCE)


@settings(max_examples=80, deadline=None)
@given(networks(max_n=10), seeds)
def test_stack_clusters_match_brute_force(net, seed):
    rng = np.random.default_rng(seed)
    s = random_scenario(net, rng)
    x = random_point(net, rng)
    for side, clusters in ((Side.LEFT, left_clusters), (Side.RIGHT, right_clusters)):
        fast = clusters(net, s, x)
        slow = brute_clusters(net, s, x, side)
        assert fast.heads == slow.heads
        assert fast.weights == pytest.approx(slow.weights, rel=1e-12)
        assert fast.covered_range == slow.covered_range
    assert brute_cost(net, s, x) == pytest.approx(cost(net, s, x), rel=1e-12)


def test_tie_goes_to_the_larger_head():
    net = build_network([0.0, 1.0, 2.0], [(1.0, 1.0)] * 3, 1.0, 1.0)
    clusters = brute_clusters(net, Scenario(weights=(1.0, 1.0, 1.0)), E(2, 1.5), Side.LEFT)
    assert clusters.heads == (2,)
    assert clusters.weights == (2.0,)


@settings(max_examples=40, deadline=None)
@given(networks(min_n=2, max_n=8), seeds)
def test_moving_supply_to_cluster_heads_keeps_the_cost(net, seed):
    rng = np.random.default_rng(seed)
    s = random_scenario(net, rng)
    x = random_point(net, rng)
    moved = clustered_scenario(net, s, x)
    assert sum(moved.weights) == pytest.approx(sum(s.weights))
    assert simulate_side(net, moved, x, Side.LEFT) == pytest.approx(
        simulate_side(net, s, x, Side.LEFT), rel=Config.FORMULA_TOLERANCE
    )
    assert cost_left(net, moved, x) == pytest.approx(cost_left(net, s, x), rel=Config.FORMULA_TOLERANCE)


def test_reclustered_critical_weights_of_fixture_b(net_b):
    assert brute_critical_weights(net_b, 1, Side.LEFT, 2) == pytest.approx([0.5, 1.0, 2.0])
    assert brute_critical_weights(net_b, 1, Side.LEFT, 3) == [1.0]


def test_reclustering_needs_the_right_side(net_b):
    with pytest.raises(ScenarioError):
        brute_critical_weights(net_b, 2, Side.LEFT, 1)


@settings(max_examples=40, deadline=None)
@given(networks(min_n=2, max_n=6))
def test_critical_weights_match_reclustering(net):
    for y in range(1, net.n + 1):
        critical = critical_set_for_vertex(net, y)
        for i in range(1, net.n + 1):
            if i == y:
                continue
            side = Side.LEFT if i > y else Side.RIGHT
            expected = brute_critical_weights(net, y, side, i)
            assert critical_weights(critical, side, i) == pytest.approx(expected, rel=1e-9)


def profile_cost(profile, x):
    if x.is_vertex:
        return profile.costs[x.index - 1]
    return profile.slopes[x.index - 1] * x.coordinate + profile.intercepts[x.index - 1]


@settings(max_examples=20, deadline=None)
@given(networks(min_n=2, max_n=6), seeds)
def test_universe_beats_random_scenarios(net, seed):
    rng = np.random.default_rng(seed)
    scenarios = universe(net)
    table = build_table(net, scenarios)
    profiles = [scenario_profile(net, random_scenario(net, rng)) for _ in range(1000)]
    scale = max(1.0, max(max(p.costs) for p in profiles))
    for _ in range(5):
        x = random_point(net, rng)
        sampled = max(profile_cost(p, x) - p.median_cost for p in profiles)
        assert max_regret(net, scenarios, x, table)[0] >= sampled - Config.ORACLE_TOLERANCE * scale


def test_grid_covers_both_families(net_b):
    rows = pseudo_bipartite_grid(net_b, 4)
    assert (1.0, 0.5, 1.0) in rows
    assert (1.0, 2.0, 1.0) in rows
    assert (1.0, 1.0, 1.0) in rows
    assert len(rows) == len(set(rows))


def test_grid_of_fixed_supplies(net_a):
    assert pseudo_bipartite_grid(net_a, 50) == [(1.0, 1.0, 1.0)]


@pytest.mark.parametrize("x", [V(1, 0.0), V(2, 3.0), E(2, 3.5), E(1, 1.0)])
def test_sampled_regret_of_fixture_a(net_a, ones, x):
    assert sampled_max_regret(net_a, x, 10) == pytest.approx(regret(net_a, ones, x), abs=1e-9)


def test_finer_grid_never_lowers_the_bound(net_b):
    x = V(1, 0.0)
    coarse = sampled_max_regret(net_b, x, 51)
    fine = sampled_max_regret(net_b, x, 201)
    assert fine >= coarse - 1e-12


def test_fixture_b_first_vertex_matches_universe(net_b):
    x = V(1, 0.0)
    scenarios = universe(net_b)
    expected, _ = max_regret(net_b, scenarios, x)
    assert sampled_max_regret(net_b, x, 200) == pytest.approx(expected, abs=1e-5)


@settings(max_examples=20, deadline=None)
@given(networks(min_n=2, max_n=6), seeds)
def test_universe_dominates_the_grid(net, seed):
    rng = np.random.default_rng(seed)
    scenarios = universe(net)
    for _ in range(3):
        x = random_point(net, rng)
        bound = sampled_max_regret(net, x, 40)
        assert bound <= max_regret(net, scenarios, x)[0] + Config.ORACLE_TOLERANCE * max(1.0, abs(bound))


def test_exhaustive_solve_fixture_a(net_a):
    point, value = exhaustive_solve(net_a, 1e-2, 10)
    assert point == V(2, 3.0)
    assert value == pytest.approx(0.0, abs=1e-12)


def test_exhaustive_solve_refuses_large_instances(rng):
    net = random_network(rng, Config.ORACLE_MAX_N + 1)
    with pytest.raises(InstanceTooLargeError):
        exhaustive_solve(net, 1e-2, 10)


def test_fixture_b_against_exhaustive_search(net_b):
    _, reference = exhaustive_solve(net_b, Config.ORACLE_X_STEP, Config.ORACLE_GRID)
    assert solve(net_b).value == pytest.approx(reference, abs=Config.END_TO_END_TOLERANCE)


@pytest.mark.parametrize("net_fixture", ["net_a", "net_b"])
def test_checks_pass_on_fixtures(request, net_fixture):
    report = run_checks(request.getfixturevalue(net_fixture), seed=3, weight_grid_points=50)
    assert report.passed, [c for c in report.checks if not c.passed]
    names = [c.name for c in report.checks]
    assert names == [
        "formula_vs_simulation",
        "clusters_vs_brute_force",
        "median_is_vertex",
        "universe_soundness",
        "end_to_end",
    ]


def test_checks_skip_exhaustive_search_when_large(rng):
    net = random_network(rng, Config.ORACLE_MAX_N + 2)
    report = run_checks(net, seed=1, weight_grid_points=5, pairs=3)
    assert "end_to_end" not in [c.name for c in report.checks]


@pytest.mark.slow
def test_end_to_end_on_random_instances():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        net = random_network(rng, int(rng.integers(2, 6)))
        _, reference = exhaustive_solve(net, Config.ORACLE_X_STEP, 60)
        assert solve(net).value == pytest.approx(reference, abs=Config.END_TO_END_TOLERANCE, rel=1e-6)


@pytest.mark.slow
def test_formula_matches_simulation_at_scale():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        net = random_network(rng, int(rng.integers(1, 41)))
        s = random_scenario(net, rng)
        x = random_point(net, rng)
        assert cost(net, s, x) == pytest.approx(simulate_cost(net, s, x), rel=Config.FORMULA_TOLERANCE)
