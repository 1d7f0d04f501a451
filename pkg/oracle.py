"""
Independent ground truth for the solver.

Nothing here uses the monotone-stack sweep: costs come either from an exact
fluid simulation of the evacuation or from clusters found by a direct
argmax scan, and worst cases come from scenario grids.
"""
import logging
import math
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from config import Config
from errors import InstanceTooLargeError, ScenarioError
from evacuation import cost, left_clusters, right_clusters
from models import (
    Cluster, ClusterSequence, FlowEvent, FlowEventKind, OracleCheck, OracleReport,
    PathNetwork, PointOnPath, PseudoBipartiteSpec, Scenario, Side
)
from path_network import random_point, random_scenario
from regret_solver import build_table, max_regret, solve
from scenario_space import pseudo_bipartite, universe

log = logging.getLogger(__name__)

Segment = Tuple[float, float, float]  # (start, end, rate)


class SampledScenarios(NamedTuple):
    """Brute-force costs of a scenario sample, one row per scenario"""
    weights: List[Tuple[float, ...]]
    costs: np.ndarray  # (m, n)
    medians: np.ndarray  # (m,)
    slopes: np.ndarray  # (m, n - 1)
    offsets: np.ndarray  # (m, n - 1) intercept minus median cost


def _discharge(
        inflow: Sequence[Segment],
        backlog: float,
        capacity: float
) -> Tuple[List[Segment], List[float]]:
    """
    Fluid FCFS queue at one vertex: initial backlog, piecewise-constant
    inflow, outflow limited to the capacity. Returns the outflow segments and
    the times at which the queue drained.
    """
    pieces: List[Segment] = []
    t = 0.0
    for start, end, rate in inflow:
        if start > t:
            pieces.append((t, start, 0.0))
        pieces.append((start, end, rate))
        t = end

    out: List[Segment] = []
    drains: List[float] = []
    q = backlog
    t = 0.0

    def emit(start: float, end: float, rate: float):
        if end <= start or rate <= 0.0:
            return
        if out and out[-1][1] == start and out[-1][2] == rate:
            out[-1] = (out[-1][0], end, rate)
        else:
            out.append((start, end, rate))

    for start, end, rate in pieces:
        t = start
        while t < end:
            if q > 0.0 or rate > capacity:
                if rate < capacity:
                    empty_at = t + q / (capacity - rate)
                    if empty_at < end:
                        emit(t, empty_at, capacity)
                        q = 0.0
                        drains.append(empty_at)
                        t = empty_at
                        continue
                emit(t, end, capacity)
                q = max(0.0, q + (rate - capacity) * (end - t))
                t = end
            else:
                emit(t, end, rate)
                t = end
    if q > 0.0:
        emit(t, t + q / capacity, capacity)
        drains.append(t + q / capacity)
    return out, drains


def _shift(segments: Sequence[Segment], delay: float) -> List[Segment]:
    return [(start + delay, end + delay, rate) for start, end, rate in segments]


def _simulate_left(
        coordinates: Sequence[float],
        weights: Sequence[float],
        count: int,
        sink: float,
        tau: float,
        capacity: float,
        events: Optional[List[Tuple[float, int, FlowEventKind, float]]] = None,
        label=lambda k: k + 1
) -> float:
    """Sum of arrival times at the sink of all supply on the first `count` vertices"""
    if count == 0:
        return 0.0
    stream: List[Segment] = []
    for k in range(count):
        if k:
            stream = _shift(stream, tau * (coordinates[k] - coordinates[k - 1]))
        stream, drains = _discharge(stream, weights[k], capacity)
        if events is not None:
            for start, end, rate in stream:
                events.append((start, label(k), FlowEventKind.STREAM_START, rate))
                events.append((end, label(k), FlowEventKind.STREAM_END, rate))
            events.extend((t, label(k), FlowEventKind.QUEUE_DRAIN, 0.0) for t in drains)
    arrivals = _shift(stream, tau * (sink - coordinates[count - 1]))
    if events is not None:
        for start, end, rate in arrivals:
            events.append((start, 0, FlowEventKind.STREAM_START, rate))
            events.append((end, 0, FlowEventKind.STREAM_END, rate))
    return sum(rate * (end * end - start * start) / 2.0 for start, end, rate in arrivals)


def _left_count(x: PointOnPath) -> int:
    return x.index - 1 if x.is_vertex else x.index


def simulate_side(
        net: PathNetwork,
        s: Scenario,
        x: PointOnPath,
        side: Side,
        events: Optional[List] = None
) -> float:
    """Simulated Phi_L(x) or Phi_R(x)"""
    if side == Side.LEFT:
        return _simulate_left(
            net.vertex_coordinates, s.weights, _left_count(x), x.coordinate,
            net.tau, net.capacity, events
        )
    n = net.n
    end = net.length
    mirrored = [end - v for v in reversed(net.vertex_coordinates)]
    count = n - x.index
    return _simulate_left(
        mirrored, s.weights[::-1], count, end - x.coordinate,
        net.tau, net.capacity, events, label=lambda k: n - k
    )


def simulate_cost(net: PathNetwork, s: Scenario, x: PointOnPath) -> float:
    """Phi^s(x) by exact event-driven fluid propagation towards x"""
    return simulate_side(net, s, x, Side.LEFT) + simulate_side(net, s, x, Side.RIGHT)


def trace_events(net: PathNetwork, s: Scenario, x: PointOnPath) -> List[FlowEvent]:
    """Stream and drain events of the simulation; vertex 0 is the sink"""
    raw: List[Tuple[float, int, FlowEventKind, float]] = []
    simulate_side(net, s, x, Side.LEFT, raw)
    simulate_side(net, s, x, Side.RIGHT, raw)
    raw.sort(key=lambda e: (e[0], e[1], e[2].value))
    return [FlowEvent(time=t, vertex=v, kind=kind, rate=rate) for t, v, kind, rate in raw]


def brute_clusters(net: PathNetwork, s: Scenario, x: PointOnPath, direction: Side) -> ClusterSequence:
    """Clusters by rescanning the latest-arrival argmax for every cluster, O(n^2)"""
    v = net.vertex_coordinates
    w = s.weights
    tau, c = net.tau, net.capacity
    entries = []
    if direction == Side.LEFT:
        last = _left_count(x) - 1  # 0-based nearest vertex
        if last < 0:
            return ClusterSequence(direction=Side.LEFT)
        start = 0
        while start <= last:
            best, best_j, best_sum = -math.inf, start, 0.0
            total = 0.0
            for j in range(start, last + 1):
                total += w[j]
                value = tau * (v[last] - v[j]) + total / c
                if value >= best:
                    best, best_j, best_sum = value, j, total
            entries.append(Cluster(head=best_j + 1, weight=best_sum))
            start = best_j + 1
        return ClusterSequence(direction=Side.LEFT, entries=tuple(entries), covered_range=(1, last + 1))

    first = x.index  # 0-based nearest vertex on the right, for vertices and edges alike
    n = net.n
    if first > n - 1:
        return ClusterSequence(direction=Side.RIGHT)
    stop = n - 1
    while stop >= first:
        best, best_j, best_sum = -math.inf, stop, 0.0
        total = 0.0
        for j in range(stop, first - 1, -1):
            total += w[j]
            value = tau * (v[j] - v[first]) + total / c
            if value >= best:
                best, best_j, best_sum = value, j, total
        entries.append(Cluster(head=best_j + 1, weight=best_sum))
        stop = best_j - 1
    return ClusterSequence(direction=Side.RIGHT, entries=tuple(entries), covered_range=(first + 1, n))


def brute_cost(net: PathNetwork, s: Scenario, x: PointOnPath) -> float:
    """Total evacuation time summed over brute-force clusters"""
    v = net.vertex_coordinates
    half = 0.5 / net.capacity
    total = 0.0
    for c in brute_clusters(net, s, x, Side.LEFT).entries:
        total += c.weight * net.tau * (x.coordinate - v[c.head - 1]) + c.weight * c.weight * half
    for c in brute_clusters(net, s, x, Side.RIGHT).entries:
        total += c.weight * net.tau * (v[c.head - 1] - x.coordinate) + c.weight * c.weight * half
    return total


def clustered_scenario(net: PathNetwork, s: Scenario, x: PointOnPath) -> Scenario:
    """Move the supply of every left cluster for x onto its head"""
    weights = list(s.weights)
    start = 0
    for c in brute_clusters(net, s, x, Side.LEFT).entries:
        for k in range(start, c.head - 1):
            weights[k] = 0.0
        weights[c.head - 1] = c.weight
        start = c.head
    return Scenario.model_construct(weights=tuple(weights))


def brute_critical_weights(net: PathNetwork, anchor: int, side: Side, intermediate: int) -> List[float]:
    """
    Critical weights of one intermediate vertex for one anchor, without the
    sweep. After every merge the right clusters for the anchor are rebuilt
    from scratch; the cluster holding the intermediate vertex absorbs its far
    neighbour at w + c * tau * (head distance) - sigma.
    """
    n = net.n
    if side == Side.RIGHT:
        return brute_critical_weights(net.reflected(), n + 1 - anchor, Side.LEFT, n + 1 - intermediate)
    if not anchor < intermediate <= n:
        raise ScenarioError(f"intermediate vertex {intermediate} is not right of anchor {anchor}", index=intermediate)
    low, high = net.weight_intervals[intermediate - 1]
    if low == high:
        return [low]

    v = net.vertex_coordinates
    sink = PointOnPath.vertex(anchor, v[anchor - 1])
    reach = net.capacity * net.tau
    # steps past a merge that rounding left a hair short of closing
    nudge = 1e-12 * max(1.0, high)
    found = [low]
    w = low
    while w < high:
        spec = PseudoBipartiteSpec(side=Side.LEFT, intermediate_index=intermediate, intermediate_weight=w)
        entries = brute_clusters(net, pseudo_bipartite(net, spec), sink, Side.RIGHT).entries
        j = next(k for k, c in enumerate(entries) if c.head <= intermediate)
        if j == 0:
            break
        omega = w + reach * (v[entries[j - 1].head - 1] - v[entries[j].head - 1]) - entries[j].weight
        if omega >= high:
            break
        if omega > found[-1] + nudge:
            found.append(omega)
        w = max(omega, w) + nudge
    found.append(high)
    return found


def _brute_profile(net: PathNetwork, s: Scenario) -> Tuple[List[float], List[float], List[float]]:
    """Vertex costs and edge lines, each line fitted through two interior points"""
    v = net.vertex_coordinates
    costs = [brute_cost(net, s, PointOnPath.vertex(i + 1, v[i])) for i in range(net.n)]
    slopes, intercepts = [], []
    for i in range(net.n - 1):
        x1 = v[i] + (v[i + 1] - v[i]) / 3.0
        x2 = v[i] + 2.0 * (v[i + 1] - v[i]) / 3.0
        f1 = brute_cost(net, s, PointOnPath.on_edge(i + 1, x1))
        f2 = brute_cost(net, s, PointOnPath.on_edge(i + 1, x2))
        slope = (f2 - f1) / (x2 - x1)
        slopes.append(slope)
        intercepts.append(f1 - slope * x1)
    return costs, slopes, intercepts


def pseudo_bipartite_grid(net: PathNetwork, points: int) -> List[Tuple[float, ...]]:
    """
    Every pseudo-bipartite scenario with the intermediate weight on a uniform
    grid of `points` values, for each side and intermediate vertex.
    """
    lows, highs = net.w_min, net.w_max
    found: Dict[Tuple[float, ...], None] = {}
    for i in range(net.n):
        grid = [lows[i]] if lows[i] == highs[i] else np.linspace(lows[i], highs[i], points).tolist()
        for w in grid:
            found[tuple(highs[:i]) + (w,) + tuple(lows[i + 1:])] = None
            found[tuple(lows[:i]) + (w,) + tuple(highs[i + 1:])] = None
    return list(found)


def sample_scenarios(
        net: PathNetwork,
        weight_grid_points: int,
        include_universe: bool = True,
        extra: Sequence[Tuple[float, ...]] = ()
) -> SampledScenarios:
    rows = pseudo_bipartite_grid(net, weight_grid_points)
    if include_universe:
        rows += [member.scenario.weights for member in universe(net).members]
    rows += list(extra)
    rows = list(dict.fromkeys(rows))
    profiles = [_brute_profile(net, Scenario.model_construct(weights=row)) for row in rows]
    costs = np.array([p[0] for p in profiles])
    medians = costs.min(axis=1)
    slopes = np.array([p[1] for p in profiles]).reshape(len(rows), net.n - 1)
    intercepts = np.array([p[2] for p in profiles]).reshape(len(rows), net.n - 1)
    return SampledScenarios(rows, costs, medians, slopes, intercepts - medians[:, None])


def sampled_regret(sample: SampledScenarios, x: PointOnPath) -> float:
    if x.is_vertex:
        return float(np.max(sample.costs[:, x.index - 1] - sample.medians))
    column = x.index - 1
    return float(np.max(sample.slopes[:, column] * x.coordinate + sample.offsets[:, column]))


def sampled_max_regret(net: PathNetwork, x: PointOnPath, weight_grid_points: int) -> float:
    """Lower bound on R_max(x) from the pseudo-bipartite grid united with S*"""
    return sampled_regret(sample_scenarios(net, weight_grid_points), x)


def _edge_envelope(sample: SampledScenarios, column: int):
    a = sample.slopes[:, column]
    b = sample.offsets[:, column]
    return lambda x: float(np.max(a * x + b))


def _ternary_minimum(f, lo: float, hi: float, iterations: int = 200) -> Tuple[float, float]:
    for _ in range(iterations):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
    x = 0.5 * (lo + hi)
    return x, f(x)


def exhaustive_solve(
        net: PathNetwork,
        x_grid_step: float,
        weight_grid_points: int
) -> Tuple[PointOnPath, float]:
    """
    Grid search for the minimax regret sink. On each edge the grid minimum is
    refined by a ternary search, the sampled envelope being convex there.
    """
    if net.n > Config.ORACLE_MAX_N:
        raise InstanceTooLargeError(f"exhaustive search is limited to n <= {Config.ORACLE_MAX_N}, got {net.n}")
    sample = sample_scenarios(net, weight_grid_points)
    v = net.vertex_coordinates

    candidates = [
        (sampled_regret(sample, PointOnPath.vertex(i + 1, v[i])), v[i], 0, i + 1)
        for i in range(net.n)
    ]
    for column in range(net.n - 1):
        lo, hi = v[column], v[column + 1]
        f = _edge_envelope(sample, column)
        xs = np.arange(lo + x_grid_step, hi, x_grid_step)
        xs = xs[xs < hi]
        if len(xs) == 0:
            xs = np.array([0.5 * (lo + hi)])
        values = np.max(sample.slopes[:, column][:, None] * xs + sample.offsets[:, column][:, None], axis=0)
        k = int(np.argmin(values))
        candidates.append((float(values[k]), float(xs[k]), 1, column + 1))
        x, value = _ternary_minimum(f, lo, hi)
        if lo < x < hi:
            candidates.append((value, x, 1, column + 1))

    value, x, kind, index = min(candidates)
    point = PointOnPath.vertex(index, x) if kind == 0 else PointOnPath.on_edge(index, x)
    return point, value


def _relative_error(value: float, reference: float) -> float:
    return abs(value - reference) / max(1.0, abs(reference))


def run_checks(
        net: PathNetwork,
        seed: Optional[int] = None,
        weight_grid_points: Optional[int] = None,
        pairs: int = 10
) -> OracleReport:
    """Cross-check the solver against the oracle on one instance"""
    rng = np.random.default_rng(Config.DEFAULT_SEED if seed is None else seed)
    grid = weight_grid_points or Config.ORACLE_GRID
    checks = []

    worst = 0.0
    cluster_mismatch = None
    for _ in range(pairs):
        s = random_scenario(net, rng)
        x = random_point(net, rng)
        worst = max(worst, _relative_error(cost(net, s, x), simulate_cost(net, s, x)))
        for side, clusters in ((Side.LEFT, left_clusters), (Side.RIGHT, right_clusters)):
            fast = clusters(net, s, x)
            slow = brute_clusters(net, s, x, side)
            if fast.heads != slow.heads or not np.allclose(fast.weights, slow.weights, rtol=1e-12):
                cluster_mismatch = f"{side.value} clusters differ at x={x.coordinate}: {fast.heads} vs {slow.heads}"
    checks.append(OracleCheck(
        name="formula_vs_simulation",
        passed=worst <= Config.FORMULA_TOLERANCE,
        detail=f"max relative error {worst:.3e}",
    ))
    checks.append(OracleCheck(
        name="clusters_vs_brute_force",
        passed=cluster_mismatch is None,
        detail=cluster_mismatch or f"{pairs} points agree",
    ))

    sample = sample_scenarios(net, grid, include_universe=False)
    if net.n > 1:
        step = min(net.edge_lengths) / 1000.0
        xs = np.arange(0.0, net.length, step)
        below = 0
        columns = np.clip(np.searchsorted(net.vertex_coordinates, xs, side="right") - 1, 0, net.n - 2)
        for k in range(len(sample.weights)):
            on_grid = sample.slopes[k, columns] * xs + sample.offsets[k, columns]
            if np.min(on_grid) < -Config.ORACLE_TOLERANCE * max(1.0, sample.medians[k]):
                below += 1
        checks.append(OracleCheck(
            name="median_is_vertex",
            passed=below == 0,
            detail=f"{below} of {len(sample.weights)} scenarios beat their vertex median off-vertex",
        ))

    scenarios = universe(net)
    table = build_table(net, scenarios)
    shortfall = 0.0
    for _ in range(5):
        x = random_point(net, rng)
        shortfall = max(shortfall, sampled_regret(sample, x) - max_regret(net, scenarios, x, table)[0])
    checks.append(OracleCheck(
        name="universe_soundness",
        passed=shortfall <= Config.ORACLE_TOLERANCE,
        detail=f"grid exceeds universe by at most {shortfall:.3e}",
    ))

    if net.n <= Config.ORACLE_MAX_N:
        solution = solve(net)
        _, reference = exhaustive_solve(net, Config.ORACLE_X_STEP, grid)
        difference = abs(solution.value - reference)
        checks.append(OracleCheck(
            name="end_to_end",
            passed=difference <= Config.END_TO_END_TOLERANCE,
            detail=f"solver {solution.value:.12g} vs exhaustive {reference:.12g}",
        ))

    for check in checks:
        if not check.passed:
            log.warning("Oracle check %s failed: %s", check.name, check.detail)
    return OracleReport(checks=tuple(checks))
