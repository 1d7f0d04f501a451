"""
Regret evaluation and the two-phase minimax regret solver.

Phase 1 takes, for every vertex, the largest regret over the scenario
universe. Phase 2 minimises, on every edge, the upper envelope of the
per-scenario regret lines. The answer is the best of the n vertex values and
the n - 1 edge minima.
"""
import logging
import multiprocessing as mp
import time
from typing import Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from config import Config
from errors import EmptyLineSetError
from evacuation import Profile, cost, profile_arrays, scenario_profile
from models import (
    EdgeRegret, PathNetwork, PointOnPath, PseudoBipartiteSpec, RegretLine,
    Scenario, ScenarioUniverse, Side, Solution, VertexRegret
)
from path_network import locate
from scenario_space import pseudo_bipartite, universe as build_universe

log = logging.getLogger(__name__)

INCREMENTAL_SEED = 1984


class ScenarioTable(NamedTuple):
    """Per-scenario precomputation, one row per universe member"""
    costs: np.ndarray  # (m, n) Phi^s(v_i)
    medians: np.ndarray  # (m,) Phi^s(m^s)
    slopes: np.ndarray  # (m, n - 1)
    offsets: np.ndarray  # (m, n - 1) b^s_i - Phi^s(m^s)


def regret(net: PathNetwork, s: Scenario, x: PointOnPath) -> float:
    """R^s(x) = Phi^s(x) - Phi^s(m^s)"""
    return cost(net, s, x) - scenario_profile(net, s).median_cost


def gap(net: PathNetwork, s: Scenario, x: PointOnPath, y: PointOnPath) -> float:
    """Gamma^s(x, y) = Phi^s(x) - Phi^s(y)"""
    return cost(net, s, x) - cost(net, s, y)


def gap_profile(
        net: PathNetwork,
        x: PointOnPath,
        y: PointOnPath,
        side: Side,
        intermediate: int,
        weights: Sequence[float]
) -> List[float]:
    """Gamma(w) along one pseudo-bipartite family"""
    profile = []
    for w in weights:
        spec = PseudoBipartiteSpec(side=side, intermediate_index=intermediate, intermediate_weight=w)
        profile.append(gap(net, pseudo_bipartite(net, spec), x, y))
    return profile


def _member_scenarios(net: PathNetwork, scenarios: ScenarioUniverse) -> List[Tuple[float, ...]]:
    if len(scenarios):
        return [member.scenario.weights for member in scenarios.members]
    # a single vertex has no critical scenarios; any scenario has zero regret there
    return [net.w_min]


def _profile_task(args) -> Profile:
    return profile_arrays(*args)


def _iter_profiles(net: PathNetwork, weight_rows: List[Tuple[float, ...]], workers: int) -> Iterator[Profile]:
    """Profiles in universe order, produced one at a time"""
    tasks = ((net.vertex_coordinates, weights, net.tau, net.capacity) for weights in weight_rows)
    if workers > 1 and len(weight_rows) > 1:
        with mp.Pool(workers) as pool:
            yield from pool.imap(_profile_task, tasks, chunksize=max(1, len(weight_rows) // (4 * workers)))
    else:
        yield from map(_profile_task, tasks)


def _profiles(net: PathNetwork, weight_rows: List[Tuple[float, ...]], workers: int) -> List[Profile]:
    return list(_iter_profiles(net, weight_rows, workers))


def build_table(net: PathNetwork, scenarios: ScenarioUniverse, workers: Optional[int] = None) -> ScenarioTable:
    profiles = _profiles(net, _member_scenarios(net, scenarios), workers or Config.WORKERS)
    medians = np.array([p.median_cost for p in profiles])
    slopes = np.array([p.slopes for p in profiles]).reshape(len(profiles), net.n - 1)
    intercepts = np.array([p.intercepts for p in profiles]).reshape(len(profiles), net.n - 1)
    return ScenarioTable(
        costs=np.array([p.costs for p in profiles]),
        medians=medians,
        slopes=slopes,
        offsets=intercepts - medians[:, None],
    )


def max_regret_at_vertices(
        net: PathNetwork,
        scenarios: ScenarioUniverse,
        table: Optional[ScenarioTable] = None
) -> Tuple[VertexRegret, ...]:
    """R_max(v_i) over the universe, first attaining scenario as witness"""
    table = table if table is not None else build_table(net, scenarios)
    regrets = table.costs - table.medians[:, None]
    witnesses = np.argmax(regrets, axis=0)
    return _vertex_report(regrets[witnesses, np.arange(net.n)], witnesses, len(scenarios) > 0)


def _vertex_report(best: np.ndarray, witnesses: np.ndarray, has_members: bool) -> Tuple[VertexRegret, ...]:
    # without universe members the evaluated scenario has no universe index
    return tuple(
        VertexRegret(index=i + 1, r_max=float(r), witness_ref=int(k) if has_members else None)
        for i, (r, k) in enumerate(zip(best, witnesses))
    )


def _pareto_filter(a: np.ndarray, b: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """
    Indices of lines not dominated at both interval ends, ordered by
    decreasing value at lo (hence strictly increasing slope).
    """
    at_lo = a * lo + b
    at_hi = a * hi + b
    order = np.lexsort((-at_hi, -at_lo))
    ends = at_hi[order]
    best_before = np.maximum.accumulate(ends)
    keep = np.empty(len(order), dtype=bool)
    keep[0] = True
    keep[1:] = ends[1:] > best_before[:-1]
    return order[keep]


def _envelope_argmin(a: np.ndarray, b: np.ndarray, lo: float, hi: float) -> float:
    """Leftmost minimiser of max(a x + b) on [lo, hi] via the upper envelope"""
    candidates = _pareto_filter(a, b, lo, hi)
    hull: List[int] = []
    for k in candidates:
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # j is hidden when k overtakes i no later than j does
            if (b[i] - b[k]) * (a[j] - a[i]) <= (b[i] - b[j]) * (a[k] - a[i]):
                hull.pop()
            else:
                break
        hull.append(k)

    for t, k in enumerate(hull):
        if a[k] >= 0:
            if t == 0:
                return lo
            i = hull[t - 1]
            x = (b[i] - b[k]) / (a[k] - a[i])
            return min(max(x, lo), hi)
    return hi


def _incremental_argmin(a: np.ndarray, b: np.ndarray, lo: float, hi: float) -> float:
    """
    Randomised incremental 2-variable LP: min y s.t. y >= a x + b, lo <= x <= hi.

    Lines are inserted in a seeded random order; a violated optimum moves onto
    the new line, found by a 1-D LP against the lines seen so far.
    """
    order = np.random.default_rng(INCREMENTAL_SEED).permutation(len(a))
    first = order[0]
    x = lo if a[first] >= 0 else hi
    y = a[first] * x + b[first]
    for t in range(1, len(order)):
        k = order[t]
        if a[k] * x + b[k] <= y:
            continue
        seen = order[:t]
        da = a[k] - a[seen]
        db = b[seen] - b[k]
        left, right = lo, hi
        rising = da > 0
        if rising.any():
            left = max(left, float(np.max(db[rising] / da[rising])))
        falling = da < 0
        if falling.any():
            right = min(right, float(np.min(db[falling] / da[falling])))
        if left > right:
            left = right = min(max(0.5 * (left + right), lo), hi)
        x = left if a[k] >= 0 else right
        y = a[k] * x + b[k]

    value = float(np.max(a * x + b))
    falling = a < 0
    if falling.any():
        leftmost = max(lo, float(np.max((value - b[falling]) / a[falling])))
        if leftmost < x and float(np.max(a * leftmost + b)) <= value:
            x = leftmost
    return x


def _envelope_minimum(
        a: np.ndarray,
        b: np.ndarray,
        lo: float,
        hi: float,
        method: Optional[str] = None
) -> Tuple[float, float, int]:
    """(x, value, index of the attaining line)"""
    if len(a) == 0:
        raise EmptyLineSetError("cannot minimise the envelope of no lines")
    method = method or Config.LP_METHOD
    if lo == hi:
        x = lo
    elif method == "incremental":
        x = _incremental_argmin(a, b, lo, hi)
    else:
        x = _envelope_argmin(a, b, lo, hi)
    values = a * x + b
    k = int(np.argmax(values))
    return float(x), float(values[k]), k


def envelope_min_max(
        lines: Sequence[Tuple[float, float]],
        lo: float,
        hi: float,
        method: Optional[str] = None
) -> Tuple[float, float]:
    """Minimise max(a x + b) over x in [lo, hi]; smallest x on ties"""
    if len(lines) == 0:
        raise EmptyLineSetError("cannot minimise the envelope of no lines")
    a = np.array([line[0] for line in lines], dtype=float)
    b = np.array([line[1] for line in lines], dtype=float)
    x, value, _ = _envelope_minimum(a, b, lo, hi, method)
    return x, value


def regret_lines(
        net: PathNetwork,
        scenarios: ScenarioUniverse,
        edge_index: int,
        table: Optional[ScenarioTable] = None
) -> Tuple[RegretLine, ...]:
    table = table if table is not None else build_table(net, scenarios)
    column = edge_index - 1
    return tuple(
        RegretLine(edge_index=edge_index, slope=float(a), offset=float(b), scenario_index=k)
        for k, (a, b) in enumerate(zip(table.slopes[:, column], table.offsets[:, column]))
    )


def _edge_regret(
        net: PathNetwork,
        edge_index: int,
        slopes: np.ndarray,
        offsets: np.ndarray,
        method: Optional[str]
) -> EdgeRegret:
    v = net.vertex_coordinates
    x, value, k = _envelope_minimum(slopes, offsets, v[edge_index - 1], v[edge_index], method)
    return EdgeRegret(index=edge_index, x=x, value=value, witness_ref=k)


def min_max_regret_on_edge(
        net: PathNetwork,
        scenarios: ScenarioUniverse,
        edge_index: int,
        table: Optional[ScenarioTable] = None,
        method: Optional[str] = None
) -> Tuple[float, float]:
    """min over the closed edge of the envelope of open-edge regret lines"""
    table = table if table is not None else build_table(net, scenarios)
    column = edge_index - 1
    result = _edge_regret(net, edge_index, table.slopes[:, column], table.offsets[:, column], method)
    return result.x, result.value


def max_regret(
        net: PathNetwork,
        scenarios: ScenarioUniverse,
        x: PointOnPath,
        table: Optional[ScenarioTable] = None
) -> Tuple[float, int]:
    """(R_max(x) over the universe, index of the first attaining scenario)"""
    table = table if table is not None else build_table(net, scenarios)
    if x.is_vertex:
        regrets = table.costs[:, x.index - 1] - table.medians
    else:
        column = x.index - 1
        regrets = table.slopes[:, column] * x.coordinate + table.offsets[:, column]
    k = int(np.argmax(regrets))
    return float(regrets[k]), k


def regret_curve(
        net: PathNetwork,
        scenarios: ScenarioUniverse,
        samples: int,
        table: Optional[ScenarioTable] = None
) -> List[Tuple[float, float]]:
    """(x, R_max(x)) at uniform samples united with every vertex"""
    table = table if table is not None else build_table(net, scenarios)
    xs = np.unique(np.concatenate((
        np.linspace(0.0, net.length, max(samples, 1)), np.array(net.vertex_coordinates)
    )))
    return [(float(x), max_regret(net, scenarios, locate(net, float(x)), table)[0]) for x in xs]


def _solve_streaming(
        net: PathNetwork,
        scenarios: ScenarioUniverse,
        method: Optional[str],
        workers: int
) -> Tuple[Tuple[VertexRegret, ...], Tuple[EdgeRegret, ...]]:
    """
    Both phases without the full table. Profiles are recomputed once per
    block of edge columns and only that block is kept; the vertex maxima are
    reduced row by row during the first pass.
    """
    n = net.n
    weight_rows = _member_scenarios(net, scenarios)
    m = len(weight_rows)
    best = np.full(n, -np.inf)
    witness = np.zeros(n, dtype=int)
    edges = []
    block = max(1, Config.STREAMING_BLOCK)
    for start in range(0, max(n - 1, 1), block):
        stop = min(start + block, n - 1)
        slopes = np.empty((m, stop - start))
        offsets = np.empty((m, stop - start))
        for k, profile in enumerate(_iter_profiles(net, weight_rows, workers)):
            if start == 0:
                regrets = np.asarray(profile.costs) - profile.median_cost
                better = regrets > best
                best[better] = regrets[better]
                witness[better] = k
            slopes[k] = profile.slopes[start:stop]
            offsets[k] = np.asarray(profile.intercepts[start:stop]) - profile.median_cost
        for column in range(stop - start):
            edges.append(_edge_regret(net, start + column + 1, slopes[:, column], offsets[:, column], method))
        log.debug("Streaming edges %d..%d done", start + 1, stop)
    return _vertex_report(best, witness, len(scenarios) > 0), tuple(edges)


def solve(
        net: PathNetwork,
        lp_method: Optional[str] = None,
        streaming: Optional[bool] = None,
        workers: Optional[int] = None,
        scenarios: Optional[ScenarioUniverse] = None
) -> Solution:
    """Minimax regret sink: smallest value, then smallest coordinate, vertices first"""
    workers = workers or Config.WORKERS
    if streaming is None:
        streaming = net.n >= Config.STREAMING_THRESHOLD

    started = time.perf_counter()
    if scenarios is None:
        scenarios = build_universe(net, workers)
    weight_rows = _member_scenarios(net, scenarios)
    log.info("Built %d scenarios in %.3fs", len(weight_rows), time.perf_counter() - started)

    if streaming:
        vertices, edges = _solve_streaming(net, scenarios, lp_method, workers)
    else:
        table = build_table(net, scenarios, workers)
        log.info("Scenario table ready after %.3fs", time.perf_counter() - started)
        vertices = max_regret_at_vertices(net, scenarios, table)
        edges = tuple(
            _edge_regret(net, i, table.slopes[:, i - 1], table.offsets[:, i - 1], lp_method)
            for i in range(1, net.n)
        )
    log.info("Both phases done after %.3fs", time.perf_counter() - started)

    v = net.vertex_coordinates
    candidates = [(r.r_max, v[r.index - 1], 0, r.witness_ref) for r in vertices]
    candidates += [(e.value, e.x, 1, e.witness_ref) for e in edges]
    value, x, kind, witness_ref = min(candidates, key=lambda c: (c[0], c[1], c[2]))
    if kind == 0:
        x_star = PointOnPath.vertex(v.index(x) + 1, x)
    else:
        x_star = locate(net, x)

    return Solution(
        x_star=x_star,
        value=value,
        worst_scenario=Scenario(weights=weight_rows[witness_ref or 0]),
        witness_ref=witness_ref,
        vertex_report=vertices,
        edge_report=edges,
    )
