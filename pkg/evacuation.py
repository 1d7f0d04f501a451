"""
Fixed-scenario machinery: congestion clusters, total evacuation time,
per-edge linear pieces and the 1-median.

Left clusters of the first k vertices do not depend on where the sink is,
only on k, so one monotone-stack sweep from v_1 yields the clusters (and the
running sums S1 = sum sigma, S2 = sum sigma * v_head, S3 = sum sigma^2) of
every prefix. The right side is the same sweep on the reflected path.
"""
import logging
from collections import deque
from typing import Iterator, List, NamedTuple, Sequence, Tuple

import numpy as np

from errors import OutOfRangeError
from models import (
    Cluster, ClusterSequence, EdgeCostLine, MedianResult, PathNetwork,
    PointOnPath, Scenario, Side, VertexCostTable
)

log = logging.getLogger(__name__)


class Profile(NamedTuple):
    """Everything the solver needs from one scenario"""
    costs: List[float]  # Phi(v_i)
    slopes: List[float]  # a_i per edge
    intercepts: List[float]  # b_i per edge
    median_index: int  # 0-based
    median_cost: float


def _stack_states(
        coordinates: Sequence[float],
        weights: Sequence[float],
        tau: float,
        capacity: float
) -> Iterator[List[List[float]]]:
    """
    Yield the left cluster stack after each vertex is pushed.

    Entries are [head (0-based), sigma]. A new cluster swallows the one below
    it while tau * (v_k - v_head_below) <= sigma / c, so equal arrival times
    merge and the head is the largest index, as required by the argmax rule.
    The yielded list is live; copy it to keep a snapshot.
    """
    stack: List[List[float]] = []
    for k, (v, w) in enumerate(zip(coordinates, weights)):
        sigma = w
        while stack and tau * (v - coordinates[stack[-1][0]]) <= sigma / capacity:
            sigma += stack.pop()[1]
        stack.append([k, sigma])
        yield stack


def prefix_sums(
        coordinates: Sequence[float],
        weights: Sequence[float],
        tau: float,
        capacity: float
) -> List[Tuple[float, float, float]]:
    """sums[k] = (S1, S2, S3) over the left clusters of the first k vertices"""
    stack: List[Tuple[float, float, float, float, float]] = []
    sums = [(0.0, 0.0, 0.0)]
    for v, w in zip(coordinates, weights):
        sigma = w
        while stack and tau * (v - stack[-1][0]) <= sigma / capacity:
            sigma += stack.pop()[1]
        if stack:
            _, _, s1, s2, s3 = stack[-1]
        else:
            s1 = s2 = s3 = 0.0
        entry = (v, sigma, s1 + sigma, s2 + sigma * v, s3 + sigma * sigma)
        stack.append(entry)
        sums.append(entry[2:])
    return sums


def profile_arrays(
        coordinates: Sequence[float],
        weights: Sequence[float],
        tau: float,
        capacity: float
) -> Profile:
    """Vertex costs, edge lines and median of one scenario in O(n)"""
    n = len(coordinates)
    end = coordinates[-1]
    reflected = [end - v for v in reversed(coordinates)]
    left = prefix_sums(coordinates, weights, tau, capacity)
    right = prefix_sums(reflected, weights[::-1], tau, capacity)
    half = 0.5 / capacity

    costs = []
    for h in range(n):
        v = coordinates[h]
        l1, l2, l3 = left[h]
        r1, r2, r3 = right[n - 1 - h]
        costs.append(tau * (v * l1 - l2) + tau * ((end - v) * r1 - r2) + (l3 + r3) * half)

    slopes = []
    intercepts = []
    for h in range(n - 1):
        l1, l2, l3 = left[h + 1]
        r1, r2, r3 = right[n - 1 - h]
        slopes.append(tau * (l1 - r1))
        intercepts.append(tau * (end * r1 - r2 - l2) + (l3 + r3) * half)

    m = int(np.argmin(costs))
    return Profile(costs, slopes, intercepts, m, costs[m])


def scenario_profile(net: PathNetwork, s: Scenario) -> Profile:
    return profile_arrays(net.vertex_coordinates, s.weights, net.tau, net.capacity)


def _check_point(net: PathNetwork, x: PointOnPath):
    if not 0.0 <= x.coordinate <= net.length:
        raise OutOfRangeError(f"point {x.coordinate} lies outside [0, {net.length}]")


def _left_count(x: PointOnPath) -> int:
    """Number of vertices strictly left of x"""
    return x.index - 1 if x.is_vertex else x.index


def left_clusters(net: PathNetwork, s: Scenario, x: PointOnPath) -> ClusterSequence:
    """Left clusters for x; on equal arrival times the larger index heads the cluster"""
    count = _left_count(x)
    if count == 0:
        return ClusterSequence(direction=Side.LEFT)
    states = _stack_states(net.vertex_coordinates[:count], s.weights[:count], net.tau, net.capacity)
    (stack,) = deque(states, maxlen=1)
    entries = tuple(Cluster(head=head + 1, weight=sigma) for head, sigma in stack)
    return ClusterSequence(direction=Side.LEFT, entries=entries, covered_range=(1, count))


def _reflect_point(net: PathNetwork, x: PointOnPath) -> PointOnPath:
    coordinate = net.length - x.coordinate
    if x.is_vertex:
        return PointOnPath.vertex(net.n + 1 - x.index, coordinate)
    return PointOnPath.on_edge(net.n - x.index, coordinate)


def right_clusters(net: PathNetwork, s: Scenario, x: PointOnPath) -> ClusterSequence:
    """Right clusters for x: reflect, cluster leftwards, reflect back"""
    mirrored = left_clusters(
        net.reflected(), Scenario(weights=s.weights[::-1]), _reflect_point(net, x)
    )
    if not mirrored.entries:
        return ClusterSequence(direction=Side.RIGHT)
    n = net.n
    low, high = mirrored.covered_range
    entries = tuple(Cluster(head=n + 1 - c.head, weight=c.weight) for c in mirrored.entries)
    return ClusterSequence(
        direction=Side.RIGHT, entries=entries, covered_range=(n + 1 - high, n + 1 - low)
    )


def cost_left(net: PathNetwork, s: Scenario, x: PointOnPath) -> float:
    """Phi_L(x): each left cluster waits for its head, then drains at rate c; zero at v_1"""
    v = net.vertex_coordinates
    half = 0.5 / net.capacity
    return sum(
        c.weight * net.tau * (x.coordinate - v[c.head - 1]) + c.weight * c.weight * half
        for c in left_clusters(net, s, x).entries
    )


def cost_right(net: PathNetwork, s: Scenario, x: PointOnPath) -> float:
    """Phi_R(x); zero at v_n"""
    v = net.vertex_coordinates
    half = 0.5 / net.capacity
    return sum(
        c.weight * net.tau * (v[c.head - 1] - x.coordinate) + c.weight * c.weight * half
        for c in right_clusters(net, s, x).entries
    )


def cost(net: PathNetwork, s: Scenario, x: PointOnPath) -> float:
    """Total evacuation time Phi(x); supply at a vertex sink costs nothing"""
    _check_point(net, x)
    return cost_left(net, s, x) + cost_right(net, s, x)


def vertex_costs_all(net: PathNetwork, s: Scenario) -> VertexCostTable:
    return VertexCostTable(costs=tuple(scenario_profile(net, s).costs))


def edge_lines(net: PathNetwork, s: Scenario) -> Tuple[EdgeCostLine, ...]:
    profile = scenario_profile(net, s)
    return tuple(
        EdgeCostLine(edge_index=i, slope=a, intercept=b)
        for i, (a, b) in enumerate(zip(profile.slopes, profile.intercepts), start=1)
    )


def edge_limit(net: PathNetwork, s: Scenario, vertex: int, side: Side) -> float:
    """Limit of Phi at v_vertex along the edge on the given side of it"""
    edge = vertex - 1 if side == Side.LEFT else vertex
    if not 1 <= edge <= net.n - 1:
        raise OutOfRangeError(f"vertex {vertex} has no edge on its {side.value} side")
    line = edge_lines(net, s)[edge - 1]
    return line.value(net.vertex_coordinates[vertex - 1])


def median(net: PathNetwork, s: Scenario) -> MedianResult:
    """Minimum-cost vertex, smallest index on ties"""
    profile = scenario_profile(net, s)
    return MedianResult(
        median_vertex_index=profile.median_index + 1, median_cost=profile.median_cost
    )


def cluster_snapshots(net: PathNetwork, s: Scenario) -> List[ClusterSequence]:
    """Left clusters of the prefix 1..h for every h, as the sweep builds them"""
    snapshots = []
    states = _stack_states(net.vertex_coordinates, s.weights, net.tau, net.capacity)
    for h, stack in enumerate(states, start=1):
        entries = tuple(Cluster(head=head + 1, weight=sigma) for head, sigma in stack)
        snapshots.append(
            ClusterSequence(direction=Side.LEFT, entries=entries, covered_range=(1, h))
        )
    return snapshots
