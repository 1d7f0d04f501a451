"""
Bipartite, pseudo-bipartite and critical pseudo-bipartite scenarios, and the
finite scenario universe built from them.
"""
import logging
import multiprocessing as mp
from typing import Dict, Iterable, List, Sequence, Tuple

from config import Config
from errors import ScenarioError
from models import (
    CriticalMember, CriticalScenarioSet, PathNetwork,
    PseudoBipartiteSpec, Scenario, ScenarioUniverse, Side, UniverseMember
)

log = logging.getLogger(__name__)


def bipartite(net: PathNetwork, side: Side, i: int) -> Scenario:
    """w+ on 1..i and w- on i+1..n for LEFT; the other way round for RIGHT"""
    if not 1 <= i <= net.n - 1:
        raise ScenarioError(f"bipartite split {i} outside 1..{net.n - 1}", index=i)
    first, second = (net.w_max, net.w_min) if side == Side.LEFT else (net.w_min, net.w_max)
    return Scenario(weights=first[:i] + second[i:])


def _realize(first: Sequence[float], second: Sequence[float], i: int, w: float) -> Tuple[float, ...]:
    """first on vertices before the 0-based index i, w at i, second after it"""
    return tuple(first[:i]) + (w,) + tuple(second[i + 1:])


def pseudo_bipartite(net: PathNetwork, spec: PseudoBipartiteSpec) -> Scenario:
    i = spec.intermediate_index
    if not 1 <= i <= net.n:
        raise ScenarioError(f"intermediate vertex {i} outside 1..{net.n}", index=i)
    low, high = net.weight_intervals[i - 1]
    w = spec.intermediate_weight
    if not low <= w <= high:
        raise ScenarioError(f"intermediate weight {w} at vertex {i} lies outside [{low}, {high}]", index=i)
    if spec.side == Side.LEFT:
        return Scenario(weights=_realize(net.w_max, net.w_min, i - 1, w))
    return Scenario(weights=_realize(net.w_min, net.w_max, i - 1, w))


def _left_family(
        coordinates: Sequence[float],
        lows: Sequence[float],
        highs: Sequence[float],
        anchor: int,
        tau: float,
        capacity: float
) -> List[Tuple[int, float]]:
    """
    Critical left-pseudo-bipartite (intermediate, weight) pairs for the
    0-based anchor, in ascending sweep order.

    The right clusters for the anchor are kept as the cluster holding the
    intermediate vertex plus a stack of the clusters beyond it (nearest on
    top). Raising the intermediate weight only ever lets the next cluster
    catch up with the current one.
    """
    n = len(coordinates)
    if anchor >= n - 1:
        return []
    reach = capacity * tau

    # right clusters for the anchor under s(anchor + 1, w-): [head, last, sigma]
    ahead: List[List[float]] = []
    for k in range(n - 1, anchor, -1):
        sigma = lows[k]
        last = k
        while ahead and tau * (coordinates[ahead[-1][0]] - coordinates[k]) <= sigma / capacity:
            _, last, behind = ahead.pop()
            sigma += behind
        ahead.append([k, last, sigma])

    head, last, sigma = ahead.pop()
    i = anchor + 1
    omega = lows[i]
    found = [(i, omega)]
    while True:
        high = highs[i]
        while omega < high:
            if ahead:
                w = omega + reach * (coordinates[ahead[-1][0]] - coordinates[head]) - sigma
            if ahead and w <= high:
                if w > omega:
                    sigma += w - omega
                    omega = w
                    found.append((i, w))
                _, last, behind = ahead.pop()
                sigma += behind
                while ahead and tau * (coordinates[ahead[-1][0]] - coordinates[head]) <= sigma / capacity:
                    _, last, behind = ahead.pop()
                    sigma += behind
            else:
                sigma += high - omega
                omega = high
                found.append((i, high))
        if i == n - 1:
            return found
        i += 1
        if i > last:
            head, last, sigma = ahead.pop()
        omega = lows[i]
        found.append((i, omega))


def critical_set_for_vertex(net: PathNetwork, y: int) -> CriticalScenarioSet:
    """S_y: critical left- and right-pseudo-bipartite scenarios for v_y"""
    n = net.n
    lows, highs = net.w_min, net.w_max
    members = []

    for i, w in _left_family(net.vertex_coordinates, lows, highs, y - 1, net.tau, net.capacity):
        spec = PseudoBipartiteSpec.model_construct(
            side=Side.LEFT, intermediate_index=i + 1, intermediate_weight=w
        )
        scenario = Scenario.model_construct(weights=_realize(highs, lows, i, w))
        members.append(CriticalMember.model_construct(spec=spec, scenario=scenario))

    mirrored = net.reflected()
    right = _left_family(
        mirrored.vertex_coordinates, lows[::-1], highs[::-1], n - y, net.tau, net.capacity
    )
    for i, w in right:
        spec = PseudoBipartiteSpec.model_construct(
            side=Side.RIGHT, intermediate_index=n - i, intermediate_weight=w
        )
        scenario = Scenario.model_construct(weights=_realize(lows, highs, n - 1 - i, w))
        members.append(CriticalMember.model_construct(spec=spec, scenario=scenario))

    return CriticalScenarioSet.model_construct(anchor_vertex=y, members=tuple(members))


def critical_weights(critical: CriticalScenarioSet, side: Side, intermediate: int) -> List[float]:
    """Sorted distinct critical weights of one intermediate vertex"""
    return sorted({
        member.spec.intermediate_weight for member in critical.members
        if member.spec.side == side and member.spec.intermediate_index == intermediate
    })


def _critical_set_task(args: Tuple[PathNetwork, int]) -> CriticalScenarioSet:
    return critical_set_for_vertex(*args)


def universe(net: PathNetwork, workers: int = None) -> ScenarioUniverse:
    """S*: union of S_y over all anchors, first occurrence kept in canonical order"""
    workers = workers or Config.WORKERS
    tasks = [(net, y) for y in range(1, net.n + 1)]
    if workers > 1 and net.n > 1:
        with mp.Pool(workers) as pool:
            return _deduplicate(net, pool.imap(_critical_set_task, tasks))
    return _deduplicate(net, map(_critical_set_task, tasks))


def _deduplicate(net: PathNetwork, critical_sets: Iterable[CriticalScenarioSet]) -> ScenarioUniverse:
    seen: Dict[Tuple[float, ...], int] = {}
    members = []
    total = 0
    for critical in critical_sets:
        total += len(critical)
        for member in critical.members:
            key = member.scenario.weights
            if key in seen:
                continue
            seen[key] = len(members)
            members.append(UniverseMember.model_construct(
                anchor=critical.anchor_vertex, spec=member.spec, scenario=member.scenario
            ))

    log.info("Scenario universe: %d distinct of %d critical scenarios (n=%d)", len(members), total, net.n)
    return ScenarioUniverse.model_construct(members=tuple(members))

