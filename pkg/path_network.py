"""
Path network model: instance document I/O, point location, scenarios and
the canonical fixtures.
"""
import json
import logging
from bisect import bisect_left
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from errors import InstanceSyntaxError, InstanceValidationError, OutOfRangeError, ScenarioError
from models import PathNetwork, PointOnPath, Scenario, network_problem

log = logging.getLogger(__name__)

FIXTURE_DIR = Path(__file__).resolve().parent / "fixtures"


class VertexDocument(BaseModel):
    """One vertex entry of an instance document"""
    position: float
    weight_min: float
    weight_max: float


class InstanceDocument(BaseModel):
    """Instance document as read from JSON"""
    tau: float
    capacity: float
    vertices: List[VertexDocument]
    offset: float = 0.0


def build_network(
        positions: Sequence[float],
        intervals: Sequence[Tuple[float, float]],
        capacity: float,
        tau: float,
        offset: float = 0.0
) -> PathNetwork:
    """Validate raw fields and return a network normalised to v_1 = 0"""
    if not positions:
        raise InstanceValidationError("a path needs at least one vertex", "vertices")
    origin = float(positions[0])
    coordinates = tuple(float(p) - origin for p in positions)
    intervals = tuple((float(low), float(high)) for low, high in intervals)
    problem = network_problem(coordinates, intervals, float(capacity), float(tau))
    if problem is not None:
        message, field, index = problem
        raise InstanceValidationError(message, field, index)
    return PathNetwork(
        vertex_coordinates=coordinates,
        weight_intervals=intervals,
        capacity=float(capacity),
        tau=float(tau),
        offset=float(offset) + origin,
    )


def parse_instance(text: str) -> PathNetwork:
    """Parse and validate an instance document"""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceSyntaxError(f"instance is not valid JSON: {e}") from e

    try:
        document = InstanceDocument.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first["loc"])
        raise InstanceSyntaxError(f"malformed instance at '{where}': {first['msg']}") from e

    net = build_network(
        [vertex.position for vertex in document.vertices],
        [(vertex.weight_min, vertex.weight_max) for vertex in document.vertices],
        document.capacity,
        document.tau,
        document.offset,
    )
    log.debug("Parsed instance with %d vertices (offset %r)", net.n, net.offset)
    return net


def serialize_instance(net: PathNetwork) -> str:
    """Write the instance document; parse_instance inverts this exactly"""
    document = {
        "tau": net.tau,
        "capacity": net.capacity,
        "offset": net.offset,
        "vertices": [
            {"position": p, "weight_min": low, "weight_max": high}
            for p, (low, high) in zip(net.vertex_coordinates, net.weight_intervals)
        ],
    }
    return json.dumps(document, indent=2)


def load_instance(path: Union[str, Path]) -> PathNetwork:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise InstanceSyntaxError(f"cannot read instance {path}: {e}") from e
    return parse_instance(text)


def fixture_a() -> PathNetwork:
    """Three vertices at 0, 3, 4 with every supply fixed at 1"""
    return build_network([0.0, 3.0, 4.0], [(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)], 1.0, 1.0)


def fixture_b() -> PathNetwork:
    """Fixture A with the middle supply free in [0.5, 2]"""
    return build_network([0.0, 3.0, 4.0], [(1.0, 1.0), (0.5, 2.0), (1.0, 1.0)], 1.0, 1.0)


def locate(net: PathNetwork, x: float) -> PointOnPath:
    """Classify a normalised coordinate as a vertex or an open-edge point"""
    coordinates = net.vertex_coordinates
    if not 0.0 <= x <= coordinates[-1]:
        raise OutOfRangeError(f"point {x} lies outside [0, {coordinates[-1]}]")
    i = bisect_left(coordinates, x)
    if coordinates[i] == x:
        return PointOnPath.vertex(i + 1, x)
    return PointOnPath.on_edge(i, x)


def make_scenario(net: PathNetwork, weights: Sequence[float]) -> Scenario:
    """Check a weight vector against the intervals; no clamping"""
    if len(weights) != net.n:
        raise ScenarioError(f"scenario has {len(weights)} weights for {net.n} vertices")
    for i, (w, (low, high)) in enumerate(zip(weights, net.weight_intervals), start=1):
        if not low <= w <= high:
            raise ScenarioError(f"weight {w} at vertex {i} lies outside [{low}, {high}]", index=i)
    return Scenario(weights=tuple(float(w) for w in weights))


def _log_uniform(rng: np.random.Generator, low: float, high: float, size=None):
    return np.exp(rng.uniform(np.log(low), np.log(high), size))


def random_network(
        rng: np.random.Generator,
        n: int,
        length_range: Tuple[float, float] = (0.1, 10.0),
        weight_range: Tuple[float, float] = (0.1, 10.0),
        spread: float = 10.0,
        capacity_range: Tuple[float, float] = (0.1, 10.0),
        tau_range: Tuple[float, float] = (0.1, 10.0),
        degenerate: Optional[float] = None
) -> PathNetwork:
    """
    Draw a network with log-uniform lengths, weights, capacity and tau.

    Each interval is [w, w * f] with f log-uniform in [1, spread]; with
    `degenerate` set, that fraction of intervals collapses to a point.
    """
    lengths = _log_uniform(rng, *length_range, size=n - 1)
    positions = np.concatenate(([0.0], np.cumsum(lengths)))
    low = _log_uniform(rng, *weight_range, size=n)
    high = low * _log_uniform(rng, 1.0, spread, size=n)
    if degenerate:
        collapse = rng.random(n) < degenerate
        high = np.where(collapse, low, high)
    return build_network(
        positions.tolist(),
        list(zip(low.tolist(), high.tolist())),
        float(_log_uniform(rng, *capacity_range)),
        float(_log_uniform(rng, *tau_range)),
    )


def random_scenario(net: PathNetwork, rng: np.random.Generator) -> Scenario:
    low = np.array(net.w_min)
    high = np.array(net.w_max)
    weights = np.clip(low + (high - low) * rng.random(net.n), low, high)
    return Scenario(weights=tuple(weights.tolist()))


def random_point(net: PathNetwork, rng: np.random.Generator) -> PointOnPath:
    """A uniformly drawn point, or with probability 1/4 a uniformly drawn vertex"""
    if net.n == 1 or rng.random() < 0.25:
        i = int(rng.integers(1, net.n + 1))
        return PointOnPath.vertex(i, net.vertex_coordinates[i - 1])
    return locate(net, float(rng.uniform(0.0, net.length)))
