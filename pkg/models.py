from enum import Enum
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, model_validator


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class PointKind(str, Enum):
    VERTEX = "vertex"
    EDGE = "edge"


class FlowEventKind(str, Enum):
    STREAM_START = "stream_start"
    STREAM_END = "stream_end"
    QUEUE_DRAIN = "queue_drain"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True)


def network_problem(
        coordinates: Tuple[float, ...],
        intervals: Tuple[Tuple[float, float], ...],
        capacity: float,
        tau: float
) -> Optional[Tuple[str, str, Optional[int]]]:
    """
    Return the first model violation as (message, field, index), or None.

    Indices are 1-based: vertex indices for weights and coordinates, edge
    indices for lengths.
    """
    if not coordinates:
        return "a path needs at least one vertex", "vertices", None
    if len(coordinates) != len(intervals):
        return "one weight interval is needed per vertex", "vertices", None
    if not capacity > 0:
        return "capacity must be positive", "capacity", None
    if not tau > 0:
        return "tau must be positive", "tau", None
    for i in range(1, len(coordinates)):
        if not coordinates[i] - coordinates[i - 1] > 0:
            return f"edge length must be positive at edge {i}", "position", i
    for i, (low, high) in enumerate(intervals, start=1):
        if not low > 0:
            return f"weight_min must be positive at vertex {i}", "weight_min", i
        if not low <= high:
            return f"weight_min exceeds weight_max at vertex {i}", "weight_max", i
    return None


class PathNetwork(FrozenModel):
    """A dynamic path network under uncertain supplies, embedded with v_1 = 0"""
    vertex_coordinates: Tuple[float, ...]
    weight_intervals: Tuple[Tuple[float, float], ...]
    capacity: float
    tau: float
    offset: float = 0.0  # original coordinate of v_1

    @model_validator(mode="after")
    def _check_model(self):
        problem = network_problem(
            self.vertex_coordinates, self.weight_intervals, self.capacity, self.tau
        )
        if problem is not None:
            raise ValueError(problem[0])
        if self.vertex_coordinates[0] != 0.0:
            raise ValueError("coordinates must be normalised so that v_1 = 0")
        return self

    @property
    def n(self) -> int:
        return len(self.vertex_coordinates)

    @property
    def edge_lengths(self) -> Tuple[float, ...]:
        v = self.vertex_coordinates
        return tuple(v[i + 1] - v[i] for i in range(len(v) - 1))

    @property
    def w_min(self) -> Tuple[float, ...]:
        return tuple(low for low, _ in self.weight_intervals)

    @property
    def w_max(self) -> Tuple[float, ...]:
        return tuple(high for _, high in self.weight_intervals)

    @property
    def length(self) -> float:
        return self.vertex_coordinates[-1]

    def original(self, x: float) -> float:
        """Translate a normalised coordinate back to the input embedding"""
        return x + self.offset

    def reflected(self) -> "PathNetwork":
        """The same network read from v_n towards v_1"""
        v = self.vertex_coordinates
        end = v[-1]
        return PathNetwork.model_construct(
            vertex_coordinates=tuple(end - p for p in reversed(v)),
            weight_intervals=tuple(reversed(self.weight_intervals)),
            capacity=self.capacity,
            tau=self.tau,
            offset=0.0,
        )


class Scenario(FrozenModel):
    """One supply value per vertex"""
    weights: Tuple[float, ...]

    def total(self) -> float:
        return sum(self.weights)


class PointOnPath(FrozenModel):
    """A point of the path: a vertex, or the interior of an edge"""
    coordinate: float
    kind: PointKind
    index: int  # 1-based vertex index or edge index

    @property
    def is_vertex(self) -> bool:
        return self.kind == PointKind.VERTEX

    @classmethod
    def vertex(cls, index: int, coordinate: float) -> "PointOnPath":
        return cls(coordinate=coordinate, kind=PointKind.VERTEX, index=index)

    @classmethod
    def on_edge(cls, index: int, coordinate: float) -> "PointOnPath":
        return cls(coordinate=coordinate, kind=PointKind.EDGE, index=index)


class Cluster(FrozenModel):
    head: int
    weight: float


class ClusterSequence(FrozenModel):
    """
    Congestion clusters on one side of an evaluation point.

    Entries run from the far end of the path towards the point, so heads
    strictly increase for LEFT and strictly decrease for RIGHT.
    """
    direction: Side
    entries: Tuple[Cluster, ...] = ()
    covered_range: Optional[Tuple[int, int]] = None  # inclusive, 1-based

    @property
    def heads(self) -> Tuple[int, ...]:
        return tuple(entry.head for entry in self.entries)

    @property
    def weights(self) -> Tuple[float, ...]:
        return tuple(entry.weight for entry in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


class EdgeCostLine(FrozenModel):
    edge_index: int
    slope: float
    intercept: float

    def value(self, x: float) -> float:
        return self.slope * x + self.intercept


class VertexCostTable(FrozenModel):
    costs: Tuple[float, ...]


class MedianResult(FrozenModel):
    median_vertex_index: int
    median_cost: float


class PseudoBipartiteSpec(FrozenModel):
    side: Side
    intermediate_index: int
    intermediate_weight: float

    def precedence_key(self) -> Tuple[int, float]:
        """Sort key of the sweep order; the right family sweeps leftwards"""
        if self.side == Side.LEFT:
            return self.intermediate_index, self.intermediate_weight
        return -self.intermediate_index, self.intermediate_weight


class CriticalMember(FrozenModel):
    spec: PseudoBipartiteSpec
    scenario: Scenario


class CriticalScenarioSet(FrozenModel):
    anchor_vertex: int
    members: Tuple[CriticalMember, ...] = ()

    def __len__(self) -> int:
        return len(self.members)


class UniverseMember(FrozenModel):
    anchor: int
    spec: PseudoBipartiteSpec
    scenario: Scenario


class ScenarioUniverse(FrozenModel):
    members: Tuple[UniverseMember, ...] = ()

    def __len__(self) -> int:
        return len(self.members)

    @property
    def scenarios(self) -> Tuple[Scenario, ...]:
        return tuple(member.scenario for member in self.members)


class RegretLine(FrozenModel):
    edge_index: int
    slope: float
    offset: float
    scenario_index: int

    def value(self, x: float) -> float:
        return self.slope * x + self.offset


class VertexRegret(FrozenModel):
    index: int
    r_max: float
    witness_ref: Optional[int] = None  # None when the universe is empty


class EdgeRegret(FrozenModel):
    index: int
    x: float
    value: float
    witness_ref: int


class Solution(FrozenModel):
    x_star: PointOnPath
    value: float
    worst_scenario: Scenario
    witness_ref: Optional[int] = None  # universe member, None when the universe is empty
    vertex_report: Tuple[VertexRegret, ...]
    edge_report: Tuple[EdgeRegret, ...]


class FlowEvent(FrozenModel):
    time: float
    vertex: int  # 0 denotes the sink
    kind: FlowEventKind
    rate: float


class OracleCheck(FrozenModel):
    name: str
    passed: bool
    detail: str = ""


class OracleReport(FrozenModel):
    checks: Tuple[OracleCheck, ...]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


class CommandConfig(BaseModel):
    """Parsed command line of one CLI invocation"""
    subcommand: str
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    format: OutputFormat = OutputFormat.JSON
    seed: int
    grid: int
    samples: int = 101
    verbosity: int = 0
