from enum import Enum
from fractions import Fraction
from typing import Annotated, Any, Literal, Optional, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PlainSerializer,
    PlainValidator,
    computed_field,
    field_validator,
)

from partition_sched.tools.rational import fraction_to_json, to_fraction

Rational = Annotated[
    Fraction,
    PlainValidator(to_fraction),
    PlainSerializer(fraction_to_json, when_used="json"),
]
"""An exact rational. Accepts ints, ``[num, den]`` pairs and ``"num/den"`` strings."""

INFINITY = "+inf"
SlackValue = Union[Literal["+inf"], Rational]


def slack_min(*values: SlackValue) -> SlackValue:
    """Minimum over slack values where ``"+inf"`` is the neutral element."""
    finite = [v for v in values if v != INFINITY]
    return min(finite) if finite else INFINITY


class Job(BaseModel):
    """A job of the instance: a processing time, the resources it holds and a weight."""

    model_config = ConfigDict(frozen=True)

    id: int = Field(..., description="Job id, unique within the instance.")
    p: Rational = Field(..., description="Processing time, strictly positive.")
    resources: tuple[int, ...] = Field(
        default=(),
        description="Resource ids held for the whole processing time. Plain partition"
        " instances use exactly one; partition(q) instances up to q; dummy jobs none.",
    )
    weight: Rational = Field(
        default=Fraction(1),
        description="Weight in the objective sum of w_j C_j. Defaults to 1.",
    )


class Instance(BaseModel):
    """A scheduling instance on identical (or, optionally, unrelated) parallel machines.

    The on-disk names are ``machines``, ``resources``, ``jobs``,
    ``machine_subsets``, ``unmovable``, ``capacities``, ``unrelated_times``.
    Structural coercion happens here; semantic checks live in
    :func:`partition_sched.core.validate_instance`, so malformed files can
    still be loaded and diagnosed.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    machine_count: int = Field(
        ..., alias="machines", description="Number of parallel machines m."
    )
    resource_count: int = Field(
        ..., alias="resources", description="Number of resources |R|."
    )
    jobs: tuple[Job, ...] = Field(..., description="The jobs, in file order.")
    machine_subsets: Optional[dict[int, tuple[int, ...]]] = Field(
        default=None,
        description="Resource id -> machines that resource may be used on (M_r).",
    )
    unmovable: bool = Field(
        default=False,
        description="If true, all jobs of one resource must share one machine.",
    )
    capacities: Optional[tuple[int, ...]] = Field(
        default=None,
        description="Units available per resource; every resource has 1 when omitted.",
    )
    unrelated_times: Optional[tuple[tuple[Rational, ...], ...]] = Field(
        default=None,
        description="m x n matrix of machine-dependent durations. Column k belongs to"
        " the k-th job of ``jobs``; overrides ``p`` when present.",
    )
    max_resources_per_job: int = Field(
        default=1,
        alias="max_resources",
        description="The q of partition(q): at most this many resources per job.",
    )
    allow_dummy_jobs: bool = Field(
        default=False,
        description="Permit jobs without any resource (edge-colouring gadgets only).",
    )

    @field_validator("machine_subsets", mode="after")
    @classmethod
    def sort_subsets(cls, value):
        """Store subsets sorted and keyed in ascending resource order."""
        if value is None:
            return None
        return {r: tuple(sorted(set(value[r]))) for r in sorted(value)}

    @property
    def n(self) -> int:
        return len(self.jobs)

    def job_map(self) -> dict[int, Job]:
        return {job.id: job for job in self.jobs}

    def job_index(self) -> dict[int, int]:
        """Job id -> column of ``unrelated_times``."""
        return {job.id: k for k, job in enumerate(self.jobs)}

    def capacity(self, resource: int) -> int:
        if self.capacities is None:
            return 1
        return self.capacities[resource]

    def resource_users(self) -> dict[int, list[int]]:
        """Resource id -> ids of the jobs holding it, in job order."""
        users: dict[int, list[int]] = {}
        for job in self.jobs:
            for r in job.resources:
                users.setdefault(r, []).append(job.id)
        return users

    def allowed_machines(self, job: Job) -> tuple[int, ...]:
        """Machines the job may run on under ``machine_subsets``."""
        allowed = set(range(self.machine_count))
        if self.machine_subsets:
            for r in job.resources:
                if r in self.machine_subsets:
                    allowed &= set(self.machine_subsets[r])
        return tuple(sorted(allowed))

    def duration(self, job: Job, machine: int, index: Optional[dict] = None) -> Fraction:
        """Processing time of ``job`` on ``machine``."""
        if self.unrelated_times is None:
            return job.p
        index = index if index is not None else self.job_index()
        return self.unrelated_times[machine][index[job.id]]

    def is_unit(self) -> bool:
        return self.unrelated_times is None and all(job.p == 1 for job in self.jobs)

    def is_plain(self) -> bool:
        """One resource per job and none of the optional extensions."""
        return (
            all(len(job.resources) == 1 for job in self.jobs)
            and not self.machine_subsets
            and not self.unmovable
            and self.unrelated_times is None
        )


class ScheduleEntry(BaseModel):
    """Placement of one job: a machine and a start time."""

    model_config = ConfigDict(frozen=True)

    job: int = Field(..., description="Job id.")
    machine: int = Field(..., description="Machine id, 0-based.")
    start: Rational = Field(..., description="Start time.")


class Schedule(BaseModel):
    """A non-preemptive schedule. Completion times are derived from the instance."""

    model_config = ConfigDict(frozen=True)

    entries: tuple[ScheduleEntry, ...] = Field(
        default=(), description="One entry per job."
    )

    def entry_map(self) -> dict[int, ScheduleEntry]:
        return {e.job: e for e in self.entries}

    @classmethod
    def from_placements(cls, placements: dict[int, tuple[int, Fraction]]) -> "Schedule":
        """Build a schedule from ``job -> (machine, start)``, ordered by job id."""
        return cls(
            entries=tuple(
                ScheduleEntry(job=j, machine=machine, start=start)
                for j, (machine, start) in sorted(placements.items())
            )
        )


class Violation(BaseModel):
    """A single broken invariant."""

    model_config = ConfigDict(frozen=True)

    kind: str = Field(..., description="Short machine-readable category.")
    message: str = Field(..., description="Human readable explanation.")


class ValidationReport(BaseModel):
    """Outcome of an instance or schedule check. Empty means well-formed."""

    model_config = ConfigDict(frozen=True)

    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def messages(self) -> list[str]:
        return [v.message for v in self.violations]


class SlackReport(BaseModel):
    """Positive and negative slack of one job; ``"+inf"`` is the empty minimum."""

    model_config = ConfigDict(frozen=True)

    job: int
    d_plus: SlackValue = Field(
        ..., description="Gap until the next use of the job's resource."
    )
    d_minus: SlackValue = Field(
        ..., description="Gap since the previous use of the job's resource."
    )

    @computed_field
    @property
    def slack(self) -> SlackValue:
        return slack_min(self.d_plus, self.d_minus)


class BlockingPair(BaseModel):
    """A job and the first later-starting job sharing one of its resources."""

    model_config = ConfigDict(frozen=True)

    first: int
    second: int
    tight: bool = Field(..., description="True when the second starts as the first completes.")


class TrainSequence(BaseModel):
    """A maximal back-to-back run of jobs with the same resources on one machine."""

    model_config = ConfigDict(frozen=True)

    machine: int
    resources: tuple[int, ...]
    jobs: tuple[int, ...]
    start: Rational
    end: Rational


class BoundReport(BaseModel):
    """Lower-bound quantities used to check the SPT-available guarantee."""

    model_config = ConfigDict(frozen=True)

    per_job_k: dict[int, Rational] = Field(
        ..., description="Minimum completion time k_j of every job."
    )
    sum_k: Rational = Field(..., description="Sum of the k_j.")
    per_job_c1: dict[int, Rational] = Field(
        ..., description="Completion time of each job in the single-machine SPT schedule."
    )
    opt1: Rational = Field(..., description="Single-machine optimum OPT^1.")
    opt1_over_m: Rational = Field(..., description="OPT^1 / m.")
    opt_m: Rational = Field(
        ..., description="Parallel-machine optimum without resource constraints, OPT^m."
    )


class FlowNode(BaseModel):
    """A node of the position-indexed flow network."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["source", "sink", "job", "res", "res_dup", "machine"]
    job: Optional[int] = None
    resource: Optional[int] = None
    machine: Optional[int] = None
    position: Optional[int] = None

    @property
    def label(self) -> str:
        if self.kind in ("source", "sink"):
            return "s" if self.kind == "source" else "t"
        if self.kind == "job":
            return f"job:{self.job}"
        if self.kind == "res":
            return f"res:{self.resource}:{self.position}"
        if self.kind == "res_dup":
            return f"res':{self.resource}:{self.position}"
        return f"mach:{self.machine}:{self.position}"


class FlowArc(BaseModel):
    model_config = ConfigDict(frozen=True)

    tail: int
    head: int
    capacity: int
    cost: Rational


class FlowNetwork(BaseModel):
    """Min-cost-flow encoding of a unit-time instance."""

    model_config = ConfigDict(frozen=True)

    nodes: tuple[FlowNode, ...]
    arcs: tuple[FlowArc, ...]
    source: int
    sink: int
    required_flow: int = Field(..., description="Units of flow to route: one per job.")
    weighted: bool = False


class Flow(BaseModel):
    """An integral flow: one value per arc of the network, plus its total cost."""

    model_config = ConfigDict(frozen=True)

    values: tuple[int, ...]
    cost: Rational


class OracleResult(BaseModel):
    """Exact optimum found by exhaustive search, with a witness schedule."""

    model_config = ConfigDict(frozen=True)

    optimum: Rational
    witness: Schedule
    optima_count: Optional[int] = Field(
        default=None, description="Number of optimal schedules, when enumerated."
    )
    strategy: Literal["sequence", "slots"] = "sequence"
    search_space: int = Field(
        default=0, description="Search-space estimate checked against the budget."
    )


class Graph(BaseModel):
    """A simple undirected graph on vertices ``0..vertex_count-1``."""

    model_config = ConfigDict(frozen=True)

    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    @field_validator("edges", mode="after")
    @classmethod
    def normalise_edges(cls, value):
        """Store each edge as ``(low, high)``."""
        return tuple((min(u, v), max(u, v)) for u, v in value)

    def degrees(self) -> list[int]:
        deg = [0] * self.vertex_count
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    @property
    def max_degree(self) -> int:
        return max(self.degrees(), default=0)


class ThreePartitionInput(BaseModel):
    """A 3-PARTITION question: split ``elements`` into m triples each summing to b."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    m: int
    b: int
    elements: tuple[int, ...] = Field(..., alias="A")


class GadgetKind(str, Enum):
    example41 = "example41"
    lb_family = "lb_family"
    mr_3partition = "mr_3partition"
    unmovable_3partition = "unmovable_3partition"
    partition2_edgecoloring = "partition2_edgecoloring"
    unrelated_mapped = "unrelated_mapped"
    random = "random"


class GadgetInstance(BaseModel):
    """A generated instance bundled with its decision threshold and provenance."""

    model_config = ConfigDict(frozen=True)

    instance: Instance
    kind: GadgetKind
    threshold: Optional[Rational] = Field(
        default=None, description="Decision bound of the reduction, if any."
    )
    provenance: dict[str, Any] = Field(
        default_factory=dict,
        description="Source object of the construction (eps, c, A and b, graph, seed).",
    )
    witness: Optional[Schedule] = Field(
        default=None, description="Feasible yes-instance layout, when one was requested."
    )


class BenchRow(BaseModel):
    """One (instance, algorithm) line of a benchmark report."""

    model_config = ConfigDict(frozen=True)

    instance_id: str
    kind: str
    n: int
    m: int
    algorithm: str
    objective: Rational
    oracle_optimum: Optional[Rational] = None
    optimum_source: Optional[Literal["oracle", "formula"]] = None
    ratio: Optional[Rational] = None
    checks: dict[str, Optional[bool]] = Field(
        default_factory=dict, description="check name -> pass (True), fail (False), skipped (None)."
    )


class SweepFamily(BaseModel):
    """One family entry of a YAML benchmark sweep file."""

    family: Literal["random", "unit", "lb", "example41", "shrink"]
    count: int = Field(default=20, description="Seeds drawn for random families.")
    m: tuple[int, ...] = Field(default=(2, 3), description="Machine counts to draw from.")
    n_max: int = 6
    p_max: int = 4
    resources_max: int = 4
    capacity: int = 1
    restrict_machines: bool = False
    c: tuple[int, ...] = Field(default=(2,), description="c values for lb / shrink.")
    eps: Rational = Field(default=Fraction(1, 100))


class SweepSpec(BaseModel):
    """A YAML benchmark sweep: a seed and a list of families."""

    seed: int = 0
    budget: Optional[int] = None
    cases: tuple[SweepFamily, ...]


class BenchCase(BaseModel):
    """One instance of a benchmark run and the algorithms to try on it."""

    model_config = ConfigDict(frozen=True)

    instance_id: str
    kind: str
    instance: Instance
    algorithms: tuple[str, ...] = Field(
        ..., description="Any of spt-available, flow, shrink and oracle."
    )
    c: Optional[int] = Field(default=None, description="Stretch factor for shrink.")
    formula_optimum: Optional[Rational] = Field(
        default=None,
        description="Closed-form optimum used when the oracle budget is exceeded.",
    )
