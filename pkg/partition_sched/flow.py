"""Exact solver for unit-time instances through a position-indexed min-cost flow.

Every job is routed from the source through its resource at some position p
(its completion time) and a machine at the same position to the sink. Arc
capacities on the resource layer enforce resource capacities, arcs into the
sink enforce one job per machine and position.
"""

import heapq
import logging
from fractions import Fraction

from partition_sched.core import normalize_tight
from partition_sched.errors import (
    FlowDecodeError,
    InfeasibleNetworkError,
    UnsupportedInstanceError,
)
from partition_sched.models import (
    Flow,
    FlowArc,
    FlowNetwork,
    FlowNode,
    Instance,
    Schedule,
)
from partition_sched.tools.rational import format_rational as fr

FREE_LANE = -1
"""Resource id of the always-free lane used by jobs that hold no resource."""


def _check_unit(inst: Instance):
    if inst.unrelated_times is not None:
        raise UnsupportedInstanceError("flow solver does not support unrelated processing times")
    if any(job.p != 1 for job in inst.jobs):
        raise UnsupportedInstanceError("flow solver requires p_j = 1")
    if inst.unmovable:
        raise UnsupportedInstanceError("flow solver does not support unmovable resources")
    if any(len(job.resources) > 1 for job in inst.jobs):
        raise UnsupportedInstanceError("flow solver requires at most one resource per job")


def build_network(inst: Instance, weighted: bool = False) -> FlowNetwork:
    """Build the min-cost-flow network of a unit-time instance.

    Nodes are numbered source, jobs, resource positions, their duplicates,
    machine positions, sink. Positions run from 1 to n. In weighted mode the
    cost ``w_j * p`` sits on the job -> (r, p) arcs and the sink arcs are free.

    Raises:
        UnsupportedInstanceError: If some p_j differs from 1, or the instance
            uses unrelated times, unmovable resources or several resources per job.
    """
    _check_unit(inst)
    n, m = inst.n, inst.machine_count
    positions = range(1, n + 1)
    lanes = list(range(inst.resource_count))
    if any(not job.resources for job in inst.jobs):
        lanes.append(FREE_LANE)

    nodes: list[FlowNode] = [FlowNode(kind="source")]
    job_node = {}
    for job in inst.jobs:
        job_node[job.id] = len(nodes)
        nodes.append(FlowNode(kind="job", job=job.id))
    res_node, dup_node, mach_node = {}, {}, {}
    for kind, table in (("res", res_node), ("res_dup", dup_node)):
        for r in lanes:
            for p in positions:
                table[r, p] = len(nodes)
                nodes.append(FlowNode(kind=kind, resource=r, position=p))
    for i in range(m):
        for p in positions:
            mach_node[i, p] = len(nodes)
            nodes.append(FlowNode(kind="machine", machine=i, position=p))
    sink = len(nodes)
    nodes.append(FlowNode(kind="sink"))

    arcs: list[FlowArc] = []

    def arc(tail, head, capacity, cost=0):
        arcs.append(FlowArc(tail=tail, head=head, capacity=capacity, cost=Fraction(cost)))

    for job in inst.jobs:
        arc(0, job_node[job.id], 1)
    for job in inst.jobs:
        r = job.resources[0] if job.resources else FREE_LANE
        for p in positions:
            arc(job_node[job.id], res_node[r, p], 1, job.weight * p if weighted else 0)
    for r in lanes:
        cap = n if r == FREE_LANE else inst.capacity(r)
        for p in positions:
            arc(res_node[r, p], dup_node[r, p], cap)
    for r in lanes:
        allowed = range(m)
        if r != FREE_LANE and inst.machine_subsets and r in inst.machine_subsets:
            allowed = inst.machine_subsets[r]
        for p in positions:
            for i in allowed:
                arc(dup_node[r, p], mach_node[i, p], 1)
    for i in range(m):
        for p in positions:
            arc(mach_node[i, p], sink, 1, 0 if weighted else p)

    logging.debug(f"flow network: {len(nodes)} nodes, {len(arcs)} arcs")
    return FlowNetwork(
        nodes=tuple(nodes),
        arcs=tuple(arcs),
        source=0,
        sink=sink,
        required_flow=n,
        weighted=weighted,
    )


def min_cost_flow(net: FlowNetwork) -> Flow:
    """Integral minimum-cost flow of value ``required_flow``.

    Successive shortest augmenting paths; Dijkstra on reduced costs with node
    potentials. Equal distances are settled lowest node index first.

    Raises:
        InfeasibleNetworkError: If the maximum flow is below ``required_flow``.
    """
    size = len(net.nodes)
    # residual edge 2a is arc a, 2a+1 its reverse
    head, cap, cost = [], [], []
    out: list[list[int]] = [[] for _ in range(size)]
    for a in net.arcs:
        out[a.tail].append(len(head))
        head.append(a.head)
        cap.append(a.capacity)
        cost.append(a.cost)
        out[a.head].append(len(head))
        head.append(a.tail)
        cap.append(0)
        cost.append(-a.cost)

    potential = [Fraction(0)] * size
    total_flow, total_cost = 0, Fraction(0)
    while total_flow < net.required_flow:
        dist: dict[int, Fraction] = {net.source: Fraction(0)}
        via: dict[int, int] = {}
        done: set[int] = set()
        heap = [(Fraction(0), net.source)]
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for e in out[u]:
                if cap[e] <= 0:
                    continue
                v = head[e]
                nd = d + cost[e] + potential[u] - potential[v]
                if v not in dist or nd < dist[v]:
                    dist[v] = nd
                    via[v] = e
                    heapq.heappush(heap, (nd, v))
        if net.sink not in done:
            raise InfeasibleNetworkError(
                f"infeasible network: maximum flow {total_flow} < required {net.required_flow}"
            )
        for v in done:
            potential[v] += dist[v]

        path, v = [], net.sink
        while v != net.source:
            e = via[v]
            path.append(e)
            v = head[e ^ 1]
        push = min(min(cap[e] for e in path), net.required_flow - total_flow)
        for e in path:
            cap[e] -= push
            cap[e ^ 1] += push
        total_flow += push
        total_cost += push * sum((cost[e] for e in path), Fraction(0))
        logging.debug(f"augmented {push} unit(s), flow {total_flow}, cost {fr(total_cost)}")

    values = tuple(a.capacity - cap[2 * k] for k, a in enumerate(net.arcs))
    return Flow(values=values, cost=total_cost)


def decode(net: FlowNetwork, flow: Flow) -> Schedule:
    """Read a schedule back from an integral flow.

    A job routed through resource position p completes at p and starts at p-1.
    Jobs sharing a resource position are matched to that position's machines
    in ascending job id order.

    Raises:
        FlowDecodeError: If the flow does not decompose into one path per job.
    """
    if len(flow.values) != len(net.arcs):
        raise FlowDecodeError("flow does not match the network")
    at_position: dict[int, list[int]] = {}
    machines_at: dict[int, list[int]] = {}
    duplicate_of: dict[int, int] = {}
    for a, value in zip(net.arcs, flow.values):
        if value < 0 or value > a.capacity:
            raise FlowDecodeError(f"flow {value} outside [0, {a.capacity}] on arc {a.tail}->{a.head}")
        tail, head = net.nodes[a.tail], net.nodes[a.head]
        if tail.kind == "res" and head.kind == "res_dup":
            duplicate_of[a.tail] = a.head
        if value == 0:
            continue
        if tail.kind == "job" and head.kind == "res":
            at_position.setdefault(a.head, []).append(tail.job)
        elif tail.kind == "res_dup" and head.kind == "machine":
            machines_at.setdefault(a.tail, []).extend([head.machine] * value)

    placements: dict[int, tuple[int, Fraction]] = {}
    for res, jobs in at_position.items():
        node = net.nodes[res]
        machines = sorted(machines_at.get(duplicate_of[res], []))
        if len(machines) != len(jobs):
            raise FlowDecodeError(f"{len(jobs)} jobs but {len(machines)} machines at {node.label}")
        for job, machine in zip(sorted(jobs), machines):
            if job in placements:
                raise FlowDecodeError(f"job {job} carries more than one unit of flow")
            placements[job] = (machine, Fraction(node.position - 1))

    missing = [n.job for n in net.nodes if n.kind == "job" and n.job not in placements]
    if missing:
        raise FlowDecodeError(f"jobs {missing} carry no flow")
    return Schedule.from_placements(placements)


def solve_unit(inst: Instance, weighted: bool = False, compact: bool = False) -> Schedule:
    """Optimal schedule of a unit-time instance (Σ w_j C_j when ``weighted``).

    With ``compact`` position gaps are removed by
    :func:`~partition_sched.core.normalize_tight`.
    """
    net = build_network(inst, weighted=weighted)
    result = min_cost_flow(net)
    logging.info(f"flow optimum {fr(result.cost)}")
    sched = decode(net, result)
    if compact:
        sched = normalize_tight(inst, sched)
    return sched


def dump_network(net: FlowNetwork) -> str:
    """Arc-list text: a ``nodes N arcs A required_flow n`` header, then one
    ``tail head capacity cost`` line per arc."""
    lines = [f"nodes {len(net.nodes)} arcs {len(net.arcs)} required_flow {net.required_flow}"]
    lines.extend(f"{a.tail} {a.head} {a.capacity} {fr(a.cost)}" for a in net.arcs)
    return "\n".join(lines) + "\n"
