"""Instance families and hardness gadgets, each bundled with its decision
threshold and the source object it was built from.

Ids are assigned in construction order, so equal inputs give equal instances.
"""

import itertools
import logging
import random
from fractions import Fraction
from typing import Optional, Sequence

import networkx as nx

from partition_sched.core import completion_times
from partition_sched.errors import GeneratorError
from partition_sched.models import (
    GadgetInstance,
    GadgetKind,
    Graph,
    Instance,
    Job,
    Schedule,
    ThreePartitionInput,
)
from partition_sched.tools.rational import format_rational as fr


def _positive_eps(eps) -> Fraction:
    eps = Fraction(eps)
    if eps <= 0:
        raise GeneratorError(f"eps must be positive, got {fr(eps)}")
    return eps


# --------------------------------------------------------------------------- #
# SPT-available lower-bound families
# --------------------------------------------------------------------------- #


def gen_example41(eps) -> GadgetInstance:
    """Two machines, four unit jobs on each of resources 0 and 1, four jobs of
    length 1+eps on resource 2. The threshold is the optimum 42 + 10·eps."""
    eps = _positive_eps(eps)
    jobs = [Job(id=k, p=1, resources=(k // 4,)) for k in range(8)]
    jobs += [Job(id=8 + k, p=1 + eps, resources=(2,)) for k in range(4)]
    return GadgetInstance(
        instance=Instance(machine_count=2, resource_count=3, jobs=tuple(jobs)),
        kind=GadgetKind.example41,
        threshold=42 + 10 * eps,
        provenance={"eps": fr(eps)},
    )


def lb_family_values(c: int, eps) -> tuple[Fraction, Fraction]:
    """``(spt_available objective, optimum)`` of :func:`gen_lb_family` in closed form."""
    eps = Fraction(eps)
    tail = Fraction(9 * c * c + 3 * c, 2) * eps
    return 9 * c * c + 3 * c + tail, Fraction(27 * c * c, 4) + 3 * c + tail


def gen_lb_family(c: int, eps) -> GadgetInstance:
    """Three machines, 3c unit jobs on private resources and 3c jobs of length
    1+eps sharing one resource. The threshold is the optimum."""
    if c <= 0 or c % 2:
        raise GeneratorError(f"c must be a positive even integer, got {c}")
    eps = _positive_eps(eps)
    jobs = [Job(id=k, p=1, resources=(k,)) for k in range(3 * c)]
    jobs += [Job(id=3 * c + k, p=1 + eps, resources=(3 * c,)) for k in range(3 * c)]
    return GadgetInstance(
        instance=Instance(machine_count=3, resource_count=3 * c + 1, jobs=tuple(jobs)),
        kind=GadgetKind.lb_family,
        threshold=lb_family_values(c, eps)[1],
        provenance={"c": c, "eps": fr(eps)},
    )


# --------------------------------------------------------------------------- #
# 3-PARTITION gadgets
# --------------------------------------------------------------------------- #


def validate_three_partition(tp: ThreePartitionInput) -> list[str]:
    """Problems with a 3-PARTITION input; empty when valid.

    Elements must lie in the closed interval [b/4, b/2].
    """
    problems = []
    if tp.m < 1:
        problems.append(f"m must be positive, got {tp.m}")
    if len(tp.elements) != 3 * tp.m:
        problems.append(f"expected {3 * tp.m} elements, got {len(tp.elements)}")
    if sum(tp.elements) != tp.m * tp.b:
        problems.append(f"elements sum to {sum(tp.elements)}, expected m*b = {tp.m * tp.b}")
    for a in tp.elements:
        if not (4 * a >= tp.b and 2 * a <= tp.b):
            problems.append(f"element {a} outside [b/4, b/2] for b={tp.b}")
    return problems


def _require_valid(tp: ThreePartitionInput):
    problems = validate_three_partition(tp)
    if problems:
        raise GeneratorError("invalid 3-PARTITION input: " + "; ".join(problems))


def all_three_partition_inputs(m: int, b: int) -> list[ThreePartitionInput]:
    """Every valid 3-PARTITION multiset for the given m and b, elements ascending."""
    lo, hi = -(-b // 4), b // 2
    return [
        ThreePartitionInput(m=m, b=b, elements=combo)
        for combo in itertools.combinations_with_replacement(range(lo, hi + 1), 3 * m)
        if sum(combo) == m * b
    ]


def mr_constants(m: int, b: int) -> dict[str, int]:
    """N_C, C and the D-job length of the machine-subset gadget."""
    n_c, big_c = 2 * m * b, 8 * m * b
    return {"N_C": n_c, "C": big_c, "D": n_c * n_c * big_c}


def mr_threshold(m: int, b: int) -> Fraction:
    k = mr_constants(m, b)
    n_c, big_c = k["N_C"], k["C"]
    return Fraction(
        m * b
        + m * (n_c * b + Fraction((big_c + n_c * big_c) * n_c, 2))
        + m * (b + n_c * n_c * big_c)
        + 2 * m * b
    )


def gen_mr_gadget(
    tp: ThreePartitionInput, certificate: Optional[Sequence[Sequence[int]]] = None
) -> GadgetInstance:
    """Machine-subset gadget on 2m machines.

    Resources 0..m-1 are shared between the release job r_i and the N_C
    C-jobs of group i and may run on machines i and m+i. Every element job a
    has a private resource restricted to machines 0..m-1, every D-job a private
    resource restricted to machine m+i. Job ids: element jobs first, then per
    group r_i, the C-jobs and D_i.

    With ``certificate`` (m triples of element values summing to b) the
    yes-instance layout is attached as the witness.
    """
    _require_valid(tp)
    m, b = tp.m, tp.b
    k = mr_constants(m, b)
    n_c, big_c, d_len = k["N_C"], k["C"], k["D"]

    jobs: list[Job] = []
    subsets: dict[int, tuple[int, ...]] = {}
    for idx, a in enumerate(tp.elements):
        r = m + idx
        jobs.append(Job(id=len(jobs), p=a, resources=(r,)))
        subsets[r] = tuple(range(m))
    groups = []
    for i in range(m):
        subsets[i] = (i, m + i)
        subsets[4 * m + i] = (m + i,)
        release = len(jobs)
        jobs.append(Job(id=release, p=b, resources=(i,)))
        c_jobs = list(range(len(jobs), len(jobs) + n_c))
        jobs.extend(Job(id=j, p=big_c, resources=(i,)) for j in c_jobs)
        d_job = len(jobs)
        jobs.append(Job(id=d_job, p=d_len, resources=(4 * m + i,)))
        groups.append({"release": release, "c_jobs": c_jobs, "d_job": d_job})

    inst = Instance(
        machine_count=2 * m,
        resource_count=5 * m,
        jobs=tuple(jobs),
        machine_subsets=subsets,
    )
    gadget = GadgetInstance(
        instance=inst,
        kind=GadgetKind.mr_3partition,
        threshold=mr_threshold(m, b),
        provenance={
            "m": m,
            "b": b,
            "A": list(tp.elements),
            "N_C": n_c,
            "C": big_c,
            "element_jobs": list(range(3 * m)),
            "groups": groups,
        },
    )
    logging.info(f"mr gadget: {len(jobs)} jobs on {2 * m} machines, Z+ = {fr(gadget.threshold)}")
    if certificate is not None:
        gadget = gadget.model_copy(
            update={
                "witness": mr_witness(gadget, certificate),
                "provenance": {**gadget.provenance, "certificate": [list(t) for t in certificate]},
            }
        )
    return gadget


def mr_witness(gadget: GadgetInstance, certificate: Sequence[Sequence[int]]) -> Schedule:
    """Yes-instance layout of the machine-subset gadget.

    Machine i runs triple i in SPT order from 0, then the C-jobs from b.
    Machine m+i runs r_i from 0, then D_i from b.
    """
    prov = gadget.provenance
    m, b, elements = prov["m"], prov["b"], prov["A"]
    triples = [sorted(t) for t in certificate]
    if len(triples) != m or any(len(t) != 3 or sum(t) != b for t in triples):
        raise GeneratorError(f"certificate must be {m} triples each summing to {b}")
    if sorted(v for t in triples for v in t) != sorted(elements):
        raise GeneratorError("certificate does not use the elements of A exactly once")

    unused: dict[int, list[int]] = {}
    for job_id in prov["element_jobs"]:
        unused.setdefault(elements[job_id], []).append(job_id)

    placements: dict[int, tuple[int, Fraction]] = {}
    for i, triple in enumerate(triples):
        t = Fraction(0)
        for a in triple:
            placements[unused[a].pop(0)] = (i, t)
            t += a
        group = prov["groups"][i]
        t = Fraction(b)
        for j in group["c_jobs"]:
            placements[j] = (i, t)
            t += prov["C"]
        placements[group["release"]] = (m + i, Fraction(0))
        placements[group["d_job"]] = (m + i, Fraction(b))
    return Schedule.from_placements(placements)


def z_a(gadget: GadgetInstance, witness: Schedule) -> Fraction:
    """Total completion time of the element jobs."""
    done = completion_times(gadget.instance, witness)
    return sum((done[j] for j in gadget.provenance["element_jobs"]), Fraction(0))


def z_feas(gadget: GadgetInstance, witness: Schedule) -> Fraction:
    """Objective of the yes-instance layout: the fixed part of Z+ plus Z_A."""
    prov = gadget.provenance
    m, b, n_c, big_c = prov["m"], prov["b"], prov["N_C"], prov["C"]
    return (
        m * b
        + m * (n_c * b + Fraction((big_c + n_c * big_c) * n_c, 2))
        + m * (b + n_c * n_c * big_c)
        + z_a(gadget, witness)
    )


def gen_unmovable_gadget(tp: ThreePartitionInput) -> GadgetInstance:
    """m machines; every element a becomes a unit jobs sharing a fresh resource,
    and resources may not be split across machines. Threshold m·b(b+1)/2."""
    _require_valid(tp)
    jobs: list[Job] = []
    for r, a in enumerate(tp.elements):
        jobs.extend(Job(id=len(jobs) + k, p=1, resources=(r,)) for k in range(a))
    return GadgetInstance(
        instance=Instance(
            machine_count=tp.m,
            resource_count=len(tp.elements),
            jobs=tuple(jobs),
            unmovable=True,
        ),
        kind=GadgetKind.unmovable_3partition,
        threshold=Fraction(tp.m * tp.b * (tp.b + 1), 2),
        provenance={"m": tp.m, "b": tp.b, "A": list(tp.elements)},
    )


# --------------------------------------------------------------------------- #
# Edge-colouring gadget
# --------------------------------------------------------------------------- #


def gen_partition2_gadget(g: Graph) -> GadgetInstance:
    """One resource per vertex, one unit job per edge holding both endpoint
    resources, and (Δ-1)·|E| resource-free unit dummies on |E| machines.
    Threshold Δ(Δ+1)·|E|/2."""
    if not g.edges:
        raise GeneratorError("the graph needs at least one edge")
    if any(u == v for u, v in g.edges) or len(set(g.edges)) != len(g.edges):
        raise GeneratorError("the graph must be simple")
    delta, m = g.max_degree, len(g.edges)
    jobs = [Job(id=k, p=1, resources=(u, v)) for k, (u, v) in enumerate(g.edges)]
    jobs += [Job(id=m + k, p=1, resources=()) for k in range((delta - 1) * m)]
    return GadgetInstance(
        instance=Instance(
            machine_count=m,
            resource_count=g.vertex_count,
            jobs=tuple(jobs),
            max_resources_per_job=2,
            allow_dummy_jobs=True,
        ),
        kind=GadgetKind.partition2_edgecoloring,
        threshold=Fraction(delta * (delta + 1) * m, 2),
        provenance={"vertices": g.vertex_count, "edges": [list(e) for e in g.edges], "max_degree": delta},
    )


def small_graphs(max_vertices: int = 4) -> list[Graph]:
    """Every simple graph up to isomorphism with at least one edge, no isolated
    vertex and at most ``max_vertices`` vertices, from the networkx atlas."""
    if max_vertices > 7:
        raise GeneratorError("the graph atlas only covers graphs with up to 7 vertices")
    out = []
    for h in nx.graph_atlas_g():
        if h.number_of_nodes() > max_vertices or h.number_of_edges() == 0:
            continue
        if any(d == 0 for _, d in h.degree()):
            continue
        out.append(Graph(vertex_count=h.number_of_nodes(), edges=tuple(sorted(h.edges()))))
    return out


# --------------------------------------------------------------------------- #
# Unrelated-machine mapping and random instances
# --------------------------------------------------------------------------- #


def map_to_unrelated(gadget: GadgetInstance, T) -> GadgetInstance:
    """Replace machine subsets by unrelated times: p on allowed machines, T elsewhere."""
    inst = gadget.instance
    if not inst.machine_subsets:
        raise GeneratorError("map_to_unrelated needs an instance with machine subsets")
    T = Fraction(T)
    if gadget.threshold is not None and T < gadget.threshold:
        raise GeneratorError(f"T={fr(T)} is below the threshold {fr(gadget.threshold)}")
    times = tuple(
        tuple(job.p if i in inst.allowed_machines(job) else T for job in inst.jobs)
        for i in range(inst.machine_count)
    )
    mapped = inst.model_copy(update={"machine_subsets": None, "unrelated_times": times})
    return GadgetInstance(
        instance=mapped,
        kind=GadgetKind.unrelated_mapped,
        threshold=gadget.threshold,
        provenance={**gadget.provenance, "source_kind": gadget.kind.value, "T": fr(T)},
        witness=gadget.witness,
    )


def gen_random(
    m: int,
    n: int,
    num_resources: int,
    p_max: int,
    q: int = 1,
    seed: int = 0,
    capacity: int = 1,
    restrict_machines: bool = False,
) -> GadgetInstance:
    """Seeded random instance: p uniform in [1, p_max], q distinct resources per job.

    With ``capacity`` > 1 every resource gets that many units; with
    ``restrict_machines`` every resource draws a non-empty machine subset.
    """
    if min(m, n, num_resources, p_max, capacity) < 1:
        raise GeneratorError("m, n, resources, p_max and capacity must be positive")
    if q not in (1, 2):
        raise GeneratorError(f"q must be 1 or 2, got {q}")
    if q > num_resources:
        raise GeneratorError(f"q={q} requires at least {q} resources")
    if restrict_machines and q > 1:
        raise GeneratorError("machine subsets are only drawn for one resource per job")
    rng = random.Random(seed)
    jobs = tuple(
        Job(id=k, p=rng.randint(1, p_max), resources=tuple(sorted(rng.sample(range(num_resources), q))))
        for k in range(n)
    )
    subsets = None
    if restrict_machines:
        subsets = {r: tuple(sorted(rng.sample(range(m), rng.randint(1, m)))) for r in range(num_resources)}
    inst = Instance(
        machine_count=m,
        resource_count=num_resources,
        jobs=jobs,
        machine_subsets=subsets,
        capacities=(capacity,) * num_resources if capacity > 1 else None,
        max_resources_per_job=q,
    )
    return GadgetInstance(
        instance=inst,
        kind=GadgetKind.random,
        provenance={
            "seed": seed,
            "m": m,
            "n": n,
            "resources": num_resources,
            "p_max": p_max,
            "q": q,
            "capacity": capacity,
            "restrict_machines": restrict_machines,
        },
    )
