"""List-scheduling heuristics and the lower bounds they are measured against."""

import logging
from fractions import Fraction

from partition_sched import flow
from partition_sched.core import normalize_tight
from partition_sched.errors import UnsupportedInstanceError
from partition_sched.models import BoundReport, Instance, Job, Schedule
from partition_sched.tools.rational import format_rational as fr


def _spt_order(inst: Instance) -> list[Job]:
    return sorted(inst.jobs, key=lambda job: (job.p, job.id))


def spt_available(inst: Instance) -> Schedule:
    """SPT-available list schedule.

    Jobs are listed by ``(p, id)``. At every event time the free machines take
    the first listed jobs whose resource is not in use. A job whose resource was
    released at that very instant goes to the machine that released it; the
    remaining jobs go to the free machines in ascending index order. Idle
    machines rescan at every release event.

    Raises:
        UnsupportedInstanceError: For anything but plain partition instances.
    """
    if not inst.is_plain():
        raise UnsupportedInstanceError("spt-available requires plain partition instances")

    m = inst.machine_count
    remaining = _spt_order(inst)
    free_at = [Fraction(0)] * m
    last_on: list[tuple[Job, Fraction] | None] = [None] * m
    running: list[tuple[int, Fraction, Fraction]] = []  # (resource, start, end)
    placements: dict[int, tuple[int, Fraction]] = {}
    t = Fraction(0)

    while remaining:
        free = [i for i in range(m) if free_at[i] <= t]
        in_use: dict[int, int] = {}
        for r, s, c in running:
            if s <= t < c:
                in_use[r] = in_use.get(r, 0) + 1

        picked: list[Job] = []
        for job in remaining:
            if len(picked) == len(free):
                break
            r = job.resources[0]
            if in_use.get(r, 0) < inst.capacity(r):
                picked.append(job)
                in_use[r] = in_use.get(r, 0) + 1

        assignment: dict[int, int] = {}
        open_machines = list(free)
        for job in picked:
            r = job.resources[0]
            releasing = [
                i
                for i in open_machines
                if last_on[i] is not None and last_on[i][1] == t and r in last_on[i][0].resources
            ]
            if releasing:
                assignment[job.id] = releasing[0]
                open_machines.remove(releasing[0])
        for job in picked:
            if job.id not in assignment:
                assignment[job.id] = open_machines.pop(0)

        for job in picked:
            i = assignment[job.id]
            end = t + job.p
            placements[job.id] = (i, t)
            running.append((job.resources[0], t, end))
            free_at[i] = end
            last_on[i] = (job, end)
            remaining.remove(job)
            logging.debug(f"spt-available: job {job.id} on machine {i} at {fr(t)}")

        later = [x for x in free_at if x > t] + [c for _, _, c in running if c > t]
        if remaining and not later:
            raise RuntimeError("spt-available stalled with jobs left")
        if later:
            t = min(later)

    return Schedule.from_placements(placements)


def spt_parallel(inst: Instance) -> Schedule:
    """SPT on the earliest-free machine, ignoring resources entirely.

    The result is generally not resource-feasible; its total completion time is
    the parallel-machine optimum without resource constraints.
    """
    if inst.unrelated_times is not None:
        raise UnsupportedInstanceError("spt-parallel requires machine-independent processing times")
    free_at = [Fraction(0)] * inst.machine_count
    placements = {}
    for job in _spt_order(inst):
        i = min(range(inst.machine_count), key=lambda k: (free_at[k], k))
        placements[job.id] = (i, free_at[i])
        free_at[i] += job.p
    return Schedule.from_placements(placements)


def bounds(inst: Instance) -> BoundReport:
    """Per-job minimum completion times k_j, the single-machine optimum and its
    parallel counterparts.

    k_j is p_j plus the processing times of the same-resource jobs listed
    before j in ``(p, id)`` order.
    """
    if inst.unrelated_times is not None or any(len(job.resources) > 1 for job in inst.jobs):
        raise UnsupportedInstanceError("bounds require one resource per job")

    order = _spt_order(inst)
    per_job_k: dict[int, Fraction] = {}
    per_job_c1: dict[int, Fraction] = {}
    load: dict[int, Fraction] = {}
    elapsed = Fraction(0)
    for job in order:
        elapsed += job.p
        per_job_c1[job.id] = elapsed
        if job.resources:
            r = job.resources[0]
            load[r] = load.get(r, Fraction(0)) + job.p
            per_job_k[job.id] = load[r]
        else:
            per_job_k[job.id] = job.p

    opt1 = sum(per_job_c1.values(), Fraction(0))
    jobs = inst.job_map()
    opt_m = sum((e.start + jobs[e.job].p for e in spt_parallel(inst).entries), Fraction(0))
    return BoundReport(
        per_job_k=dict(sorted(per_job_k.items())),
        sum_k=sum(per_job_k.values(), Fraction(0)),
        per_job_c1=dict(sorted(per_job_c1.items())),
        opt1=opt1,
        opt1_over_m=opt1 / inst.machine_count,
        opt_m=opt_m,
    )


def shrink_solve(inst: Instance, c: int, compact: bool = False) -> Schedule:
    """Shrinking algorithm: solve the unit-time shadow exactly, then stretch.

    Every job is given p = 1, the shadow is solved with the flow solver, and
    each start s becomes c·s. The result costs at most c times the optimum.
    With ``compact`` the stretched schedule is passed through
    :func:`~partition_sched.core.normalize_tight`.

    Raises:
        UnsupportedInstanceError: If some p_j lies outside [1, c] or the
            instance is not a unit-capacity one-resource-per-job instance.
    """
    if c < 1:
        raise UnsupportedInstanceError(f"shrink requires c >= 1, got {c}")
    if (
        inst.unrelated_times is not None
        or inst.unmovable
        or any(len(job.resources) != 1 for job in inst.jobs)
        or any(cap != 1 for cap in inst.capacities or ())
    ):
        raise UnsupportedInstanceError("shrink requires unit-capacity instances with one resource per job")
    bad = [job.id for job in inst.jobs if not 1 <= job.p <= c]
    if bad:
        raise UnsupportedInstanceError(f"shrink requires 1 <= p_j <= c={c}; violated by jobs {bad}")

    shadow = inst.model_copy(
        update={"jobs": tuple(job.model_copy(update={"p": Fraction(1)}) for job in inst.jobs)}
    )
    unit = flow.solve_unit(shadow)
    stretched = Schedule.from_placements({e.job: (e.machine, c * e.start) for e in unit.entries})
    logging.debug(f"shrink: stretched the unit schedule by {c}")
    if compact:
        return normalize_tight(inst, stretched)
    return stretched
