"""Instance and schedule primitives: feasibility, objective and the structural
tools (slack, blocking pairs, suffixes, trains, untangling, tight normalisation).

All functions are pure: they take frozen :class:`~partition_sched.models.Instance`
and :class:`~partition_sched.models.Schedule` values and return new values.
"""

import logging
from collections import defaultdict
from fractions import Fraction

from partition_sched.errors import (
    InfeasibleScheduleError,
    NormalizationError,
    NotUntangleableError,
    SchedulingError,
    UnsupportedInstanceError,
)
from partition_sched.models import (
    INFINITY,
    BlockingPair,
    Instance,
    Schedule,
    ScheduleEntry,
    SlackReport,
    TrainSequence,
    ValidationReport,
    Violation,
)
from partition_sched.tools.rational import format_rational as fr

OVERLAP_KINDS = frozenset({"machine_overlap", "resource_overlap"})


# --------------------------------------------------------------------------- #
# Instance checks
# --------------------------------------------------------------------------- #


def validate_instance(inst: Instance) -> ValidationReport:
    """List every violated instance invariant. An empty report means well-formed."""
    out: list[Violation] = []

    def add(kind: str, message: str):
        out.append(Violation(kind=kind, message=message))

    m, num_r = inst.machine_count, inst.resource_count
    if m < 1:
        add("machines", f"machine count must be positive, got {m}")
    if num_r < 1:
        add("resources", f"resource count must be positive, got {num_r}")
    if inst.max_resources_per_job < 1:
        add("resources", "max_resources must be at least 1")

    seen: set[int] = set()
    for job in inst.jobs:
        if job.id in seen:
            add("job_id", f"duplicate job id {job.id}")
        seen.add(job.id)
        if job.p <= 0:
            add("processing_time", f"job {job.id} has non-positive processing time {fr(job.p)}")
        if job.weight <= 0:
            add("weight", f"job {job.id} has non-positive weight {fr(job.weight)}")
        if not job.resources and not inst.allow_dummy_jobs:
            add("resource_count", f"job {job.id} holds no resource")
        if len(job.resources) > inst.max_resources_per_job:
            add(
                "resource_count",
                f"job {job.id} holds {len(job.resources)} resources,"
                f" more than q={inst.max_resources_per_job}",
            )
        if len(set(job.resources)) != len(job.resources):
            add("resource_count", f"job {job.id} lists a resource twice")
        for r in job.resources:
            if not 0 <= r < num_r:
                add(
                    "resource_range",
                    f"resource id out of range: job {job.id} references {r} but |R|={num_r}",
                )

    for r, machines in (inst.machine_subsets or {}).items():
        if not 0 <= r < num_r:
            add("machine_subset", f"machine subset key {r} is not a resource id")
        if not machines:
            add("machine_subset", f"empty machine subset for resource {r}")
        for i in machines:
            if not 0 <= i < m:
                add("machine_subset", f"machine id out of range in subset of resource {r}: {i}")

    if inst.capacities is not None:
        if len(inst.capacities) != num_r:
            add("capacity", f"{len(inst.capacities)} capacities given for {num_r} resources")
        for r, cap in enumerate(inst.capacities):
            if cap < 1:
                add("capacity", f"resource {r} has capacity {cap} < 1")

    if inst.unrelated_times is not None:
        rows = inst.unrelated_times
        if len(rows) != m or any(len(row) != inst.n for row in rows):
            add("unrelated_times", f"unrelated_times must be a {m} x {inst.n} matrix")
        elif any(p <= 0 for row in rows for p in row):
            add("unrelated_times", "unrelated_times entries must be positive")

    return ValidationReport(violations=tuple(out))


# --------------------------------------------------------------------------- #
# Schedule checks
# --------------------------------------------------------------------------- #


def _placements(inst: Instance, sched: Schedule) -> dict[int, tuple[int, Fraction, Fraction]]:
    """job -> (machine, start, end) for the first well-formed entry of every known job."""
    jobs = inst.job_map()
    index = inst.job_index()
    out: dict[int, tuple[int, Fraction, Fraction]] = {}
    for e in sched.entries:
        if e.job in out or e.job not in jobs or not 0 <= e.machine < inst.machine_count:
            continue
        p = inst.duration(jobs[e.job], e.machine, index)
        out[e.job] = (e.machine, e.start, e.start + p)
    return out


def completion_times(inst: Instance, sched: Schedule) -> dict[int, Fraction]:
    """C_j of every placed job."""
    return {j: end for j, (_, _, end) in _placements(inst, sched).items()}


def _capacity(inst: Instance, r: int) -> int:
    """Capacity of r, tolerating a malformed capacities list."""
    if inst.capacities is None or not 0 <= r < len(inst.capacities):
        return 1
    return inst.capacities[r]


def _shares(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    return not set(a).isdisjoint(b)


def validate_schedule(inst: Instance, sched: Schedule) -> ValidationReport:
    """Report machine overlaps, resource over-use, machine-subset and unmovable
    violations, and unknown, duplicate or missing jobs."""
    out: list[Violation] = []

    def add(kind: str, message: str):
        out.append(Violation(kind=kind, message=message))

    jobs = inst.job_map()
    seen: set[int] = set()
    for e in sched.entries:
        if e.job not in jobs:
            add("unknown_job", f"schedule places unknown job {e.job}")
            continue
        if e.job in seen:
            add("duplicate_job", f"job {e.job} is scheduled more than once")
        seen.add(e.job)
        if not 0 <= e.machine < inst.machine_count:
            add("machine_range", f"machine id out of range for job {e.job}: {e.machine}")
        if e.start < 0:
            add("negative_start", f"job {e.job} starts at negative time {fr(e.start)}")
    for j in sorted(set(jobs) - seen):
        add("missing_job", f"job {j} is not scheduled")

    placed = _placements(inst, sched)

    by_machine: dict[int, list[tuple[Fraction, Fraction, int]]] = defaultdict(list)
    for j, (i, s, c) in placed.items():
        by_machine[i].append((s, c, j))
    for i in sorted(by_machine):
        latest_end = None
        for s, c, j in sorted(by_machine[i]):
            if latest_end is not None and s < latest_end:
                add("machine_overlap", f"machine {i} double-booked at t∈[{fr(s)},{fr(min(latest_end, c))})")
            latest_end = c if latest_end is None else max(latest_end, c)

    users: dict[int, list[int]] = defaultdict(list)
    for j in placed:
        for r in jobs[j].resources:
            users[r].append(j)
    for r in sorted(users):
        cap = _capacity(inst, r)
        intervals = [(placed[j][1], placed[j][2]) for j in users[r]]
        for t in sorted({s for s, _ in intervals}):
            active = [c for s, c in intervals if s <= t < c]
            if len(active) > cap:
                add("resource_overlap", f"resource {r} overlap at t∈[{fr(t)},{fr(min(active))})")

    if inst.machine_subsets:
        for j, (i, _, _) in sorted(placed.items()):
            if i not in inst.allowed_machines(jobs[j]):
                add(
                    "machine_subset",
                    f"job {j} runs on machine {i}, outside the machine subset of its resources",
                )

    if inst.unmovable:
        for r in sorted(users):
            machines = sorted({placed[j][0] for j in users[r]})
            if len(machines) > 1:
                add("unmovable", f"resource {r} is split across machines {machines}")

    return ValidationReport(violations=tuple(out))


def sweep_violations(inst: Instance, sched: Schedule) -> ValidationReport:
    """Independent event sweep over start and end points.

    Ends are processed before starts at equal times. Only the overlap kinds of
    :func:`validate_schedule` are reported, so the two checks can be compared.
    """
    jobs = inst.job_map()
    placed = _placements(inst, sched)
    events = []
    for j, (i, s, c) in placed.items():
        events.append((c, 0, j, i))
        events.append((s, 1, j, i))
    events.sort()

    busy_machine: dict[int, int] = defaultdict(int)
    in_use: dict[int, int] = defaultdict(int)
    out: list[Violation] = []
    for t, kind, j, i in events:
        if kind == 0:
            busy_machine[i] -= 1
            for r in jobs[j].resources:
                in_use[r] -= 1
            continue
        busy_machine[i] += 1
        if busy_machine[i] > 1:
            out.append(Violation(kind="machine_overlap", message=f"machine {i} busy twice at {fr(t)}"))
        for r in jobs[j].resources:
            in_use[r] += 1
            if in_use[r] > _capacity(inst, r):
                out.append(
                    Violation(kind="resource_overlap", message=f"resource {r} above capacity at {fr(t)}")
                )
    return ValidationReport(violations=tuple(out))


def objective(inst: Instance, sched: Schedule) -> Fraction:
    """Σ w_j C_j of a feasible schedule.

    Raises:
        InfeasibleScheduleError: If :func:`validate_schedule` reports anything.
    """
    report = validate_schedule(inst, sched)
    if not report.ok:
        raise InfeasibleScheduleError("infeasible schedule: " + "; ".join(report.messages()))
    jobs = inst.job_map()
    return sum(
        (jobs[j].weight * c for j, c in completion_times(inst, sched).items()),
        Fraction(0),
    )


# --------------------------------------------------------------------------- #
# Structure
# --------------------------------------------------------------------------- #


def _require_placed(placed: dict, job: int):
    if job not in placed:
        raise SchedulingError(f"job {job} is not scheduled")


def slack(inst: Instance, sched: Schedule, job: int) -> SlackReport:
    """Positive and negative slack of ``job``.

    d⁺ is the gap to the earliest same-resource job starting at or after C_j,
    d⁻ the gap since the latest same-resource job completing at or before the
    job's start. Both are ``"+inf"`` when no such job exists.
    """
    jobs = inst.job_map()
    placed = _placements(inst, sched)
    _require_placed(placed, job)
    _, s, c = placed[job]
    res = jobs[job].resources
    d_plus = d_minus = INFINITY
    for other, (_, s2, c2) in placed.items():
        if other == job or not _shares(res, jobs[other].resources):
            continue
        if s2 >= c:
            gap = s2 - c
            d_plus = gap if d_plus == INFINITY else min(d_plus, gap)
        if c2 <= s:
            gap = s - c2
            d_minus = gap if d_minus == INFINITY else min(d_minus, gap)
    return SlackReport(job=job, d_plus=d_plus, d_minus=d_minus)


def blocking_pairs(inst: Instance, sched: Schedule) -> list[BlockingPair]:
    """One pair per job that has a later same-resource job.

    The partner is the earliest-starting such job; ties go to the smallest id.
    """
    jobs = inst.job_map()
    placed = _placements(inst, sched)
    pairs = []
    for j in sorted(placed):
        c = placed[j][2]
        later = [
            (placed[k][1], k)
            for k in placed
            if k != j and placed[k][1] >= c and _shares(jobs[j].resources, jobs[k].resources)
        ]
        if later:
            start, k = min(later)
            pairs.append(BlockingPair(first=j, second=k, tight=start == c))
    return pairs


def suffix(inst: Instance, sched: Schedule, job: int) -> frozenset[int]:
    """Jobs on the machine of ``job`` completing at or after it, ``job`` excluded."""
    placed = _placements(inst, sched)
    _require_placed(placed, job)
    machine, _, c = placed[job]
    return frozenset(k for k, (i, _, c2) in placed.items() if i == machine and c2 >= c and k != job)


def untangle(inst: Instance, sched: Schedule, pair: BlockingPair) -> Schedule:
    """Swap machine suffixes at a tight pair.

    The second job and its suffix move to the machine of the first job; the
    suffix of the first job moves to the other machine. No time changes.

    Raises:
        NotUntangleableError: If the pair is not tight or already shares a machine.
    """
    if inst.unrelated_times is not None:
        raise UnsupportedInstanceError("untangling requires machine-independent processing times")
    placed = _placements(inst, sched)
    _require_placed(placed, pair.first)
    _require_placed(placed, pair.second)
    i, _, c_first = placed[pair.first]
    i2, s_second, _ = placed[pair.second]
    if s_second != c_first:
        raise NotUntangleableError(f"not untangleable: pair ({pair.first}, {pair.second}) is not tight")
    if i == i2:
        raise NotUntangleableError(
            f"not untangleable: jobs {pair.first} and {pair.second} already share machine {i}"
        )
    to_first = suffix(inst, sched, pair.second) | {pair.second}
    to_second = suffix(inst, sched, pair.first)
    logging.debug(f"untangle ({pair.first}, {pair.second}): {sorted(to_first)} <-> {sorted(to_second)}")
    entries = []
    for e in sched.entries:
        if e.job in to_first:
            e = ScheduleEntry(job=e.job, machine=i, start=e.start)
        elif e.job in to_second:
            e = ScheduleEntry(job=e.job, machine=i2, start=e.start)
        entries.append(e)
    return Schedule(entries=tuple(entries))


def _untangle_all(inst: Instance, sched: Schedule) -> tuple[Schedule, bool]:
    """Untangle cross-machine tight pairs until none is left that can be
    untangled without breaking machine-subset or unmovable constraints."""
    changed = False
    skipped: set[tuple[int, int]] = set()
    for _ in range(inst.n * inst.n + 1):
        placed = _placements(inst, sched)
        candidate = next(
            (
                bp
                for bp in blocking_pairs(inst, sched)
                if bp.tight
                and placed[bp.first][0] != placed[bp.second][0]
                and (bp.first, bp.second) not in skipped
            ),
            None,
        )
        if candidate is None:
            return sched, changed
        result = untangle(inst, sched, candidate)
        if validate_schedule(inst, result).ok:
            sched, changed = result, True
        else:
            skipped.add((candidate.first, candidate.second))
    raise NormalizationError("untangling did not settle")


def _fits(inst, jobs, placed, job: int, t: Fraction, p: Fraction) -> bool:
    """True if ``job`` can hold its resources on [t, t+p) given the other placements."""
    end = t + p
    for r in jobs[job].resources:
        others = [
            (s, c)
            for k, (_, s, c) in placed.items()
            if k != job and r in jobs[k].resources and s < end and c > t
        ]
        checkpoints = {t} | {s for s, _ in others if s > t}
        for x in checkpoints:
            if sum(1 for s, c in others if s <= x < c) + 1 > _capacity(inst, r):
                return False
    return True


def _shift_all(inst: Instance, sched: Schedule) -> tuple[Schedule, bool]:
    """Move every job left to the earliest time its machine and resources allow."""
    jobs = inst.job_map()
    placed = dict(_placements(inst, sched))
    changed = False
    for i in range(inst.machine_count):
        prev_end = Fraction(0)
        for j in sorted((k for k in placed if placed[k][0] == i), key=lambda k: placed[k][1]):
            _, s, c = placed[j]
            p = c - s
            if s > prev_end:
                ends = {
                    c2
                    for k, (_, _, c2) in placed.items()
                    if k != j and prev_end < c2 < s and _shares(jobs[j].resources, jobs[k].resources)
                }
                for t in sorted({prev_end} | ends):
                    if _fits(inst, jobs, placed, j, t, p):
                        logging.debug(f"shift job {j} on machine {i}: {fr(s)} -> {fr(t)}")
                        placed[j] = (i, t, t + p)
                        changed = True
                        break
            prev_end = placed[j][2]
    if not changed:
        return sched, False
    return Schedule.from_placements({j: (i, s) for j, (i, s, _) in placed.items()}), True


def normalize_tight(inst: Instance, sched: Schedule) -> Schedule:
    """Turn a feasible schedule into a tight one without increasing the objective.

    Rounds of "untangle every cross-machine tight pair, then left-shift every
    job" run until nothing changes. At most n² rounds are allowed.

    Raises:
        InfeasibleScheduleError: If the input schedule is infeasible.
        NormalizationError: If the round cap is reached.
    """
    if inst.unrelated_times is not None:
        raise UnsupportedInstanceError("normalize_tight requires machine-independent processing times")
    start_value = objective(inst, sched)
    rounds = max(1, inst.n * inst.n)
    for round_no in range(rounds + 1):
        sched, untangled = _untangle_all(inst, sched)
        sched, shifted = _shift_all(inst, sched)
        if not (untangled or shifted):
            logging.debug(f"normalize_tight settled after {round_no} rounds")
            end_value = objective(inst, sched)
            if end_value < start_value:
                logging.info(f"normalize_tight: objective {fr(start_value)} -> {fr(end_value)}")
            return sched
    raise NormalizationError(f"normalize_tight did not settle within {rounds} rounds")


def train_sequences(inst: Instance, sched: Schedule) -> list[TrainSequence]:
    """Maximal back-to-back runs of jobs with identical resources, per machine."""
    jobs = inst.job_map()
    placed = _placements(inst, sched)
    trains = []
    for i in range(inst.machine_count):
        run: list[int] = []
        for j in sorted((k for k in placed if placed[k][0] == i), key=lambda k: (placed[k][1], k)):
            if run:
                last = run[-1]
                if placed[j][1] == placed[last][2] and set(jobs[j].resources) == set(jobs[last].resources):
                    run.append(j)
                    continue
                trains.append(_train(i, run, jobs, placed))
            run = [j]
        if run:
            trains.append(_train(i, run, jobs, placed))
    return trains


def _train(machine, run, jobs, placed) -> TrainSequence:
    return TrainSequence(
        machine=machine,
        resources=tuple(sorted(jobs[run[0]].resources)),
        jobs=tuple(run),
        start=placed[run[0]][1],
        end=placed[run[-1]][2],
    )


def _spt_pairs_ok(jobs, placed, same_group) -> bool:
    items = list(placed.items())
    for a, (i, s, c) in items:
        for b, (i2, s2, c2) in items:
            if a == b or not same_group(a, i, b, i2):
                continue
            if (c - s) < (c2 - s2) and not c < c2:
                return False
    return True


def check_spt_order(inst: Instance, sched: Schedule) -> bool:
    """True iff every strictly shorter job completes before a longer job of the same resource."""
    jobs = inst.job_map()
    return _spt_pairs_ok(
        jobs,
        _placements(inst, sched),
        lambda a, _i, b, _i2: _shares(jobs[a].resources, jobs[b].resources),
    )


def check_machine_spt_order(inst: Instance, sched: Schedule) -> bool:
    """True iff on every machine strictly shorter jobs complete earlier."""
    jobs = inst.job_map()
    return _spt_pairs_ok(jobs, _placements(inst, sched), lambda _a, i, _b, i2: i == i2)


def idle_time(inst: Instance, sched: Schedule) -> Fraction:
    """Total idle time on all machines before each machine's last completion."""
    total = Fraction(0)
    per_machine: dict[int, list[tuple[Fraction, Fraction]]] = defaultdict(list)
    for i, s, c in _placements(inst, sched).values():
        per_machine[i].append((s, c))
    for intervals in per_machine.values():
        total += max(c for _, c in intervals) - sum(c - s for s, c in intervals)
    return total


def is_tight(inst: Instance, sched: Schedule) -> bool:
    """Idle-free and every tight blocking pair on one machine."""
    if idle_time(inst, sched) != 0:
        return False
    placed = _placements(inst, sched)
    return all(
        placed[bp.first][0] == placed[bp.second][0] for bp in blocking_pairs(inst, sched) if bp.tight
    )
