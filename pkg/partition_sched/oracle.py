"""Exhaustive reference solvers for small instances of every variant, plus the
exhaustive deciders for the combinatorial source problems (edge colouring,
3-PARTITION).

Two strategies are available:

``sequence``
    Depth-first construction of every no-idle schedule. The open machine with
    the earliest end (lowest index on ties) is always extended, either by one
    more job or by being closed, so every no-idle schedule is reached by
    exactly one path. Interchangeable jobs are grouped into job types.

``slots``
    Exact dynamic program over integer time slots for unit-time instances.
    Σ w_j C_j is charged slot by slot: every unfinished job pays its weight
    once per slot.
"""

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Literal, Optional

import networkx as nx

from partition_sched.errors import (
    BudgetExceededError,
    OracleExhaustedError,
    UnsupportedInstanceError,
)
from partition_sched.models import Graph, Instance, OracleResult, Schedule, ThreePartitionInput
from partition_sched.tools.rational import format_rational as fr

DEFAULT_BUDGET = 10**7

Strategy = Literal["auto", "sequence", "slots"]


class _JobType:
    """Jobs that can be swapped without changing any schedule property."""

    def __init__(self, ids, resources, weight, durations, allowed):
        self.ids = ids
        self.resources = resources
        self.weight = weight
        self.durations = durations
        self.allowed = allowed


def _exclusive(inst: Instance, job, users) -> bool:
    """A job whose resources are used by nobody else and restrict no machine."""
    subsets = inst.machine_subsets or {}
    return all(len(users[r]) == 1 and r not in subsets for r in job.resources)


def _job_types(inst: Instance, merge: bool) -> list[_JobType]:
    users = inst.resource_users()
    index = inst.job_index()
    groups: dict[tuple, list] = {}
    for job in sorted(inst.jobs, key=lambda j: j.id):
        durations = tuple(inst.duration(job, i, index) for i in range(inst.machine_count))
        if not merge:
            key = ("job", job.id)
        elif _exclusive(inst, job, users):
            key = ("free", durations, job.weight)
        else:
            key = ("bound", durations, job.weight, tuple(sorted(job.resources)))
        groups.setdefault(key, []).append(job)

    types = []
    for members in groups.values():
        head = members[0]
        types.append(
            _JobType(
                ids=[j.id for j in members],
                resources=() if _exclusive(inst, head, users) else tuple(head.resources),
                weight=head.weight,
                durations=tuple(inst.duration(head, i, index) for i in range(inst.machine_count)),
                allowed=frozenset(inst.allowed_machines(head)),
            )
        )
    # shortest types first so good incumbents turn up early
    types.sort(key=lambda t: (min(t.durations), t.ids[0]))
    return types


def sequence_search_space(inst: Instance, symmetry: bool = True) -> int:
    """Multinomial over job types times the ways to split a sequence over m machines."""
    counts = [len(t.ids) for t in _job_types(inst, merge=symmetry)]
    n, m = inst.n, inst.machine_count
    arrangements = math.factorial(n)
    for c in counts:
        arrangements //= math.factorial(c)
    return arrangements * math.comb(n + m - 1, m - 1)


class _SequenceSearch:
    """Depth-first enumeration of no-idle schedules with a partial-cost cut-off."""

    def __init__(self, inst: Instance, symmetry: bool, collect: bool):
        self.inst = inst
        self.m = inst.machine_count
        self.types = _job_types(inst, merge=symmetry)
        self.identical = symmetry and inst.unrelated_times is None and not inst.machine_subsets
        self.collect = collect

        self.end = [Fraction(0)] * self.m
        self.open = [True] * self.m
        self.first_type: list[Optional[int]] = [None] * self.m
        self.empty_closed = [False] * self.m
        self.used = [0] * len(self.types)
        self.res_ends: dict[int, list[Fraction]] = {}
        self.binding: dict[int, int] = {}
        self.path: list[tuple[int, int, int, Fraction]] = []  # (job, type, machine, start)

        self.best: Optional[Fraction] = None
        self.witness: Optional[dict] = None
        self.optima: list[dict] = []
        self.leaves = 0

    def _current_machine(self) -> int:
        return min((i for i in range(self.m) if self.open[i]), key=lambda i: (self.end[i], i))

    def _fits(self, k: int, i: int) -> bool:
        typ = self.types[k]
        if i not in typ.allowed:
            return False
        if self.identical and self.first_type[i] is None and i > 0:
            if self.empty_closed[i - 1] or self.first_type[i - 1] is None:
                return False
            if k < self.first_type[i - 1]:
                return False
        t = self.end[i]
        for r in typ.resources:
            if self.inst.unmovable and self.binding.get(r, i) != i:
                return False
            active = sum(1 for e in self.res_ends.get(r, ()) if e > t)
            if active >= self.inst.capacity(r):
                return False
        return True

    def options(self, remaining: int) -> list[tuple[str, int]]:
        i = self._current_machine()
        out = [("place", k) for k in range(len(self.types)) if self.used[k] < len(self.types[k].ids) and self._fits(k, i)]
        if remaining > 0 and sum(self.open) > 1:
            out.append(("close", -1))
        return out

    def run(self, branch: Optional[int] = None):
        self._dfs(self.inst.n, Fraction(0), branch)

    def _dfs(self, remaining: int, cost: Fraction, branch: Optional[int] = None):
        if remaining == 0:
            self._leaf(cost)
            return
        if self.best is not None and cost >= self.best:
            return
        options = self.options(remaining)
        if branch is not None:
            options = options[branch : branch + 1]
        i = self._current_machine()
        for kind, k in options:
            if kind == "close":
                self.open[i] = False
                empty = self.first_type[i] is None
                self.empty_closed[i] = empty
                self._dfs(remaining, cost)
                self.open[i] = True
                self.empty_closed[i] = False
                continue
            self._place(k, i, remaining, cost)

    def _place(self, k: int, i: int, remaining: int, cost: Fraction):
        typ = self.types[k]
        job = typ.ids[self.used[k]]
        start = self.end[i]
        finish = start + typ.durations[i]
        previous_first = self.first_type[i]
        bound_here = []

        self.used[k] += 1
        self.end[i] = finish
        if previous_first is None:
            self.first_type[i] = k
        for r in typ.resources:
            self.res_ends.setdefault(r, []).append(finish)
            if self.inst.unmovable and r not in self.binding:
                self.binding[r] = i
                bound_here.append(r)
        self.path.append((job, k, i, start))

        self._dfs(remaining - 1, cost + typ.weight * finish)

        self.path.pop()
        for r in bound_here:
            del self.binding[r]
        for r in typ.resources:
            self.res_ends[r].pop()
        self.first_type[i] = previous_first
        self.end[i] = start
        self.used[k] -= 1

    def _leaf(self, cost: Fraction):
        self.leaves += 1
        snapshot = {job: (i, start) for job, _, i, start in self.path}
        if self.best is None or cost < self.best:
            self.best = cost
            self.witness = snapshot
            self.optima = [snapshot] if self.collect else []
        elif cost == self.best and self.collect:
            self.optima.append(snapshot)

    def type_key(self, snapshot: dict) -> tuple:
        """Schedule identity up to machine relabelling and swaps of interchangeable jobs."""
        type_of = {job: k for k, t in enumerate(self.types) for job in t.ids}
        machines: dict[int, list] = {}
        for job, (i, start) in snapshot.items():
            machines.setdefault(i, []).append((start, type_of[job]))
        return tuple(sorted(tuple(sorted(seq)) for seq in machines.values()))


def _search_branch(inst: Instance, symmetry: bool, collect: bool, branch: int):
    """Worker entry point: search one root branch of the sequence enumeration."""
    search = _SequenceSearch(inst, symmetry, collect)
    search.run(branch)
    return search.best, search.witness, search.optima, search.leaves


def _run_sequence(inst: Instance, symmetry: bool, collect: bool, workers: int) -> _SequenceSearch:
    search = _SequenceSearch(inst, symmetry, collect)
    root = search.options(inst.n)
    if workers <= 1 or len(root) <= 1:
        search.run()
        return search

    # merged in submission order; the witness is independent of the worker count
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futures = [ex.submit(_search_branch, inst, symmetry, collect, b) for b in range(len(root))]
        results = [f.result() for f in futures]
    for best, witness, optima, leaves in results:
        search.leaves += leaves
        if best is None:
            continue
        if search.best is None or best < search.best:
            search.best, search.witness, search.optima = best, witness, list(optima)
        elif best == search.best and collect:
            search.optima.extend(optima)
    return search


# --------------------------------------------------------------------------- #
# Slot dynamic program (unit-time instances)
# --------------------------------------------------------------------------- #


def slot_search_space(inst: Instance) -> int:
    """4^k times Π (f+1)² for k bound jobs and free-job groups of sizes f."""
    bound, free = _split_slot_jobs(inst)
    size = 4 ** len(bound)
    for _, ids in free:
        size *= (len(ids) + 1) ** 2
    return size


def _split_slot_jobs(inst: Instance):
    users = inst.resource_users()
    bound, free = [], {}
    for job in sorted(inst.jobs, key=lambda j: j.id):
        if _exclusive(inst, job, users):
            free.setdefault(job.weight, []).append(job.id)
        else:
            bound.append(job)
    return bound, sorted(free.items())


def _count_vectors(limits: list[int], total: int):
    """Every vector c with 0 <= c_k <= limits[k] and sum(c) <= total."""
    if not limits:
        yield ()
        return
    for first in range(min(limits[0], total) + 1):
        for rest in _count_vectors(limits[1:], total - first):
            yield (first,) + rest


class _SlotSearch:
    def __init__(self, inst: Instance):
        self.inst = inst
        self.m = inst.machine_count
        self.bound, self.free = _split_slot_jobs(inst)
        self.allowed = [inst.allowed_machines(job) for job in self.bound]
        self.memo: dict[tuple[int, tuple], tuple[Optional[Fraction], tuple]] = {}
        self.feasible_cache: dict[int, Optional[dict[int, int]]] = {}

    def _members(self, mask: int) -> list[int]:
        return [b for b in range(len(self.bound)) if mask >> b & 1]

    def _assignment(self, mask: int) -> Optional[dict[int, int]]:
        """Machines for the bound jobs of ``mask`` run in one slot, or None."""
        if mask in self.feasible_cache:
            return self.feasible_cache[mask]
        members = self._members(mask)
        result: Optional[dict[int, int]] = None
        load: dict[int, int] = {}
        for b in members:
            for r in self.bound[b].resources:
                load[r] = load.get(r, 0) + 1
        if len(members) <= self.m and all(c <= self.inst.capacity(r) for r, c in load.items()):
            if self.inst.machine_subsets:
                g = nx.Graph()
                tops = [("job", b) for b in members]
                g.add_nodes_from(tops, bipartite=0)
                g.add_nodes_from((("machine", i) for i in range(self.m)), bipartite=1)
                g.add_edges_from((("job", b), ("machine", i)) for b in members for i in self.allowed[b])
                matching = nx.bipartite.maximum_matching(g, top_nodes=tops)
                if all(node in matching for node in tops):
                    result = {b: matching["job", b][1] for b in members}
            else:
                result = {b: i for i, b in enumerate(members)}
        self.feasible_cache[mask] = result
        return result

    def value(self, mask: int, counts: tuple) -> Optional[Fraction]:
        if mask == 0 and not any(counts):
            return Fraction(0)
        key = (mask, counts)
        if key in self.memo:
            return self.memo[key][0]
        waiting = sum((self.bound[b].weight for b in self._members(mask)), Fraction(0))
        waiting += sum((c * w for c, (w, _) in zip(counts, self.free)), Fraction(0))

        best, choice = None, ()
        sub = mask
        while True:
            if self._assignment(sub) is not None:
                room = self.m - bin(sub).count("1")
                for take in _count_vectors(list(counts), room):
                    if sub == 0 and not any(take):
                        continue
                    rest = self.value(mask & ~sub, tuple(c - x for c, x in zip(counts, take)))
                    if rest is not None and (best is None or waiting + rest < best):
                        best, choice = waiting + rest, (sub, take)
            if sub == 0:
                break
            sub = (sub - 1) & mask
        self.memo[key] = (best, choice)
        return best

    def solve(self) -> tuple[Optional[Fraction], Optional[Schedule]]:
        mask = (1 << len(self.bound)) - 1
        counts = tuple(len(ids) for _, ids in self.free)
        best = self.value(mask, counts)
        if best is None:
            return None, None

        placements = {}
        taken = [0] * len(self.free)
        t = 0
        while mask or any(counts):
            _, (sub, take) = self.memo[mask, counts]
            machines = self._assignment(sub)
            busy = set(machines.values())
            for b, i in machines.items():
                placements[self.bound[b].id] = (i, Fraction(t))
            idle = [i for i in range(self.m) if i not in busy]
            for k, x in enumerate(take):
                for _ in range(x):
                    placements[self.free[k][1][taken[k]]] = (idle.pop(0), Fraction(t))
                    taken[k] += 1
            mask &= ~sub
            counts = tuple(c - x for c, x in zip(counts, take))
            t += 1
        return best, Schedule.from_placements(placements)


# --------------------------------------------------------------------------- #
# Public API
# --------------------------------------------------------------------------- #


def _pick_strategy(inst: Instance, strategy: Strategy) -> str:
    if strategy == "auto":
        return "slots" if inst.is_unit() and not inst.unmovable else "sequence"
    if strategy == "slots" and not (inst.is_unit() and not inst.unmovable):
        raise UnsupportedInstanceError("slot search requires unit-time instances without unmovable resources")
    return strategy


def search_space(inst: Instance, strategy: Strategy = "auto", symmetry: bool = True) -> int:
    """Size estimate checked against the budget before any enumeration."""
    if _pick_strategy(inst, strategy) == "slots":
        return slot_search_space(inst)
    return sequence_search_space(inst, symmetry)


def brute_force_opt(
    inst: Instance,
    budget: int = DEFAULT_BUDGET,
    strategy: Strategy = "auto",
    workers: int = 1,
    symmetry: bool = True,
) -> OracleResult:
    """Exact optimum of a small instance with a witness schedule.

    Args:
        inst: Any instance variant (machine subsets, unmovable resources,
            several resources per job, unrelated times).
        budget: Largest admissible search-space estimate.
        strategy: ``"sequence"``, ``"slots"`` or ``"auto"`` (slots for unit
            instances without unmovable resources).
        workers: Processes for the sequence search; the result does not
            depend on this number.
        symmetry: Prune machine relabellings and interchangeable jobs.

    Raises:
        BudgetExceededError: If the estimate exceeds ``budget``.
        OracleExhaustedError: If no feasible no-idle schedule exists.
    """
    chosen = _pick_strategy(inst, strategy)
    size = search_space(inst, chosen, symmetry)
    logging.info(f"oracle: {chosen} search, space estimate {size}")
    if size > budget:
        raise BudgetExceededError(size, budget)

    if chosen == "slots":
        optimum, witness = _SlotSearch(inst).solve()
        if optimum is None:
            raise OracleExhaustedError("exhausted: no feasible slot schedule exists")
    else:
        search = _run_sequence(inst, symmetry, collect=False, workers=workers)
        logging.debug(f"oracle: {search.leaves} complete schedules visited")
        if search.best is None:
            raise OracleExhaustedError("exhausted: no feasible no-idle schedule found")
        optimum, witness = search.best, Schedule.from_placements(search.witness)
    logging.info(f"oracle optimum {fr(optimum)}")
    return OracleResult(optimum=optimum, witness=witness, strategy=chosen, search_space=size)


def enumerate_optima(
    inst: Instance,
    budget: int = DEFAULT_BUDGET,
    symmetry: bool = True,
    workers: int = 1,
) -> list[Schedule]:
    """Every optimal no-idle schedule.

    With ``symmetry`` the list is deduplicated up to machine relabelling and
    swaps of interchangeable jobs; without it every labelled schedule is returned.
    """
    size = sequence_search_space(inst, symmetry)
    if size > budget:
        raise BudgetExceededError(size, budget)
    search = _run_sequence(inst, symmetry, collect=True, workers=workers)
    if search.best is None:
        raise OracleExhaustedError("exhausted: no feasible no-idle schedule found")
    optima = search.optima
    if symmetry:
        seen, unique = set(), []
        for snapshot in optima:
            key = search.type_key(snapshot)
            if key not in seen:
                seen.add(key)
                unique.append(snapshot)
        optima = unique
    return [Schedule.from_placements(s) for s in optima]


# --------------------------------------------------------------------------- #
# Combinatorial deciders
# --------------------------------------------------------------------------- #


def edge_coloring(g: Graph, k: int) -> Optional[list[int]]:
    """A proper edge colouring with at most ``k`` colours, or None.

    Backtracking over the edges in order; a new colour is only opened once
    every smaller one has been used.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    edges = list(g.edges)
    coloring = [-1] * len(edges)

    def rec(idx: int, used: int) -> bool:
        if idx == len(edges):
            return True
        u, v = edges[idx]
        forbidden = {coloring[e] for e in range(idx) if u in edges[e] or v in edges[e]}
        for color in range(min(used + 1, k)):
            if color in forbidden:
                continue
            coloring[idx] = color
            if rec(idx + 1, max(used, color + 1)):
                return True
        coloring[idx] = -1
        return False

    return coloring if rec(0, 0) else None


def edge_colorable(g: Graph, k: int) -> bool:
    return edge_coloring(g, k) is not None


def three_partition_certificate(tp: ThreePartitionInput) -> Optional[list[tuple[int, int, int]]]:
    """Triples of ``tp.elements`` each summing to ``tp.b``, or None if none exist."""
    if len(tp.elements) != 3 * tp.m or sum(tp.elements) != tp.m * tp.b:
        return None

    def rec(rest: list[int]) -> Optional[list[tuple[int, int, int]]]:
        if not rest:
            return []
        a, others = rest[0], rest[1:]
        for x, y in itertools.combinations(range(len(others)), 2):
            if a + others[x] + others[y] != tp.b:
                continue
            left = [v for k, v in enumerate(others) if k not in (x, y)]
            tail = rec(left)
            if tail is not None:
                return [(a, others[x], others[y])] + tail
        return None

    return rec(sorted(tp.elements, reverse=True))
