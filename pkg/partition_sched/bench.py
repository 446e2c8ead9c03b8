"""Benchmark harness: run the solvers on instance sweeps and check every bound
against the exact optimum.

Each (instance, algorithm) pair becomes one CSV row. Check cells are ``pass``,
``fail`` or ``NA`` (not applicable, or skipped because no optimum is known).
"""

import logging
import random
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Optional

import pandas as pd

from partition_sched.core import check_spt_order, completion_times, objective
from partition_sched.errors import BudgetExceededError, OracleExhaustedError
from partition_sched.flow import solve_unit
from partition_sched.heuristics import bounds, shrink_solve, spt_available
from partition_sched.models import BenchCase, BenchRow, Instance, SweepFamily, SweepSpec
from partition_sched.oracle import DEFAULT_BUDGET, brute_force_opt, enumerate_optima
from partition_sched.reductions import gen_example41, gen_lb_family, gen_random, lb_family_values
from partition_sched.tools.io import read_instance, read_metadata
from partition_sched.tools.rational import format_rational

CHECK_COLUMNS = [
    "spt_ratio_ok",
    "sum_k_ok",
    "opt1_over_m_ok",
    "per_job_ok",
    "shrink_ok",
    "flow_equals_oracle",
    "spt_order_ok",
]
CSV_COLUMNS = [
    "instance_id",
    "kind",
    "n",
    "m",
    "algorithm",
    "objective",
    "oracle_optimum",
    "optimum_source",
    "ratio",
] + CHECK_COLUMNS
ALGORITHM_ORDER = ["spt-available", "flow", "shrink", "oracle"]


# --------------------------------------------------------------------------- #
# Case construction
# --------------------------------------------------------------------------- #


def _case_seeds(seed: int, family: str, count: int) -> list[int]:
    rng = random.Random(f"{seed}:{family}")
    return [rng.randrange(2**31) for _ in range(count)]


def _family_cases(fam: SweepFamily, seed: int, offset: int) -> list[BenchCase]:
    cases = []
    if fam.family == "example41":
        g = gen_example41(fam.eps)
        return [
            BenchCase(
                instance_id=f"example41-{offset:04d}",
                kind="example41",
                instance=g.instance,
                algorithms=("spt-available", "oracle"),
                formula_optimum=g.threshold,
            )
        ]
    if fam.family == "lb":
        for k, c in enumerate(fam.c):
            g = gen_lb_family(c, fam.eps)
            cases.append(
                BenchCase(
                    instance_id=f"lb-{offset + k:04d}",
                    kind="lb",
                    instance=g.instance,
                    algorithms=("spt-available", "oracle"),
                    formula_optimum=lb_family_values(c, fam.eps)[1],
                )
            )
        return cases

    for k, case_seed in enumerate(_case_seeds(seed, fam.family, fam.count)):
        rng = random.Random(case_seed)
        m = rng.choice(fam.m)
        n = rng.randint(2, fam.n_max)
        resources = rng.randint(1, fam.resources_max)
        if fam.family == "unit":
            variant = k % 3
            g = gen_random(
                m,
                n,
                resources,
                1,
                seed=case_seed,
                capacity=2 if variant == 2 else fam.capacity,
                restrict_machines=variant == 1 or fam.restrict_machines,
            )
            algorithms = ("flow", "oracle")
            c = None
        elif fam.family == "shrink":
            c = max(fam.c)
            g = gen_random(m, n, resources, c, seed=case_seed)
            algorithms = ("shrink", "oracle")
        else:
            g = gen_random(
                m,
                n,
                resources,
                fam.p_max,
                seed=case_seed,
                capacity=fam.capacity,
                restrict_machines=fam.restrict_machines,
            )
            algorithms = ("spt-available", "oracle") if g.instance.is_plain() else ("oracle",)
            c = None
        cases.append(
            BenchCase(
                instance_id=f"{fam.family}-{offset + k:04d}",
                kind=fam.family,
                instance=g.instance,
                algorithms=algorithms,
                c=c,
            )
        )
    return cases


def sweep_cases(spec: SweepSpec) -> list[BenchCase]:
    """Expand a sweep description into concrete cases; all seeds derive from ``spec.seed``."""
    cases: list[BenchCase] = []
    for fam in spec.cases:
        cases.extend(_family_cases(fam, spec.seed, len(cases)))
    return cases


def family_cases(family: str, seeds: int, seed: int) -> list[BenchCase]:
    """Built-in sweeps: ``random``, ``unit``, ``lb`` and ``shrink``."""
    settings = {
        "random": SweepFamily(family="random", count=seeds, m=(2, 3), n_max=6, p_max=4),
        "unit": SweepFamily(family="unit", count=seeds, m=(1, 2, 3), n_max=8),
        "lb": SweepFamily(family="lb", c=(2, 4), eps=Fraction(1, 100)),
        "shrink": SweepFamily(family="shrink", count=seeds, m=(2, 3), n_max=6, c=(3,)),
    }
    if family not in settings:
        raise ValueError(f"unknown bench family {family!r}")
    return sweep_cases(SweepSpec(seed=seed, cases=(settings[family],)))


def directory_cases(path) -> list[BenchCase]:
    """One case per ``*.json`` instance file in a directory (witness and schedule files skipped)."""
    cases = []
    for file in sorted(Path(path).glob("*.json")):
        if file.name.endswith((".witness.json", ".schedule.json")):
            continue
        inst = read_instance(file)
        stem = file.name[: -len(".json")]
        meta_file = file.with_name(stem + ".meta.yaml")
        kind = read_metadata(meta_file).get("kind", "file") if meta_file.exists() else "file"
        algorithms = []
        if inst.is_plain():
            algorithms.append("spt-available")
        if inst.is_unit() and not inst.unmovable and all(len(j.resources) <= 1 for j in inst.jobs):
            algorithms.append("flow")
        algorithms.append("oracle")
        cases.append(BenchCase(instance_id=stem, kind=kind, instance=inst, algorithms=tuple(algorithms)))
    return cases


# --------------------------------------------------------------------------- #
# Running
# --------------------------------------------------------------------------- #


def _all_distinct(inst: Instance) -> bool:
    ps = [job.p for job in inst.jobs]
    return len(set(ps)) == len(ps)


def run_case(case: BenchCase, budget: int = DEFAULT_BUDGET) -> list[BenchRow]:
    """Rows for every algorithm of one case."""
    inst = case.instance
    m = inst.machine_count
    optimum: Optional[Fraction] = None
    source = None
    witness_ok: Optional[bool] = None
    try:
        optimum = brute_force_opt(inst, budget=budget).optimum
        source = "oracle"
    except (BudgetExceededError, OracleExhaustedError) as e:
        logging.info(f"{case.instance_id}: oracle skipped ({e})")
        if case.formula_optimum is not None:
            optimum, source = case.formula_optimum, "formula"

    rows = []
    for algorithm in ALGORITHM_ORDER:
        if algorithm not in case.algorithms:
            continue
        checks: dict[str, Optional[bool]] = {}
        if algorithm == "oracle":
            if source != "oracle":
                continue
            value = optimum
            if _all_distinct(inst):
                try:
                    optima = enumerate_optima(inst, budget=budget)
                    witness_ok = all(check_spt_order(inst, s) for s in optima)
                except (BudgetExceededError, OracleExhaustedError):
                    witness_ok = None
            checks["spt_order_ok"] = witness_ok
        elif algorithm == "spt-available":
            sched = spt_available(inst)
            value = objective(inst, sched)
            report = bounds(inst)
            done = completion_times(inst, sched)
            checks["per_job_ok"] = all(
                done[j] <= (1 - Fraction(1, m)) * report.per_job_k[j] + Fraction(1, m) * report.per_job_c1[j]
                for j in done
            )
            if optimum is not None:
                checks["spt_ratio_ok"] = value <= (2 - Fraction(1, m)) * optimum
                checks["sum_k_ok"] = report.sum_k <= optimum
                checks["opt1_over_m_ok"] = report.opt1_over_m <= optimum
        elif algorithm == "flow":
            value = objective(inst, solve_unit(inst))
            if source == "oracle":
                checks["flow_equals_oracle"] = value == optimum
        else:
            value = objective(inst, shrink_solve(inst, case.c))
            if optimum is not None:
                checks["shrink_ok"] = value <= case.c * optimum

        rows.append(
            BenchRow(
                instance_id=case.instance_id,
                kind=case.kind,
                n=inst.n,
                m=m,
                algorithm=algorithm,
                objective=value,
                oracle_optimum=optimum,
                optimum_source=source,
                ratio=None if optimum is None else value / optimum,
                checks=checks,
            )
        )
    return rows


def _cell(ok: Optional[bool]) -> Optional[str]:
    return None if ok is None else ("pass" if ok else "fail")


def rows_to_frame(rows: list[BenchRow]) -> pd.DataFrame:
    """Fixed column order; rationals as ``num/den``; missing values stay empty for ``na_rep``."""
    records = []
    for row in rows:
        record = {
            "instance_id": row.instance_id,
            "kind": row.kind,
            "n": row.n,
            "m": row.m,
            "algorithm": row.algorithm,
            "objective": format_rational(row.objective),
            "oracle_optimum": None if row.oracle_optimum is None else format_rational(row.oracle_optimum),
            "optimum_source": row.optimum_source,
            "ratio": None if row.ratio is None else format_rational(row.ratio),
        }
        for name in CHECK_COLUMNS:
            record[name] = _cell(row.checks.get(name))
        records.append(record)
    return pd.DataFrame(records, columns=CSV_COLUMNS)


def run_bench(cases: list[BenchCase], budget: int = DEFAULT_BUDGET, workers: int = 1) -> pd.DataFrame:
    """Run every case and return the report, sorted by instance id."""
    if workers > 1 and len(cases) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futures = [ex.submit(run_case, case, budget) for case in cases]
            per_case = [f.result() for f in futures]
    else:
        per_case = [run_case(case, budget) for case in cases]
    rows = sorted(
        (row for rows in per_case for row in rows),
        key=lambda r: (r.instance_id, ALGORITHM_ORDER.index(r.algorithm)),
    )
    logging.info(f"bench: {len(cases)} instances, {len(rows)} rows")
    return rows_to_frame(rows)


def count_failures(df: pd.DataFrame) -> int:
    """Number of ``fail`` cells over all check columns."""
    return int((df[CHECK_COLUMNS] == "fail").sum().sum())


def write_report(df: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, na_rep="NA")
    return path
