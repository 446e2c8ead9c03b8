import argparse
import logging
import os
from pathlib import Path

from deepdiff import DeepDiff
from dotenv import find_dotenv, load_dotenv
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table
from rich_argparse import RichHelpFormatter

from partition_sched import bench
from partition_sched.core import (
    blocking_pairs,
    check_machine_spt_order,
    check_spt_order,
    is_tight,
    normalize_tight,
    objective,
    slack,
    train_sequences,
    validate_instance,
    validate_schedule,
)
from partition_sched.errors import (
    BudgetExceededError,
    GeneratorError,
    SchedulingError,
    UnsupportedInstanceError,
)
from partition_sched.flow import build_network, dump_network, solve_unit
from partition_sched.heuristics import shrink_solve, spt_available
from partition_sched.models import INFINITY, GadgetInstance, Graph, ThreePartitionInput
from partition_sched.oracle import (
    DEFAULT_BUDGET,
    brute_force_opt,
    three_partition_certificate,
)
from partition_sched.reductions import (
    gen_example41,
    gen_lb_family,
    gen_mr_gadget,
    gen_partition2_gadget,
    gen_random,
    gen_unmovable_gadget,
    map_to_unrelated,
)
from partition_sched.tools.io import (
    metadata,
    read_instance,
    read_metadata,
    read_schedule,
    read_sweep,
    write_instance,
    write_metadata,
    write_schedule,
)
from partition_sched.tools.rational import format_rational as fr
from partition_sched.tools.rational import parse_rational

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

ALGORITHMS = ("spt-available", "flow", "shrink", "oracle")
FAMILIES = ("example41", "lb", "mr", "unmovable", "partition2", "unrelated", "random")
BENCH_FAMILIES = ("random", "unit", "lb", "shrink")


def _triple(text: str) -> tuple[int, ...]:
    """``argparse`` type for certificate triples written as ``1,1,2``."""
    parts = tuple(int(x) for x in text.split(","))
    if len(parts) != 3:
        raise ValueError(f"{text!r} is not a triple")
    return parts


def _edge(text: str) -> tuple[int, int]:
    """``argparse`` type for graph edges written as ``0-1``."""
    u, v = text.split("-")
    return int(u), int(v)


def _stem(path: Path) -> str:
    return path.name[: -len(".json")] if path.name.endswith(".json") else path.name


class Cli:
    HEADER = """
        psched :
        Exact solvers, bounds and hardness gadgets for parallel machine
        scheduling with resource-partition constraints.
    """

    def __init__(self):
        load_dotenv(find_dotenv(usecwd=True))
        self.console = Console()

        # Initialize the argument parser
        self.parser = self._init_argparser()

    def _init_argparser(self):
        """Create and configure the argument parser"""
        parser = argparse.ArgumentParser(
            prog="psched",
            description=self.HEADER,
            formatter_class=RichHelpFormatter,
        )
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument(
            "--verbose",
            "-v",
            help="Increase verbosity (-v info, -vv debug)",
            action="count",
            default=0,
        )
        sub = parser.add_subparsers(dest="command", required=True)

        generate = sub.add_parser(
            "generate",
            parents=[common],
            help="Write a generated instance with its metadata sidecar",
            formatter_class=RichHelpFormatter,
        )
        generate.add_argument("--family", choices=FAMILIES, required=True, help="Instance family")
        generate.add_argument(
            "--output",
            "-o",
            help="Instance file to write (default: <output dir>/<family>.json)",
            default=None,
            type=str,
        )
        generate.add_argument("--eps", type=parse_rational, default="1/2", help="Epsilon of example41 / lb")
        generate.add_argument("--c", type=int, default=2, help="Size parameter of the lb family")
        generate.add_argument("--m", type=int, default=2, help="Machines (random) or 3-PARTITION groups")
        generate.add_argument("--b", type=int, default=None, help="3-PARTITION target sum")
        generate.add_argument("--a", type=int, nargs="+", default=None, help="3-PARTITION elements")
        generate.add_argument(
            "--certificate",
            nargs="+",
            default=None,
            help="Certificate triples of element values such as 1,1,2, or 'auto' to search for one",
        )
        generate.add_argument("--edges", type=_edge, nargs="+", default=None, help="Graph edges such as 0-1 1-2")
        generate.add_argument(
            "--T",
            dest="T",
            type=parse_rational,
            default=None,
            help="Processing time off the allowed machines (default: the gadget threshold)",
        )
        generate.add_argument("--n", type=int, default=6, help="Jobs of a random instance")
        generate.add_argument("--resources", type=int, default=3, help="Resources of a random instance")
        generate.add_argument("--p-max", type=int, default=4, help="Largest processing time of a random instance")
        generate.add_argument("--q", type=int, default=1, help="Resources per job of a random instance")
        generate.add_argument("--capacity", type=int, default=1, help="Units per resource of a random instance")
        generate.add_argument(
            "--restrict-machines",
            action="store_true",
            help="Draw a machine subset for every resource of a random instance",
        )
        generate.add_argument("--seed", type=int, default=0, help="Seed of a random instance")

        solve = sub.add_parser(
            "solve",
            parents=[common],
            help="Schedule an instance with one algorithm",
            formatter_class=RichHelpFormatter,
        )
        solve.add_argument("instance", help="Instance file")
        solve.add_argument("--algorithm", "-a", choices=ALGORITHMS, required=True)
        solve.add_argument(
            "--output",
            "-o",
            help="Schedule file to write (default: <output dir>/<instance>.<algorithm>.schedule.json)",
            default=None,
            type=str,
        )
        solve.add_argument("--c", type=int, default=None, help="Largest processing time for shrink")
        solve.add_argument("--budget", type=int, default=None, help="Oracle search-space budget")
        solve.add_argument("--workers", type=int, default=None, help="Oracle worker processes")
        solve.add_argument("--weighted", action="store_true", help="Minimise the weighted sum (flow)")
        solve.add_argument("--compact", action="store_true", help="Remove idle time after solving (flow, shrink)")
        solve.add_argument("--dump-network", default=None, type=str, help="Write the flow network arc list")

        validate = sub.add_parser(
            "validate",
            parents=[common],
            help="Check a schedule and report slack, blocking pairs and trains",
            formatter_class=RichHelpFormatter,
        )
        validate.add_argument("instance", help="Instance file")
        validate.add_argument("--schedule", required=True, help="Schedule file")
        validate.add_argument("--normalize", default=None, type=str, help="Write the tight normal form here")

        bench_parser = sub.add_parser(
            "bench",
            parents=[common],
            help="Run the solvers on a sweep and check every bound",
            formatter_class=RichHelpFormatter,
        )
        source = bench_parser.add_mutually_exclusive_group(required=True)
        source.add_argument("--instances", default=None, help="Directory of instance files")
        source.add_argument("--sweep", default=None, help="YAML sweep file")
        source.add_argument("--family", choices=BENCH_FAMILIES, default=None, help="Built-in sweep")
        bench_parser.add_argument("--seeds", type=int, default=100, help="Instances per built-in sweep")
        bench_parser.add_argument("--seed", type=int, default=0, help="Master seed")
        bench_parser.add_argument("--budget", type=int, default=None, help="Oracle search-space budget")
        bench_parser.add_argument("--workers", type=int, default=None, help="Worker processes")
        bench_parser.add_argument(
            "--output",
            "-o",
            help="CSV report (default: <output dir>/bench.csv)",
            default=None,
            type=str,
        )
        return parser

    def _setup_logging(self):
        if self.args.verbose == 0:
            level = logging.WARNING
        elif self.args.verbose == 1:
            level = logging.INFO
        else:
            level = logging.DEBUG

        logging.basicConfig(
            level=level,
            format="%(message)s",
            datefmt="[%X]",
            handlers=[RichHandler()],
        )

    # ------------------------------------------------------------------ #
    # Environment defaults
    # ------------------------------------------------------------------ #

    def _budget(self) -> int:
        if self.args.budget is not None:
            return self.args.budget
        return int(os.getenv("PSCHED_ORACLE_BUDGET") or DEFAULT_BUDGET)

    def _workers(self) -> int:
        if self.args.workers is not None:
            return self.args.workers
        return int(os.getenv("PSCHED_WORKERS") or 1)

    def _output_dir(self) -> Path:
        return Path(os.getenv("PSCHED_OUTPUT_DIR") or "output")

    def _load_instance(self, path):
        try:
            inst = read_instance(path)
        except (OSError, ValidationError) as e:
            logging.error(f"cannot read instance {path}: {e}")
            return None
        report = validate_instance(inst)
        if not report.ok:
            for message in report.messages():
                logging.error(message)
            return None
        return inst

    # ------------------------------------------------------------------ #
    # generate
    # ------------------------------------------------------------------ #

    def _three_partition(self) -> ThreePartitionInput:
        if self.args.b is None or not self.args.a:
            raise GeneratorError(f"--family {self.args.family} needs --b and --a")
        return ThreePartitionInput(m=self.args.m, b=self.args.b, elements=tuple(self.args.a))

    def _certificate(self, tp: ThreePartitionInput):
        raw = self.args.certificate
        if not raw:
            return None
        if raw == ["auto"]:
            found = three_partition_certificate(tp)
            if found is None:
                raise GeneratorError("no 3-PARTITION certificate exists for these elements")
            return found
        return [_triple(t) for t in raw]

    def _generate(self) -> GadgetInstance:
        a = self.args
        family = a.family
        if family == "example41":
            return gen_example41(a.eps)
        if family == "lb":
            return gen_lb_family(a.c, a.eps)
        if family == "partition2":
            if not a.edges:
                raise GeneratorError("--family partition2 needs --edges")
            vertices = max(max(e) for e in a.edges) + 1
            return gen_partition2_gadget(Graph(vertex_count=vertices, edges=tuple(a.edges)))
        if family == "random":
            return gen_random(
                a.m,
                a.n,
                a.resources,
                a.p_max,
                q=a.q,
                seed=a.seed,
                capacity=a.capacity,
                restrict_machines=a.restrict_machines,
            )
        tp = self._three_partition()
        if family == "unmovable":
            return gen_unmovable_gadget(tp)
        gadget = gen_mr_gadget(tp, self._certificate(tp))
        if family == "unrelated":
            return map_to_unrelated(gadget, a.T if a.T is not None else gadget.threshold)
        return gadget

    def _check_round_trip(self, gadget: GadgetInstance, out: Path, meta: Path, witness: Path) -> bool:
        diffs = {
            out: DeepDiff(gadget.instance.model_dump(mode="json"), read_instance(out).model_dump(mode="json")),
            meta: DeepDiff(metadata(gadget), read_metadata(meta)),
        }
        if gadget.witness is not None:
            diffs[witness] = DeepDiff(
                gadget.witness.model_dump(mode="json"), read_schedule(witness).model_dump(mode="json")
            )
        ok = True
        for path, diff in diffs.items():
            if diff:
                logging.error(f"{path} does not read back as written: {diff}")
                ok = False
        return ok

    def cmd_generate(self) -> int:
        try:
            gadget = self._generate()
        except (SchedulingError, ValueError) as e:
            logging.error(str(e))
            return EXIT_USAGE

        out = Path(self.args.output) if self.args.output else self._output_dir() / f"{self.args.family}.json"
        stem = _stem(out)
        meta = out.with_name(stem + ".meta.yaml")
        witness = out.with_name(stem + ".witness.json")
        write_instance(out, gadget.instance)
        write_metadata(meta, gadget)
        if gadget.witness is not None:
            write_schedule(witness, gadget.witness)
        if not self._check_round_trip(gadget, out, meta, witness):
            return EXIT_FAILED

        threshold = "NA" if gadget.threshold is None else fr(gadget.threshold)
        print(f"{out}: {gadget.kind.value}, {gadget.instance.n} jobs, threshold {threshold}")
        return EXIT_OK

    # ------------------------------------------------------------------ #
    # solve
    # ------------------------------------------------------------------ #

    def cmd_solve(self) -> int:
        a = self.args
        inst = self._load_instance(a.instance)
        if inst is None:
            return EXIT_USAGE
        try:
            if a.algorithm == "spt-available":
                sched = spt_available(inst)
            elif a.algorithm == "flow":
                if a.dump_network:
                    path = Path(a.dump_network)
                    path.parent.mkdir(parents=True, exist_ok=True)
                    path.write_text(dump_network(build_network(inst, weighted=a.weighted)))
                sched = solve_unit(inst, weighted=a.weighted, compact=a.compact)
            elif a.algorithm == "shrink":
                if a.c is None:
                    logging.error("shrink requires --c")
                    return EXIT_USAGE
                sched = shrink_solve(inst, a.c, compact=a.compact)
            else:
                result = brute_force_opt(inst, budget=self._budget(), workers=self._workers())
                sched = result.witness
        except (UnsupportedInstanceError, BudgetExceededError) as e:
            logging.error(str(e))
            return EXIT_USAGE
        except SchedulingError as e:
            logging.error(str(e))
            return EXIT_FAILED

        out = a.output or self._output_dir() / f"{_stem(Path(a.instance))}.{a.algorithm}.schedule.json"
        write_schedule(out, sched)
        logging.info(f"schedule written to {out}")
        print(f"objective {fr(objective(inst, sched))}")
        return EXIT_OK

    # ------------------------------------------------------------------ #
    # validate
    # ------------------------------------------------------------------ #

    def _print_reports(self, inst, sched):
        slack_table = Table(title="Slack")
        for column in ("job", "d+", "d-", "slack"):
            slack_table.add_column(column, justify="right")
        for job in sorted(j.id for j in inst.jobs):
            s = slack(inst, sched, job)
            slack_table.add_row(
                str(job),
                *(v if v == INFINITY else fr(v) for v in (s.d_plus, s.d_minus, s.slack)),
            )
        self.console.print(slack_table)

        pair_table = Table(title="Blocking pairs")
        for column in ("first", "second", "tight"):
            pair_table.add_column(column)
        for pair in blocking_pairs(inst, sched):
            pair_table.add_row(str(pair.first), str(pair.second), "yes" if pair.tight else "no")
        self.console.print(pair_table)

        train_table = Table(title="Trains")
        for column in ("machine", "resources", "jobs", "start", "end"):
            train_table.add_column(column)
        for train in train_sequences(inst, sched):
            train_table.add_row(
                str(train.machine),
                ",".join(map(str, train.resources)) or "-",
                " ".join(map(str, train.jobs)),
                fr(train.start),
                fr(train.end),
            )
        self.console.print(train_table)

        print(f"spt order: {'yes' if check_spt_order(inst, sched) else 'no'}")
        print(f"machine spt order: {'yes' if check_machine_spt_order(inst, sched) else 'no'}")
        print(f"tight: {'yes' if is_tight(inst, sched) else 'no'}")

    def cmd_validate(self) -> int:
        inst = self._load_instance(self.args.instance)
        if inst is None:
            return EXIT_USAGE
        try:
            sched = read_schedule(self.args.schedule)
        except (OSError, ValidationError) as e:
            logging.error(f"cannot read schedule {self.args.schedule}: {e}")
            return EXIT_USAGE
        report = validate_schedule(inst, sched)
        if not report.ok:
            print("infeasible")
            for message in report.messages():
                print(f"  {message}")
            return EXIT_FAILED

        print(f"feasible, objective {fr(objective(inst, sched))}")
        self._print_reports(inst, sched)

        if self.args.normalize:
            try:
                tight = normalize_tight(inst, sched)
            except UnsupportedInstanceError as e:
                logging.error(str(e))
                return EXIT_USAGE
            except SchedulingError as e:
                logging.error(str(e))
                return EXIT_FAILED
            write_schedule(self.args.normalize, tight)
            print(f"normalized objective {fr(objective(inst, tight))}")
        return EXIT_OK

    # ------------------------------------------------------------------ #
    # bench
    # ------------------------------------------------------------------ #

    def cmd_bench(self) -> int:
        a = self.args
        budget = self._budget()
        try:
            if a.instances:
                cases = bench.directory_cases(a.instances)
            elif a.sweep:
                spec = read_sweep(a.sweep)
                if a.budget is None and spec.budget is not None:
                    budget = spec.budget
                cases = bench.sweep_cases(spec)
            else:
                cases = bench.family_cases(a.family, a.seeds, a.seed)
        except (SchedulingError, ValueError, OSError) as e:
            logging.error(str(e))
            return EXIT_USAGE

        df = bench.run_bench(cases, budget=budget, workers=self._workers())
        out = bench.write_report(df, a.output or self._output_dir() / "bench.csv")
        failures = bench.count_failures(df)
        print(f"{len(cases)} instances, {len(df)} rows, {failures} failed checks -> {out}")
        return EXIT_FAILED if failures else EXIT_OK

    def run(self, argv=None) -> int:
        """
        Main method to run the CLI application.
        """
        self.args = self.parser.parse_args(argv)
        self._setup_logging()
        commands = {
            "generate": self.cmd_generate,
            "solve": self.cmd_solve,
            "validate": self.cmd_validate,
            "bench": self.cmd_bench,
        }
        return commands[self.args.command]()


def main():
    cli = Cli()
    raise SystemExit(cli.run())


if __name__ == "__main__":
    main()
