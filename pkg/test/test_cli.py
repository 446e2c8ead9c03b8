import json
import os
from unittest.mock import patch

import pytest

from partition_sched.cli import Cli
from partition_sched.models import Instance, Job, Schedule
from partition_sched.tools.io import read_instance, read_metadata, read_schedule, write_instance, write_schedule


def _make_cli():
    """Create a Cli instance without picking up a real ``.env`` file."""
    with patch("partition_sched.cli.load_dotenv"):
        return Cli()


def _run(*argv, env=None):
    """Run the CLI with the PSCHED_* variables cleared (plus ``env``)."""
    clean = {k: v for k, v in os.environ.items() if not k.startswith("PSCHED_")}
    clean.update(env or {})
    with patch.dict(os.environ, clean, clear=True):
        return _make_cli().run([str(a) for a in argv])


def _write_pair(tmp_path, start_second):
    """Two unit jobs on resource 0, job 0 on machine 0 at 0, job 1 on machine 1."""
    inst = Instance(
        machine_count=2,
        resource_count=1,
        jobs=(Job(id=0, p=1, resources=(0,)), Job(id=1, p=1, resources=(0,))),
    )
    sched = Schedule.from_placements({0: (0, 0), 1: (1, start_second)})
    return write_instance(tmp_path / "pair.json", inst), write_schedule(tmp_path / "pair.schedule.json", sched)


# ---------------------------------------------------------------------------
# Argument parser
# ---------------------------------------------------------------------------


class TestParser:
    """Tests for argument defaults and flags."""

    def test_generate_defaults(self):
        args = _make_cli().parser.parse_args(["generate", "--family", "example41"])
        assert str(args.eps) == "1/2"
        assert args.c == 2
        assert args.seed == 0
        assert args.output is None
        assert args.verbose == 0

    def test_verbose_double_flag(self):
        args = _make_cli().parser.parse_args(["solve", "-vv", "x.json", "-a", "flow"])
        assert args.verbose == 2

    def test_solve_flags(self):
        args = _make_cli().parser.parse_args(
            ["solve", "x.json", "-a", "shrink", "--c", "3", "--compact", "-o", "s.json"]
        )
        assert args.algorithm == "shrink"
        assert args.c == 3
        assert args.compact
        assert args.output == "s.json"
        assert args.budget is None

    def test_edges_and_certificate(self):
        args = _make_cli().parser.parse_args(
            ["generate", "--family", "partition2", "--edges", "0-1", "1-2"]
        )
        assert args.edges == [(0, 1), (1, 2)]

    def test_command_required(self):
        with pytest.raises(SystemExit) as info:
            _make_cli().parser.parse_args([])
        assert info.value.code == 2

    def test_unknown_algorithm(self):
        with pytest.raises(SystemExit):
            _make_cli().parser.parse_args(["solve", "x.json", "-a", "greedy"])

    def test_bad_rational(self):
        with pytest.raises(SystemExit):
            _make_cli().parser.parse_args(["generate", "--family", "lb", "--eps", "half"])

    def test_bench_sources_are_exclusive(self):
        with pytest.raises(SystemExit):
            _make_cli().parser.parse_args(["bench", "--family", "lb", "--sweep", "s.yaml"])


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


class TestGenerate:
    """Tests for the generate command."""

    def test_example41(self, tmp_path):
        out = tmp_path / "ex41.json"
        assert _run("generate", "--family", "example41", "--eps", "1/2", "-o", out) == 0
        assert read_instance(out).n == 12
        meta = read_metadata(tmp_path / "ex41.meta.yaml")
        assert meta["kind"] == "example41"
        assert meta["threshold"] == "47"

    def test_lb(self, tmp_path):
        out = tmp_path / "lb.json"
        assert _run("generate", "--family", "lb", "--c", "2", "--eps", "1/100", "-o", out) == 0
        assert read_instance(out).resource_count == 7

    def test_random_is_reproducible(self, tmp_path):
        for name in ("a.json", "b.json"):
            assert _run("generate", "--family", "random", "--seed", "7", "--n", "6", "--m", "2", "-o", tmp_path / name) == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_mr_with_certificate(self, tmp_path):
        out = tmp_path / "mr.json"
        code = _run(
            "generate", "--family", "mr", "--m", "1", "--b", "4", "--a", "1", "1", "2",
            "--certificate", "1,1,2", "-o", out,
        )
        assert code == 0
        assert read_instance(out).n == 13
        assert len(read_schedule(tmp_path / "mr.witness.json").entries) == 13

    def test_mr_auto_certificate(self, tmp_path):
        out = tmp_path / "mr.json"
        code = _run(
            "generate", "--family", "mr", "--m", "2", "--b", "4", "--a", "1", "1", "1", "1", "2", "2",
            "--certificate", "auto", "-o", out,
        )
        assert code == 0
        assert (tmp_path / "mr.witness.json").exists()

    def test_unrelated(self, tmp_path):
        out = tmp_path / "un.json"
        code = _run("generate", "--family", "unrelated", "--m", "1", "--b", "4", "--a", "1", "1", "2", "-o", out)
        assert code == 0
        inst = read_instance(out)
        assert inst.unrelated_times is not None
        assert inst.machine_subsets is None

    def test_unmovable(self, tmp_path):
        out = tmp_path / "um.json"
        code = _run("generate", "--family", "unmovable", "--m", "2", "--b", "4", "--a", "1", "1", "1", "1", "2", "2", "-o", out)
        assert code == 0
        assert read_instance(out).unmovable

    def test_partition2(self, tmp_path):
        out = tmp_path / "tri.json"
        assert _run("generate", "--family", "partition2", "--edges", "0-1", "1-2", "0-2", "-o", out) == 0
        assert read_instance(out).n == 6
        assert read_metadata(tmp_path / "tri.meta.yaml")["threshold"] == "9"

    def test_missing_parameters(self, tmp_path):
        assert _run("generate", "--family", "unmovable", "-o", tmp_path / "x.json") == 2

    def test_bad_parameters(self, tmp_path):
        assert _run("generate", "--family", "lb", "--c", "3", "-o", tmp_path / "x.json") == 2
        assert not (tmp_path / "x.json").exists()

    def test_output_dir_from_environment(self, tmp_path):
        assert _run("generate", "--family", "example41", env={"PSCHED_OUTPUT_DIR": str(tmp_path)}) == 0
        assert (tmp_path / "example41.json").exists()
        assert (tmp_path / "example41.meta.yaml").exists()


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


class TestSolve:
    """Tests for the solve command."""

    @pytest.fixture
    def ex41(self, tmp_path):
        out = tmp_path / "ex41.json"
        _run("generate", "--family", "example41", "--eps", "1/2", "-o", out)
        return out

    def test_spt_available(self, ex41, tmp_path, capsys):
        capsys.readouterr()
        out = tmp_path / "spt.json"
        assert _run("solve", "-a", "spt-available", ex41, "-o", out) == 0
        assert "objective 51" in capsys.readouterr().out
        assert len(read_schedule(out).entries) == 12

    def test_oracle(self, ex41, tmp_path, capsys):
        capsys.readouterr()
        assert _run("solve", "-a", "oracle", ex41, "-o", tmp_path / "opt.json") == 0
        assert "objective 47" in capsys.readouterr().out

    def test_default_output(self, ex41, tmp_path):
        assert _run("solve", "-a", "spt-available", ex41, env={"PSCHED_OUTPUT_DIR": str(tmp_path / "o")}) == 0
        assert (tmp_path / "o" / "ex41.spt-available.schedule.json").exists()

    def test_flow_precondition(self, ex41, tmp_path):
        assert _run("solve", "-a", "flow", ex41, "-o", tmp_path / "f.json") == 2

    def test_flow_dump_network(self, tmp_path, capsys):
        inst = Instance(
            machine_count=2,
            resource_count=2,
            jobs=tuple(Job(id=k, p=1, resources=(k // 2,)) for k in range(4)),
        )
        path = write_instance(tmp_path / "unit.json", inst)
        net = tmp_path / "net.txt"
        capsys.readouterr()
        assert _run("solve", "-a", "flow", path, "--dump-network", net, "-o", tmp_path / "f.json") == 0
        assert net.read_text().splitlines()[0] == "nodes 30 arcs 52 required_flow 4"
        assert "objective 6" in capsys.readouterr().out

    def test_shrink_needs_c(self, ex41, tmp_path):
        assert _run("solve", "-a", "shrink", ex41, "-o", tmp_path / "s.json") == 2

    def test_budget_flag(self, ex41, tmp_path):
        assert _run("solve", "-a", "oracle", ex41, "--budget", "10", "-o", tmp_path / "o.json") == 2

    def test_budget_from_environment(self, ex41, tmp_path):
        code = _run("solve", "-a", "oracle", ex41, "-o", tmp_path / "o.json", env={"PSCHED_ORACLE_BUDGET": "10"})
        assert code == 2

    def test_invalid_instance(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"machines": 1, "resources": 1, "jobs": [{"id": 0, "p": 1, "resources": [4]}]}))
        assert _run("solve", "-a", "oracle", path, "-o", tmp_path / "o.json") == 2

    def test_missing_instance_file(self, tmp_path):
        assert _run("solve", "-a", "oracle", tmp_path / "none.json", "-o", tmp_path / "o.json") == 2
        assert not (tmp_path / "o.json").exists()

    def test_malformed_instance_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"machines": 1, "jobs": [{"id": 0}]}))
        assert _run("solve", "-a", "spt-available", path, "-o", tmp_path / "o.json") == 2

    @pytest.mark.parametrize("algorithm", ["flow", "oracle"])
    def test_repeated_runs_are_byte_identical(self, tmp_path, algorithm):
        inst = Instance(
            machine_count=2,
            resource_count=3,
            jobs=tuple(Job(id=k, p=1, resources=(k % 3,)) for k in range(7)),
        )
        path = write_instance(tmp_path / "unit.json", inst)
        for name in ("a.json", "b.json"):
            assert _run("solve", "-a", algorithm, path, "-o", tmp_path / name) == 0
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


class TestValidate:
    """Tests for the validate command."""

    def test_valid_pair(self, tmp_path, capsys):
        inst, sched = _write_pair(tmp_path, 1)
        capsys.readouterr()
        assert _run("validate", inst, "--schedule", sched) == 0
        out = capsys.readouterr().out
        assert "feasible, objective 3" in out
        assert "spt order: yes" in out

    def test_overlap(self, tmp_path, capsys):
        inst, sched = _write_pair(tmp_path, 0)
        capsys.readouterr()
        assert _run("validate", inst, "--schedule", sched) == 1
        assert "resource 0 overlap at t∈[0,1)" in capsys.readouterr().out

    def test_normalize(self, tmp_path):
        inst, sched = _write_pair(tmp_path, 3)
        out = tmp_path / "tight.json"
        assert _run("validate", inst, "--schedule", sched, "--normalize", out) == 0
        assert read_schedule(out).entry_map()[1].start == 1

    def test_missing_schedule_file(self, tmp_path):
        inst, _ = _write_pair(tmp_path, 1)
        assert _run("validate", inst, "--schedule", tmp_path / "none.json") == 2

    def test_malformed_schedule_file(self, tmp_path):
        inst, _ = _write_pair(tmp_path, 1)
        bad = tmp_path / "bad.schedule.json"
        bad.write_text(json.dumps({"entries": [{"job": 0}]}))
        assert _run("validate", inst, "--schedule", bad) == 2

    def test_normalize_rejects_unrelated_times(self, tmp_path):
        inst = tmp_path / "un.json"
        code = _run(
            "generate", "--family", "unrelated", "--m", "1", "--b", "4", "--a", "1", "1", "2",
            "--certificate", "1,1,2", "-o", inst,
        )
        assert code == 0
        witness = tmp_path / "un.witness.json"
        assert _run("validate", inst, "--schedule", witness) == 0
        out = tmp_path / "tight.json"
        assert _run("validate", inst, "--schedule", witness, "--normalize", out) == 2
        assert not out.exists()


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


class TestBench:
    """Tests for the bench command."""

    def test_lb_family(self, tmp_path):
        out = tmp_path / "bench.csv"
        assert _run("bench", "--family", "lb", "-o", out) == 0
        header = out.read_text().splitlines()[0]
        assert header.startswith("instance_id,kind,n,m,algorithm,objective,oracle_optimum,optimum_source,ratio")

    def test_instances_directory(self, tmp_path):
        _run("generate", "--family", "example41", "-o", tmp_path / "inst" / "ex41.json")
        out = tmp_path / "bench.csv"
        assert _run("bench", "--instances", tmp_path / "inst", "-o", out) == 0
        assert "ex41,example41" in out.read_text()

    def test_sweep_file(self, tmp_path):
        sweep = tmp_path / "sweep.yaml"
        sweep.write_text("seed: 3\ncases:\n  - family: unit\n    count: 3\n")
        out = tmp_path / "bench.csv"
        assert _run("bench", "--sweep", sweep, "-o", out) == 0
        assert out.read_text().count("unit-") == 6

    def test_missing_sweep_file(self, tmp_path):
        assert _run("bench", "--sweep", tmp_path / "none.yaml", "-o", tmp_path / "b.csv") == 2

    def test_random_sweep_is_byte_identical(self, tmp_path):
        serial, pooled = tmp_path / "serial.csv", tmp_path / "pooled.csv"
        first = _run("bench", "--family", "random", "--seeds", "6", "--seed", "5", "-o", serial)
        second = _run("bench", "--family", "random", "--seeds", "6", "--seed", "5", "--workers", "2", "-o", pooled)
        assert first == second
        assert serial.read_bytes() == pooled.read_bytes()
