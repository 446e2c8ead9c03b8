"""Unit tests for the partition_sched.tools sub-package.

Covers:
  - tools/rational.py – to_fraction, fraction_to_json, format_rational, parse_rational
  - tools/io.py       – instance / schedule files, metadata sidecars, sweep files
"""

import json
from fractions import Fraction

import pytest
from pydantic import ValidationError

from partition_sched.models import Instance, Job, Schedule, ThreePartitionInput
from partition_sched.reductions import gen_example41, gen_mr_gadget
from partition_sched.tools.io import (
    metadata,
    read_instance,
    read_metadata,
    read_schedule,
    read_sweep,
    to_json,
    write_instance,
    write_metadata,
    write_schedule,
)
from partition_sched.tools.rational import fraction_to_json, format_rational, parse_rational, to_fraction


# ---------------------------------------------------------------------------
# rational
# ---------------------------------------------------------------------------


class TestToFraction:
    """Tests for the lenient rational coercion."""

    def test_int(self):
        assert to_fraction(3) == Fraction(3)

    def test_pair(self):
        assert to_fraction([3, 2]) == Fraction(3, 2)

    def test_string(self):
        assert to_fraction("1/100") == Fraction(1, 100)

    def test_decimal_string(self):
        assert to_fraction("0.25") == Fraction(1, 4)

    def test_float_goes_through_repr(self):
        assert to_fraction(0.1) == Fraction(1, 10)

    def test_bool_rejected(self):
        with pytest.raises(ValueError):
            to_fraction(True)

    def test_zero_denominator_rejected(self):
        with pytest.raises(ValueError):
            to_fraction([1, 0])

    def test_garbage_rejected(self):
        with pytest.raises(ValueError, match="num/den"):
            to_fraction("one half")


class TestFormatting:
    """Tests for the JSON and text encodings."""

    def test_integral_json(self):
        assert fraction_to_json(Fraction(4)) == 4

    def test_pair_json(self):
        assert fraction_to_json(Fraction(6, 4)) == [3, 2]

    def test_format(self):
        assert format_rational(Fraction(4221, 100)) == "4221/100"
        assert format_rational(Fraction(47)) == "47"

    def test_parse(self):
        assert parse_rational("1/2") == Fraction(1, 2)


# ---------------------------------------------------------------------------
# io
# ---------------------------------------------------------------------------


def _make_instance():
    return Instance(
        machine_count=2,
        resource_count=2,
        jobs=(
            Job(id=0, p=Fraction(3, 2), resources=(0,)),
            Job(id=1, p=1, resources=(1,), weight=2),
        ),
        machine_subsets={1: (1, 0)},
    )


class TestInstanceFiles:
    """Tests for the instance file format."""

    def test_write_and_read(self, tmp_path):
        inst = _make_instance()
        path = write_instance(tmp_path / "inst.json", inst)
        assert read_instance(path) == inst

    def test_on_disk_names(self, tmp_path):
        path = write_instance(tmp_path / "inst.json", _make_instance())
        data = json.loads(path.read_text())
        assert data["machines"] == 2
        assert data["resources"] == 2
        assert data["jobs"][0]["p"] == [3, 2]
        assert data["machine_subsets"] == {"1": [0, 1]}
        assert "unrelated_times" not in data

    def test_deterministic_text(self):
        assert to_json(_make_instance()) == to_json(_make_instance())

    def test_reads_string_rationals(self, tmp_path):
        path = tmp_path / "inst.json"
        path.write_text(json.dumps({"machines": 1, "resources": 1, "jobs": [{"id": 0, "p": "1/3", "resources": [0]}]}))
        assert read_instance(path).jobs[0].p == Fraction(1, 3)

    def test_malformed_file_raises(self, tmp_path):
        path = tmp_path / "inst.json"
        path.write_text(json.dumps({"machines": 1, "jobs": []}))
        with pytest.raises(ValidationError):
            read_instance(path)

    def test_out_of_range_ids_still_load(self, tmp_path):
        path = tmp_path / "inst.json"
        path.write_text(json.dumps({"machines": 1, "resources": 1, "jobs": [{"id": 0, "p": 1, "resources": [9]}]}))
        assert read_instance(path).jobs[0].resources == (9,)


class TestScheduleFiles:
    """Tests for the schedule file format."""

    def test_write_and_read(self, tmp_path):
        sched = Schedule.from_placements({0: (0, Fraction(1, 2)), 1: (1, Fraction(0))})
        path = write_schedule(tmp_path / "out" / "s.json", sched)
        assert read_schedule(path) == sched

    def test_integral_starts_are_bare_ints(self, tmp_path):
        sched = Schedule.from_placements({0: (0, Fraction(3)), 1: (1, Fraction(5, 2))})
        path = write_schedule(tmp_path / "s.json", sched)
        starts = {e["job"]: e["start"] for e in json.loads(path.read_text())["entries"]}
        assert starts == {0: 3, 1: [5, 2]}

    def test_reads_both_start_encodings(self, tmp_path):
        path = tmp_path / "s.json"
        entries = [{"job": 0, "machine": 0, "start": [3, 1]}, {"job": 1, "machine": 0, "start": 4}]
        path.write_text(json.dumps({"entries": entries}))
        starts = {e.job: e.start for e in read_schedule(path).entries}
        assert starts == {0: Fraction(3), 1: Fraction(4)}


class TestMetadata:
    """Tests for the YAML sidecar."""

    def test_example41(self, tmp_path):
        gadget = gen_example41(Fraction(1, 2))
        path = write_metadata(tmp_path / "ex.meta.yaml", gadget)
        assert read_metadata(path) == {"kind": "example41", "threshold": "47", "provenance": {"eps": "1/2"}}

    def test_nested_provenance(self, tmp_path):
        gadget = gen_mr_gadget(ThreePartitionInput(m=1, b=4, elements=(1, 1, 2)), certificate=[(1, 1, 2)])
        path = write_metadata(tmp_path / "mr.meta.yaml", gadget)
        assert read_metadata(path) == metadata(gadget)


class TestSweepFiles:
    """Tests for YAML sweep descriptions."""

    def test_read_sweep(self, tmp_path):
        path = tmp_path / "sweep.yaml"
        path.write_text(
            "seed: 5\n"
            "budget: 1000\n"
            "cases:\n"
            "  - family: random\n"
            "    count: 3\n"
            "    m: [2]\n"
            "  - family: lb\n"
            "    c: [2]\n"
            "    eps: 1/100\n"
        )
        spec = read_sweep(path)
        assert spec.seed == 5
        assert spec.budget == 1000
        assert spec.cases[0].m == (2,)
        assert spec.cases[1].eps == Fraction(1, 100)

    def test_unknown_family(self, tmp_path):
        path = tmp_path / "sweep.yaml"
        path.write_text("cases:\n  - family: nope\n")
        with pytest.raises(ValidationError):
            read_sweep(path)
