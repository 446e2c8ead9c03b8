"""Unit tests for partition_sched.reductions: the lower-bound families, the
hardness gadgets and the random generator."""

from fractions import Fraction

import networkx as nx
import pytest

from partition_sched.core import objective, validate_instance, validate_schedule
from partition_sched.errors import GeneratorError
from partition_sched.models import GadgetKind, Graph, ThreePartitionInput
from partition_sched.reductions import (
    all_three_partition_inputs,
    gen_example41,
    gen_lb_family,
    gen_mr_gadget,
    gen_partition2_gadget,
    gen_random,
    gen_unmovable_gadget,
    lb_family_values,
    map_to_unrelated,
    mr_threshold,
    mr_witness,
    small_graphs,
    validate_three_partition,
    z_a,
    z_feas,
)
from partition_sched.tools.io import to_json


def _tp(m, b, *elements):
    return ThreePartitionInput(m=m, b=b, elements=elements)


# ---------------------------------------------------------------------------
# SPT-available families
# ---------------------------------------------------------------------------


class TestExample41:
    """Tests for the two-machine example family."""

    def test_shape(self):
        gadget = gen_example41(Fraction(1, 2))
        inst = gadget.instance
        assert inst.n == 12
        assert inst.machine_count == 2
        assert inst.resource_count == 3
        assert validate_instance(inst).ok
        assert gadget.kind == GadgetKind.example41

    def test_threshold(self):
        assert gen_example41(Fraction(1, 2)).threshold == 47
        assert gen_example41(1).threshold == 52

    def test_provenance(self):
        assert gen_example41(Fraction(1, 2)).provenance == {"eps": "1/2"}

    def test_rejects_non_positive_eps(self):
        with pytest.raises(GeneratorError):
            gen_example41(0)


class TestLbFamily:
    """Tests for the 4/3 lower-bound family."""

    def test_shape(self):
        inst = gen_lb_family(2, Fraction(1, 100)).instance
        assert inst.resource_count == 7
        assert inst.n == 12
        assert inst.machine_count == 3

    def test_closed_forms(self):
        alg, opt = lb_family_values(2, Fraction(1, 100))
        assert alg == Fraction(4221, 100)
        assert opt == Fraction(3321, 100)
        assert alg / opt > Fraction(5, 4)

    def test_ratio_grows_with_c(self):
        eps = Fraction(1, 100)
        alg2, opt2 = lb_family_values(2, eps)
        alg4, opt4 = lb_family_values(4, eps)
        assert alg4 / opt4 > alg2 / opt2
        assert alg4 / opt4 < 2 - Fraction(1, 3)

    def test_threshold_is_the_optimum(self):
        eps = Fraction(1, 100)
        assert gen_lb_family(4, eps).threshold == lb_family_values(4, eps)[1]

    def test_rejects_odd_c(self):
        with pytest.raises(GeneratorError, match="even"):
            gen_lb_family(3, Fraction(1, 100))


# ---------------------------------------------------------------------------
# 3-PARTITION gadgets
# ---------------------------------------------------------------------------


class TestThreePartitionInputs:
    """Tests for input validation and enumeration."""

    def test_valid(self):
        assert validate_three_partition(_tp(1, 4, 1, 1, 2)) == []

    def test_element_out_of_range(self):
        problems = validate_three_partition(_tp(1, 6, 1, 2, 3))
        assert any("outside [b/4, b/2]" in p for p in problems)

    def test_wrong_sum(self):
        assert validate_three_partition(_tp(1, 4, 1, 1, 1))

    def test_only_multiset_for_m2_b4(self):
        inputs = all_three_partition_inputs(2, 4)
        assert [tp.elements for tp in inputs] == [(1, 1, 1, 1, 2, 2)]

    def test_invalid_input_raises(self):
        with pytest.raises(GeneratorError, match="invalid 3-PARTITION input"):
            gen_unmovable_gadget(_tp(1, 4, 1, 1, 1))


class TestMrGadget:
    """Tests for the machine-subset gadget."""

    def test_shape(self):
        gadget = gen_mr_gadget(_tp(1, 4, 1, 1, 2))
        inst = gadget.instance
        assert inst.n == 13
        assert inst.machine_count == 2
        assert inst.resource_count == 5
        assert validate_instance(inst).ok
        assert gadget.witness is None

    def test_threshold(self):
        assert gen_mr_gadget(_tp(1, 4, 1, 1, 2)).threshold == mr_threshold(1, 4) == 3248

    def test_witness(self):
        gadget = gen_mr_gadget(_tp(1, 4, 1, 1, 2), certificate=[(1, 1, 2)])
        inst, witness = gadget.instance, gadget.witness
        assert validate_schedule(inst, witness).ok
        assert z_a(gadget, witness) == 7
        assert z_feas(gadget, witness) == objective(inst, witness) == 3247
        assert objective(inst, witness) <= gadget.threshold
        assert gadget.provenance["certificate"] == [[1, 1, 2]]

    def test_two_groups(self):
        tp = _tp(2, 4, 1, 1, 1, 1, 2, 2)
        gadget = gen_mr_gadget(tp, certificate=[(1, 1, 2), (2, 1, 1)])
        assert gadget.instance.machine_count == 4
        assert validate_schedule(gadget.instance, gadget.witness).ok
        assert objective(gadget.instance, gadget.witness) <= gadget.threshold

    def test_bad_certificate(self):
        gadget = gen_mr_gadget(_tp(1, 4, 1, 1, 2))
        with pytest.raises(GeneratorError):
            mr_witness(gadget, [(2, 2, 0)])

    def test_map_to_unrelated(self):
        gadget = gen_mr_gadget(_tp(1, 4, 1, 1, 2), certificate=[(1, 1, 2)])
        mapped = map_to_unrelated(gadget, gadget.threshold)
        inst = mapped.instance
        assert mapped.kind == GadgetKind.unrelated_mapped
        assert inst.machine_subsets is None
        assert validate_instance(inst).ok
        d_job = gadget.provenance["groups"][0]["d_job"]
        assert inst.unrelated_times[0][d_job] == gadget.threshold
        assert inst.unrelated_times[1][d_job] == inst.job_map()[d_job].p
        assert objective(inst, mapped.witness) == objective(gadget.instance, gadget.witness)

    def test_map_to_unrelated_rejects_small_t(self):
        gadget = gen_mr_gadget(_tp(1, 4, 1, 1, 2))
        with pytest.raises(GeneratorError, match="below the threshold"):
            map_to_unrelated(gadget, 10)


class TestUnmovableGadget:
    """Tests for the unmovable-resource gadget."""

    def test_shape(self):
        gadget = gen_unmovable_gadget(_tp(2, 4, 1, 1, 2, 2, 1, 1))
        inst = gadget.instance
        assert inst.unmovable
        assert inst.n == 8
        assert inst.machine_count == 2
        assert gadget.threshold == 20
        assert all(job.p == 1 for job in inst.jobs)


# ---------------------------------------------------------------------------
# Edge-colouring gadget
# ---------------------------------------------------------------------------


class TestPartition2Gadget:
    """Tests for the edge-colouring gadget."""

    def test_kite(self):
        g = Graph(vertex_count=4, edges=((0, 1), (0, 2), (0, 3), (1, 3), (2, 3)))
        gadget = gen_partition2_gadget(g)
        inst = gadget.instance
        assert inst.machine_count == 5
        assert sum(1 for j in inst.jobs if j.resources) == 5
        assert sum(1 for j in inst.jobs if not j.resources) == 10
        assert gadget.threshold == 30
        assert validate_instance(inst).ok

    def test_rejects_loops(self):
        with pytest.raises(GeneratorError):
            gen_partition2_gadget(Graph(vertex_count=2, edges=((1, 1),)))

    def test_small_graphs(self):
        graphs = small_graphs(4)
        assert len(graphs) == 10
        assert all(g.edges for g in graphs)
        assert all(min(g.degrees()) > 0 for g in graphs)

    def test_degrees_match_networkx(self):
        for g in small_graphs(5):
            h = nx.Graph()
            h.add_nodes_from(range(g.vertex_count))
            h.add_edges_from(g.edges)
            assert g.degrees() == [d for _, d in sorted(h.degree())]
            assert g.max_degree == max(d for _, d in h.degree())


# ---------------------------------------------------------------------------
# gen_random
# ---------------------------------------------------------------------------


class TestGenRandom:
    """Tests for the seeded random generator."""

    def test_deterministic(self):
        a = gen_random(2, 6, 3, 4, seed=7).instance
        b = gen_random(2, 6, 3, 4, seed=7).instance
        assert to_json(a) == to_json(b)

    def test_ranges(self):
        inst = gen_random(3, 8, 4, 3, seed=1).instance
        assert validate_instance(inst).ok
        assert all(1 <= job.p <= 3 for job in inst.jobs)
        assert all(len(job.resources) == 1 for job in inst.jobs)

    def test_two_resources_per_job(self):
        inst = gen_random(2, 5, 4, 2, q=2, seed=2).instance
        assert validate_instance(inst).ok
        assert all(len(job.resources) == 2 for job in inst.jobs)

    def test_restrict_machines(self):
        inst = gen_random(3, 5, 3, 1, seed=4, restrict_machines=True).instance
        assert validate_instance(inst).ok
        assert set(inst.machine_subsets) == {0, 1, 2}

    def test_capacity(self):
        inst = gen_random(2, 5, 3, 1, seed=4, capacity=2).instance
        assert inst.capacities == (2, 2, 2)

    def test_restrict_needs_single_resources(self):
        with pytest.raises(GeneratorError):
            gen_random(2, 5, 3, 1, q=2, restrict_machines=True)
