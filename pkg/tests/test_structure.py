from itertools import combinations

import pytest

from conftest import main_corpus
from deconfuse.fixtures import concurrent_pair, net_a, net_b, net_d
from deconfuse.net import OccurrenceNet, minimal_places
from deconfuse.structure import (
    compute_relations,
    ominus,
    scell_decomposition,
    to_pes,
    transactions,
)


def cell_sets(net):
    return {c.transitions for c in scell_decomposition(net)}


def cell_named(net, key):
    return next(c for c in scell_decomposition(net) if c.key == key)


class TestRelations:
    def test_net_a(self):
        rel = compute_relations(net_a())
        assert rel.immediately_conflict("a", "d")
        assert rel.immediately_conflict("b", "c")
        assert rel.leq("a", "c")
        assert not rel.leq("c", "a")

    def test_single_transition(self):
        net = OccurrenceNet.build({"t": (["p"], ["q"])})
        rel = compute_relations(net)
        assert rel.immediate_conflict == frozenset()
        assert rel.causality_pairs() == {("p", "p"), ("t", "t"), ("q", "q"), ("p", "t"), ("t", "q"), ("p", "q")}

    def test_net_b(self):
        rel = compute_relations(net_b())
        assert rel.leq("e", "g")
        assert rel.immediately_conflict("c", "g")
        # conflict is inherited along causality: d # c because d #0 a and a <= c
        assert rel.in_conflict("d", "c")
        assert not rel.in_conflict("b", "g")

    def test_immediate_conflict_is_contained_in_conflict(self):
        for _, net in main_corpus()[:30]:
            rel = compute_relations(net)
            assert rel.immediate_conflict <= rel.conflict


class TestCells:
    def test_net_a(self):
        assert cell_sets(net_a()) == {frozenset("ad"), frozenset("bc")}

    def test_net_b(self):
        assert cell_sets(net_b()) == {frozenset("ad"), frozenset("ef"), frozenset("bcg")}

    def test_independent_transitions(self):
        assert cell_sets(concurrent_pair()) == {frozenset("a"), frozenset("b")}

    def test_cells_partition_transitions(self):
        for _, net in main_corpus():
            cells = scell_decomposition(net)
            seen = [t for c in cells for t in c.transitions]
            assert sorted(seen) == sorted(net.transitions)

    def test_cell_bounds(self):
        c3 = cell_named(net_b(), "b,c,g")
        assert c3.min == {"2", "3", "8"}
        assert c3.max == {"4", "5", "10"}


class TestOminus:
    def test_c3_minus_3(self):
        rest = ominus(cell_named(net_b(), "b,c,g").subnet, "3")
        assert rest.transitions == {"b", "g"}
        assert rest.places == {"2", "8", "4", "10"}
        assert cell_sets(rest) == {frozenset("b"), frozenset("g")}

    def test_c1_minus_1_is_empty(self):
        assert ominus(cell_named(net_b(), "a,d").subnet, "1").is_empty()

    def test_place_feeding_nothing(self):
        net = OccurrenceNet.build({"t": (["p"], ["q"])}, places=["r"])
        rest = ominus(net, "r")
        assert rest.transitions == net.transitions
        assert rest.places == net.places - {"r"}

    def test_non_minimal_place(self):
        with pytest.raises(ValueError):
            ominus(net_a(), "3")


def brute_transactions(cell):
    """Maximal conflict-free transition sets firable from the cell's initial places."""
    sub = cell.subnet
    start = minimal_places(sub)
    ts = sorted(sub.transitions)
    good = []
    for k in range(1, len(ts) + 1):
        for combo in combinations(ts, k):
            s = set(combo)
            pres = [p for t in s for p in sub.preset(t)]
            if len(pres) != len(set(pres)):
                continue  # two transitions consume the same place
            produced = {p for t in s for p in sub.postset(t)}
            if not all(sub.preset(t) <= start | produced for t in s):
                continue
            # acyclic net, so closure under presets is enough for firability
            good.append(frozenset(s))
    return {g for g in good if not any(g < h for h in good)}


class TestTransactions:
    def test_c3(self):
        assert {t.transitions for t in transactions(cell_named(net_b(), "b,c,g"))} == {
            frozenset("c"),
            frozenset("bg"),
        }

    def test_c1(self):
        assert {t.transitions for t in transactions(cell_named(net_b(), "a,d"))} == {frozenset("a"), frozenset("d")}

    def test_singleton_cell(self):
        cell = cell_named(concurrent_pair(), "a")
        (th,) = transactions(cell)
        assert th.transitions == {"a"} and th.min_places == {"1"} and th.max_places == {"3"}

    def test_net_d_sequential_transaction(self):
        ths = {t.transitions for t in transactions(cell_named(net_d(), "a,b,c"))}
        assert ths == {frozenset("a"), frozenset("bc")}

    def test_against_brute_force(self):
        for _, net in main_corpus():
            for cell in scell_decomposition(net):
                got = {t.transitions for t in transactions(cell)}
                assert got == brute_transactions(cell)


class TestPES:
    def test_net_a(self):
        pes = to_pes(net_a())
        assert pes.down("c") == {"a", "c"}
        assert pes.in_conflict("a", "d") and pes.in_conflict("d", "c")
        assert pes.immediate_conflict == {frozenset("ad"), frozenset("bc")}

    def test_conflict_free(self):
        assert to_pes(concurrent_pair()).conflict == frozenset()

    def test_net_b(self):
        pes = to_pes(net_b())
        assert pes.down("c") == {"a", "e", "c"}
        assert pes.immediate_conflict == {frozenset("ad"), frozenset("ef"), frozenset("bc"), frozenset("cg")}
        assert pes.inheritance_ok()

    def test_structural_variant_uses_shared_places(self):
        # in NET-D a and c share place 1, yet a # c is inherited from a #0 b
        assert frozenset("ac") not in to_pes(net_d()).immediate_conflict
        assert frozenset("ac") in to_pes(net_d(), structural=True).immediate_conflict

    def test_configurations(self):
        pes = to_pes(net_b())
        assert pes.is_configuration({"a", "e", "b", "g"})
        assert not pes.is_configuration({"c"})
        assert not pes.is_configuration({"a", "d"})
