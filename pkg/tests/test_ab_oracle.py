import pytest

from conftest import ab_corpus
from deconfuse.ab_oracle import (
    BranchingSemantics,
    check_correspondence,
    closure,
    configurations,
    future,
    initial_stopping_prefixes,
    is_stopping_prefix,
    iter_steps,
    maximal_configurations,
    realizing_run,
    recursively_stopped,
    stopping_prefixes,
)
from deconfuse.fixtures import concurrent_pair, net_a, net_b, net_d
from deconfuse.net import OccurrenceNet
from deconfuse.structure import to_pes


def fs(*sets):
    return {frozenset(s) for s in sets}


class TestStoppingPrefixes:
    def test_net_a(self):
        assert is_stopping_prefix(to_pes(net_a()), {"a", "d"})

    def test_trivial_prefixes(self):
        for net in (net_a(), net_b(), net_d()):
            pes = to_pes(net)
            assert is_stopping_prefix(pes, set())
            assert is_stopping_prefix(pes, pes.events)
            assert frozenset() in stopping_prefixes(pes)
            assert pes.events in stopping_prefixes(pes)

    def test_stopping_prefixes_match_definition(self):
        from itertools import combinations

        pes = to_pes(net_b())
        ev = sorted(pes.events)
        brute = {frozenset(c) for k in range(len(ev) + 1) for c in combinations(ev, k) if is_stopping_prefix(pes, c)}
        assert stopping_prefixes(pes) == brute

    def test_net_b_initial(self):
        assert initial_stopping_prefixes(to_pes(net_b())) == fs("ad", "ef")

    def test_conflict_free(self):
        assert initial_stopping_prefixes(to_pes(concurrent_pair())) == fs("a", "b")

    def test_closure(self):
        assert closure(to_pes(net_b()), {"g"}) == frozenset("abcdefg")


class TestFuture:
    def test_after_d(self):
        fut = future(to_pes(net_b()), {"d"})
        assert fut.events == frozenset("befg")
        assert initial_stopping_prefixes(fut) == fs("b", "ef")

    def test_after_a(self):
        fut = future(to_pes(net_b()), {"a"})
        assert "d" not in fut.events
        assert initial_stopping_prefixes(fut) == fs("ef")

    def test_after_a_e(self):
        fut = future(to_pes(net_b()), {"a", "e"})
        assert initial_stopping_prefixes(fut) == fs("bcg")

    def test_after_nothing(self):
        pes = to_pes(net_b())
        assert future(pes, set()) == pes

    def test_not_a_configuration(self):
        with pytest.raises(ValueError):
            future(to_pes(net_b()), {"c"})


class TestRecursivelyStopped:
    def test_net_b_decomposition(self):
        rs = recursively_stopped(to_pes(net_b()))
        chains = rs[frozenset("aebg")]
        assert (frozenset("a"), frozenset("e"), frozenset("bg")) in chains

    def test_b_alone_is_not_maximal(self):
        rs = recursively_stopped(to_pes(net_b()))
        assert frozenset("aeb") not in rs
        sem = BranchingSemantics(to_pes(net_b()))
        assert not sem.is_valid_chain([{"a"}, {"e"}, {"b"}])
        assert sem.is_valid_chain([{"a"}, {"e"}, {"b", "g"}])

    def test_empty(self):
        assert recursively_stopped(to_pes(net_b()))[frozenset()] == [()]

    def test_maximal_configurations(self):
        pes = to_pes(net_b())
        maxi = maximal_configurations(pes)
        assert frozenset("aebg") in maxi and frozenset("ace") in maxi
        assert all(pes.is_configuration(v) for v in configurations(pes))

    def test_iter_steps(self):
        assert list(iter_steps(to_pes(net_b()), set())) == [frozenset("a"), frozenset("d"), frozenset("e"), frozenset("f")]


class TestCorrespondence:
    def test_net_b(self):
        rep = check_correspondence(net_b())
        assert rep.verdict, rep.witness
        assert realizing_run(net_b(), [{"a"}, {"e"}, {"b", "g"}]) == [
            "tx:1/a/a,d",
            "tx:7/e/e,f",
            "tx:2,3,8/b,g/b,c,g",
        ]

    def test_net_a(self):
        assert check_correspondence(net_a()).verdict

    def test_single_transition(self):
        assert check_correspondence(OccurrenceNet.build({"t": (["p"], ["q"])})).verdict

    def test_invalid_chain_has_no_run(self):
        assert realizing_run(net_b(), [{"a"}, {"e"}, {"b"}]) is None

    def test_net_d_mismatch_under_derived_immediate_conflict(self):
        # a #0 b but not a #0 c in the event structure, so {b} is a step on its
        # own; the compiled net only fires b and c together as one transaction
        rep = check_correspondence(net_d())
        assert not rep.verdict
        parts = rep.details["parts"]
        assert parts == {
            "runs_to_decompositions": "fail",
            "decompositions_to_runs": "fail",
            "maximal_bijection": "pass",
        }
        assert rep.witness["runs_to_decompositions"]["step"] == ["b", "c"]

    def test_net_conflict_variant(self):
        for net in (net_a(), net_b(), net_d()):
            rep = check_correspondence(net, structural=True)
            assert rep.verdict, rep.witness
            assert rep.details["immediate_conflict"] == "net"

    def test_corpus_with_net_conflict(self):
        for _, n in ab_corpus():
            assert check_correspondence(n, structural=True).verdict

    def test_maximal_bijection_holds_on_corpus(self):
        for _, n in ab_corpus():
            rep = check_correspondence(n)
            assert rep.details["parts"]["maximal_bijection"] == "pass"
