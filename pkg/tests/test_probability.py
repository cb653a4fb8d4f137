import random
from collections import defaultdict
from fractions import Fraction as F

import pytest

from conftest import main_corpus
from deconfuse.encoder import uniformed
from deconfuse.fixtures import NET_C_WEIGHTS, concurrent_pair, net_b, net_c
from deconfuse.net import OccurrenceNet
from deconfuse.probability import (
    Distribution,
    check_weights,
    local_distribution,
    parse_weights,
    process_probability,
    process_table,
    quantities,
    random_weights,
    sample_frequencies,
    sample_run,
    total_probability,
    transition_probability,
    uniform_weights,
    weights_to_json,
)
from deconfuse.processes import PersistentProcess, enumerate_maximal_processes
from deconfuse.semantics import Engine

B_UNIFORM = [F(1, 4), F(1, 8), F(1, 8), F(1, 4), F(1, 4)]


def b_dist():
    return local_distribution(net_b(), uniform_weights(net_b()))


class TestLocal:
    def test_net_c(self):
        q = quantities(net_c(), NET_C_WEIGHTS)[frozenset("ab")]
        assert q == {frozenset("a"): F(1, 9), frozenset("b"): F(4, 9)}
        d = local_distribution(net_c(), NET_C_WEIGHTS)
        assert d.get(frozenset("ab"), frozenset("a")) == F(1, 5)
        assert d.get(frozenset("ab"), frozenset("b")) == F(4, 5)

    def test_singleton_cell(self):
        d = local_distribution(concurrent_pair(), uniform_weights(concurrent_pair()))
        assert d.get(frozenset("a"), frozenset("a")) == 1

    def test_net_b_uniform(self):
        d = b_dist().describe()
        assert d["a,d"] == {"a": "1/2", "d": "1/2"}
        assert d["e,f"] == {"e": "1/2", "f": "1/2"}
        assert d["b,c,g"] == {"b,g": "1/2", "c": "1/2"}
        # nested cells have a single transaction
        assert d["b"] == {"b": "1/1"} and d["g"] == {"g": "1/1"}

    def test_weights_must_sum_to_one(self):
        w = dict(NET_C_WEIGHTS)
        w[("1", "a")] = F(1, 2)
        with pytest.raises(ValueError):
            local_distribution(net_c(), w)

    def test_zero_weight_cell(self):
        w = {("1", "a"): F(0), ("1", "b"): F(1), ("2", "a"): F(1), ("2", "b"): F(0)}
        with pytest.raises(ValueError):
            local_distribution(net_c(), w)

    def test_unknown_arc(self):
        with pytest.raises(ValueError):
            check_weights(net_c(), {("3", "a"): F(1)})

    def test_from_cells(self):
        with pytest.raises(ValueError):
            Distribution.from_cells({frozenset("ab"): {frozenset("a"): F(1, 2)}})
        d = Distribution.from_cells({frozenset("ab"): {frozenset("a"): F(1, 3), frozenset("b"): F(2, 3)}})
        assert d.get(frozenset("ab"), frozenset("b")) == F(2, 3)


class TestTransitionProbability:
    def test_examples(self):
        d = b_dist()
        assert transition_probability(d, "prop:2,3,8/3/b,c,g") == 1
        assert transition_probability(d, "tx:2,3,8/b,g/b,c,g") == F(1, 2)
        assert transition_probability(d, "tx:2/b/b") == 1

    def test_unknown(self):
        with pytest.raises(KeyError):
            transition_probability(b_dist(), "b")


class TestProcesses:
    def test_net_b_uniform(self):
        table = process_table(uniformed(net_b(), prune_net=True), b_dist())
        assert sorted(q for _, q in table) == sorted(B_UNIFORM)
        df = next(p for p, _ in table if "tx:1/d/a,d" in p.transitions and "tx:7/f/e,f" in p.transitions)
        assert process_probability(df, b_dist()) == F(1, 4)

    def test_empty_process(self):
        net = uniformed(net_b(), prune_net=True)
        assert process_probability(PersistentProcess.from_fired(net, []), b_dist()) == 1

    def test_total(self):
        rep = total_probability(uniformed(net_b(), prune_net=True), b_dist())
        assert rep.verdict and rep.details["sum"] == "1/1"

    def test_deterministic_net(self):
        net = OccurrenceNet.build({"a": (["1"], ["2"]), "b": (["2"], ["3"])})
        d = local_distribution(net, uniform_weights(net))
        assert total_probability(uniformed(net, prune_net=True), d).verdict

    def test_random_weights_sum_to_one(self):
        for s, n in main_corpus()[:50]:
            d = local_distribution(n, random_weights(n, s))
            assert total_probability(uniformed(n, prune_net=True), d).verdict


def exact_outcomes(net, dist):
    """Probability of each maximal fired set under the sampler's policy, by dynamic programming."""
    eng = Engine(net)
    prob = [transition_probability(dist, n) for n in eng.names]
    out: dict[str, F] = defaultdict(F)
    frontier = {(eng.initial(), ()): F(1)}
    while frontier:
        nxt: dict = defaultdict(F)
        for (s, run), p in frontier.items():
            en = eng.enabled(s)
            if not en:
                out[";".join(sorted(run))] += p
                continue
            groups = defaultdict(list)
            for i in en:
                groups[eng.reg_sets[i]].append(i)
            key = min(groups, key=sorted)
            members = groups[key]
            if len(members) == 1 or not key:
                choices = [(members[0], F(1))]
            else:
                total = sum(prob[i] for i in members)
                choices = [(i, prob[i] / total) for i in members]
            for i, q in choices:
                if q:
                    nxt[(eng.fire(s, i), run + (eng.names[i],))] += p * q
        frontier = nxt
    return dict(out)


class TestSampling:
    def test_seeded_run_is_reproducible(self):
        net = uniformed(net_b(), prune_net=True)
        assert sample_run(net, b_dist(), 7) == sample_run(net, b_dist(), 7)
        run, pid = sample_run(net, b_dist(), random.Random(7))
        assert pid == ";".join(sorted(run))

    def test_policy_matches_exact_probabilities(self):
        for s, n in list(main_corpus()[:20]) + [(0, net_b())]:
            net = uniformed(n, prune_net=True)
            d = local_distribution(n, random_weights(n, s))
            table = {p.id: q for p, q in process_table(net, d)}
            got = {k: v for k, v in exact_outcomes(net, d).items() if v}
            assert got == {k: v for k, v in table.items() if v}

    def test_net_c(self):
        net = uniformed(net_c(), prune_net=True)
        freq = sample_frequencies(net, local_distribution(net_c(), NET_C_WEIGHTS), 20_000, 5)
        assert abs(freq["tx:1,2/a/a,b"] - 0.2) < 0.015


def test_weights_json_round_trip():
    w = uniform_weights(net_b())
    assert parse_weights(weights_to_json(w)) == w
    assert parse_weights({"1→a": "1/3"}) == {("1", "a"): F(1, 3)}
    with pytest.raises(ValueError):
        parse_weights({"1a": "1"})
