import json
from itertools import permutations

import pytest

from conftest import FIXTURES, main_corpus
from deconfuse.encoder import expand_transactions, uniformed
from deconfuse.fixtures import net_a, net_b, net_d
from deconfuse.net import OccurrenceNet, PNet, as_pnet
from deconfuse.processes import (
    FALSE,
    TRUE,
    PersistentProcess,
    cause_formula,
    check_complete_concurrency,
    enumerate_maximal_processes,
    event_order,
    f_and,
    f_or,
    f_var,
    formula_str,
    is_legal,
    linearizations,
    minimize,
)

M = json.loads((FIXTURES / "NET-B.names.json").read_text())


def df_process():
    """The process of compiled NET-B where d and f fire and b is caused either way."""
    procs = enumerate_maximal_processes(uniformed(net_b(), prune_net=True))
    return next(p for p in procs if {M["t_d"], M["t_f"]} <= p.transitions)


class TestFormulas:
    def test_absorption(self):
        ab, a = frozenset("ab"), frozenset("a")
        assert minimize([ab, a]) == {a}

    def test_and_or(self):
        x, y, z = f_var("x"), f_var("y"), f_var("z")
        f = f_and(f_or(x, y), z)
        assert f == {frozenset("xz"), frozenset("yz")}
        assert f_and(TRUE, x) == x and f_or(FALSE, x) == x
        assert formula_str(f) == "(x & z) | (y & z)"
        assert formula_str(TRUE) == "true" and formula_str(FALSE) == "false"


class TestEnumeration:
    def test_net_a(self):
        procs = enumerate_maximal_processes(uniformed(net_a(), prune_net=True))
        assert len(procs) == 3
        orders = [event_order(p) for p in procs]
        assert sorted(map(sorted, orders)) == [[("a", "b")], [("a", "c")], [("d", "b")]]

    def test_chain(self):
        net = OccurrenceNet.build({"a": (["1"], ["2"]), "b": (["2"], ["3"])})
        assert len(enumerate_maximal_processes(uniformed(net, prune_net=True))) == 1

    def test_net_b(self):
        procs = enumerate_maximal_processes(uniformed(net_b(), prune_net=True))
        assert len(procs) == 5
        assert len({p.transitions for p in procs}) == 5

    def test_processes_are_conflict_free_on_regular_places(self):
        for _, n in main_corpus()[:40]:
            net = uniformed(n, prune_net=True)
            for p in enumerate_maximal_processes(net):
                consumed = [q for t in p.transitions for q in p.pre[t] if q in net.regular]
                assert len(consumed) == len(set(consumed))


class TestCauses:
    def test_or_causes_of_b(self):
        p = df_process()
        assert cause_formula(p, M["t_b"]) == {
            frozenset({M["t_3"], M["t_d"]}),
            frozenset({M["t_8"], M["t_f"]}),
        }
        assert cause_formula(p, M["t_3"]) == f_var(M["t_d"])
        assert cause_formula(p, M["t_8"]) == f_var(M["t_f"])

    def test_initial_place(self):
        p = df_process()
        assert cause_formula(p, "2") == TRUE

    def test_unknown_node(self):
        with pytest.raises(KeyError):
            cause_formula(df_process(), "zzz")


class TestLegal:
    def test_examples(self):
        p = df_process()
        assert is_legal(p, [M["t_d"], M["t_3"], M["t_b"]])
        assert not is_legal(p, [M["t_b"]])

    def test_b_before_a_in_net_a(self):
        procs = enumerate_maximal_processes(uniformed(net_a(), prune_net=True))
        p = next(p for p in procs if "tx:2,3/b/b,c" in p.transitions)
        assert not is_legal(p, ["tx:2,3/b/b,c", "tx:1/a/a,d"])
        assert is_legal(p, ["tx:1/a/a,d", "tx:2,3/b/b,c"])

    def test_bad_input(self):
        p = df_process()
        with pytest.raises(ValueError):
            is_legal(p, [M["t_d"], M["t_d"]])
        with pytest.raises(ValueError):
            is_legal(p, ["nope"])


def _brute_legal_equals_firable(proc):
    """Compare legality with firing over every permutation of every subset size."""
    net = proc.as_pnet()
    from deconfuse.semantics import NotEnabled, fire, initial_state

    ts = sorted(proc.transitions)
    for k in range(len(ts) + 1):
        for seq in permutations(ts, k):
            s = initial_state(net)
            firable = True
            for t in seq:
                try:
                    s = fire(s, t, net)
                except NotEnabled:
                    firable = False
                    break
            if firable != is_legal(proc, list(seq)):
                return seq
    return None


class TestCompleteConcurrency:
    def test_net_a(self):
        for p in enumerate_maximal_processes(uniformed(net_a(), prune_net=True)):
            assert check_complete_concurrency(p).verdict

    def test_empty_process(self):
        net = PNet.build({}, [])
        p = PersistentProcess.from_fired(net, [])
        assert check_complete_concurrency(p).verdict

    def test_against_permutations(self):
        for p in enumerate_maximal_processes(uniformed(net_b(), prune_net=True)):
            assert check_complete_concurrency(p).verdict
            assert _brute_legal_equals_firable(p) is None

    def test_small_corpus_by_permutations(self):
        for _, n in main_corpus()[:25]:
            for p in enumerate_maximal_processes(uniformed(n, prune_net=True)):
                if len(p.transitions) <= 6:
                    assert _brute_legal_equals_firable(p) is None

    def test_detects_a_mismatch(self):
        # b and c both consume place 2, so after b the legal c cannot fire
        net = as_pnet(net_a())
        p = PersistentProcess.from_fired(net, ["a", "b", "c"])
        assert not check_complete_concurrency(p).verdict


class TestLinearizations:
    def test_concurrent(self):
        net = PNet.build({"a": (["1"], ["3"]), "b": (["2"], ["4"])}, ["1", "2"])
        p = PersistentProcess.from_fired(net, ["a", "b"])
        assert linearizations(p) == {("a", "b"), ("b", "a")}

    def test_b_after_3_or_8(self):
        for seq in linearizations(df_process()):
            i = seq.index(M["t_b"])
            assert M["t_3"] in seq[:i] or M["t_8"] in seq[:i]

    def test_expanded_net_d_interleaves(self):
        net = expand_transactions(uniformed(net_d(), prune_net=True), net_d())
        tbc = "tx:1,2/b,c/a,b,c"
        p = next(p for p in enumerate_maximal_processes(net) if f"b@{tbc}" in p.transitions)
        assert any(
            seq.index(f"b@{tbc}") < seq.index("tx:3/d/d") < seq.index(f"c@{tbc}") for seq in linearizations(p)
        )
