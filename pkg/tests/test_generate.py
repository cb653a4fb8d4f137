import pytest

from deconfuse.generate import corpus, generate_random_net
from deconfuse.net import validate_occurrence_net


def test_single_transition():
    net = generate_random_net(5, 1, 1)
    assert len(net.transitions) == 1


def test_deterministic():
    assert generate_random_net(42, 10, 3) == generate_random_net(42, 10, 3)
    assert generate_random_net(1, 10, 3) != generate_random_net(2, 10, 3)


def test_bounds_respected():
    for seed in range(200):
        net = generate_random_net(seed, 7, 2)
        assert 1 <= len(net.transitions) <= 7
        assert all(len(net.preset(t)) <= 2 and len(net.postset(t)) <= 2 for t in net.transitions)


def test_sweep_is_valid():
    bad = [s for s in range(1000) if not validate_occurrence_net(generate_random_net(s, 12, 3)).ok]
    assert bad == []


def test_bad_bounds():
    with pytest.raises(ValueError):
        generate_random_net(0, 0, 3)


def test_corpus():
    c = corpus(3, 5, start=10)
    assert [s for s, _ in c] == [10, 11, 12]
