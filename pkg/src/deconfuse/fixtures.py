"""Small reference nets used by the tests, the CLI and the README."""

from __future__ import annotations

from fractions import Fraction

from .encoder import DynamicPNet, DynTransition
from .net import Bag, OccurrenceNet, PNet


def net_a() -> OccurrenceNet:
    """Asymmetric confusion: b and c compete for 2, c also waits for a."""
    return OccurrenceNet.build(
        {
            "a": (["1"], ["3"]),
            "d": (["1"], ["6"]),
            "b": (["2"], ["4"]),
            "c": (["2", "3"], ["5"]),
        }
    )


def net_b() -> OccurrenceNet:
    """Symmetric confusion at {2,3,8} with OR-causes for b."""
    return OccurrenceNet.build(
        {
            "a": (["1"], ["3"]),
            "d": (["1"], ["6"]),
            "e": (["7"], ["8"]),
            "f": (["7"], ["9"]),
            "b": (["2"], ["4"]),
            "c": (["2", "3", "8"], ["5"]),
            "g": (["8"], ["10"]),
        }
    )


def net_c() -> OccurrenceNet:
    """Free choice between a and b, both consuming 1 and 2."""
    return OccurrenceNet.build({"a": (["1", "2"], ["3"]), "b": (["1", "2"], ["4"])})


NET_C_WEIGHTS = {
    ("1", "a"): Fraction(1, 3),
    ("1", "b"): Fraction(2, 3),
    ("2", "a"): Fraction(1, 3),
    ("2", "b"): Fraction(2, 3),
}


def net_d() -> OccurrenceNet:
    """A cell whose transaction {b, c} is sequential, next to an independent d."""
    return OccurrenceNet.build(
        {
            "a": (["1", "2"], ["6"]),
            "b": (["2"], ["4"]),
            "c": (["1", "4"], ["7"]),
            "d": (["3"], ["5"]),
        }
    )


def concurrent_pair() -> OccurrenceNet:
    return OccurrenceNet.build({"a": (["1"], ["3"]), "b": (["2"], ["4"])})


def dynamic_example() -> DynamicPNet:
    """A dynamic net where firing the negative transition releases a nested one."""
    inner = DynTransition("t_b", frozenset({"2"}), DynamicPNet(frozenset(), Bag.of(["4"])))
    t3 = DynTransition(
        "t_3", frozenset({"neg:3"}), DynamicPNet(frozenset({inner}), Bag.of((), ["neg:5"]))
    )
    tc = DynTransition(
        "t_c", frozenset({"2", "3"}), DynamicPNet(frozenset(), Bag.of(["5"], ["neg:4"]))
    )
    return DynamicPNet(frozenset({t3, tc}), Bag.of(["2"], ["neg:3"]))


def persistent_example() -> PNet:
    """Marked p-net where a and b both feed the persistent place 4."""
    return PNet.build(
        {
            "a": (["1"], ["4"]),
            "b": (["2"], ["4"]),
            "c": (["3", "4"], ["6"]),
            "d": (["4", "5"], ["7"]),
        },
        initial=["1", "2", "3", "5"],
        persistent=["4"],
    )


GOLDEN = {"NET-A": net_a, "NET-B": net_b, "NET-C": net_c, "NET-D": net_d}
