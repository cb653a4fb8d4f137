"""Seeded random occurrence nets for property tests."""

from __future__ import annotations

import random

from .net import OccurrenceNet


def generate_random_net(seed: int, max_transitions: int = 8, max_width: int = 3) -> OccurrenceNet:
    """Layered random occurrence net, valid by construction and fixed by ``seed``.

    Each new transition consumes a set of pairwise concurrent existing places and
    produces fresh ones, so there are no cycles, no backward conflicts and no
    self-conflicts.
    """
    if max_transitions < 1 or max_width < 1:
        raise ValueError("bounds must be at least 1")
    rng = random.Random(seed)
    n_trans = rng.randint(1, max_transitions) if max_transitions > 1 else 1
    places: list[str] = []
    # ancestor transitions (reflexive for transitions) of every node
    anc: dict[str, frozenset[str]] = {}
    consumers: dict[str, list[str]] = {}
    trans: dict[str, tuple[list[str], list[str]]] = {}

    def new_place(producer: str | None) -> str:
        p = f"p{len(places) + 1}"
        places.append(p)
        anc[p] = anc[producer] if producer else frozenset()
        consumers[p] = []
        return p

    def conflict(x: str, y: str) -> bool:
        for t1 in anc[x]:
            for t2 in anc[y]:
                if t1 != t2 and set(trans[t1][0]) & set(trans[t2][0]):
                    return True
        return False

    def concurrent(x: str, y: str) -> bool:
        # places x, y: neither causally before the other and not in conflict
        below_y = {p for t in anc[y] for p in trans[t][0]}
        below_x = {p for t in anc[x] for p in trans[t][0]}
        return x not in below_y and y not in below_x and not conflict(x, y)

    for _ in range(rng.randint(1, max_width)):
        new_place(None)

    for k in range(n_trans):
        t = f"t{k + 1}"
        width = rng.randint(1, max_width)
        pool = places[:]
        rng.shuffle(pool)
        # favour unconsumed places so nets grow in depth, but allow sharing
        pool.sort(key=lambda p: bool(consumers[p]) and rng.random() < 0.6)
        pre: list[str] = []
        for p in pool:
            if len(pre) == width:
                break
            if all(concurrent(p, q) for q in pre):
                pre.append(p)
        trans[t] = (pre, [])
        anc[t] = frozenset({t}).union(*(anc[p] for p in pre))
        for p in pre:
            consumers[p].append(t)
        post = [new_place(t) for _ in range(rng.randint(1, max_width))]
        trans[t] = (pre, post)
    return OccurrenceNet.build({t: (pre, post) for t, (pre, post) in trans.items()})


def corpus(count: int, max_transitions: int, max_width: int = 3, start: int = 0) -> list[tuple[int, OccurrenceNet]]:
    return [(s, generate_random_net(s, max_transitions, max_width)) for s in range(start, start + count)]
