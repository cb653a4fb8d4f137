"""Exact per-cell probabilities, process probabilities and Monte-Carlo sampling."""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from .encoder import compilation_cells, parse_name
from .net import OccurrenceNet, PNet
from .processes import PersistentProcess, enumerate_maximal_processes
from .semantics import DEFAULT_BUDGET, CertReport, Engine, _Timer
from .structure import transactions

Weights = Mapping[tuple[str, str], Fraction]


def fraction_str(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Distribution:
    """Probability of each transaction, per cell (nested cells included)."""

    cells: Mapping[frozenset[str], Mapping[frozenset[str], Fraction]]

    @classmethod
    def from_cells(cls, cells: Mapping[frozenset[str], Mapping[frozenset[str], Fraction]]) -> Distribution:
        """Take per-cell maps as given; each must sum to exactly 1."""
        clean = {}
        for cell, dist in cells.items():
            dist = {frozenset(th): Fraction(p) for th, p in dist.items()}
            if any(p < 0 or p > 1 for p in dist.values()):
                raise ValueError(f"cell {sorted(cell)}: probabilities must lie in [0, 1]")
            if sum(dist.values()) != 1:
                raise ValueError(f"cell {sorted(cell)}: probabilities sum to {sum(dist.values())}")
            clean[frozenset(cell)] = dist
        return cls(clean)

    def get(self, cell: frozenset[str], theta: frozenset[str]) -> Fraction:
        return self.cells[cell][theta]

    def describe(self) -> dict:
        return {
            ",".join(sorted(c)): {",".join(sorted(th)): fraction_str(p) for th, p in sorted(d.items(), key=lambda kv: sorted(kv[0]))}
            for c, d in sorted(self.cells.items(), key=lambda kv: sorted(kv[0]))
        }


def uniform_weights(net: OccurrenceNet) -> dict[tuple[str, str], Fraction]:
    """Each place splits its weight evenly over its consumers."""
    out = {}
    for p in net.places:
        ts = sorted(net.postset(p))
        for t in ts:
            out[(p, t)] = Fraction(1, len(ts))
    return out


def random_weights(net: OccurrenceNet, seed: int, max_den: int = 6) -> dict[tuple[str, str], Fraction]:
    """Random positive rational weights summing to 1 at every place."""
    rng = random.Random(seed)
    out = {}
    for p in sorted(net.places):
        ts = sorted(net.postset(p))
        raw = [rng.randint(1, max_den) for _ in ts]
        for t, r in zip(ts, raw):
            out[(p, t)] = Fraction(r, sum(raw))
    return out


def check_weights(net: OccurrenceNet, weights: Weights) -> None:
    for (p, t) in weights:
        if (p, t) not in net.flow or p not in net.places:
            raise ValueError(f"weight given for {p}->{t}, which is not an arc from a place")
    for p in net.places:
        ts = net.postset(p)
        if not ts:
            continue
        missing = [t for t in ts if (p, t) not in weights]
        if missing:
            raise ValueError(f"no weight for arcs {p}->{', '.join(sorted(missing))}")
        total = sum(Fraction(weights[(p, t)]) for t in ts)
        if total != 1:
            raise ValueError(f"weights leaving {p} sum to {total}, not 1")


def local_distribution(net: OccurrenceNet, arc_weights: Weights) -> Distribution:
    """Weight each transaction by the product of its input arc weights, normalised per cell.

    Nested cells reuse the same arc weights and are normalised on their own.
    """
    check_weights(net, arc_weights)
    out = {}
    for key, cell in sorted(compilation_cells(net).items(), key=lambda kv: sorted(kv[0])):
        q = {}
        for th in transactions(cell):
            w = Fraction(1)
            for t in th.transitions:
                for p in net.preset(t):
                    w *= Fraction(arc_weights[(p, t)])
            q[th.transitions] = w
        total = sum(q.values())
        if total == 0:
            raise ValueError(f"cell {sorted(key)} has no transaction with positive weight")
        out[key] = {th: w / total for th, w in q.items()}
    return Distribution(out)


def quantities(net: OccurrenceNet, arc_weights: Weights) -> dict[frozenset[str], dict[frozenset[str], Fraction]]:
    """Unnormalised products of arc weights, per cell and transaction."""
    out = {}
    for key, cell in compilation_cells(net).items():
        out[key] = {}
        for th in transactions(cell):
            w = Fraction(1)
            for t in th.transitions:
                for p in net.preset(t):
                    w *= Fraction(arc_weights[(p, t)])
            out[key][th.transitions] = w
    return out


def transition_probability(dist: Distribution, t: str) -> Fraction:
    info = parse_name(t)
    if info is None:
        raise KeyError(f"unknown transition {t!r}")
    if info.kind in ("tx", "choice"):
        return dist.get(info.cell, info.theta)
    return Fraction(1)


def process_probability(proc: PersistentProcess, dist: Distribution) -> Fraction:
    out = Fraction(1)
    for t in proc.transitions:
        out *= transition_probability(dist, t)
    return out


def process_table(net: PNet, dist: Distribution, budget: int = DEFAULT_BUDGET) -> list[tuple[PersistentProcess, Fraction]]:
    return [(p, process_probability(p, dist)) for p in enumerate_maximal_processes(net, budget)]


def total_probability(net: PNet, dist: Distribution, budget: int = DEFAULT_BUDGET) -> CertReport:
    with _Timer() as tm:
        table = process_table(net, dist, budget)
        total = sum((q for _, q in table), Fraction(0))
    return CertReport(
        "total-probability",
        total == 1,
        None if total == 1 else {"sum": fraction_str(total)},
        len(table),
        tm.ms,
        {
            "sum": fraction_str(total),
            "processes": {p.id: fraction_str(q) for p, q in sorted(table, key=lambda x: x[0].id)},
        },
    )


class Sampler:
    """Draws maximal runs. Choices among enabled transitions sharing a regular preset
    follow the distribution; everything else fires in canonical order."""

    def __init__(self, net: PNet, dist: Distribution):
        self.eng = Engine(net)
        self.prob = [float(transition_probability(dist, n)) for n in self.eng.names]

    def run(self, rng: random.Random) -> list[str]:
        eng = self.eng
        s = eng.initial()
        seq: list[int] = []
        while True:
            en = eng.enabled(s)
            if not en:
                break
            groups: dict[frozenset[str], list[int]] = defaultdict(list)
            for i in en:
                groups[eng.reg_sets[i]].append(i)
            for key in sorted(groups, key=sorted):
                members = groups[key]
                if len(members) == 1 or not key:
                    pick = members[0]
                else:
                    weights = [self.prob[i] for i in members]
                    pick = rng.choices(members, weights)[0]
                s = eng.fire(s, pick)
                seq.append(pick)
                # other groups stay enabled: presets are disjoint or equal
                break
        return [eng.names[i] for i in seq]


def sample_run(net: PNet, dist: Distribution, seed: int | random.Random) -> tuple[list[str], str]:
    """One maximal run and the id of the process it belongs to."""
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    run = Sampler(net, dist).run(rng)
    return run, ";".join(sorted(run))


def sample_frequencies(net: PNet, dist: Distribution, samples: int, seed: int) -> dict[str, float]:
    rng = random.Random(seed)
    sampler = Sampler(net, dist)
    counts: dict[str, int] = defaultdict(int)
    for _ in range(samples):
        counts[";".join(sorted(sampler.run(rng)))] += 1
    return {k: v / samples for k, v in sorted(counts.items())}


def parse_weights(data: Mapping[str, str]) -> dict[tuple[str, str], Fraction]:
    """Read ``{"p->t": "num/den"}``; the arrow may also be written as a unicode arrow."""
    out = {}
    for key, val in data.items():
        arrow = "→" if "→" in key else "->"
        if arrow not in key:
            raise ValueError(f"weight key {key!r} should look like 'place->transition'")
        p, t = (x.strip() for x in key.split(arrow, 1))
        out[(p, t)] = Fraction(str(val))
    return out


def weights_to_json(weights: Weights) -> dict[str, str]:
    return {f"{p}->{t}": fraction_str(Fraction(w)) for (p, t), w in sorted(weights.items())}


def events_of(proc: PersistentProcess) -> frozenset[str]:
    from .encoder import dec

    return frozenset().union(*(dec(t) for t in proc.transitions)) if proc.transitions else frozenset()


def ordered_table(table: Iterable[tuple[PersistentProcess, Fraction]]) -> list[dict]:
    return [
        {"process": p.id, "events": sorted(events_of(p)), "probability": fraction_str(q)}
        for p, q in sorted(table, key=lambda x: x[0].id)
    ]
