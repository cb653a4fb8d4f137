"""Core net values: bags, occurrence nets, p-nets and validation."""

from __future__ import annotations

import math
import re
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from functools import cached_property

INF = math.inf

# Characters reserved by the generated-name scheme.
_NAME_RE = re.compile(r"^[^\s,/@:'\"<>&]+$")


def fmt_count(n: float) -> str:
    return "inf" if n == INF else str(int(n))


class Bag(Mapping[str, float]):
    """Immutable bag over names with counts in the naturals plus infinity.

    Zero entries are never stored. Union adds counts; infinity absorbs both
    union and difference.
    """

    __slots__ = ("_counts", "_hash")

    def __init__(self, counts: Mapping[str, float] | Iterable[str] = ()):
        if isinstance(counts, Mapping):
            items = {k: v for k, v in counts.items() if v}
        else:
            items = {}
            for k in counts:
                items[k] = items.get(k, 0) + 1
        for k, v in items.items():
            if v < 0 or (v != INF and v != int(v)):
                raise ValueError(f"bad count {v!r} for {k!r}")
            if v != INF:
                items[k] = int(v)
        self._counts = items
        self._hash = None

    @classmethod
    def of(cls, regular: Iterable[str] = (), persistent: Iterable[str] = ()) -> Bag:
        counts: dict[str, float] = {p: 1 for p in regular}
        counts.update({p: INF for p in persistent})
        return cls(counts)

    def __getitem__(self, key: str) -> float:
        return self._counts.get(key, 0)

    def __contains__(self, key: object) -> bool:
        return key in self._counts

    def __iter__(self) -> Iterator[str]:
        return iter(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._counts.items()))
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Bag):
            return self._counts == other._counts
        return NotImplemented

    def __repr__(self) -> str:
        return f"Bag({self.to_dict()})"

    @property
    def support(self) -> frozenset[str]:
        return frozenset(self._counts)

    def to_dict(self) -> dict[str, str]:
        return {k: fmt_count(self._counts[k]) for k in sorted(self._counts)}

    def union(self, other: Mapping[str, float]) -> Bag:
        out = dict(self._counts)
        for k, v in other.items():
            out[k] = out.get(k, 0) + v
        return Bag(out)

    __add__ = union

    def difference(self, m: Mapping[str, float] | Iterable[str]) -> Bag:
        """Remove the finite multiset ``m``; infinite entries are unaffected."""
        m = m if isinstance(m, Mapping) else Bag(m)
        out = dict(self._counts)
        for k, v in m.items():
            if v == INF:
                raise ValueError("cannot subtract an infinite count")
            have = out.get(k, 0)
            if have == INF:
                continue
            if have < v:
                raise ValueError(f"{k!r} has {have} tokens, cannot remove {v}")
            out[k] = have - v
        return Bag(out)

    __sub__ = difference

    def covers(self, places: Iterable[str]) -> bool:
        return all(p in self._counts for p in places)

    def restrict(self, places: Iterable[str]) -> Bag:
        keep = set(places)
        return Bag({k: v for k, v in self._counts.items() if k in keep})


def check_name(name: str) -> bool:
    return bool(_NAME_RE.match(name))


# ---------------------------------------------------------------- occurrence nets


@dataclass(frozen=True)
class OccurrenceNet:
    """A finite net given by places, transitions, flow arcs and a set marking."""

    places: frozenset[str]
    transitions: frozenset[str]
    flow: frozenset[tuple[str, str]]
    initial: frozenset[str] = frozenset()

    @classmethod
    def build(
        cls,
        transitions: Mapping[str, tuple[Iterable[str], Iterable[str]]],
        initial: Iterable[str] | None = None,
        places: Iterable[str] = (),
    ) -> OccurrenceNet:
        """Build from ``{t: (preset, postset)}``; the marking defaults to the minimal places."""
        flow: set[tuple[str, str]] = set()
        all_places = set(places)
        for t, (pre, post) in transitions.items():
            for p in pre:
                flow.add((p, t))
                all_places.add(p)
            for p in post:
                flow.add((t, p))
                all_places.add(p)
        net = cls(frozenset(all_places), frozenset(transitions), frozenset(flow))
        marking = minimal_places(net) if initial is None else frozenset(initial)
        return cls(net.places, net.transitions, net.flow, marking)

    @cached_property
    def _pre(self) -> dict[str, frozenset[str]]:
        pre: dict[str, set[str]] = {n: set() for n in self.places | self.transitions}
        for x, y in self.flow:
            pre.setdefault(y, set()).add(x)
        return {k: frozenset(v) for k, v in pre.items()}

    @cached_property
    def _post(self) -> dict[str, frozenset[str]]:
        post: dict[str, set[str]] = {n: set() for n in self.places | self.transitions}
        for x, y in self.flow:
            post.setdefault(x, set()).add(y)
        return {k: frozenset(v) for k, v in post.items()}

    def preset(self, x: str) -> frozenset[str]:
        return self._pre.get(x, frozenset())

    def postset(self, x: str) -> frozenset[str]:
        return self._post.get(x, frozenset())

    @property
    def nodes(self) -> frozenset[str]:
        return self.places | self.transitions

    def is_empty(self) -> bool:
        return not self.places and not self.transitions

    def subnet(self, nodes: Iterable[str], marked: bool = True) -> OccurrenceNet:
        """Induced subnet on ``nodes``; keeps the marking restricted to it unless ``marked`` is false."""
        keep = frozenset(nodes)
        places = self.places & keep
        return OccurrenceNet(
            places,
            self.transitions & keep,
            frozenset((x, y) for x, y in self.flow if x in keep and y in keep),
            (self.initial & places) if marked else frozenset(),
        )

    def with_initial(self, marking: Iterable[str]) -> OccurrenceNet:
        return OccurrenceNet(self.places, self.transitions, self.flow, frozenset(marking))

    def describe(self) -> dict:
        return {
            "places": sorted(self.places),
            "transitions": {
                t: {"pre": sorted(self.preset(t)), "post": sorted(self.postset(t))}
                for t in sorted(self.transitions)
            },
            "initial": sorted(self.initial),
        }


EMPTY_NET = OccurrenceNet(frozenset(), frozenset(), frozenset())


def minimal_places(net: OccurrenceNet) -> frozenset[str]:
    return frozenset(p for p in net.places if not net.preset(p))


def maximal_places(net: OccurrenceNet) -> frozenset[str]:
    return frozenset(p for p in net.places if not net.postset(p))


def topological_order(net: OccurrenceNet) -> list[str] | None:
    """Nodes in a canonical topological order, or None if the flow has a cycle."""
    import heapq

    indeg = {n: len(net.preset(n)) for n in net.nodes}
    ready = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for m in net.postset(n):
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(ready, m)
    return order if len(order) == len(indeg) else None


@dataclass(frozen=True)
class Violation:
    kind: str
    nodes: tuple[str, ...]
    message: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "nodes": list(self.nodes), "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def validate_occurrence_net(net: OccurrenceNet) -> ValidationReport:
    out: list[Violation] = []
    clash = net.places & net.transitions
    for n in sorted(clash):
        out.append(Violation("names", (n,), f"{n!r} is both a place and a transition"))
    for n in sorted(net.nodes):
        if not check_name(n):
            out.append(Violation("names", (n,), f"name {n!r} uses a reserved character"))
    for x, y in sorted(net.flow):
        ok = (x in net.places and y in net.transitions) or (
            x in net.transitions and y in net.places
        )
        if not ok:
            out.append(Violation("flow", (x, y), f"arc {x}->{y} must join a place and a transition"))
    if out:
        return ValidationReport(tuple(out))

    if topological_order(net) is None:
        import networkx as nx

        g = nx.DiGraph(list(net.flow))
        cycle = nx.find_cycle(g)
        out.append(Violation("acyclic", tuple(e[0] for e in cycle), "flow relation has a cycle"))
    for p in sorted(net.places):
        if len(net.preset(p)) > 1:
            out.append(
                Violation("backward conflict", (p, *sorted(net.preset(p))), f"place {p} has several producers")
            )
    for t in sorted(net.transitions):
        if not net.preset(t) or not net.postset(t):
            out.append(Violation("arity", (t,), f"transition {t} needs a nonempty preset and postset"))
    extra = net.initial - net.places
    if extra:
        out.append(Violation("marking", tuple(sorted(extra)), "marked nodes are not places"))
    elif net.initial != minimal_places(net):
        diff = net.initial ^ minimal_places(net)
        out.append(Violation("marking", tuple(sorted(diff)), "initial marking must be the set of minimal places"))
    if not any(v.kind == "acyclic" for v in out):
        from .structure import self_conflicting

        for t in sorted(self_conflicting(net)):
            out.append(Violation("self-conflict", (t,), f"transition {t} is in conflict with itself"))
    return ValidationReport(tuple(out))


class InvalidNet(ValueError):
    def __init__(self, report: ValidationReport):
        self.report = report
        first = report.violations[0]
        super().__init__(f"invalid occurrence net: {first.kind}: {first.message}")


def require_valid(net: OccurrenceNet) -> OccurrenceNet:
    report = validate_occurrence_net(net)
    if not report.ok:
        raise InvalidNet(report)
    return net


# ---------------------------------------------------------------- p-nets

NEG = "neg:"
ACT = "act:"


def neg(p: str) -> str:
    return NEG + p


def act(t: str) -> str:
    return ACT + t


def is_generated_persistent(name: str) -> bool:
    return name.startswith(NEG) or name.startswith(ACT)


@dataclass(frozen=True)
class PTransition:
    name: str
    preset: frozenset[str]
    postset: Bag


@dataclass(frozen=True)
class PNet:
    """Flat net with regular places and persistent places (counts 0 or infinity)."""

    regular: frozenset[str]
    persistent: frozenset[str]
    transitions: Mapping[str, PTransition] = field(default_factory=dict)
    initial: Bag = field(default_factory=Bag)

    @classmethod
    def build(
        cls,
        transitions: Mapping[str, tuple[Iterable[str], Iterable[str]]],
        initial: Iterable[str],
        persistent: Iterable[str] = (),
        regular: Iterable[str] = (),
    ) -> PNet:
        """Build from ``{t: (preset, postset)}``; postset counts follow the place kind."""
        pers = frozenset(persistent)
        places = set(regular) | pers
        trans = {}
        for t, (pre, post) in transitions.items():
            pre, post = frozenset(pre), frozenset(post)
            places |= pre | post
            trans[t] = PTransition(t, pre, Bag({p: INF if p in pers else 1 for p in post}))
        init = Bag({p: INF if p in pers else 1 for p in initial})
        places |= init.support
        return cls(frozenset(places - pers), pers, trans, init)

    @property
    def places(self) -> frozenset[str]:
        return self.regular | self.persistent

    def is_persistent_transition(self, t: str) -> bool:
        tr = self.transitions[t]
        return tr.preset <= self.persistent and tr.postset.support <= self.persistent

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PNet):
            return NotImplemented
        return (
            self.regular == other.regular
            and self.persistent == other.persistent
            and dict(self.transitions) == dict(other.transitions)
            and self.initial == other.initial
        )

    def __hash__(self) -> int:
        return hash((self.regular, self.persistent, frozenset(self.transitions), self.initial))

    def problems(self) -> list[str]:
        """Well-formedness problems of the p-net; empty when fine."""
        out = []
        if self.regular & self.persistent:
            out.append("places declared both regular and persistent")
        for name, t in sorted(self.transitions.items()):
            if not t.preset:
                out.append(f"transition {name} has an empty preset")
            for p in t.preset | t.postset.support:
                if p not in self.places:
                    out.append(f"transition {name} uses unknown place {p}")
            for p, n in t.postset.items():
                want = INF if p in self.persistent else 1
                if n != want:
                    out.append(f"transition {name} puts {fmt_count(n)} tokens on {p}")
        for p, n in self.initial.items():
            if p not in self.places:
                out.append(f"initial bag marks unknown place {p}")
            elif p in self.persistent and n != INF:
                out.append(f"persistent place {p} starts with {fmt_count(n)} tokens")
        return out

    def describe(self) -> dict:
        return {
            "regular": sorted(self.regular),
            "persistent": sorted(self.persistent),
            "transitions": {
                name: {"pre": sorted(t.preset), "post": t.postset.to_dict()}
                for name, t in sorted(self.transitions.items())
            },
            "initial": self.initial.to_dict(),
        }


def as_pnet(net: OccurrenceNet) -> PNet:
    """View an ordinary net as a p-net without persistent places."""
    return PNet.build(
        {t: (net.preset(t), net.postset(t)) for t in net.transitions},
        net.initial,
        regular=net.places,
    )
