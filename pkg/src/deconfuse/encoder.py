"""Compile an occurrence net into a dynamic p-net, flatten, prune and expand it.

Generated names
---------------
``neg:p``                      negative place of ``p``
``act:t``                      activation place of flattened transition ``t``
``tx:<min C>/<theta>/<C>``     transaction transition of cell C
``prop:<min C>/<p>/<C>``       propagation transition for removed place p of cell C
``choice:<tx>``                choice transition replacing a non-atomic ``tx``
``<n>@<tx>``                   renamed copy of node n of the transaction of ``tx``

Lists are sorted and comma separated. A name determines its transition completely,
so equal names mean equal values across the whole recursion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .net import (
    ACT,
    INF,
    NEG,
    Bag,
    OccurrenceNet,
    PNet,
    PTransition,
    act,
    is_generated_persistent,
    maximal_places,
    minimal_places,
    neg,
    require_valid,
)
from .structure import SCell, ominus, process_bounds, scell_decomposition, transactions

TX = "tx:"
PROP = "prop:"
CHOICE = "choice:"


def _join(xs: Iterable[str]) -> str:
    return ",".join(sorted(xs))


def _split(s: str) -> frozenset[str]:
    return frozenset(s.split(",")) if s else frozenset()


def tx_name(cell: SCell, theta: frozenset[str]) -> str:
    return f"{TX}{_join(cell.min)}/{_join(theta)}/{_join(cell.transitions)}"


def prop_name(cell: SCell, p: str) -> str:
    return f"{PROP}{_join(cell.min)}/{p}/{_join(cell.transitions)}"


@dataclass(frozen=True)
class GenInfo:
    kind: str  # tx, prop, choice or copy
    cell_min: frozenset[str]
    cell: frozenset[str]
    theta: frozenset[str] = frozenset()
    place: str | None = None
    node: str | None = None  # original node for copies
    owner: str | None = None  # the tx transition a choice/copy comes from


def parse_name(name: str) -> GenInfo | None:
    """Decode a generated transition name; None for anything else."""
    if name.startswith(CHOICE):
        info = parse_name(name[len(CHOICE):])
        if info is None or info.kind != "tx":
            return None
        return GenInfo("choice", info.cell_min, info.cell, info.theta, owner=name[len(CHOICE):])
    if "@" in name:
        node, _, owner = name.partition("@")
        info = parse_name(owner)
        if info is None or info.kind != "tx":
            return None
        return GenInfo("copy", info.cell_min, info.cell, info.theta, node=node, owner=owner)
    for prefix, kind in ((TX, "tx"), (PROP, "prop")):
        if name.startswith(prefix):
            parts = name[len(prefix):].split("/")
            if len(parts) != 3:
                return None
            lo, mid, cell = parts
            if kind == "tx":
                return GenInfo(kind, _split(lo), _split(cell), theta=_split(mid))
            return GenInfo(kind, _split(lo), _split(cell), place=mid)
    return None


# ---------------------------------------------------------------- dynamic p-nets


@dataclass(frozen=True, eq=False)
class DynTransition:
    """Transition whose postset is a whole dynamic net (released transitions plus a bag)."""

    name: str
    preset: frozenset[str]
    post: DynamicPNet

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DynTransition):
            return NotImplemented
        return self.name == other.name and self.preset == other.preset and self.post == other.post

    def __hash__(self) -> int:
        return hash(self.name)

    def __repr__(self) -> str:
        return f"DynTransition({self.name!r})"


@dataclass(frozen=True)
class DynamicPNet:
    transitions: frozenset[DynTransition] = frozenset()
    bag: Bag = field(default_factory=Bag)

    def all_transitions(self) -> dict[str, DynTransition]:
        """Every transition reachable through releases, by name."""
        out: dict[str, DynTransition] = {}
        stack = list(self.transitions)
        while stack:
            t = stack.pop()
            if t.name in out:
                if out[t.name] != t:
                    raise ValueError(f"two different transitions named {t.name}")
                continue
            out[t.name] = t
            stack.extend(t.post.transitions)
        return out

    def describe(self) -> dict:
        return {
            "top": sorted(t.name for t in self.transitions),
            "bag": self.bag.to_dict(),
            "transitions": {
                name: {
                    "pre": sorted(t.preset),
                    "bag": t.post.bag.to_dict(),
                    "releases": sorted(u.name for u in t.post.transitions),
                }
                for name, t in sorted(self.all_transitions().items())
            },
        }


class _Compiler:
    def __init__(self, net: OccurrenceNet):
        self.net = net
        self.memo: dict[frozenset[str], frozenset[DynTransition]] = {}
        self.registry: dict[str, DynTransition] = {}
        self.cells: dict[frozenset[str], SCell] = {}

    def _intern(self, t: DynTransition) -> DynTransition:
        old = self.registry.get(t.name)
        if old is None:
            self.registry[t.name] = t
            return t
        assert old == t, f"generated name {t.name} is not injective"
        return old

    def transitions_of(self, sub: OccurrenceNet) -> frozenset[DynTransition]:
        key = sub.nodes
        if key in self.memo:
            return self.memo[key]
        out = []
        for cell in scell_decomposition(sub):
            self.cells.setdefault(cell.transitions, cell)
            cmax = cell.max
            for th in transactions(cell):
                bag = Bag.of(th.max_places, (neg(p) for p in cmax - th.max_places))
                out.append(self._intern(DynTransition(tx_name(cell, th.transitions), cell.min, DynamicPNet(frozenset(), bag))))
            for p in sorted(cell.min):
                rest = ominus(cell.subnet, p)
                released = self.transitions_of(rest)
                bag = Bag.of((), (neg(q) for q in cmax - maximal_places(rest)))
                out.append(self._intern(DynTransition(prop_name(cell, p), frozenset({neg(p)}), DynamicPNet(released, bag))))
        self.memo[key] = frozenset(out)
        return self.memo[key]


def encode(net: OccurrenceNet) -> DynamicPNet:
    require_valid(net)
    comp = _Compiler(net)
    return DynamicPNet(comp.transitions_of(net.with_initial(())), Bag.of(net.initial))


def compilation_cells(net: OccurrenceNet) -> dict[frozenset[str], SCell]:
    """Every cell met while compiling ``net``, nested ones included, keyed by transitions."""
    comp = _Compiler(net)
    comp.transitions_of(net.with_initial(()))
    return comp.cells


def dec(name: str) -> frozenset[str]:
    """Events of the source net a compiled transition stands for."""
    info = parse_name(name)
    if info is None:
        raise KeyError(f"{name!r} is not a compiled transition")
    if info.kind == "tx":
        return info.theta
    if info.kind == "copy":
        return frozenset({info.node}) if info.node in info.theta else frozenset()
    return frozenset()


# ---------------------------------------------------------------- flattening


def flatten(dnet: DynamicPNet, persistent: Iterable[str] | None = None) -> PNet:
    """Static p-net of a dynamic one: each transition gets an activation place.

    Persistent places default to the generated ``neg:``/``act:`` names.
    """
    every = dnet.all_transitions()
    places = set(dnet.bag.support)
    trans = {}
    for name, t in every.items():
        post = t.post.bag.union(Bag.of((), (act(u.name) for u in t.post.transitions)))
        trans[name] = PTransition(name, t.preset | {act(name)}, post)
        places |= t.preset | post.support | {act(name)}
    if persistent is None:
        pers = {p for p in places if is_generated_persistent(p)}
    else:
        pers = set(persistent) | {p for p in places if p.startswith(ACT)}
    initial = dnet.bag.union(Bag.of((), (act(t.name) for t in dnet.transitions)))
    # persistent counts are always 0 or infinity, even if the dynamic bag says 1
    initial = Bag({p: (INF if p in pers else n) for p, n in initial.items()})
    trans = {
        n: PTransition(n, t.preset, Bag({p: (INF if p in pers else c) for p, c in t.postset.items()}))
        for n, t in trans.items()
    }
    return PNet(frozenset(places - pers), frozenset(pers), trans, initial)


def prune(pnet: PNet) -> PNet:
    """Drop transitions that can never fire and places that can never hold a token."""
    markable = set(pnet.initial.support)
    live: set[str] = set()
    changed = True
    while changed:
        changed = False
        for name, t in pnet.transitions.items():
            if name not in live and t.preset <= markable:
                live.add(name)
                markable |= t.postset.support
                changed = True
    trans = {n: t for n, t in pnet.transitions.items() if n in live}
    touched = {p for t in trans.values() for p in t.preset | t.postset.support}
    keep = markable & touched
    return PNet(
        pnet.regular & keep,
        pnet.persistent & keep,
        trans,
        pnet.initial.restrict(keep),
    )


def uniformed(net: OccurrenceNet, prune_net: bool = False) -> PNet:
    flat = flatten(encode(net))
    return prune(flat) if prune_net else flat


def expand_transactions(pnet: PNet, source: OccurrenceNet) -> PNet:
    """Replace each non-atomic transaction transition by a choice plus a copy of its process.

    ``source`` is the net that was compiled; the flat net alone does not record the
    inner structure of a transaction.
    """
    trans = dict(pnet.transitions)
    regular = set(pnet.regular)
    for name, t in sorted(pnet.transitions.items()):
        info = parse_name(name)
        if info is None or info.kind != "tx" or len(info.theta) < 2:
            continue
        theta = info.theta
        lo, hi = process_bounds(source, theta)

        def rn(x: str) -> str:
            return x if x in hi else f"{x}@{name}"

        del trans[name]
        negs = {p: n for p, n in t.postset.items() if p.startswith(NEG)}
        post = Bag.of(rn(p) for p in lo).union(negs)
        trans[CHOICE + name] = PTransition(CHOICE + name, t.preset, post)
        for u in sorted(theta):
            pre = frozenset(rn(p) for p in source.preset(u))
            upost = Bag.of(rn(p) for p in source.postset(u))
            trans[rn(u)] = PTransition(rn(u), pre, upost)
            regular |= pre | upost.support
    return PNet(frozenset(regular), pnet.persistent, trans, pnet.initial)
