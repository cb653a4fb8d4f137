"""Causality, conflict, s-cells, place removal, transactions and event structures."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations

import networkx as nx

from .net import OccurrenceNet, maximal_places, minimal_places, topological_order


def _descendants(net: OccurrenceNet) -> dict[str, frozenset[str]]:
    """Reflexive-transitive successors of every node (the set {y | x F* y})."""
    order = topological_order(net)
    if order is None:
        raise ValueError("flow relation has a cycle")
    down: dict[str, frozenset[str]] = {}
    for x in reversed(order):
        acc = {x}
        for y in net.postset(x):
            acc |= down[y]
        down[x] = frozenset(acc)
    return down


def _immediate_conflicts(net: OccurrenceNet) -> frozenset[frozenset[str]]:
    out = set()
    for p in net.places:
        for t, u in combinations(sorted(net.postset(p)), 2):
            out.add(frozenset((t, u)))
    return frozenset(out)


def self_conflicting(net: OccurrenceNet) -> set[str]:
    """Transitions t with t # t."""
    up = _ancestors(net)
    bad = set()
    for pair in _immediate_conflicts(net):
        t1, t2 = tuple(pair)
        for t in net.transitions:
            if t1 in up[t] and t2 in up[t]:
                bad.add(t)
    return bad


def _ancestors(net: OccurrenceNet) -> dict[str, frozenset[str]]:
    down = _descendants(net)
    up: dict[str, set[str]] = {n: set() for n in net.nodes}
    for x, ys in down.items():
        for y in ys:
            up[y].add(x)
    return {k: frozenset(v) for k, v in up.items()}


@dataclass(frozen=True)
class CausalStructure:
    net: OccurrenceNet
    below: dict[str, frozenset[str]]  # x -> {y | y F* x}
    above: dict[str, frozenset[str]]  # x -> {y | x F* y}
    immediate_conflict: frozenset[frozenset[str]]
    conflict: frozenset[frozenset[str]]
    cell_graph: nx.DiGraph

    def leq(self, x: str, y: str) -> bool:
        return x in self.below[y]

    def in_conflict(self, x: str, y: str) -> bool:
        return frozenset((x, y)) in self.conflict if x != y else self._self_conflict(x)

    def _self_conflict(self, x: str) -> bool:
        return frozenset((x,)) in self.conflict

    def immediately_conflict(self, t: str, u: str) -> bool:
        return frozenset((t, u)) in self.immediate_conflict

    @cached_property
    def _cell_reach(self) -> dict[str, frozenset[str]]:
        return {n: frozenset(nx.descendants(self.cell_graph, n)) | {n} for n in self.cell_graph}

    def cell_leq(self, x: str, y: str) -> bool:
        return y in self._cell_reach[x]

    def cell_equiv(self, x: str, y: str) -> bool:
        return self.cell_leq(x, y) and self.cell_leq(y, x)

    def causality_pairs(self) -> set[tuple[str, str]]:
        return {(x, y) for y, xs in self.below.items() for x in xs}


def compute_relations(net: OccurrenceNet) -> CausalStructure:
    above = _descendants(net)
    below = _ancestors(net)
    imm = _immediate_conflicts(net)
    # x # y iff t1 #0 t2 with t1 F* x and t2 F* y (F* so that #0 is contained in #)
    conflict = set()
    for pair in imm:
        t1, t2 = tuple(pair)
        for x in above[t1]:
            for y in above[t2]:
                conflict.add(frozenset((x, y)))
    g = nx.DiGraph()
    g.add_nodes_from(net.nodes)
    g.add_edges_from(net.flow)
    for p, t in net.flow:
        if p in net.places:
            g.add_edge(t, p)
    return CausalStructure(net, below, above, imm, frozenset(conflict), g)


# ---------------------------------------------------------------- s-cells


@dataclass(frozen=True)
class SCell:
    transitions: frozenset[str]
    places: frozenset[str]
    subnet: OccurrenceNet

    @property
    def min(self) -> frozenset[str]:
        return minimal_places(self.subnet)

    @property
    def max(self) -> frozenset[str]:
        return maximal_places(self.subnet)

    @property
    def key(self) -> str:
        return ",".join(sorted(self.transitions))

    def __lt__(self, other: SCell) -> bool:
        return sorted(self.transitions) < sorted(other.transitions)


def cell_of(net: OccurrenceNet, transitions: frozenset[str]) -> SCell:
    pre = frozenset(p for t in transitions for p in net.preset(t))
    post = frozenset(p for t in transitions for p in net.postset(t))
    return SCell(transitions, pre, net.subnet(transitions | pre | post, marked=False))


def scell_decomposition(net: OccurrenceNet) -> list[SCell]:
    """The s-cells of ``net`` in canonical order."""
    rel = compute_relations(net)
    cells = []
    for comp in nx.strongly_connected_components(rel.cell_graph):
        ts = frozenset(comp) & net.transitions
        if ts:
            cells.append(cell_of(net, ts))
    return sorted(cells)


def ominus(net: OccurrenceNet, p: str) -> OccurrenceNet:
    """Remove the minimal place ``p`` and every node that depends on it."""
    mins = minimal_places(net)
    if p not in mins:
        raise ValueError(f"place {p!r} is not minimal")
    keep = set(mins - {p})
    for x in topological_order(net) or []:
        if x in net.transitions and net.preset(x) <= keep:
            keep.add(x)
            keep |= net.postset(x)
    return net.subnet(keep, marked=False)


# ---------------------------------------------------------------- transactions


@dataclass(frozen=True)
class Transaction:
    transitions: frozenset[str]
    min_places: frozenset[str]
    max_places: frozenset[str]

    @property
    def key(self) -> str:
        return ",".join(sorted(self.transitions))


def process_bounds(net: OccurrenceNet, ts: frozenset[str]) -> tuple[frozenset[str], frozenset[str]]:
    """Initial and final places of the subnet spanned by transitions ``ts``."""
    pre = frozenset(p for t in ts for p in net.preset(t))
    post = frozenset(p for t in ts for p in net.postset(t))
    return pre - post, post - pre


def maximal_deterministic_runs(net: OccurrenceNet) -> list[frozenset[str]]:
    """Transition sets of the maximal deterministic processes starting at min(net)."""
    start = minimal_places(net)
    ts = sorted(net.transitions)
    found: set[frozenset[str]] = set()
    seen: set[frozenset[str]] = set()
    stack = [frozenset()]
    while stack:
        fired = stack.pop()
        if fired in seen:
            continue
        seen.add(fired)
        used = {p for t in fired for p in net.preset(t)}
        avail = (start | {p for t in fired for p in net.postset(t)}) - used
        nxt = [t for t in ts if t not in fired and net.preset(t) <= avail]
        if not nxt:
            found.add(fired)
        for t in nxt:
            stack.append(fired | {t})
    return sorted(found, key=sorted)


def transactions(cell: SCell) -> list[Transaction]:
    out = []
    for run in maximal_deterministic_runs(cell.subnet):
        lo, hi = process_bounds(cell.subnet, run)
        out.append(Transaction(run, lo, hi))
    return out


# ---------------------------------------------------------------- event structures


@dataclass(frozen=True)
class PES:
    """Prime event structure: events, causes of each event (reflexive), symmetric conflict."""

    events: frozenset[str]
    causes: dict[str, frozenset[str]]
    conflict: frozenset[frozenset[str]]
    # when set, immediate conflict is taken from the net (shared preset places)
    structural: frozenset[frozenset[str]] | None = None

    def down(self, e: str) -> frozenset[str]:
        return self.causes[e]

    def in_conflict(self, e: str, f: str) -> bool:
        return frozenset((e, f)) in self.conflict

    def restrict(self, events) -> PES:
        keep = frozenset(events)
        return PES(
            keep,
            {e: self.causes[e] & keep for e in keep},
            frozenset(c for c in self.conflict if c <= keep),
            None if self.structural is None else frozenset(c for c in self.structural if c <= keep),
        )

    @cached_property
    def immediate_conflict(self) -> frozenset[frozenset[str]]:
        """e #0 f iff the only conflicting pair in down(e) x down(f) is (e, f)."""
        if self.structural is not None:
            return self.structural
        out = set()
        for pair in self.conflict:
            if len(pair) != 2:
                continue
            e, f = tuple(pair)
            if all(
                (x, y) == (e, f) or not self.in_conflict(x, y)
                for x in self.causes[e]
                for y in self.causes[f]
            ):
                out.add(pair)
        return frozenset(out)

    def is_configuration(self, v) -> bool:
        v = frozenset(v)
        if not v <= self.events:
            return False
        if any(not self.causes[e] <= v for e in v):
            return False
        return not any(self.in_conflict(e, f) for e, f in combinations(v, 2))

    def inheritance_ok(self) -> bool:
        for pair in self.conflict:
            if len(pair) != 2:
                return False
            e, f = tuple(pair)
            for g in self.events:
                if f in self.causes[g] and g != e and not self.in_conflict(e, g):
                    return False
                if e in self.causes[g] and g != f and not self.in_conflict(f, g):
                    return False
        return True


def to_pes(net: OccurrenceNet, structural: bool = False) -> PES:
    """Event structure of ``net``.

    With ``structural`` the immediate conflict is the net's one (shared preset
    places) instead of the one derived from causality and conflict.
    """
    rel = compute_relations(net)
    ts = net.transitions
    return PES(
        ts,
        {t: rel.below[t] & ts for t in ts},
        frozenset(c for c in rel.conflict if c <= ts),
        rel.immediate_conflict if structural else None,
    )
