"""Firing rules, reachability and the certificates checked on compiled nets."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Iterable

from . import __version__
from .encoder import DynamicPNet, DynTransition, flatten, parse_name
from .net import (
    INF,
    Bag,
    OccurrenceNet,
    PNet,
    act,
    as_pnet,
    is_generated_persistent,
    neg,
)

DEFAULT_BUDGET = 1_000_000
REPORT_VERSION = f"deconfuse/{__version__}"


class BudgetExceeded(RuntimeError):
    def __init__(self, explored: int, frontier: int):
        self.explored = explored
        self.frontier = frontier
        super().__init__(f"state budget exceeded after {explored} states ({frontier} still in the frontier)")


class NotEnabled(ValueError):
    def __init__(self, t: str, missing: Iterable[str], reason: str = ""):
        self.missing = sorted(missing)
        msg = f"{t} is not enabled"
        if self.missing:
            msg += f"; missing {', '.join(self.missing)}"
        if reason:
            msg += f"; {reason}"
        super().__init__(msg)


@dataclass
class CertReport:
    check: str
    verdict: bool
    witness: Any = None
    states_explored: int = 0
    elapsed_ms: float = 0.0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "version": REPORT_VERSION,
            "check": self.check,
            "verdict": "pass" if self.verdict else "fail",
            "states_explored": self.states_explored,
            "elapsed_ms": round(self.elapsed_ms, 3),
        }
        if self.witness is not None:
            out["witness"] = self.witness
        if self.details:
            out["details"] = self.details
        return out

    def __bool__(self) -> bool:
        return self.verdict


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = (time.perf_counter() - self.t0) * 1000


# ---------------------------------------------------------------- literal firing rules


@dataclass(frozen=True)
class PState:
    bag: Bag
    fired: frozenset[str] = frozenset()  # persistent transitions already fired


@dataclass(frozen=True)
class DynState:
    transitions: frozenset[DynTransition]
    bag: Bag
    fired: frozenset[str] = frozenset()


def _pnet(net) -> PNet:
    return as_pnet(net) if isinstance(net, OccurrenceNet) else net


def initial_state(net):
    if isinstance(net, DynamicPNet):
        return DynState(net.transitions, net.bag)
    return PState(_pnet(net).initial)


def _dyn_persistent(t: DynTransition) -> bool:
    return all(is_generated_persistent(p) for p in t.preset | t.post.bag.support)


def enabled(state, net) -> set[str]:
    """Names of transitions enabled at ``state``; fired persistent transitions are excluded."""
    if isinstance(state, DynState):
        return {
            t.name
            for t in state.transitions
            if state.bag.covers(t.preset) and not (_dyn_persistent(t) and t.name in state.fired)
        }
    net = _pnet(net)
    return {
        name
        for name, t in net.transitions.items()
        if state.bag.covers(t.preset)
        and not (net.is_persistent_transition(name) and name in state.fired)
    }


def fire(state, t: str, net):
    if isinstance(state, DynState):
        by_name = {u.name: u for u in state.transitions}
        if t not in by_name:
            raise NotEnabled(t, (), "not released yet")
        tr = by_name[t]
        missing = [p for p in tr.preset if p not in state.bag]
        persistent = _dyn_persistent(tr)
        if missing or (persistent and t in state.fired):
            raise NotEnabled(t, missing, "already fired" if not missing else "")
        bag = state.bag.difference(Bag({p: 1 for p in tr.preset if state.bag[p] != INF})).union(tr.post.bag)
        fired = state.fired | {t} if persistent else state.fired
        return DynState(state.transitions | tr.post.transitions, bag, fired)
    net = _pnet(net)
    if t not in net.transitions:
        raise NotEnabled(t, (), "unknown transition")
    tr = net.transitions[t]
    missing = [p for p in tr.preset if p not in state.bag]
    persistent = net.is_persistent_transition(t)
    if missing or (persistent and t in state.fired):
        raise NotEnabled(t, missing, "already fired" if not missing else "")
    bag = state.bag.difference(Bag({p: 1 for p in tr.preset if state.bag[p] != INF})).union(tr.postset)
    return PState(bag, state.fired | {t} if persistent else state.fired)


# ---------------------------------------------------------------- compiled engine


class Engine:
    """Bit-level firing for a p-net. States are (regular counts, persistent mask, fired mask)."""

    def __init__(self, net: PNet | OccurrenceNet):
        net = _pnet(net)
        self.net = net
        self.regular = sorted(net.regular)
        self.persistent = sorted(net.persistent)
        ri = {p: i for i, p in enumerate(self.regular)}
        pi = {p: i for i, p in enumerate(self.persistent)}
        self.names = sorted(net.transitions)
        self.index = {n: i for i, n in enumerate(self.names)}
        self.pre_reg: list[tuple[int, ...]] = []
        self.pre_pers: list[int] = []
        self.post_reg: list[tuple[tuple[int, int], ...]] = []
        self.post_pers: list[int] = []
        self.is_pers: list[bool] = []
        for n in self.names:
            t = net.transitions[n]
            self.pre_reg.append(tuple(sorted(ri[p] for p in t.preset if p in ri)))
            self.pre_pers.append(sum(1 << pi[p] for p in t.preset if p in pi))
            self.post_reg.append(tuple(sorted((ri[p], int(c)) for p, c in t.postset.items() if p in ri)))
            self.post_pers.append(sum(1 << pi[p] for p in t.postset if p in pi))
            self.is_pers.append(net.is_persistent_transition(n))
        self.reg_sets = [frozenset(self.regular[j] for j in r) for r in self.pre_reg]
        self._ri, self._pi = ri, pi

    def initial(self):
        counts = tuple(int(self.net.initial[p]) if self.net.initial[p] != INF else 1 for p in self.regular)
        pm = sum(1 << self._pi[p] for p in self.persistent if self.net.initial[p])
        return (counts, pm, 0)

    def encode(self, state: PState):
        counts = tuple(int(state.bag[p]) for p in self.regular)
        pm = sum(1 << self._pi[p] for p in self.persistent if state.bag[p])
        fired = sum(1 << self.index[n] for n in state.fired)
        return (counts, pm, fired)

    def enabled(self, s) -> list[int]:
        counts, pm, fired = s
        out = []
        for i in range(len(self.names)):
            if self.pre_pers[i] & ~pm:
                continue
            if self.is_pers[i] and (fired >> i) & 1:
                continue
            for j in self.pre_reg[i]:
                if not counts[j]:
                    break
            else:
                out.append(i)
        return out

    def fire(self, s, i: int):
        counts, pm, fired = s
        c = list(counts)
        for j in self.pre_reg[i]:
            c[j] -= 1
        for j, k in self.post_reg[i]:
            c[j] += k
        if self.is_pers[i]:
            fired |= 1 << i
        return (tuple(c), pm | self.post_pers[i], fired)

    def label(self, i: int) -> str:
        return self.names[i]

    def marked(self, s) -> set[str]:
        counts, pm, _ = s
        out = {p for p, c in zip(self.regular, counts) if c}
        out |= {p for i, p in enumerate(self.persistent) if (pm >> i) & 1}
        return out

    def bag(self, s) -> Bag:
        counts, pm, _ = s
        d: dict[str, float] = {p: c for p, c in zip(self.regular, counts) if c}
        d.update({p: INF for i, p in enumerate(self.persistent) if (pm >> i) & 1})
        return Bag(d)

    def state(self, s) -> PState:
        return PState(self.bag(s), frozenset(self.names[i] for i in range(len(self.names)) if (s[2] >> i) & 1))


class DynEngine:
    """Firing on dynamic nets straight from the definition, over name sets and bags."""

    def __init__(self, dnet: DynamicPNet):
        self.dnet = dnet
        self.all = dnet.all_transitions()
        self.pers = {n: _dyn_persistent(t) for n, t in self.all.items()}

    def initial(self):
        return (frozenset(t.name for t in self.dnet.transitions), self.dnet.bag, frozenset())

    def enabled(self, s) -> list[str]:
        ts, bag, fired = s
        return sorted(
            n for n in ts if bag.covers(self.all[n].preset) and not (self.pers[n] and n in fired)
        )

    def fire(self, s, n: str):
        ts, bag, fired = s
        t = self.all[n]
        bag = bag.difference(Bag({p: 1 for p in t.preset if bag[p] != INF})).union(t.post.bag)
        return (
            ts | {u.name for u in t.post.transitions},
            bag,
            fired | {n} if self.pers[n] else fired,
        )

    def label(self, n: str) -> str:
        return n

    def bag(self, s) -> Bag:
        return s[1]

    def marked(self, s) -> set[str]:
        return set(s[1].support)


@dataclass
class StateGraph:
    engine: Any
    states: list
    succ: list[list[tuple[Any, int]]]

    @property
    def initial(self) -> int:
        return 0

    @property
    def maximal(self) -> list[int]:
        return [i for i, out in enumerate(self.succ) if not out]

    def edges(self):
        for i, out in enumerate(self.succ):
            for t, j in out:
                yield i, self.engine.label(t), j

    def bag(self, i: int) -> Bag:
        return self.engine.bag(self.states[i])

    def summary(self) -> dict:
        return {
            "states": len(self.states),
            "edges": sum(len(o) for o in self.succ),
            "maximal": len(self.maximal),
        }


def _engine_for(net):
    if isinstance(net, DynamicPNet):
        return DynEngine(net)
    if isinstance(net, (Engine, DynEngine)):
        return net
    return Engine(net)


def explore(net, budget: int = DEFAULT_BUDGET) -> StateGraph:
    """Full reachability graph under non-stuttering firing."""
    eng = _engine_for(net)
    s0 = eng.initial()
    index = {s0: 0}
    states = [s0]
    succ: list[list[tuple[Any, int]]] = [[]]
    stack = [0]
    while stack:
        i = stack.pop()
        s = states[i]
        for t in eng.enabled(s):
            s2 = eng.fire(s, t)
            j = index.get(s2)
            if j is None:
                if len(states) >= budget:
                    raise BudgetExceeded(len(states), len(stack))
                j = index[s2] = len(states)
                states.append(s2)
                succ.append([])
                stack.append(j)
            succ[i].append((t, j))
    return StateGraph(eng, states, succ)


# ---------------------------------------------------------------- certificates


def check_safety(net, budget: int = DEFAULT_BUDGET) -> CertReport:
    """Every reachable bag has at most one token per regular place and 0 or inf on persistent ones."""
    net = _pnet(net)
    with _Timer() as tm:
        problems = net.problems()
        witness = None
        g = None
        if problems:
            witness = {"problems": problems}
        else:
            g = explore(net, budget)
            for s in g.states:
                if any(c > 1 for c in s[0]):
                    witness = {"state": g.engine.bag(s).to_dict()}
                    break
    n = len(g.states) if g else 0
    return CertReport("safety", witness is None, witness, n, tm.ms)


def _confusions(g: StateGraph, limit: int) -> list[dict]:
    eng: Engine = g.engine
    R = eng.reg_sets
    found: list[dict] = []

    def add(kind, s, **kw):
        found.append({"pattern": kind, "state": sorted(eng.marked(s)), **{k: eng.names[v] for k, v in kw.items()}})

    for s in g.states:
        if len(found) >= limit:
            break
        en = eng.enabled(s)
        en_set = set(en)
        for t, u in combinations(en, 2):
            if R[t] & R[u] and R[t] != R[u]:
                add("preset", s, t=t, u=u)
        for u in en:
            for t in en:
                if t == u or not R[t] & R[u]:
                    continue
                for v in en:
                    if v in (t, u) or not R[u] & R[v] or R[t] & R[v]:
                        continue
                    if t < v:  # each symmetric triple once
                        add("symmetric", s, t=t, u=u, v=v)
        for t in en:
            after = set(eng.enabled(eng.fire(s, t)))
            for u in sorted(after - en_set):
                for v in en:
                    if v != t and not R[t] & R[v] and R[v] & R[u]:
                        add("asymmetric", s, t=t, u=u, v=v)
    return found[:limit]


def check_confusion_free(net, budget: int = DEFAULT_BUDGET, limit: int = 100) -> CertReport:
    """Search every reachable state for confusion, judging conflicts on regular places only.

    Also checks that enabled transitions have equal or disjoint regular presets.
    """
    with _Timer() as tm:
        g = explore(net, budget)
        found = _confusions(g, limit)
    return CertReport(
        "confusion-free",
        not found,
        found[0] if found else None,
        len(g.states),
        tm.ms,
        {"witnesses": found} if found else {},
    )


def _future_places(g: StateGraph) -> list[int]:
    """For each state, a bitmask of regular places marked in it or any later state."""
    counts_mask = [sum(1 << j for j, c in enumerate(s[0]) if c) for s in g.states]
    fut = list(counts_mask)
    # postorder of a DFS gives one-pass convergence on acyclic graphs; loop covers cycles
    order, seen = [], set()
    for root in range(len(g.states)):
        if root in seen:
            continue
        stack = [(root, iter(g.succ[root]))]
        seen.add(root)
        while stack:
            i, it = stack[-1]
            for _, j in it:
                if j not in seen:
                    seen.add(j)
                    stack.append((j, iter(g.succ[j])))
                    break
            else:
                stack.pop()
                order.append(i)
    changed = True
    while changed:
        changed = False
        for i in order:
            m = fut[i]
            for _, j in g.succ[i]:
                m |= fut[j]
            if m != fut[i]:
                fut[i] = m
                changed = True
    return fut


def check_exclusion(net, source: OccurrenceNet | None = None, budget: int = DEFAULT_BUDGET) -> CertReport:
    """Once neg:p is marked, p is never marked again; plus the companion per-state invariants.

    Checked clauses: p and neg:p are never both marked; neg:p excludes every q above p;
    an enabled transaction transition of cell C sees no token on max(C) nor on its
    negations. The clauses about causality and cells need ``source``, the compiled net.

    The clause "p below q, p marked, neg:q marked implies some r strictly below q
    has neg:r marked" is reported in ``details`` without affecting the verdict: it
    fails when a transaction leaves a token on a place that only a conflicting
    transition of the same cell consumes.
    """
    net = _pnet(net)
    with _Timer() as tm:
        g = explore(net, budget)
        eng: Engine = g.engine
        fut = _future_places(g)
        ri = {p: j for j, p in enumerate(eng.regular)}
        pairs = [(p, neg(p)) for p in eng.regular if neg(p) in net.persistent]
        witness = None
        clause3 = None
        rel = None
        if source is not None:
            from .structure import cell_of, compute_relations

            rel = compute_relations(source)
            cell_max = {}
            for n in eng.names:
                info = parse_name(n)
                if info is not None and info.kind == "tx":
                    c = cell_of(source, info.cell)
                    cell_max[n] = (info.cell_min, c.max)
        for i, s in enumerate(g.states):
            marked = eng.marked(s)
            for p, np_ in pairs:
                if np_ in marked and (fut[i] >> ri[p]) & 1:
                    witness = {"clause": "exclusion", "state": sorted(marked), "place": p}
                    break
                if np_ in marked and p in marked:
                    witness = {"clause": "1", "state": sorted(marked), "place": p}
                    break
            if witness:
                break
            if rel is None:
                continue
            negs = {p for p in source.places if neg(p) in marked}
            pos = {p for p in source.places if p in marked}
            for p in negs:
                bad = [q for q in pos if rel.leq(p, q)]
                if bad:
                    witness = {"clause": "2", "state": sorted(marked), "place": p, "later": sorted(bad)}
                    break
            if witness:
                break
            if clause3 is None:
                for p in pos:
                    for q in negs:
                        if rel.leq(p, q) and not any(r != q and rel.leq(r, q) for r in negs):
                            clause3 = {"state": sorted(marked), "places": [p, q]}
                            break
                    if clause3:
                        break
            for t in eng.enabled(s):
                name = eng.names[t]
                if name in cell_max:
                    lo, hi = cell_max[name]
                    clash = sorted((hi & marked) | {neg(q) for q in hi if neg(q) in marked})
                    if clash:
                        witness = {"clause": "4", "state": sorted(marked), "transition": name, "marked": clash}
                        break
            if witness:
                break
    details = {}
    if rel is not None:
        details["clause_3"] = {"holds": clause3 is None, "witness": clause3}
    return CertReport("exclusion", witness is None, witness, len(g.states), tm.ms, details)


def _flat_image(ts: frozenset[str], bag: Bag, fired: frozenset[str], feng: Engine):
    flat_bag = bag.union(Bag.of((), (act(t) for t in ts)))
    return feng.encode(PState(flat_bag, fired))


def check_dyn_flat_bisim(dnet: DynamicPNet, budget: int = DEFAULT_BUDGET) -> CertReport:
    """Step-by-step mutual simulation of a dynamic net and its flattening.

    A dynamic state (T, b) is related to the flat bag b plus the activation places of T.
    """
    with _Timer() as tm:
        flat = flatten(dnet)
        deng, feng = DynEngine(dnet), Engine(flat)
        d0 = deng.initial()
        f0 = feng.initial()
        witness = None
        if _flat_image(*d0, feng) != f0:
            witness = {"reason": "initial states differ"}
        seen = {d0}
        stack = [d0]
        while stack and witness is None:
            d = stack.pop()
            f = _flat_image(*d, feng)
            den = deng.enabled(d)
            fen = [feng.names[i] for i in feng.enabled(f)]
            if sorted(den) != sorted(fen):
                witness = {
                    "state": d[1].to_dict(),
                    "dynamic_enabled": sorted(den),
                    "flat_enabled": sorted(fen),
                }
                break
            for t in den:
                d2 = deng.fire(d, t)
                if _flat_image(*d2, feng) != feng.fire(f, feng.index[t]):
                    witness = {"state": d[1].to_dict(), "transition": t, "reason": "successors differ"}
                    break
                if d2 not in seen:
                    if len(seen) >= budget:
                        raise BudgetExceeded(len(seen), len(stack))
                    seen.add(d2)
                    stack.append(d2)
    return CertReport("dyn-flat-bisimulation", witness is None, witness, len(seen), tm.ms)


def check_dynamic_invariants(dnet: DynamicPNet, source: OccurrenceNet, budget: int = DEFAULT_BUDGET) -> CertReport:
    """Per-state facts about the dynamic encoding of ``source``.

    * released transitions with unequal, overlapping presets have a shared place
      whose negation is marked;
    * enabled transitions have equal or disjoint presets;
    * the positive part of every state is covered by a reachable marking of ``source``.
    """
    with _Timer() as tm:
        g = explore(dnet, budget)
        eng: DynEngine = g.engine
        src = explore(source, budget)
        src_marks = [frozenset(src.engine.marked(s)) for s in src.states]
        places = source.places
        witness = None
        for s in g.states:
            ts, bag, _ = s
            pres = sorted((n, eng.all[n].preset) for n in ts)
            for (n1, a), (n2, b) in combinations(pres, 2):
                pa, pb = a & places, b & places
                if pa != pb and pa & pb and not any(neg(p) in bag for p in (pa | pb)):
                    witness = {"invariant": "nested-no-collision", "state": bag.to_dict(), "transitions": [n1, n2]}
                    break
            if witness:
                break
            en = eng.enabled(s)
            for n1, n2 in combinations(en, 2):
                a, b = eng.all[n1].preset, eng.all[n2].preset
                if a != b and a & b:
                    witness = {"invariant": "enabled-presets", "state": bag.to_dict(), "transitions": [n1, n2]}
                    break
            if witness:
                break
            pos = bag.support & places
            if not any(pos <= m for m in src_marks):
                witness = {"invariant": "mimicked-by-source", "state": bag.to_dict()}
                break
    return CertReport("dynamic-invariants", witness is None, witness, len(g.states), tm.ms)
