"""Branching-cell semantics of prime event structures, and its match with compiled nets.

An execution of the event structure is built step by step: from a configuration v,
pick a minimal nonempty stopping prefix of the future of v and a maximal
configuration inside it. Configurations reachable this way are recursively stopped.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

from .encoder import dec, flatten, encode
from .net import OccurrenceNet
from .processes import enumerate_maximal_processes
from .semantics import DEFAULT_BUDGET, BudgetExceeded, CertReport, Engine, _Timer
from .structure import PES, to_pes

Config = frozenset[str]


def closure(pes: PES, events) -> frozenset[str]:
    """Least stopping prefix containing ``events``."""
    imm: dict[str, set[str]] = {e: set() for e in pes.events}
    for pair in pes.immediate_conflict:
        e, f = tuple(pair)
        imm[e].add(f)
        imm[f].add(e)
    out = set()
    todo = list(events)
    while todo:
        e = todo.pop()
        if e in out:
            continue
        out.add(e)
        todo.extend(pes.down(e) - out)
        todo.extend(imm[e] - out)
    return frozenset(out)


def is_stopping_prefix(pes: PES, b) -> bool:
    b = frozenset(b)
    if any(not pes.down(e) <= b for e in b):
        return False
    return all(len(pair & b) in (0, 2) for pair in pes.immediate_conflict)


def stopping_prefixes(pes: PES) -> set[frozenset[str]]:
    """All downward- and immediate-conflict-closed event sets (unions of single-event closures)."""
    singles = {closure(pes, {e}) for e in pes.events}
    out = {frozenset()}
    frontier = [frozenset()]
    while frontier:
        b = frontier.pop()
        for c in singles:
            if not c <= b:
                nb = b | c
                if nb not in out:
                    out.add(nb)
                    frontier.append(nb)
    return out


def initial_stopping_prefixes(pes: PES) -> set[frozenset[str]]:
    """Minimal nonempty stopping prefixes."""
    singles = {closure(pes, {e}) for e in pes.events}
    return {c for c in singles if not any(d < c for d in singles)}


def future(pes: PES, v) -> PES:
    v = frozenset(v)
    if not pes.is_configuration(v):
        raise ValueError(f"{sorted(v)} is not a configuration")
    rest = {e for e in pes.events - v if not any(pes.in_conflict(e, f) for f in v)}
    return pes.restrict(rest)


def configurations(pes: PES) -> set[frozenset[str]]:
    out = {frozenset()}
    frontier = [frozenset()]
    while frontier:
        v = frontier.pop()
        for e in pes.events - v:
            if pes.down(e) - {e} <= v and not any(pes.in_conflict(e, f) for f in v):
                w = v | {e}
                if w not in out:
                    out.add(w)
                    frontier.append(w)
    return out


def maximal_configurations(pes: PES) -> set[frozenset[str]]:
    confs = configurations(pes)
    return {v for v in confs if not any(v < w for w in confs)}


@dataclass
class BranchingSemantics:
    """Step relation of recursively stopped configurations, memoised per configuration."""

    pes: PES
    initial_only: bool = True
    _steps: dict[Config, frozenset[Config]] = field(default_factory=dict)

    def steps(self, v: Config) -> frozenset[Config]:
        if v not in self._steps:
            fut = future(self.pes, v)
            prefixes = initial_stopping_prefixes(fut) if self.initial_only else stopping_prefixes(fut) - {frozenset()}
            out = set()
            for b in prefixes:
                out |= maximal_configurations(fut.restrict(b))
            self._steps[v] = frozenset(w for w in out if w)
        return self._steps[v]

    def reachable(self, budget: int = DEFAULT_BUDGET) -> set[Config]:
        seen = {frozenset()}
        todo = [frozenset()]
        while todo:
            v = todo.pop()
            for w in self.steps(v):
                if v | w not in seen:
                    if len(seen) >= budget:
                        raise BudgetExceeded(len(seen), len(todo))
                    seen.add(v | w)
                    todo.append(v | w)
        return seen

    def decompositions(self, v: Config, limit: int = 10_000) -> list[tuple[Config, ...]]:
        """Every chain of steps from the empty configuration to ``v``."""
        out: list[tuple[Config, ...]] = []

        def go(cur: Config, chain: tuple[Config, ...]):
            if len(out) >= limit:
                return
            if cur == v:
                out.append(chain)
                return
            for w in sorted(self.steps(cur), key=sorted):
                if w <= v - cur:
                    go(cur | w, chain + (w,))

        go(frozenset(), ())
        return out

    def is_valid_chain(self, chain) -> bool:
        cur: Config = frozenset()
        for w in chain:
            w = frozenset(w)
            if w not in self.steps(cur):
                return False
            cur |= w
        return True


def recursively_stopped(pes: PES, limit: int = 10_000) -> dict[Config, list[tuple[Config, ...]]]:
    """Each recursively stopped configuration with all of its decompositions."""
    sem = BranchingSemantics(pes)
    return {v: sem.decompositions(v, limit) for v in sorted(sem.reachable(), key=sorted)}


# ---------------------------------------------------------------- correspondence


def _chain_str(chain) -> list[list[str]]:
    return [sorted(w) for w in chain]


def _silent_closure(eng: Engine, states, silent: list[bool]) -> frozenset:
    out = set(states)
    todo = list(states)
    while todo:
        s = todo.pop()
        for i in eng.enabled(s):
            if silent[i]:
                s2 = eng.fire(s, i)
                if s2 not in out:
                    out.add(s2)
                    todo.append(s2)
    return frozenset(out)


def realizing_run(net: OccurrenceNet, chain, budget: int = DEFAULT_BUDGET) -> list[str] | None:
    """A firing sequence of the compiled net whose observable steps spell ``chain``."""
    eng = Engine(flatten(encode(net)))
    decs = [dec(n) for n in eng.names]
    chain = [frozenset(w) for w in chain]
    start = (eng.initial(), 0)
    parent = {start: None}
    q = deque([start])
    while q:
        node = q.popleft()
        s, k = node
        if k == len(chain):
            run = []
            while parent[node] is not None:
                node, t = parent[node]
                run.append(t)
            return run[::-1]
        for i in eng.enabled(s):
            if not decs[i]:
                nxt = (eng.fire(s, i), k)
            elif decs[i] == chain[k]:
                nxt = (eng.fire(s, i), k + 1)
            else:
                continue
            if nxt not in parent:
                if len(parent) >= budget:
                    raise BudgetExceeded(len(parent), len(q))
                parent[nxt] = (node, eng.names[i])
                q.append(nxt)
    return None


def _runs_spell_chains(eng: Engine, decs, sem: BranchingSemantics, budget: int):
    """Product of compiled states with the configuration spelled so far."""
    start = (eng.initial(), frozenset())
    parent: dict = {start: None}
    todo = [start]
    while todo:
        node = todo.pop()
        s, v = node
        for i in eng.enabled(s):
            w = decs[i]
            if w and w not in sem.steps(v):
                run = [eng.names[i]]
                back = node
                while parent[back] is not None:
                    back, t = parent[back]
                    run.append(t)
                return {"run": run[::-1], "configuration": sorted(v), "step": sorted(w)}, len(parent)
            nxt = (eng.fire(s, i), v | w)
            if nxt not in parent:
                if len(parent) >= budget:
                    raise BudgetExceeded(len(parent), len(todo))
                parent[nxt] = (node, eng.names[i])
                todo.append(nxt)
    return None, len(parent)


def _chains_are_realised(eng: Engine, decs, sem: BranchingSemantics, budget: int):
    """Follow every chain of steps with the set of compiled states that can spell it."""
    silent = [not d for d in decs]
    s0 = _silent_closure(eng, [eng.initial()], silent)
    seen = {(frozenset(), s0)}
    todo = [(frozenset(), s0, ())]
    while todo:
        v, states, chain = todo.pop()
        for w in sorted(sem.steps(v), key=sorted):
            nxt = {eng.fire(s, i) for s in states for i in eng.enabled(s) if decs[i] == w}
            if not nxt:
                return {"chain": _chain_str(chain + (w,))}, len(seen)
            key = (v | w, _silent_closure(eng, nxt, silent))
            if key not in seen:
                if len(seen) >= budget:
                    raise BudgetExceeded(len(seen), len(todo))
                seen.add(key)
                todo.append((key[0], key[1], chain + (w,)))
    return None, len(seen)


def check_correspondence(net: OccurrenceNet, budget: int = DEFAULT_BUDGET, structural: bool = False) -> CertReport:
    """Compiled runs and branching-cell decompositions determine each other.

    1. Every run of the compiled net, with silent (dec = empty) steps skipped, spells
       a chain of valid steps.
    2. Every valid chain of steps is spelled by some run.
    3. Maximal processes of the compiled net and maximal recursively stopped
       configurations correspond one to one through the union of dec.

    The three parts are checked independently; ``details["parts"]`` has each verdict.
    ``structural`` swaps the event-structure immediate conflict for the net's own.
    """
    with _Timer() as tm:
        pes = to_pes(net, structural)
        sem = BranchingSemantics(pes)
        eng = Engine(flatten(encode(net)))
        decs = [dec(n) for n in eng.names]
        w1, n1 = _runs_spell_chains(eng, decs, sem, budget)
        w2, n2 = _chains_are_realised(eng, decs, sem, budget)

        maximal_rs = {v for v in sem.reachable(budget) if not sem.steps(v)}
        images: dict[Config, list[str]] = {}
        for p in enumerate_maximal_processes(eng.net, budget):
            ev = frozenset().union(*(dec(t) for t in p.transitions)) if p.transitions else frozenset()
            images.setdefault(ev, []).append(p.id)
        w3 = None
        dup = sorted(sorted(k) for k, v in images.items() if len(v) > 1)
        if dup:
            w3 = {"shared_configurations": dup}
        elif set(images) != maximal_rs:
            w3 = {
                "processes_only": sorted(sorted(v) for v in set(images) - maximal_rs),
                "configurations_only": sorted(sorted(v) for v in maximal_rs - set(images)),
            }
        parts = {
            "runs_to_decompositions": w1,
            "decompositions_to_runs": w2,
            "maximal_bijection": w3,
        }
        witness = {k: v for k, v in parts.items() if v is not None} or None
        details = {
            "immediate_conflict": "net" if structural else "event-structure",
            "parts": {k: ("pass" if v is None else "fail") for k, v in parts.items()},
            "maximal_configurations": [
                {
                    "events": sorted(v),
                    "decompositions": [_chain_str(c) for c in sem.decompositions(v, limit=20)],
                    "processes": images.get(v, []),
                }
                for v in sorted(maximal_rs, key=sorted)
            ],
        }
    return CertReport("correspondence", witness is None, witness, n1 + n2, tm.ms, details)


def iter_steps(pes: PES, v) -> Iterator[Config]:
    yield from sorted(BranchingSemantics(pes).steps(frozenset(v)), key=sorted)
