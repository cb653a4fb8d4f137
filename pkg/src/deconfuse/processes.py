"""Persistent processes of p-nets, their cause formulas and legal firing sequences."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

from .encoder import dec, parse_name
from .net import PNet
from .semantics import DEFAULT_BUDGET, BudgetExceeded, CertReport, Engine, _Timer

# A cause formula is a monotone DNF: a set of implicants, each a set of transitions.
# TRUE is {frozenset()} and FALSE is the empty set.
Formula = frozenset[frozenset[str]]
TRUE: Formula = frozenset({frozenset()})
FALSE: Formula = frozenset()


def minimize(terms: Iterable[frozenset[str]]) -> Formula:
    """Drop every implicant that contains another one (absorption)."""
    terms = sorted(set(terms), key=len)
    kept: list[frozenset[str]] = []
    for t in terms:
        if not any(k <= t for k in kept):
            kept.append(t)
    return frozenset(kept)


def f_and(a: Formula, b: Formula) -> Formula:
    return minimize(x | y for x in a for y in b)


def f_or(a: Formula, b: Formula) -> Formula:
    return minimize(a | b)


def f_var(t: str) -> Formula:
    return frozenset({frozenset({t})})


def formula_to_list(f: Formula) -> list[list[str]]:
    return sorted(sorted(term) for term in f)


def formula_str(f: Formula) -> str:
    if f == TRUE:
        return "true"
    if not f:
        return "false"
    terms = [" & ".join(term) for term in formula_to_list(f)]
    return " | ".join(f"({t})" if len(f) > 1 and " & " in t else t for t in terms)


@dataclass(frozen=True)
class PersistentProcess:
    """A set of fired transitions of a host p-net together with the places they touch."""

    transitions: frozenset[str]
    pre: dict[str, frozenset[str]] = field(compare=False, hash=False)
    post: dict[str, frozenset[str]] = field(compare=False, hash=False)
    persistent: frozenset[str] = field(compare=False, hash=False)

    @classmethod
    def from_fired(cls, net: PNet, fired: Iterable[str]) -> PersistentProcess:
        fired = frozenset(fired)
        pre = {t: net.transitions[t].preset for t in fired}
        post = {t: net.transitions[t].postset.support for t in fired}
        places = frozenset().union(*pre.values(), *post.values()) if fired else frozenset()
        return cls(fired, pre, post, places & net.persistent)

    @property
    def places(self) -> frozenset[str]:
        return frozenset().union(*self.pre.values(), *self.post.values()) if self.transitions else frozenset()

    @property
    def id(self) -> str:
        return ";".join(sorted(self.transitions))

    @cached_property
    def producers(self) -> dict[str, frozenset[str]]:
        out: dict[str, set[str]] = {p: set() for p in self.places}
        for t, ps in self.post.items():
            for p in ps:
                out[p].add(t)
        return {p: frozenset(ts) for p, ts in out.items()}

    @property
    def initial_places(self) -> frozenset[str]:
        return frozenset(p for p, ts in self.producers.items() if not ts)

    @property
    def final_places(self) -> frozenset[str]:
        consumed = frozenset().union(*self.pre.values()) if self.transitions else frozenset()
        return self.places - consumed

    @cached_property
    def _phi(self) -> dict[str, Formula]:
        memo: dict[str, Formula] = {}

        def phi(x: str) -> Formula:
            if x in memo:
                return memo[x]
            if x in self.transitions:
                out = TRUE
                for p in sorted(self.pre[x]):
                    out = f_and(out, phi(p))
            else:
                out = FALSE if self.producers[x] else TRUE
                for t in sorted(self.producers[x]):
                    out = f_or(out, f_and(f_var(t), phi(t)))
            memo[x] = out
            return out

        for x in sorted(self.places | self.transitions):
            phi(x)
        return memo

    def as_pnet(self) -> PNet:
        return PNet.build(
            {t: (self.pre[t], self.post[t]) for t in self.transitions},
            initial=self.initial_places,
            persistent=self.persistent,
            regular=self.places - self.persistent,
        )

    def describe(self) -> dict:
        return {
            "id": self.id,
            "transitions": sorted(self.transitions),
            "places": sorted(self.places),
            "persistent": sorted(self.persistent),
            "causes": {t: formula_to_list(cause_formula(self, t)) for t in sorted(self.transitions)},
        }


def cause_formula(proc: PersistentProcess, x: str) -> Formula:
    """Prime-implicant DNF of the causes of node ``x`` of ``proc``."""
    if x not in proc._phi:
        raise KeyError(f"{x!r} is not a node of the process")
    return proc._phi[x]


def is_legal(proc: PersistentProcess, seq: list[str]) -> bool:
    if len(set(seq)) != len(seq):
        raise ValueError("sequence repeats a transition")
    foreign = [t for t in seq if t not in proc.transitions]
    if foreign:
        raise ValueError(f"transitions not in the process: {', '.join(foreign)}")
    done: set[str] = set()
    for t in seq:
        if not any(term <= done for term in cause_formula(proc, t)):
            return False
        done.add(t)
    return True


# ---------------------------------------------------------------- enumeration


def _shared(eng: Engine) -> list[bool]:
    by_place: dict[str, int] = {}
    for r in eng.reg_sets:
        for p in r:
            by_place[p] = by_place.get(p, 0) + 1
    return [any(by_place[p] > 1 for p in r) for r in eng.reg_sets]


def maximal_fired_sets(net: PNet, budget: int = DEFAULT_BUDGET) -> list[frozenset[str]]:
    """Transition sets of the maximal non-stuttering runs of ``net``.

    Transitions that nothing else can disable (persistent ones, and regular ones
    whose preset places have no other consumer) are fired eagerly; only genuine
    choices are branched on. This leaves the set of maximal runs unchanged.
    """
    eng = Engine(net)
    shared = _shared(eng)
    n = len(eng.names)
    seen = set()
    found: set[int] = set()
    stack = [(eng.initial(), 0)]
    steps = 0
    while stack:
        s, done = stack.pop()
        while True:
            eager = [i for i in eng.enabled(s) if eng.is_pers[i] or not shared[i]]
            if not eager:
                break
            for i in eager:
                s = eng.fire(s, i)
                done |= 1 << i
                steps += 1
            if steps > budget:
                raise BudgetExceeded(steps, len(stack))
        key = (s, done)
        if key in seen:
            continue
        seen.add(key)
        if len(seen) > budget:
            raise BudgetExceeded(len(seen), len(stack))
        en = eng.enabled(s)
        if not en:
            found.add(done)
        for i in en:
            stack.append((eng.fire(s, i), done | (1 << i)))
    return sorted(
        (frozenset(eng.names[i] for i in range(n) if (m >> i) & 1) for m in found), key=sorted
    )


def enumerate_maximal_processes(net: PNet, budget: int = DEFAULT_BUDGET) -> list[PersistentProcess]:
    return [PersistentProcess.from_fired(net, fs) for fs in maximal_fired_sets(net, budget)]


def event_order(proc: PersistentProcess) -> set[tuple[str, str]]:
    """Pairs (e, f) of source events where the transition of e is a necessary cause of that of f."""
    out = set()
    for t in proc.transitions:
        info = parse_name(t)
        if info is None or info.kind not in ("tx", "copy"):
            continue
        phi = cause_formula(proc, t)
        needed = frozenset.intersection(*phi) if phi else frozenset()
        for u in needed:
            for e in dec(u) if parse_name(u) else ():
                for f in dec(t):
                    out.add((e, f))
    return out


# ---------------------------------------------------------------- complete concurrency


def _process_steps(proc: PersistentProcess):
    """Enabled-by-firing and enabled-by-legality transitions as functions of the fired set."""
    eng = Engine(proc.as_pnet())
    phi = {t: cause_formula(proc, t) for t in proc.transitions}

    def fire_state(done: frozenset[str]):
        s = eng.initial()
        # the bag after firing a set does not depend on the order
        for t in sorted(done):
            s = eng.fire(s, eng.index[t])
        return s

    def by_firing(done: frozenset[str]) -> set[str]:
        s = fire_state(done)
        return {eng.names[i] for i in eng.enabled(s)} - done

    def by_legality(done: frozenset[str]) -> set[str]:
        return {t for t in proc.transitions - done if any(term <= done for term in phi[t])}

    return by_firing, by_legality


def check_complete_concurrency(
    proc: PersistentProcess, budget: int = DEFAULT_BUDGET, sequence_limit: int = 20_000
) -> CertReport:
    """Legal sequences of ``proc`` coincide with its firing sequences.

    Both notions decide the next step from the set of transitions fired so far, so it
    suffices to compare them on every reachable fired set. Sequences are also
    enumerated literally while their number stays under ``sequence_limit``.
    """
    with _Timer() as tm:
        by_firing, by_legality = _process_steps(proc)
        witness = None
        seen = {frozenset()}
        stack = [frozenset()]
        paths = {frozenset(): ()}
        while stack and witness is None:
            done = stack.pop()
            a, b = by_firing(done), by_legality(done)
            if a != b:
                witness = {
                    "prefix": list(paths[done]),
                    "firable_not_legal": sorted(a - b),
                    "legal_not_firable": sorted(b - a),
                }
                break
            for t in sorted(a):
                nxt = done | {t}
                if nxt not in seen:
                    if len(seen) >= budget:
                        raise BudgetExceeded(len(seen), len(stack))
                    seen.add(nxt)
                    paths[nxt] = paths[done] + (t,)
                    stack.append(nxt)
        details = {"fired_sets": len(seen)}
        if witness is None:
            details.update(_literal_sequences(proc, sequence_limit))
            if details.get("mismatch"):
                witness = details.pop("mismatch")
    return CertReport("complete-concurrency", witness is None, witness, len(seen), tm.ms, details)


def _literal_sequences(proc: PersistentProcess, limit: int) -> dict:
    """Enumerate every firing sequence by replaying markings and compare with is_legal."""
    eng = Engine(proc.as_pnet())
    count = 0
    stack = [((), eng.initial())]
    while stack:
        seq, s = stack.pop()
        count += 1
        if count > limit:
            return {"sequences": "skipped (more than %d)" % limit}
        if not is_legal(proc, list(seq)):
            return {"mismatch": {"firing_sequence_not_legal": list(seq)}}
        firable = {eng.names[i] for i in eng.enabled(s)} - set(seq)
        for t in proc.transitions - set(seq):
            legal = is_legal(proc, list(seq) + [t])
            if legal != (t in firable):
                return {"mismatch": {"prefix": list(seq), "transition": t, "legal": legal}}
        for t in sorted(firable):
            stack.append((seq + (t,), eng.fire(s, eng.index[t])))
    return {"sequences": count}


def linearizations(proc: PersistentProcess, budget: int = 100_000) -> set[tuple[str, ...]]:
    """All maximal legal sequences of ``proc``."""
    out: set[tuple[str, ...]] = set()
    phi = {t: cause_formula(proc, t) for t in proc.transitions}
    stack: list[tuple[str, ...]] = [()]
    while stack:
        seq = stack.pop()
        done = set(seq)
        nxt = [t for t in proc.transitions - done if any(term <= done for term in phi[t])]
        if not nxt:
            out.add(seq)
            if len(out) > budget:
                raise BudgetExceeded(len(out), len(stack))
        for t in sorted(nxt):
            stack.append(seq + (t,))
    return out
