"""Graphviz DOT rendering of nets, processes and state graphs."""

from __future__ import annotations

from .net import INF, OccurrenceNet, PNet, fmt_count
from .processes import PersistentProcess
from .semantics import StateGraph


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _tokens(n: float) -> str:
    if n == INF:
        return "\n∞"
    if n == 1:
        return "\n●"
    return f"\n●{fmt_count(n)}" if n else ""


def _place(name: str, persistent: bool, tokens: float) -> str:
    shape = "doublecircle" if persistent else "circle"
    return f"  {_q('p:' + name)} [shape={shape}, label={_q(name + _tokens(tokens))}];"


def _transition(name: str) -> str:
    return f"  {_q('t:' + name)} [shape=box, label={_q(name)}];"


def net_to_dot(net: OccurrenceNet | PNet, title: str = "net") -> str:
    lines = [f"digraph {_q(title)} {{", "  rankdir=TB;"]
    if isinstance(net, OccurrenceNet):
        for p in sorted(net.places):
            lines.append(_place(p, False, 1 if p in net.initial else 0))
        for t in sorted(net.transitions):
            lines.append(_transition(t))
        for x, y in sorted(net.flow):
            a = ("p:" + x, "t:" + y) if x in net.places else ("t:" + x, "p:" + y)
            lines.append(f"  {_q(a[0])} -> {_q(a[1])};")
    else:
        for p in sorted(net.places):
            lines.append(_place(p, p in net.persistent, net.initial[p]))
        for t in sorted(net.transitions):
            lines.append(_transition(t))
        for name in sorted(net.transitions):
            t = net.transitions[name]
            for p in sorted(t.preset):
                lines.append(f"  {_q('p:' + p)} -> {_q('t:' + name)};")
            for p in sorted(t.postset):
                lines.append(f"  {_q('t:' + name)} -> {_q('p:' + p)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def process_to_dot(proc: PersistentProcess, title: str = "process") -> str:
    return net_to_dot(proc.as_pnet(), title)


def state_graph_to_dot(g: StateGraph, title: str = "states") -> str:
    lines = [f"digraph {_q(title)} {{"]
    for i in range(len(g.states)):
        bag = g.bag(i)
        label = ", ".join(
            p + ("" if bag[p] == 1 else "^" + fmt_count(bag[p])) for p in sorted(bag.support)
        )
        shape = "doublecircle" if not g.succ[i] else "ellipse"
        lines.append(f"  s{i} [shape={shape}, label={_q('{' + label + '}')}];")
    for i, t, j in g.edges():
        lines.append(f"  s{i} -> s{j} [label={_q(t)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_dot(obj, title: str | None = None) -> bytes:
    if isinstance(obj, PersistentProcess):
        text = process_to_dot(obj, title or "process")
    elif isinstance(obj, StateGraph):
        text = state_graph_to_dot(obj, title or "states")
    elif isinstance(obj, (OccurrenceNet, PNet)):
        text = net_to_dot(obj, title or "net")
    else:
        raise TypeError(f"cannot render {type(obj).__name__} as DOT")
    return text.encode()
