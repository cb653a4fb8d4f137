"""Native text format and PNML for occurrence nets and p-nets.

Native format, one item per line, canonical order::

    # deconfuse net v1
    kind pnet
    place 1 tokens=1
    place neg:3 persistent
    transition a
    arc 1 a

PNML: the core place/transition subset. Persistent places carry a ``persistent:``
name prefix and a tool-specific tag; every transition reading one gets a back-arc
(tagged ``readback``) so ordinary tools simulate the net. Persistent transitions
get a one-token guard place so they fire at most once.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from typing import Union

from .net import INF, Bag, OccurrenceNet, PNet, PTransition, fmt_count

AnyNet = Union[OccurrenceNet, PNet]

HEADER = "# deconfuse net v1"
TOOL = "deconfuse"
PNML_NS = "http://www.pnml.org/version-2009/grammar/pnml"
PTNET = "http://www.pnml.org/version-2009/grammar/ptnet"
PERSISTENT_PREFIX = "persistent:"
GUARD_PREFIX = "guard:"


class FormatError(ValueError):
    pass


# ---------------------------------------------------------------- native text


def write_native(net: AnyNet) -> bytes:
    lines = [HEADER]
    if isinstance(net, OccurrenceNet):
        lines.append("kind occurrence")
        for p in sorted(net.places):
            lines.append(f"place {p}" + (" tokens=1" if p in net.initial else ""))
        for t in sorted(net.transitions):
            lines.append(f"transition {t}")
        for x, y in sorted(net.flow):
            lines.append(f"arc {x} {y}")
    else:
        lines.append("kind pnet")
        for p in sorted(net.places):
            words = [f"place {p}"]
            if p in net.persistent:
                words.append("persistent")
            if net.initial[p]:
                words.append(f"tokens={fmt_count(net.initial[p])}")
            lines.append(" ".join(words))
        for t in sorted(net.transitions):
            lines.append(f"transition {t}")
        arcs = []
        for name, t in net.transitions.items():
            arcs += [(p, name) for p in t.preset]
            arcs += [(name, p) for p in t.postset]
        for x, y in sorted(arcs):
            lines.append(f"arc {x} {y}")
    return ("\n".join(lines) + "\n").encode()


def parse_native(data: bytes | str) -> AnyNet:
    text = data.decode() if isinstance(data, bytes) else data
    kind = None
    places: dict[str, tuple[bool, float]] = {}
    transitions: list[str] = []
    arcs: list[tuple[str, str]] = []
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        words = line.split()
        head, args = words[0], words[1:]
        if head == "kind" and len(args) == 1 and args[0] in ("occurrence", "pnet"):
            kind = args[0]
        elif head == "place" and args:
            persistent, tokens = False, 0.0
            for w in args[1:]:
                if w == "persistent":
                    persistent = True
                elif w.startswith("tokens="):
                    v = w[len("tokens="):]
                    try:
                        tokens = INF if v == "inf" else int(v)
                    except ValueError:
                        raise FormatError(f"line {no}: bad token count {v!r}") from None
                else:
                    raise FormatError(f"line {no}: unknown place attribute {w!r}")
            if args[0] in places:
                raise FormatError(f"line {no}: place {args[0]} declared twice")
            places[args[0]] = (persistent, tokens)
        elif head == "transition" and len(args) == 1:
            transitions.append(args[0])
        elif head == "arc" and len(args) == 2:
            arcs.append((args[0], args[1]))
        else:
            raise FormatError(f"line {no}: cannot read {line!r}")
    if kind is None:
        raise FormatError("missing 'kind' line")
    return _assemble(kind, places, transitions, arcs)


def _assemble(kind, places, transitions, arcs) -> AnyNet:
    tset = set(transitions)
    for x, y in arcs:
        if not ((x in places and y in tset) or (x in tset and y in places)):
            raise FormatError(f"arc {x} -> {y} must join a declared place and transition")
    if kind == "occurrence":
        bad = [p for p, (pers, n) in places.items() if pers or n not in (0, 1)]
        if bad:
            raise FormatError(f"occurrence nets need 0/1 markings and no persistent places: {', '.join(sorted(bad))}")
        return OccurrenceNet(
            frozenset(places),
            frozenset(transitions),
            frozenset(arcs),
            frozenset(p for p, (_, n) in places.items() if n),
        )
    persistent = frozenset(p for p, (pers, _) in places.items() if pers)
    trans = {}
    for t in transitions:
        pre = frozenset(x for x, y in arcs if y == t)
        post = Bag({y: (INF if y in persistent else 1) for x, y in arcs if x == t})
        trans[t] = PTransition(t, pre, post)
    initial = Bag({p: (INF if p in persistent else n) for p, (_, n) in places.items() if n})
    return PNet(frozenset(places) - persistent, persistent, trans, initial)


# ---------------------------------------------------------------- PNML


def _text(parent: ET.Element, tag: str, value: str) -> None:
    el = ET.SubElement(parent, tag)
    ET.SubElement(el, "text").text = value


def _tool(parent: ET.Element) -> ET.Element:
    return ET.SubElement(parent, "toolspecific", {"tool": TOOL, "version": "1"})


def write_pnml(net: AnyNet) -> bytes:
    ET.register_namespace("", PNML_NS)
    pn = net if isinstance(net, PNet) else None
    if pn is None:
        places = sorted(net.places)
        persistent: frozenset[str] = frozenset()
        marking = {p: 1 for p in net.initial}
        trans = {t: (net.preset(t), {p: 1 for p in net.postset(t)}) for t in net.transitions}
    else:
        places = sorted(pn.places)
        persistent = pn.persistent
        marking = dict(pn.initial)
        trans = {n: (t.preset, dict(t.postset)) for n, t in pn.transitions.items()}

    root = ET.Element("pnml", {"xmlns": PNML_NS})
    net_el = ET.SubElement(root, "net", {"id": "net0", "type": PTNET})
    _text(net_el, "name", "deconfuse")
    ET.SubElement(_tool(net_el), "kind").text = "pnet" if pn is not None else "occurrence"
    page = ET.SubElement(net_el, "page", {"id": "page0"})

    ids: dict[str, str] = {}
    for i, p in enumerate(places):
        ids[p] = f"p{i}"
        el = ET.SubElement(page, "place", {"id": ids[p]})
        _text(el, "name", (PERSISTENT_PREFIX + p) if p in persistent else p)
        if marking.get(p):
            _text(el, "initialMarking", "1" if marking[p] == INF else str(int(marking[p])))
        if p in persistent:
            ET.SubElement(_tool(el), "persistent")
    names = sorted(trans)
    guarded = [t for t in names if pn is not None and pn.is_persistent_transition(t)]
    for i, t in enumerate(guarded):
        gid = f"g{i}"
        el = ET.SubElement(page, "place", {"id": gid})
        _text(el, "name", GUARD_PREFIX + t)
        _text(el, "initialMarking", "1")
        ET.SubElement(_tool(el), "guard")
    for i, t in enumerate(names):
        ids[t] = f"t{i}"
        el = ET.SubElement(page, "transition", {"id": ids[t]})
        _text(el, "name", t)

    arcs: list[tuple[str, str, str]] = []
    for t in names:
        pre, post = trans[t]
        for p in sorted(pre):
            arcs.append((ids[p], ids[t], ""))
            if p in persistent:
                arcs.append((ids[t], ids[p], "readback"))
        for p in sorted(post):
            arcs.append((ids[t], ids[p], ""))
    for i, t in enumerate(guarded):
        arcs.append((f"g{i}", ids[t], "guard"))
    for i, (src, dst, role) in enumerate(arcs):
        el = ET.SubElement(page, "arc", {"id": f"a{i}", "source": src, "target": dst})
        if role:
            ET.SubElement(_tool(el), role)
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _child(el: ET.Element, name: str) -> ET.Element | None:
    for c in el:
        if _local(c.tag) == name:
            return c
    return None


def _child_text(el: ET.Element, name: str) -> str | None:
    c = _child(el, name)
    if c is None:
        return None
    t = _child(c, "text")
    return (t.text or "").strip() if t is not None else (c.text or "").strip()


def _tags(el: ET.Element) -> set[str]:
    out = set()
    for c in el:
        if _local(c.tag) == "toolspecific" and c.get("tool") == TOOL:
            out |= {_local(x.tag) for x in c}
    return out


def parse_pnml(data: bytes | str) -> AnyNet:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise FormatError(f"malformed PNML at line {line}, column {col}: {exc}") from None
    net_el = root if _local(root.tag) == "net" else _child(root, "net")
    if net_el is None:
        raise FormatError("no <net> element")
    kind = None
    for c in net_el:
        if _local(c.tag) == "toolspecific" and c.get("tool") == TOOL:
            k = _child(c, "kind")
            kind = (k.text or "").strip() if k is not None else None
    elements = [e for e in net_el.iter() if _local(e.tag) in ("place", "transition", "arc")]

    names: dict[str, str] = {}
    places: dict[str, tuple[bool, float]] = {}
    guards: set[str] = set()
    transitions: list[str] = []
    raw_arcs: list[tuple[str, str, set[str], str]] = []
    for el in elements:
        tag, eid = _local(el.tag), el.get("id")
        if tag != "arc" and not eid:
            raise FormatError(f"<{tag}> without id")
        if tag == "place":
            label = _child_text(el, "name") or eid
            tags = _tags(el)
            if "guard" in tags or label.startswith(GUARD_PREFIX):
                guards.add(eid)
                continue
            pers = "persistent" in tags or label.startswith(PERSISTENT_PREFIX)
            if label.startswith(PERSISTENT_PREFIX):
                label = label[len(PERSISTENT_PREFIX):]
            m = _child_text(el, "initialMarking")
            try:
                tokens = int(m) if m else 0
            except ValueError:
                raise FormatError(f"place {eid}: bad initial marking {m!r}") from None
            names[eid] = label
            places[label] = (pers, (INF if pers and tokens else tokens))
        elif tag == "transition":
            label = _child_text(el, "name") or eid
            names[eid] = label
            transitions.append(label)
        else:
            src, dst = el.get("source"), el.get("target")
            if src is None or dst is None:
                raise FormatError(f"arc {el.get('id')} lacks source or target")
            raw_arcs.append((src, dst, _tags(el), el.get("id") or "?"))

    # files written by us tag every back-arc; for foreign files an untagged
    # transition->persistent arc paired with the reverse arc is read as a read
    tagged = kind is not None
    consumed = {(s, d) for s, d, _, _ in raw_arcs}
    arcs = []
    for src, dst, tags, aid in raw_arcs:
        if src in guards or dst in guards:
            continue
        if src not in names or dst not in names:
            raise FormatError(f"arc {aid} refers to unknown node")
        s, d = names[src], names[dst]
        if "readback" in tags:
            continue
        if not tagged and d in places and places[d][0] and (dst, src) in consumed:
            continue
        arcs.append((s, d))
    if kind is None:
        kind = "pnet" if any(p for p, _ in places.values()) else "occurrence"
    return _assemble(kind, places, transitions, arcs)


def read_net(data: bytes) -> AnyNet:
    """Parse PNML or native text, whichever ``data`` holds."""
    head = data.lstrip()[:1]
    return parse_pnml(data) if head == b"<" else parse_native(data)


def write_net(net: AnyNet, fmt: str) -> bytes:
    if fmt == "pnml":
        return write_pnml(net)
    if fmt == "native":
        return write_native(net)
    if fmt == "dot":
        from .dot import write_dot

        return write_dot(net)
    raise ValueError(f"unknown format {fmt!r}")
