"""Command line: compile, inspect, certify and sample occurrence nets.

Reports are JSON on stdout, or in the file given by ``-o``. Subcommands that
draw figures put a PNG with the same stem next to the report.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .ab_oracle import check_correspondence
from .dot import write_dot
from .encoder import encode, expand_transactions, flatten, prune
from .formats import FormatError, read_net, write_net
from .generate import generate_random_net
from .net import InvalidNet, OccurrenceNet, PNet, require_valid
from .probability import (
    local_distribution,
    ordered_table,
    parse_weights,
    process_table,
    sample_frequencies,
    total_probability,
    uniform_weights,
)
from .processes import check_complete_concurrency, enumerate_maximal_processes
from .semantics import (
    DEFAULT_BUDGET,
    REPORT_VERSION,
    BudgetExceeded,
    check_confusion_free,
    check_dyn_flat_bisim,
    check_dynamic_invariants,
    check_exclusion,
    check_safety,
)
from .structure import scell_decomposition, transactions

EXTENSIONS = {".pnml": "pnml", ".xml": "pnml", ".net": "native", ".txt": "native", ".dot": "dot"}


class UsageError(ValueError):
    pass


def _read(path: str) -> OccurrenceNet | PNet:
    data = sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
    return read_net(data)


def _occurrence(path: str) -> OccurrenceNet:
    net = _read(path)
    if not isinstance(net, OccurrenceNet):
        raise UsageError(f"{path}: expected an occurrence net, found a p-net")
    return require_valid(net)


def _emit(report: dict, out: str | None, timings: bool = False) -> None:
    if not timings:
        report = _strip_timings(report)
    text = json.dumps(report, indent=2, ensure_ascii=False) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _strip_timings(obj):
    # timings vary between runs; reports are byte-deterministic without them
    if isinstance(obj, dict):
        return {k: _strip_timings(v) for k, v in obj.items() if k != "elapsed_ms"}
    if isinstance(obj, list):
        return [_strip_timings(v) for v in obj]
    return obj


def _figure_path(args) -> Path | None:
    if getattr(args, "no_figure", False):
        return None
    if getattr(args, "figure", None):
        return Path(args.figure)
    if args.output:
        return Path(args.output).with_suffix(".png")
    return None


def _format_for(path: str | None, explicit: str | None, default: str) -> str:
    if explicit:
        return explicit
    if path:
        return EXTENSIONS.get(Path(path).suffix.lower(), default)
    return default


def _write_bytes(data: bytes, out: str | None) -> None:
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)


# ---------------------------------------------------------------- subcommands


def cmd_transform(args) -> int:
    net = _occurrence(args.input)
    pnet = flatten(encode(net))
    if not args.no_prune:
        pnet = prune(pnet)
    if args.expand:
        pnet = expand_transactions(pnet, net)
    _write_bytes(write_net(pnet, _format_for(args.output, args.format, "pnml")), args.output)
    return 0


def cmd_cells(args) -> int:
    net = _occurrence(args.input)
    cells = []
    for c in scell_decomposition(net):
        cells.append(
            {
                "transitions": sorted(c.transitions),
                "places": sorted(c.subnet.places),
                "initial": sorted(c.min),
                "final": sorted(c.max),
                "transactions": [
                    {"transitions": sorted(th.transitions), "initial": sorted(th.min_places), "final": sorted(th.max_places)}
                    for th in transactions(c)
                ],
            }
        )
    _emit({"version": REPORT_VERSION, "input": args.input, "cells": cells}, args.output)
    return 0


def _verify_occurrence(net: OccurrenceNet, args) -> list:
    dnet = encode(net)
    flat = prune(flatten(dnet))
    reports = [
        check_safety(flat, args.budget),
        check_confusion_free(flat, args.budget),
        check_exclusion(flat, net, args.budget),
        check_dyn_flat_bisim(dnet, args.budget),
        check_dynamic_invariants(dnet, net, args.budget),
        check_correspondence(net, args.budget, structural=args.structural_conflict),
    ]
    reports.append(_concurrency_summary(flat, args.budget))
    return reports


def _concurrency_summary(pnet: PNet, budget: int):
    from .semantics import CertReport

    results = [check_complete_concurrency(p, budget) for p in enumerate_maximal_processes(pnet, budget)]
    failing = [r.witness for r in results if not r.verdict]
    return CertReport(
        "complete-concurrency",
        not failing,
        failing[0] if failing else None,
        sum(r.states_explored for r in results),
        sum(r.elapsed_ms for r in results),
        {"processes": len(results)},
    )


def cmd_verify(args) -> int:
    net = _read(args.input)
    if isinstance(net, OccurrenceNet):
        reports = _verify_occurrence(require_valid(net), args)
    else:
        reports = [
            check_safety(net, args.budget),
            check_confusion_free(net, args.budget),
            _concurrency_summary(net, args.budget),
        ]
    checks = {r.check: r.to_dict() for r in reports}
    ok = all(r.verdict for r in reports)
    report = {
        "version": REPORT_VERSION,
        "input": args.input,
        "verdict": "pass" if ok else "fail",
        "checks": checks,
    }
    fig = _figure_path(args)
    if fig is not None:
        from .figures import verify_figure

        verify_figure(checks, fig)
        report["figure"] = str(fig)
    _emit(report, args.output, args.timings)
    return 0 if ok else 1


def _compiled(path: str) -> tuple[OccurrenceNet | None, PNet]:
    net = _read(path)
    if isinstance(net, OccurrenceNet):
        require_valid(net)
        return net, prune(flatten(encode(net)))
    return None, net


def cmd_processes(args) -> int:
    _, pnet = _compiled(args.input)
    procs = enumerate_maximal_processes(pnet, args.budget)
    out = []
    for k, p in enumerate(procs, 1):
        entry = p.describe()
        if args.dot_dir:
            d = Path(args.dot_dir)
            d.mkdir(parents=True, exist_ok=True)
            name = f"process_{k}.dot"
            (d / name).write_bytes(write_dot(p, f"process_{k}"))
            entry["dot"] = name
        out.append(entry)
    _emit({"version": REPORT_VERSION, "input": args.input, "processes": out}, args.output)
    return 0


def cmd_prob(args) -> int:
    net = _occurrence(args.input)
    if args.weights == "uniform":
        weights = uniform_weights(net)
    else:
        weights = parse_weights(json.loads(Path(args.weights).read_text(encoding="utf-8")))
    dist = local_distribution(net, weights)
    pnet = prune(flatten(encode(net)))
    table = ordered_table(process_table(pnet, dist, args.budget))
    total = total_probability(pnet, dist, args.budget)
    report = {
        "version": REPORT_VERSION,
        "input": args.input,
        "weights": "uniform" if args.weights == "uniform" else args.weights,
        "cells": dist.describe(),
        "processes": table,
        "total": total.details["sum"],
    }
    freqs = None
    if args.samples:
        freqs = sample_frequencies(pnet, dist, args.samples, args.seed)
        exact = {r["process"]: _as_float(r["probability"]) for r in table}
        report["sampling"] = {
            "samples": args.samples,
            "seed": args.seed,
            "frequencies": {k: round(v, 6) for k, v in freqs.items()},
            "max_abs_error": round(max(abs(freqs.get(k, 0.0) - v) for k, v in exact.items()), 6),
        }
    fig = _figure_path(args)
    if fig is not None:
        from .figures import probability_figure

        probability_figure(table, fig, freqs)
        report["figure"] = str(fig)
    _emit(report, args.output)
    return 0


def _as_float(s: str) -> float:
    num, _, den = s.partition("/")
    return int(num) / int(den or 1)


def cmd_gen(args) -> int:
    net = generate_random_net(args.seed, args.max_transitions, args.max_width)
    _write_bytes(write_net(net, _format_for(args.output, args.format, "native")), args.output)
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deconfuse", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=REPORT_VERSION)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, figure=False):
        p.add_argument("input", help="PNML or native net file, '-' for stdin")
        p.add_argument("-o", "--output", help="write the report here instead of stdout")
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="state budget for explorations")
        if figure:
            p.add_argument("--figure", help="PNG path (default: report path with .png)")
            p.add_argument("--no-figure", action="store_true")

    p = sub.add_parser("transform", help="compile into a confusion-free p-net")
    common(p)
    p.add_argument("--no-prune", action="store_true", help="keep dead transitions and places")
    p.add_argument("--expand", action="store_true", help="unfold multi-event transactions")
    p.add_argument("--format", choices=["pnml", "native", "dot"])
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("cells", help="s-cells and their transactions")
    common(p)
    p.set_defaults(func=cmd_cells)

    p = sub.add_parser("verify", help="run every certificate; exit 0 iff all pass")
    common(p, figure=True)
    p.add_argument(
        "--structural-conflict",
        action="store_true",
        help="use the net's immediate conflict (shared preset places) in the event-structure comparison",
    )
    p.add_argument("--timings", action="store_true", help="include elapsed times (output no longer byte-stable)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("processes", help="maximal persistent processes of the compiled net")
    common(p)
    p.add_argument("--dot-dir", help="write one DOT file per process into this directory")
    p.set_defaults(func=cmd_processes)

    p = sub.add_parser("prob", help="exact process probabilities, optionally checked by sampling")
    common(p, figure=True)
    p.add_argument("--weights", required=True, help="JSON file of 'place->transition' weights, or 'uniform'")
    p.add_argument("--samples", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_prob)

    p = sub.add_parser("gen", help="seeded random occurrence net")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-transitions", type=int, default=8)
    p.add_argument("--max-width", type=int, default=3)
    p.add_argument("-o", "--output")
    p.add_argument("--format", choices=["pnml", "native", "dot"])
    p.set_defaults(func=cmd_gen)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidNet as exc:
        err = {"error": "invalid-net", "message": str(exc), "violations": exc.report.to_dict()}
    except FormatError as exc:
        err = {"error": "format", "message": str(exc)}
    except BudgetExceeded as exc:
        err = {"error": "budget", "message": str(exc), "explored": exc.explored}
    except (UsageError, ValueError, KeyError) as exc:
        err = {"error": "usage", "message": str(exc)}
    except OSError as exc:
        err = {"error": "io", "message": str(exc)}
    sys.stdout.flush()
    sys.stderr.write(json.dumps({"version": REPORT_VERSION, **err}, ensure_ascii=False) + "\n")
    return 2


if __name__ == "__main__":
    sys.exit(main())
