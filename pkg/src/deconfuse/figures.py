"""Matplotlib figures written next to the JSON reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed metadata keeps the PNG bytes identical across runs
_META = {"Software": None}


def _short(pid: str, width: int = 28) -> str:
    return pid if len(pid) <= width else pid[: width - 1] + "…"


def probability_figure(rows: list[dict], path: str | Path, empirical: dict[str, float] | None = None) -> Path:
    """Bar chart of exact process probabilities, with sampled frequencies beside them."""
    path = Path(path)
    labels = [r["process"] for r in rows]
    exact = [_frac(r["probability"]) for r in rows]
    n = len(rows)
    fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * n + 2), 3.6))
    xs = range(n)
    w = 0.38 if empirical is not None else 0.6
    ax.bar([x - (w / 2 if empirical is not None else 0) for x in xs], exact, w, label="exact", color="#4c72b0")
    if empirical is not None:
        emp = [empirical.get(lab, 0.0) for lab in labels]
        ax.bar([x + w / 2 for x in xs], emp, w, label="sampled", color="#dd8452")
        ax.legend(frameon=False, fontsize=8)
    ax.set_xticks(list(xs))
    ax.set_xticklabels([f"P{i + 1}" for i in xs], fontsize=8)
    ax.set_ylabel("probability")
    ax.set_ylim(0, max(exact + [0.0]) * 1.25 or 1)
    ax.spines[["top", "right"]].set_visible(False)
    caption = "\n".join(f"P{i + 1}: {_short(' '.join(r['events']) or '(empty)')}" for i, r in enumerate(rows))
    fig.text(0.74, 0.92, caption, ha="left", va="top", fontsize=7, family="monospace")
    fig.tight_layout(rect=(0, 0, 0.72, 1))
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)
    return path


def verify_figure(checks: dict[str, dict], path: str | Path) -> Path:
    """Horizontal bars of explored states per check, coloured by verdict."""
    path = Path(path)
    names = sorted(checks)
    states = [max(1, checks[k].get("states_explored", 0)) for k in names]
    colors = ["#55a868" if checks[k]["verdict"] == "pass" else "#c44e52" for k in names]
    fig, ax = plt.subplots(figsize=(6, 0.45 * len(names) + 1.2))
    ax.barh(names, states, color=colors)
    ax.set_xscale("log")
    ax.set_xlim(left=0.8, right=max(states) * 2)
    ax.set_xlabel("states explored (green pass, red fail)")
    ax.invert_yaxis()
    ax.spines[["top", "right"]].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)
    return path


def _frac(s: str) -> float:
    num, _, den = s.partition("/")
    return int(num) / int(den or 1)
