"""Figures for simulation and benchmark reports (rendered headless to files)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_round_phases(records: list[dict], out_dir) -> list[Path]:
    """Per-phase wall time and traffic, averaged over rounds."""
    out_dir = Path(out_dir)
    phases = [r for r in records if r.get("name") != "summary"]
    names = list(dict.fromkeys(r["name"] for r in phases))
    written = []

    def mean(key, name):
        vals = [r[key] for r in phases if r["name"] == name and r[key] is not None]
        return sum(vals) / len(vals) if vals else 0.0

    if any(r["wall_ns"] is not None for r in phases):
        fig, ax = plt.subplots(figsize=(7, 3.5))
        ax.barh(names, [mean("wall_ns", n) / 1e6 for n in names], color="#4477aa")
        ax.invert_yaxis()
        ax.set_xlabel("wall time per round (ms)")
        written.append(_save(fig, out_dir / "phase_time.png"))

    fig, ax = plt.subplots(figsize=(7, 3.5))
    y = range(len(names))
    ax.barh([i - 0.2 for i in y], [mean("bytes_in", n) / 1e6 for n in names], height=0.4, label="in")
    ax.barh([i + 0.2 for i in y], [mean("bytes_out", n) / 1e6 for n in names], height=0.4, label="out")
    ax.set_yticks(list(y), names)
    ax.invert_yaxis()
    ax.set_xlabel("MB per round")
    ax.legend()
    written.append(_save(fig, out_dir / "phase_bytes.png"))
    return written


def plot_bench(rows: list[dict], out_dir) -> list[Path]:
    """Expanded-ciphertext size and operation time against party count."""
    out_dir = Path(out_dir)
    sizes = [r for r in rows if r["name"] == "expanded_size"]
    ops = [r for r in rows if r["name"] != "expanded_size"]
    written = []
    if sizes:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot([r["parties"] for r in sizes], [r["bytes"] / 1e6 for r in sizes], "o-")
        ax.set_xlabel("parties")
        ax.set_ylabel("serialized size (MB)")
        written.append(_save(fig, out_dir / "expanded_size.png"))
    if ops:
        fig, ax = plt.subplots(figsize=(6, 3.5))
        for name in dict.fromkeys(r["name"] for r in ops):
            pts = [r for r in ops if r["name"] == name]
            ax.plot([r["parties"] for r in pts], [r["wall_ns"] / 1e6 for r in pts], "o-", label=name)
        ax.set_xlabel("parties")
        ax.set_ylabel("ms")
        ax.set_yscale("log")
        ax.legend(fontsize=7)
        written.append(_save(fig, out_dir / "op_time.png"))
    return written
