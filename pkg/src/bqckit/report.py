"""Figure rendering and delimited output for the CLI report path."""

from __future__ import annotations

import csv
import io
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_RC = {
    "figure.figsize": (6.0, 3.6),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "svg.hashsalt": "bqckit",
}


def _atomic_bytes(path: str, payload: bytes) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as handle:
        handle.write(payload)
    os.replace(tmp, path)


def write_text(path: str, text: str) -> None:
    _atomic_bytes(path, text.encode("utf-8"))


def write_csv(path: str, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    write_text(path, buf.getvalue())


def _save(fig, path: str) -> None:
    buf = io.BytesIO()
    fig.savefig(buf, format="png")
    plt.close(fig)
    _atomic_bytes(path, buf.getvalue())


def render_loss_curve(losses, path: str, title: str = "training loss") -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(range(len(losses)), losses, lw=1.2)
        ax.set_yscale("log")
        ax.set_xlabel("iteration")
        ax.set_ylabel("MMD loss")
        ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)


def render_loss_curves(traces: dict[str, list[float]], path: str, title: str) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        for label, losses in traces.items():
            ax.plot(range(len(losses)), losses, lw=1.2, label=label)
        ax.set_yscale("log")
        ax.set_xlabel("iteration")
        ax.set_ylabel("MMD loss")
        ax.set_title(title)
        ax.legend(fontsize=8)
        fig.tight_layout()
        _save(fig, path)


def render_distribution(
    probabilities,
    path: str,
    highlight=(),
    target=None,
    title: str = "generated distribution",
) -> None:
    """Bar chart over integer-encoded outcomes; valid outcomes highlighted."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        n = len(probabilities)
        xs = range(n)
        colors = ["tab:orange" if i in set(highlight) else "tab:blue" for i in xs]
        ax.bar(xs, probabilities, color=colors, width=0.9)
        if target is not None:
            ax.step(xs, target, where="mid", color="black", lw=0.8, label="target")
            ax.legend(fontsize=8)
        ax.set_xlabel("outcome (integer encoding)")
        ax.set_ylabel("probability")
        ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)


def render_entropy_trace(steps, bonds, entropies, path: str, title: str) -> None:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.plot(steps, entropies, lw=1.2, color="tab:blue", label="half-chain entropy")
        ax.set_xlabel("step")
        ax.set_ylabel("entropy (nats)")
        ax2 = ax.twinx()
        ax2.plot(steps, bonds, lw=1.0, color="tab:red", alpha=0.7, label="bond dim")
        ax2.set_ylabel("bond dimension")
        ax2.grid(False)
        ax.set_title(title)
        fig.tight_layout()
        _save(fig, path)
