"""Delimited and graphical output for verdict matrices."""

from __future__ import annotations

import csv


def matrix_rows(results):
    """(parameter, verdict) pairs to plain rows."""
    out = []
    for key, verdict in results:
        witness = ""
        if verdict.kind == "fails" and verdict.witness is not None:
            witness = " ".join(verdict.witness.group_generators)
        out.append({"param": key, "kind": verdict.kind,
                    "bound": verdict.bound, "mode": verdict.mode,
                    "witness": witness})
    return out


def write_csv(rows, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["param", "kind", "bound", "mode", "witness"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def render_matrix_png(rows, path, title, xlabel="m"):
    """One-row verdict strip: green cells hold at the bound, red cells fail
    with the witness generators printed underneath."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    params = [r["param"] for r in rows]
    colors = ["#2a9d4e" if r["kind"] == "holds_at_bound" else "#d23b3b"
              for r in rows]
    fig, ax = plt.subplots(figsize=(max(4, 1.2 * len(rows)), 2.4))
    ax.bar(range(len(rows)), [1] * len(rows), color=colors, width=0.92)
    for i, r in enumerate(rows):
        label = "holds" if r["kind"] == "holds_at_bound" else "fails"
        ax.text(i, 0.62, label, ha="center", va="center", color="white",
                fontsize=10, fontweight="bold")
        if r["witness"]:
            ax.text(i, 0.25, r["witness"], ha="center", va="center",
                    color="white", fontsize=6, wrap=True)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels([str(p) for p in params])
    ax.set_yticks([])
    ax.set_xlabel(xlabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
