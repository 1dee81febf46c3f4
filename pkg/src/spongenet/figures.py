"""Figure rendering for the ``report`` subcommand.

Each renderer writes a PNG and a CSV of exactly the plotted values next to
it, so the delimited data can be replotted elsewhere without re-running
anything.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _write_csv(path: Path, fieldnames: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def render_history(runs: list[tuple[str, dict]], out_dir: Path) -> list[Path]:
    """Training curves (loss, validation accuracy, validation energy ratio)."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.4), constrained_layout=True)
    rows = []
    for label, report in runs:
        hist = report["history"]
        epochs = [r["epoch"] for r in hist]
        axes[0].plot(epochs, [r["train_loss"] for r in hist], label=label)
        axes[1].plot(epochs, [r["val_accuracy"] for r in hist], label=label)
        axes[2].plot(epochs, [r["val_energy_ratio"] for r in hist], label=label)
        for r in hist:
            rows.append({"run": label, **r})
    for ax, title in zip(axes, ("train loss", "val accuracy", "val energy ratio")):
        ax.set_xlabel("epoch")
        ax.set_title(title)
        ax.grid(True, alpha=0.3)
    axes[0].legend(fontsize=8)

    png = out_dir / "history.png"
    fig.savefig(png, dpi=150)
    plt.close(fig)
    csv_path = out_dir / "history.csv"
    _write_csv(
        csv_path,
        ["run", "epoch", "train_loss", "val_accuracy", "val_energy_ratio", "lr"],
        rows,
    )
    return [png, csv_path]


def render_profile(profile: dict, out_dir: Path) -> list[Path]:
    """Per-layer firing fractions; paired profiles overlay both models."""
    layers = profile["layers"]
    names = [f"{r['layer']}" for r in layers]
    xs = np.arange(len(layers))
    paired = layers and "clean_fraction" in layers[0]

    fig, ax = plt.subplots(figsize=(max(6, 0.7 * len(layers)), 3.6), constrained_layout=True)
    if paired:
        ax.bar(xs - 0.2, [r["clean_fraction"] for r in layers], width=0.4,
               color="tab:blue", label="baseline")
        ax.bar(xs + 0.2, [r["sponge_fraction"] for r in layers], width=0.4,
               color="tab:red", label="model")
        ax.legend(fontsize=8)
        fields = ["layer", "kind", "clean_fraction", "sponge_fraction", "delta"]
    else:
        ax.bar(xs, [r["fraction"] for r in layers], width=0.6, color="tab:blue")
        fields = ["layer", "kind", "fraction"]
    ax.set_xticks(xs)
    ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("firing fraction")
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, axis="y", alpha=0.3)

    png = out_dir / "firing_fractions.png"
    fig.savefig(png, dpi=150)
    plt.close(fig)
    csv_path = out_dir / "firing_fractions.csv"
    _write_csv(csv_path, fields, [{k: r[k] for k in fields} for r in layers])
    return [png, csv_path]


def _sweep_aggregate(rows: list[dict]) -> list[dict]:
    """Mean metrics per (sigma, lambda, p) cell over seeds; skips failed rows."""
    cells: dict[tuple, list[dict]] = {}
    for row in rows:
        if row["status"] != "ok":
            continue
        key = (float(row["sigma"]), float(row["lambda"]), float(row["p"]))
        cells.setdefault(key, []).append(row)
    out = []
    for (sigma, lam, p), group in sorted(cells.items()):
        out.append(
            {
                "sigma": sigma,
                "lambda": lam,
                "p": p,
                "n_seeds": len(group),
                "accuracy_mean": float(np.mean([float(r["accuracy"]) for r in group])),
                "energy_ratio_mean": float(np.mean([float(r["energy_ratio"]) for r in group])),
                "energy_increase_mean": float(
                    np.mean([float(r["energy_increase"]) for r in group])
                ),
            }
        )
    return out


def render_sweep(rows: list[dict], out_dir: Path) -> list[Path]:
    """Ablation curves against whichever knobs actually vary in the sweep."""
    agg = _sweep_aggregate(rows)
    summary = out_dir / "sweep_summary.csv"
    _write_csv(
        summary,
        ["sigma", "lambda", "p", "n_seeds", "accuracy_mean",
         "energy_ratio_mean", "energy_increase_mean"],
        agg,
    )
    outputs = [summary]
    for knob, log_x in (("sigma", True), ("lambda", False), ("p", False)):
        values = sorted({r[knob] for r in agg})
        if len(values) < 2:
            continue
        others = [k for k in ("sigma", "lambda", "p") if k != knob]
        series: dict[tuple, list[dict]] = {}
        for r in agg:
            series.setdefault(tuple(r[k] for k in others), []).append(r)

        fig, (ax_e, ax_a) = plt.subplots(1, 2, figsize=(9, 3.4), constrained_layout=True)
        for key, group in sorted(series.items()):
            group = sorted(group, key=lambda r: r[knob])
            label = ", ".join(f"{k}={v:g}" for k, v in zip(others, key))
            xs = [r[knob] for r in group]
            ax_e.plot(xs, [r["energy_ratio_mean"] for r in group], marker="o", label=label)
            ax_a.plot(xs, [r["accuracy_mean"] for r in group], marker="o", label=label)
        for ax, ylabel in ((ax_e, "energy ratio"), (ax_a, "accuracy")):
            ax.set_xlabel(knob)
            ax.set_ylabel(ylabel)
            if log_x:
                ax.set_xscale("log")
            ax.grid(True, alpha=0.3)
        ax_e.legend(fontsize=7)
        png = out_dir / f"sweep_{knob}.png"
        fig.savefig(png, dpi=150)
        plt.close(fig)
        outputs.append(png)
    return outputs
