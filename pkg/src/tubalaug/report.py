"""Report emission: structured summary, per-epoch CSV, and figures."""

from __future__ import annotations

import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import TrainReport

__all__ = ["emit_report", "read_series_csv"]

CSV_HEADER = "epoch,variant,train_loss,train_acc,test_acc,lr_model,lr_tprod,frozen"


def _fmt(v) -> str:
    return f"{v:.10g}"


def emit_report(report: TrainReport, out_dir: str, figures: bool = True):
    """Write summary.json, series.csv, and (optionally) PNG curves.

    Emission is deterministic: the same report produces byte-identical
    summary and CSV files.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    summary = {
        "config": report.config,
        "lambda_floor": report.lambda_floor,
        "base_params": report.base_params,
        "additional_params": report.additional_params,
        "param_ratio": report.param_ratio,
        "param_ratio_percent": f"{report.param_ratio * 100:.4f}%",
        "learnable_time_ratio": report.learnable_time_ratio,
        "variants": {
            r.name: {
                "initial_test_acc": r.initial_test_acc,
                "lambda_max": r.lambda_max,
                "t_ava": r.t_ava,
                "final_test_acc": r.test_acc[-1] if r.test_acc else None,
                "mean_epoch_seconds": (sum(r.epoch_seconds) / len(r.epoch_seconds)
                                       if r.epoch_seconds else None),
            }
            for r in report.variants
        },
    }
    paths["summary"] = os.path.join(out_dir, "summary.json")
    with open(paths["summary"], "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    paths["series"] = os.path.join(out_dir, "series.csv")
    with open(paths["series"], "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in report.variants:
            for i in range(len(r.test_acc)):
                fh.write(",".join([
                    str(i + 1), r.name,
                    _fmt(r.train_loss[i]), _fmt(r.train_acc[i]),
                    _fmt(r.test_acc[i]), _fmt(r.lr_model[i]),
                    _fmt(r.lr_tprod[i]), "1" if r.frozen[i] else "0",
                ]) + "\n")

    if figures:
        paths.update(_render_figures(report, out_dir))
    return paths


def _render_figures(report: TrainReport, out_dir: str):
    paths = {}
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for r in report.variants:
        epochs = range(len(r.test_acc) + 1)
        ax.plot(epochs, [r.initial_test_acc] + r.test_acc, marker=".",
                label=r.name)
    if report.lambda_floor:
        ax.axhline(report.lambda_floor, color="gray", ls="--", lw=0.8,
                   label="baseline floor")
    ax.set_xlabel("epoch")
    ax.set_ylabel("test accuracy")
    ax.legend()
    fig.tight_layout()
    paths["accuracy_fig"] = os.path.join(out_dir, "accuracy.png")
    fig.savefig(paths["accuracy_fig"], dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for r in report.variants:
        ax.plot(range(1, len(r.train_loss) + 1), r.train_loss, marker=".",
                label=r.name)
    ax.set_xlabel("epoch")
    ax.set_ylabel("train loss")
    ax.legend()
    fig.tight_layout()
    paths["loss_fig"] = os.path.join(out_dir, "loss.png")
    fig.savefig(paths["loss_fig"], dpi=120)
    plt.close(fig)
    return paths


def read_series_csv(path):
    """Parse an emitted series.csv back into per-variant accuracy series."""
    variants = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) != 8:
                continue
            name = parts[1]
            variants.setdefault(name, []).append(float(parts[4]))
    return variants
