"""Static figures and a summary table from pipeline artifacts."""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import store  # noqa: E402
from .harness import ConfusionMatrix, summarize  # noqa: E402


def plot_mse_curves(histories: dict, path) -> Path:
    """One panel per profile with train and test MSE against iteration (log scale)."""
    n = len(histories)
    cols = min(3, n)
    rows = int(np.ceil(n / cols))
    fig, axes = plt.subplots(rows, cols, figsize=(4 * cols, 3 * rows), squeeze=False)
    for ax, (name, h) in zip(axes.flat, histories.items()):
        it = np.arange(1, len(h["train"]) + 1)
        ax.semilogy(it, h["train"], label="train")
        ax.semilogy(it, h["test"], label="test")
        ax.set_title(name)
        ax.set_xlabel("iteration")
        ax.set_ylabel("MSE")
        ax.legend()
    for ax in list(axes.flat)[n:]:
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_confusion(cm: ConfusionMatrix, path, title: str = "") -> Path:
    pct = cm.percentages
    fig, ax = plt.subplots(figsize=(1.1 * cm.N + 2, 1.1 * cm.N + 1))
    im = ax.imshow(pct, vmin=0, vmax=100, cmap="Blues")
    ax.set_xticks(range(cm.N), cm.labels)
    ax.set_yticks(range(cm.N), cm.labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    for i in range(cm.N):
        for j in range(cm.N):
            ax.text(j, i, f"{pct[i, j]:.1f}", ha="center", va="center",
                    color="white" if pct[i, j] > 60 else "black", fontsize=8)
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, label="%")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_pulse(samples: np.ndarray, T: float, path, title: str = "") -> Path:
    t = np.arange(samples.size) * (T / samples.size)
    fig, ax = plt.subplots(figsize=(6, 2.5))
    ax.plot(t, samples)
    ax.set_xlabel("t")
    ax.set_ylabel("f(t)")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def render(inputs, out, block=None) -> list[Path]:
    """
    Render every recognised input: confusion CSVs become heatmaps and summary
    rows, graybox model directories are collected into one MSE figure, pulse
    directories are plotted as waveforms.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    written, histories, rows = [], {}, []
    for item in map(Path, inputs):
        if item.is_file() and item.suffix == ".csv":
            cm = ConfusionMatrix.load_csv(item)
            written.append(plot_confusion(cm, out / f"confusion_{item.stem}.png", item.stem))
            use_block = block if block and all(b in cm.labels for b in block) else None
            rows.append((item.stem, summarize(cm, use_block)))
        elif item.is_dir():
            kind = store.read_manifest(item).get("kind")
            if kind == "graybox":
                model, history, _ = store.load_graybox(item)
                histories[model.profile or item.name] = history
            elif kind == "pulse":
                arrays, m = store.read_container(item, "pulse")
                written.append(plot_pulse(arrays["samples"], float(m["T"]), out / f"pulse_{item.name}.png",
                                          item.name))
            else:
                raise store.ArtifactError(f"{item}: manifest field 'kind' is {kind!r}; report accepts "
                                          "graybox and pulse directories")
        else:
            raise FileNotFoundError(f"{item}: not a confusion CSV or artifact directory")
    if histories:
        written.append(plot_mse_curves(histories, out / "mse_curves.png"))
    if rows:
        written.append(_write_summary(rows, out / "summary.csv"))
    return written


def _write_summary(rows, path) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "mean_diagonal", "min_class_accuracy", "off_diagonal_mass",
                    "off_diagonal_outside_block", "block_confusion", "per_class_accuracy"])
        for name, s in rows:
            acc = s["per_class_accuracy"]
            w.writerow([name, f"{s['mean_diagonal']:.4f}", f"{min(acc.values()):.4f}",
                        f"{s['off_diagonal_mass']:.4f}",
                        f"{s['off_diagonal_outside_block']:.4f}" if "block" in s else "",
                        f"{s['block_confusion']:.4f}" if "block" in s else "",
                        " ".join(f"{k}={v:.2f}" for k, v in acc.items())])
    return Path(path)
