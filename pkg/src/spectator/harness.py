"""
Periodic detection test: random profile sequence, fresh Monte Carlo measurements, classification.

Only the simulator, the persisted pulse and a classifier are needed here; the
graybox models play no part in testing.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .classifier import choose_label
from .noise import NoiseProfileSpec, generate
from .pulses import PulseSequence
from .seeding import rng, subseed
from .simulator import MeasurementBasisSet, simulate_batch

CSV_FORMAT = "%.6f"


@dataclass(eq=False)
class ConfusionMatrix:
    """Integer counts, rows = true profile, columns = predicted profile."""

    counts: np.ndarray
    labels: list

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        N = len(self.labels)
        if self.counts.shape != (N, N):
            raise ValueError("counts must be N x N with one label per class")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @property
    def N(self) -> int:
        return len(self.labels)

    @property
    def row_counts(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def percentages(self) -> np.ndarray:
        rows = self.row_counts[:, None]
        return np.divide(100.0 * self.counts, rows, out=np.zeros(self.counts.shape), where=rows > 0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["true\\predicted", *self.labels, "count"])
        for label, row, n in zip(self.labels, self.percentages, self.row_counts):
            writer.writerow([label, *(CSV_FORMAT % v for v in row), int(n)])
        return buf.getvalue()

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "ConfusionMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        labels = rows[0][1:-1]
        pct = np.array([[float(v) for v in r[1:-1]] for r in rows[1:]])
        n = np.array([int(r[-1]) for r in rows[1:]])
        counts = np.rint(pct * n[:, None] / 100.0).astype(np.int64)
        return cls(counts, labels)

    @classmethod
    def load_csv(cls, path) -> "ConfusionMatrix":
        with open(path, encoding="utf-8") as fh:
            return cls.from_csv(fh.read())


def run_test(profiles: list[NoiseProfileSpec], pulse: PulseSequence, clf, L: int, K_test: int,
             seed: int, basis: MeasurementBasisSet, omega: float, labels=None,
             chunk: int = 64) -> ConfusionMatrix:
    """
    Tally ``L`` detection steps.

    Each step draws the true profile uniformly, measures the basis features of
    ``pulse`` with ``K_test`` fresh realizations from ``subseed(seed, "step", l)``
    and classifies them. ``clf`` is anything with ``predict_proba``; the
    tie-break draws are fixed up front so results depend only on ``seed``.
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    N = len(profiles)
    labels = [p.kind for p in profiles] if labels is None else list(labels)
    truth = rng(seed, "sequence").integers(0, N, size=L)
    ties = rng(seed, "ties").random(L)
    counts = np.zeros((N, N), dtype=np.int64)
    for start in range(0, L, chunk):
        steps = range(start, min(L, start + chunk))
        betas = np.stack([generate(profiles[truth[l]], K_test, pulse.M, pulse.T,
                                   subseed(seed, "step", l)).values for l in steps])
        samples = np.broadcast_to(pulse.samples, (len(steps), pulse.M))
        feats = simulate_batch(samples, betas, pulse.dt, basis, omega)
        probs = np.atleast_2d(clf.predict_proba(feats))
        for l, pr in zip(steps, probs):
            counts[truth[l], choose_label(pr, ties[l])] += 1
    return ConfusionMatrix(counts, labels)


def summarize(cm: ConfusionMatrix, block=None) -> dict:
    """
    Accuracy summary.

    ``block`` is an optional group of labels; the report then separates the
    off-diagonal mass inside the block from the mass elsewhere. Masses are
    fractions of all tallied steps, except ``block_confusion`` which is the
    off-diagonal fraction of the block's own rows.
    """
    pct = cm.percentages
    total = cm.counts.sum()
    diag = np.diag(pct)
    out = {
        "labels": list(cm.labels),
        "per_class_accuracy": dict(zip(cm.labels, diag.tolist())),
        "mean_diagonal": float(np.mean(diag)),
        "off_diagonal_mass": float((total - np.trace(cm.counts)) / total) if total else 0.0,
    }
    if block is not None:
        idx = [cm.labels.index(b) for b in block]
        inside = np.zeros(cm.counts.shape, dtype=bool)
        inside[np.ix_(idx, idx)] = True
        off = ~np.eye(cm.N, dtype=bool)
        block_rows = cm.counts[idx].sum()
        out["block"] = list(block)
        out["off_diagonal_outside_block"] = float(cm.counts[off & ~inside].sum() / total) if total else 0.0
        out["off_diagonal_inside_block"] = float(cm.counts[off & inside].sum() / total) if total else 0.0
        out["block_confusion"] = float(cm.counts[off & inside].sum() / block_rows) if block_rows else 0.0
    return out
