import numpy as np
import pytest

from spectator.harness import ConfusionMatrix, run_test, summarize
from spectator.noise import profile_spec
from spectator.pulses import zero_pulse
from spectator.simulator import default_basis


class Constant:
    def __init__(self, probs):
        self.probs = np.asarray(probs, dtype=float)

    def predict_proba(self, X):
        return np.tile(self.probs, (np.atleast_2d(X).shape[0], 1))


class Nearest:
    """Labels by distance to known class features."""

    def __init__(self, F):
        self.F = np.asarray(F)

    def predict_proba(self, X):
        d = np.linalg.norm(np.atleast_2d(X)[:, None] - self.F[None], axis=-1)
        return np.eye(len(self.F))[np.argmin(d, axis=1)]


PROFILES = [profile_spec("N0"), profile_spec("N2", scale=6.0)]


def test_csv_round_trip():
    cm = ConfusionMatrix(np.array([[8, 2, 0], [1, 6, 3], [0, 0, 0]]), ["N0", "N1", "N2"])
    text = cm.to_csv()
    assert text.splitlines()[0] == "true\\predicted,N0,N1,N2,count"
    assert text.splitlines()[1] == "N0,80.000000,20.000000,0.000000,10"
    back = ConfusionMatrix.from_csv(text)
    assert np.array_equal(back.counts, cm.counts) and back.labels == cm.labels
    with pytest.raises(ValueError):
        ConfusionMatrix(np.zeros((2, 3)), ["a", "b"])


def test_summary_values():
    cm = ConfusionMatrix(np.array([[6, 4, 0], [5, 5, 0], [1, 0, 9]]), ["N5", "N1", "N2"])
    s = summarize(cm, block=["N5", "N1"])
    assert s["mean_diagonal"] == pytest.approx((60 + 50 + 90) / 3)
    assert s["per_class_accuracy"]["N2"] == pytest.approx(90)
    assert s["off_diagonal_mass"] == pytest.approx(10 / 30)
    assert s["off_diagonal_outside_block"] == pytest.approx(1 / 30)
    assert s["off_diagonal_inside_block"] == pytest.approx(9 / 30)
    assert s["block_confusion"] == pytest.approx(9 / 20)
    assert "block" not in summarize(cm)


def test_constant_classifier_fills_one_column():
    cm = run_test(PROFILES, zero_pulse(5, 1.0, 32), Constant([0.0, 1.0]), 50, 4, 1, default_basis(), 12.0)
    assert cm.counts.sum() == 50 and np.all(cm.counts[:, 0] == 0)
    assert 10 < cm.row_counts[0] < 40


def test_ties_split_between_classes():
    cm = run_test(PROFILES, zero_pulse(5, 1.0, 16), Constant([0.5, 0.5]), 400, 2, 2, default_basis(), 12.0)
    share = cm.counts[:, 0].sum() / 400
    assert 0.4 < share < 0.6


def test_separable_profiles_classified_and_deterministic():
    # N0 gives cos/sin of the free precession; strong N2 noise shrinks the signal
    F = [[np.cos(12), -np.sin(12), 0.0], [0.0, 0.0, 0.0]]
    a = run_test(PROFILES, zero_pulse(5, 1.0, 32), Nearest(F), 60, 50, 3, default_basis(), 12.0, chunk=7)
    b = run_test(PROFILES, zero_pulse(5, 1.0, 32), Nearest(F), 60, 50, 3, default_basis(), 12.0)
    assert a.to_csv() == b.to_csv()
    assert np.trace(a.counts) == 60


def test_invalid_length():
    with pytest.raises(ValueError):
        run_test(PROFILES, zero_pulse(5, 1.0, 16), Constant([1, 0]), 0, 2, 0, default_basis(), 12.0)
