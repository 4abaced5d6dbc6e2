import numpy as np
import pytest

from flare_eval.harness import metrics_from_confusion


def test_hand_checked_confusion():
    cm = np.array([[50, 10], [5, 35]])
    per_class, accuracy = metrics_from_confusion(cm, ["neg", "pos"])
    assert per_class["neg"]["precision"] == pytest.approx(50 / 55)
    assert per_class["neg"]["recall"] == pytest.approx(50 / 60)
    assert per_class["pos"]["precision"] == pytest.approx(35 / 45)
    assert per_class["pos"]["recall"] == pytest.approx(35 / 40)
    assert accuracy == pytest.approx(85 / 100)
    assert per_class["pos"]["support"] == 40


def test_f1_is_harmonic_mean_of_own_precision_recall():
    rng = np.random.default_rng(4)
    for _ in range(50):
        k = int(rng.integers(2, 6))
        cm = rng.integers(0, 40, size=(k, k))
        per_class, _ = metrics_from_confusion(cm, [str(i) for i in range(k)])
        for stats in per_class.values():
            p, r, f1 = stats["precision"], stats["recall"], stats["f1"]
            want = 2 * p * r / (p + r) if p + r else 0.0
            assert f1 == pytest.approx(want, abs=1e-6)


def test_all_metrics_in_unit_interval():
    rng = np.random.default_rng(7)
    cm = rng.integers(0, 100, size=(4, 4))
    per_class, accuracy = metrics_from_confusion(cm, list("abcd"))
    assert 0.0 <= accuracy <= 1.0
    for stats in per_class.values():
        for key in ("precision", "recall", "f1"):
            assert 0.0 <= stats[key] <= 1.0


def test_empty_class_scores_zero():
    cm = np.array([[10, 0], [0, 0]])
    per_class, _ = metrics_from_confusion(cm, ["a", "b"])
    assert per_class["b"] == {"precision": 0.0, "recall": 0.0, "f1": 0.0, "support": 0}
