import math

import numpy as np
import pytest

from civ.classifier import (
    FocalLossConfig,
    MLPClassifier,
    TrainHyper,
    _softmax,
    focal_loss,
    inverse_class_frequency_alphas,
    macro_f1,
    predict,
    train_classifier,
    write_training_report,
)
from civ.errors import DimError, LengthError, MissingClass, ValidationError


def test_gamma_zero_reduces_to_cross_entropy():
    rng = np.random.default_rng(0)
    cfg = FocalLossConfig.plain_ce(4)
    for _ in range(200):
        p = rng.dirichlet(np.ones(4))
        t = int(rng.integers(0, 4))
        res = focal_loss(p, t, cfg)
        assert abs(res.loss - (-math.log(max(p[t], 1e-12)))) < 1e-12


def test_perfect_prediction_gives_zero_loss():
    for gamma in (0.0, 0.5, 1.0, 2.0):
        cfg = FocalLossConfig(gamma=gamma, alphas=(0.7, 1.3), num_classes=2)
        res = focal_loss([1.0, 0.0], 0, cfg)
        assert res.loss == 0.0
        assert res.grad_logits == (0.0, 0.0)


def test_hand_computed_focal_value():
    cfg = FocalLossConfig(gamma=2.0, alphas=(0.25, 0.25), num_classes=2)
    res = focal_loss([0.9, 0.1], 0, cfg)
    assert abs(res.loss - 0.25 * 0.01 * (-math.log(0.9))) < 1e-12
    assert not res.clamped


def test_zero_probability_is_clamped_and_flagged():
    cfg = FocalLossConfig.plain_ce(2)
    res = focal_loss([0.0, 1.0], 0, cfg)
    assert res.clamped
    assert res.loss == -math.log(1e-12)


def test_focal_loss_monotone_decreasing_in_pt():
    cfg = FocalLossConfig(gamma=2.0, alphas=(1.0, 1.0), num_classes=2)
    losses = [focal_loss([p, 1 - p], 0, cfg).loss for p in np.linspace(0.01, 0.99, 60)]
    assert all(a > b for a, b in zip(losses, losses[1:]))


def test_invalid_inputs_rejected():
    cfg = FocalLossConfig.plain_ce(2)
    with pytest.raises(DimError):
        focal_loss([0.2, 0.3, 0.5], 0, cfg)
    with pytest.raises(ValidationError):
        focal_loss([0.9, 0.9], 0, cfg)
    with pytest.raises(ValidationError):
        FocalLossConfig(gamma=-1.0, alphas=(1.0, 1.0), num_classes=2)
    with pytest.raises(ValidationError):
        FocalLossConfig(gamma=1.0, alphas=(1.0,), num_classes=2)


def test_gradients_match_central_finite_differences():
    rng = np.random.default_rng(42)
    h = 1e-5
    for _ in range(100):
        c = int(rng.integers(2, 6))
        z = rng.normal(scale=2.0, size=c)
        t = int(rng.integers(0, c))
        gamma = float(rng.choice([0.0, 1.0, 2.0]))
        alphas = tuple(rng.uniform(0.25, 2.0, size=c).tolist())
        cfg = FocalLossConfig(gamma=gamma, alphas=alphas, num_classes=c)
        grad = np.asarray(focal_loss(_softmax(z), t, cfg).grad_logits)
        fd = np.zeros(c)
        for i in range(c):
            zp, zm = z.copy(), z.copy()
            zp[i] += h
            zm[i] -= h
            fd[i] = (
                focal_loss(_softmax(zp), t, cfg).loss
                - focal_loss(_softmax(zm), t, cfg).loss
            ) / (2 * h)
        rel = np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12)
        assert rel < 1e-5


def test_inverse_frequency_alphas():
    assert inverse_class_frequency_alphas([0, 1, 0, 1], 2) == (1.0, 1.0)
    alphas = inverse_class_frequency_alphas([0, 0, 0, 1], 2)
    assert abs(alphas[0] - 4 / 6) < 1e-15 and alphas[1] == 2.0
    labels = [0] * 7 + [1] * 2 + [2] * 1
    alphas = inverse_class_frequency_alphas(labels, 3)
    counts = (7, 2, 1)
    weighted = sum(c * a for c, a in zip(counts, alphas)) / len(labels)
    assert abs(weighted - 1.0) < 1e-12
    with pytest.raises(MissingClass):
        inverse_class_frequency_alphas([0, 0, 0], 2)


def _blobs(rng, centers, n_per, scale=0.4):
    xs, ys = [], []
    for c, center in enumerate(centers):
        pts = rng.normal(loc=center, scale=scale, size=(n_per, len(center)))
        xs.extend(pts.tolist())
        ys.extend([c] * n_per)
    return xs, ys


def test_training_on_separable_blobs():
    rng = np.random.default_rng(3)
    centers = [np.zeros(8), np.r_[np.ones(4) * 3, np.zeros(4)]]
    xs, ys = _blobs(rng, centers, 100)
    clf, history = train_classifier(
        xs, ys, ["a", "b"], FocalLossConfig.plain_ce(2),
        TrainHyper(hidden_dim=16, lr=0.3, epochs=80, seed=9),
    )
    assert history[-1] <= history[0]
    preds = [predict(clf, x)[0] for x in xs]
    golds = ["ab"[y] for y in ys]
    assert macro_f1(preds, golds, ["a", "b"]) >= 0.99


def test_training_is_bit_reproducible():
    rng = np.random.default_rng(4)
    xs, ys = _blobs(rng, [np.zeros(4), np.ones(4) * 2], 40)
    run = lambda: train_classifier(
        xs, ys, ["a", "b"], FocalLossConfig.plain_ce(2),
        TrainHyper(hidden_dim=8, lr=0.2, epochs=30, seed=1),
    )
    c1, h1 = run()
    c2, h2 = run()
    assert h1 == h2
    assert np.array_equal(c1.w1, c2.w1) and np.array_equal(c1.b2, c2.b2)


def test_zero_epochs_returns_valid_seeded_init():
    rng = np.random.default_rng(5)
    xs, ys = _blobs(rng, [np.zeros(4), np.ones(4)], 10)
    clf, history = train_classifier(
        xs, ys, ["a", "b"], FocalLossConfig.plain_ce(2),
        TrainHyper(hidden_dim=8, lr=0.1, epochs=0, seed=2),
    )
    assert len(history) == 1
    probs = clf.probabilities(xs[0])
    assert abs(float(probs.sum()) - 1.0) <= 1e-9


def test_focal_beats_ce_on_minority_recall():
    rng = np.random.default_rng(6)
    xs, ys = _blobs(rng, [np.zeros(6), np.ones(6) * 1.6], 1, scale=0.6)
    xs, ys = [], []
    maj = rng.normal(0.0, 0.6, size=(190, 6)).tolist()
    mino = rng.normal(1.6, 0.6, size=(10, 6)).tolist()
    xs = maj + mino
    ys = [0] * 190 + [1] * 10

    def minority_recall(cfg):
        clf, _ = train_classifier(
            xs, ys, ["maj", "min"], cfg,
            TrainHyper(hidden_dim=12, lr=0.3, epochs=60, seed=11),
        )
        preds = [predict(clf, x)[0] for x in xs]
        hits = sum(1 for p, y in zip(preds, ys) if y == 1 and p == "min")
        return hits / 10

    alphas = inverse_class_frequency_alphas(ys, 2)
    focal = minority_recall(FocalLossConfig(gamma=2.0, alphas=alphas, num_classes=2))
    ce = minority_recall(FocalLossConfig.plain_ce(2))
    assert focal >= ce


def test_predict_tie_breaks_to_lowest_index():
    clf = MLPClassifier(
        input_dim=2, hidden_dim=2, class_names=("a", "b"),
        w1=np.zeros((2, 2)), b1=np.zeros(2), w2=np.zeros((2, 2)), b2=np.zeros(2),
        training_seed=0,
    )
    name, probs = predict(clf, [1.0, -1.0])
    assert name == "a"
    assert abs(float(probs.sum()) - 1.0) <= 1e-9
    with pytest.raises(DimError):
        predict(clf, [1.0, 2.0, 3.0])


def test_checkpoint_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    xs, ys = _blobs(rng, [np.zeros(4), np.ones(4)], 20)
    clf, history = train_classifier(
        xs, ys, ["a", "b"], FocalLossConfig.plain_ce(2),
        TrainHyper(hidden_dim=8, lr=0.2, epochs=10, seed=3),
    )
    path = tmp_path / "probe.json"
    clf.save(path)
    again = MLPClassifier.load(path)
    x = xs[0]
    assert predict(clf, x)[0] == predict(again, x)[0]
    assert np.allclose(clf.probabilities(x), again.probabilities(x))
    report = tmp_path / "probe.tsv"
    write_training_report(report, "demo", history)
    lines = report.read_text().splitlines()
    assert lines[0] == "attribute\tepoch\tmean_loss"
    assert len(lines) == len(history) + 1


def test_macro_f1_cases():
    assert macro_f1(["a", "b"], ["a", "b"], ["a", "b"]) == 1.0
    assert macro_f1(["b", "a"], ["a", "b"], ["a", "b"]) == 0.0
    got = macro_f1(["A", "B", "B", "B"], ["A", "A", "B", "B"], ["A", "B"])
    assert abs(got - (2 / 3 + 4 / 5) / 2) < 1e-12
    # classes never present in the golds are excluded from the mean
    assert macro_f1(["a", "a"], ["a", "a"], ["a", "ghost"]) == 1.0
    with pytest.raises(LengthError):
        macro_f1(["a"], ["a", "b"], ["a", "b"])
