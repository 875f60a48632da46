"""Two-layer probing classifiers trained with focal loss.

The probe is a softplus MLP trained by plain batch gradient descent so runs
are bit-reproducible for a fixed seed. Focal loss scales cross-entropy by
alpha_t * (1 - p_t)^gamma, which shifts weight onto rare and poorly
classified examples.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimError,
    DivergenceError,
    LengthError,
    MissingClass,
    ValidationError,
)
from .features import FeatureVector

P_CLAMP = 1e-12
CHECKPOINT_VERSION = "probe-1"


@dataclass(frozen=True)
class FocalLossConfig:
    gamma: float
    alphas: tuple[float, ...]
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if self.num_classes < 2:
            raise ValidationError("num_classes", "need at least 2 classes")
        if len(self.alphas) != self.num_classes:
            raise ValidationError("alphas_len", "one alpha per class")
        if self.gamma < 0 or not math.isfinite(self.gamma):
            raise ValidationError("gamma_range", "gamma must be finite and >= 0")
        if any(a <= 0 or not math.isfinite(a) for a in self.alphas):
            raise ValidationError("alpha_range", "alphas must be finite and positive")

    @classmethod
    def plain_ce(cls, num_classes: int) -> "FocalLossConfig":
        return cls(gamma=0.0, alphas=(1.0,) * num_classes, num_classes=num_classes)


@dataclass(frozen=True)
class FocalLossResult:
    loss: float
    grad_logits: tuple[float, ...]
    clamped: bool


def focal_loss(
    probabilities: Sequence[float], target_class: int, cfg: FocalLossConfig
) -> FocalLossResult:
    """Loss -alpha_t (1-p_t)^gamma log(p_t) and its gradient w.r.t. logits.

    ``probabilities`` must be a softmax output (a valid simplex); the
    gradient assumes that coupling. p_t == 0 is clamped to 1e-12 and flagged.
    """
    p = np.asarray(probabilities, dtype=np.float64)
    if p.shape != (cfg.num_classes,):
        raise DimError(f"expected {cfg.num_classes} probabilities, got {p.shape}")
    if np.any(p < -1e-9) or abs(float(p.sum()) - 1.0) > 1e-6:
        raise ValidationError("bad_simplex", "probabilities must sum to 1")
    if not 0 <= target_class < cfg.num_classes:
        raise ValidationError("bad_target", f"target {target_class} out of range")
    alpha = cfg.alphas[target_class]
    gamma = cfg.gamma
    pt = float(p[target_class])
    clamped = pt < P_CLAMP
    pt = max(pt, P_CLAMP)
    if pt >= 1.0:
        return FocalLossResult(0.0, tuple([0.0] * cfg.num_classes), clamped)
    one_minus = 1.0 - pt
    loss = -alpha * one_minus ** gamma * math.log(pt)
    # dL/dp_t, then chain through softmax: dp_t/dz_i = p_t (delta_ti - p_i).
    if gamma == 0.0:
        dl_dpt = -alpha / pt
    else:
        dl_dpt = alpha * (
            gamma * one_minus ** (gamma - 1.0) * math.log(pt) - one_minus ** gamma / pt
        )
    delta = np.zeros(cfg.num_classes)
    delta[target_class] = 1.0
    grad = dl_dpt * pt * (delta - p)
    return FocalLossResult(float(loss), tuple(grad.tolist()), clamped)


def inverse_class_frequency_alphas(
    labels: Sequence[int], num_classes: int
) -> tuple[float, ...]:
    """alpha_t = N / (C * count_t); weighted counts then average to exactly 1."""
    counts = [0] * num_classes
    for y in labels:
        if not 0 <= y < num_classes:
            raise ValidationError("bad_label", f"label {y} out of range")
        counts[y] += 1
    missing = [c for c, n in enumerate(counts) if n == 0]
    if missing:
        raise MissingClass(f"classes {missing} never appear in the labels")
    n = len(labels)
    return tuple(n / (num_classes * c) for c in counts)


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class MLPClassifier:
    """Frozen two-layer probe: affine -> softplus -> affine -> softmax."""

    input_dim: int
    hidden_dim: int
    class_names: tuple[str, ...]
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    training_seed: int

    def logits(self, x: np.ndarray) -> np.ndarray:
        h = _softplus(x @ self.w1 + self.b1)
        return h @ self.w2 + self.b2

    def probabilities(self, features: FeatureVector | Sequence[float]) -> np.ndarray:
        x = _as_input(features, self.input_dim)
        return _softmax(self.logits(x))

    def save(self, path):
        payload = {
            "version": CHECKPOINT_VERSION,
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "class_names": list(self.class_names),
            "training_seed": self.training_seed,
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2.tolist(),
        }
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(payload, f, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "MLPClassifier":
        with open(path, encoding="utf-8") as f:
            d = json.load(f)
        if d.get("version") != CHECKPOINT_VERSION:
            raise ValidationError("checkpoint_version", f"unsupported {d.get('version')!r}")
        return cls(
            input_dim=int(d["input_dim"]),
            hidden_dim=int(d["hidden_dim"]),
            class_names=tuple(d["class_names"]),
            w1=np.asarray(d["w1"], dtype=np.float64),
            b1=np.asarray(d["b1"], dtype=np.float64),
            w2=np.asarray(d["w2"], dtype=np.float64),
            b2=np.asarray(d["b2"], dtype=np.float64),
            training_seed=int(d["training_seed"]),
        )


def _as_input(features, input_dim: int) -> np.ndarray:
    if isinstance(features, FeatureVector):
        x = features.as_array()
    else:
        x = np.asarray(features, dtype=np.float64)
    if x.shape != (input_dim,):
        raise DimError(f"expected {input_dim} features, got {x.shape}")
    return x


def predict(classifier: MLPClassifier, features) -> tuple[str, np.ndarray]:
    """Class name plus the full probability vector; ties go to the lowest index."""
    probs = classifier.probabilities(features)
    return classifier.class_names[int(np.argmax(probs))], probs


@dataclass(frozen=True)
class TrainHyper:
    hidden_dim: int = 32
    lr: float = 0.2
    epochs: int = 200
    seed: int = 0
    batch_size: Optional[int] = None  # None = full batch


def train_classifier(
    features: Sequence[FeatureVector | Sequence[float]],
    labels: Sequence[int],
    class_names: Sequence[str],
    cfg: FocalLossConfig,
    hyper: TrainHyper = TrainHyper(),
) -> tuple[MLPClassifier, list[float]]:
    """Gradient-descent training; returns the probe and per-epoch mean losses."""
    if len(features) != len(labels):
        raise LengthError(f"{len(features)} feature rows vs {len(labels)} labels")
    if len(class_names) != cfg.num_classes:
        raise ValidationError("class_names", "one name per class")
    xs = np.asarray(
        [f.as_array() if isinstance(f, FeatureVector) else np.asarray(f, dtype=np.float64) for f in features]
    )
    ys = np.asarray(labels, dtype=np.int64)
    if len(set(ys.tolist())) < 2:
        raise MissingClass("training needs at least 2 classes present")
    n, d = xs.shape
    c = cfg.num_classes
    rng = np.random.default_rng(hyper.seed)
    w1 = rng.normal(0.0, 1.0 / math.sqrt(d), size=(d, hyper.hidden_dim))
    b1 = np.zeros(hyper.hidden_dim)
    w2 = rng.normal(0.0, 1.0 / math.sqrt(hyper.hidden_dim), size=(hyper.hidden_dim, c))
    b2 = np.zeros(c)
    alphas = np.asarray(cfg.alphas)
    gamma = cfg.gamma

    def forward(x):
        a1 = x @ w1 + b1
        h = _softplus(a1)
        z = h @ w2 + b2
        return a1, h, _softmax(z)

    def mean_loss(x, y):
        _, _, p = forward(x)
        pt = np.clip(p[np.arange(len(y)), y], P_CLAMP, 1.0)
        return float(np.mean(-alphas[y] * (1.0 - pt) ** gamma * np.log(pt)))

    history = [mean_loss(xs, ys)]
    batch = hyper.batch_size or n
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            x, y = xs[idx], ys[idx]
            a1, h, p = forward(x)
            pt = np.clip(p[np.arange(len(y)), y], P_CLAMP, 1.0 - 1e-15)
            one_minus = 1.0 - pt
            if gamma == 0.0:
                dl_dpt = -alphas[y] / pt
            else:
                dl_dpt = alphas[y] * (
                    gamma * one_minus ** (gamma - 1.0) * np.log(pt)
                    - one_minus ** gamma / pt
                )
            dz = dl_dpt[:, None] * pt[:, None] * (np.eye(len(p[0]))[y] - p)
            dz /= len(y)
            gw2 = h.T @ dz
            gb2 = dz.sum(axis=0)
            dh = dz @ w2.T
            da1 = dh * _sigmoid(a1)
            gw1 = x.T @ da1
            gb1 = da1.sum(axis=0)
            w1 -= hyper.lr * gw1
            b1 -= hyper.lr * gb1
            w2 -= hyper.lr * gw2
            b2 -= hyper.lr * gb2
        loss = mean_loss(xs, ys)
        if not math.isfinite(loss):
            raise DivergenceError(epoch)
        history.append(loss)

    clf = MLPClassifier(
        input_dim=d,
        hidden_dim=hyper.hidden_dim,
        class_names=tuple(class_names),
        w1=w1,
        b1=b1,
        w2=w2,
        b2=b2,
        training_seed=hyper.seed,
    )
    return clf, history


def macro_f1(
    predictions: Sequence[str], golds: Sequence[str], class_names: Sequence[str]
) -> float:
    """Unweighted mean per-class F1; classes with zero gold support are skipped."""
    if len(predictions) != len(golds):
        raise LengthError(f"{len(predictions)} predictions vs {len(golds)} golds")
    f1s = []
    for name in class_names:
        tp = sum(1 for p, g in zip(predictions, golds) if p == name and g == name)
        fp = sum(1 for p, g in zip(predictions, golds) if p == name and g != name)
        fn = sum(1 for p, g in zip(predictions, golds) if p != name and g == name)
        if tp + fn == 0:
            continue  # never appears in the golds
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom else 0.0)
    return sum(f1s) / len(f1s) if f1s else 0.0


def write_training_report(path, attribute: str, history: Sequence[float]):
    """Per-epoch loss TSV for one attribute probe."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("attribute\tepoch\tmean_loss\n")
        for epoch, loss in enumerate(history):
            f.write(f"{attribute}\t{epoch}\t{loss:.10g}\n")
