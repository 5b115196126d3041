"""Differentiable classification head over the aligned activation space.

The head is a multinomial logistic regression trained by deterministic
full-batch gradient descent (an optional one-hidden-layer tanh variant is
available for nonlinearity experiments). It produces class probabilities,
Brier scores, analytic probability gradients, and concept-influence
statistics based on directional derivatives along a concept direction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

HIDDEN_WIDTH = 32
DEFAULT_UU_THRESHOLD = 0.75


@dataclass(frozen=True)
class HeadConfig:
    lr: float = 0.5
    iters: int = 1000
    l2: float = 0.2


@dataclass(frozen=True)
class HeadModel:
    """Trained head: weights K x D, bias K, plus training metadata.

    For the "mlp" kind, ``weights``/``bias`` form the output layer over
    the hidden activations and ``hidden_weights``/``hidden_bias`` the
    tanh layer under it.
    """

    weights: np.ndarray
    bias: np.ndarray
    kind: str = "linear"  # "linear" or "mlp"
    hidden_weights: Optional[np.ndarray] = None
    hidden_bias: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        if self.kind == "mlp":
            return self.hidden_weights.shape[1]
        return self.weights.shape[1]


@dataclass(frozen=True)
class Prediction:
    probs: np.ndarray
    predicted: int
    brier: Optional[float]


@dataclass(frozen=True)
class BatchPrediction:
    probs: np.ndarray  # N x K
    predicted: np.ndarray  # N
    brier: Optional[np.ndarray]  # N, present when labels were given

    @property
    def n(self) -> int:
        return self.probs.shape[0]


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward(head: HeadModel, x: np.ndarray) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Logits plus, for the mlp kind, the hidden activations."""
    if head.kind == "mlp":
        h = np.tanh(x @ head.hidden_weights.T + head.hidden_bias)
        return h @ head.weights.T + head.bias, h
    return x @ head.weights.T + head.bias, None


def train_head(
    train_matrix: np.ndarray,
    labels: Sequence[int],
    config: HeadConfig = HeadConfig(),
    seed: int = 0,
    kind: str = "linear",
) -> HeadModel:
    """Fit the head by full-batch gradient descent.

    Deterministic given the seed (which drives only the weight init).
    Raises when fewer than two classes are present, when the loss goes
    non-finite, or when the final loss exceeds the initial one (the
    learning rate is then too large for the data).
    """
    x = np.asarray(train_matrix, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("training requires at least two classes in the labels")
    k = int(y.max()) + 1
    n, d = x.shape
    onehot = np.zeros((n, k))
    onehot[np.arange(n), y] = 1.0

    rng = np.random.Generator(np.random.PCG64(seed))
    if kind == "linear":
        w = 0.01 * rng.standard_normal((k, d))
        b = np.zeros(k)
        params = [w, b]
    elif kind == "mlp":
        w1 = rng.standard_normal((HIDDEN_WIDTH, d)) / np.sqrt(d)
        b1 = np.zeros(HIDDEN_WIDTH)
        w = 0.01 * rng.standard_normal((k, HIDDEN_WIDTH))
        b = np.zeros(k)
        params = [w, b, w1, b1]
    else:
        raise ValueError(f"unknown head kind {kind!r}")

    def loss_of(probs: np.ndarray) -> float:
        ce = -np.log(np.maximum(probs[np.arange(n), y], 1e-300)).mean()
        reg = 0.5 * config.l2 * sum(float((p**2).sum()) for p in params[::2])
        return float(ce + reg)

    initial_loss = None
    final_loss = None
    for _ in range(config.iters):
        if kind == "linear":
            probs = _softmax(x @ w.T + b)
        else:
            h = np.tanh(x @ w1.T + b1)
            probs = _softmax(h @ w.T + b)
        if initial_loss is None:
            initial_loss = loss_of(probs)
        final_loss = loss_of(probs)
        if not np.isfinite(final_loss):
            raise ValueError("training loss became non-finite")
        delta = (probs - onehot) / n
        if kind == "linear":
            w -= config.lr * (delta.T @ x + config.l2 * w)
            b -= config.lr * delta.sum(axis=0)
        else:
            grad_w = delta.T @ h + config.l2 * w
            back = (delta @ w) * (1.0 - h**2)
            grad_w1 = back.T @ x + config.l2 * w1
            w -= config.lr * grad_w
            b -= config.lr * delta.sum(axis=0)
            w1 -= config.lr * grad_w1
            b1 -= config.lr * back.sum(axis=0)

    if final_loss is not None and initial_loss is not None and final_loss > initial_loss:
        raise ValueError(
            f"training diverged: final loss {final_loss:.6g} exceeds initial {initial_loss:.6g}"
        )
    meta = {
        "seed": int(seed),
        "iterations": int(config.iters),
        "lr": float(config.lr),
        "l2": float(config.l2),
        "initial_loss": initial_loss,
        "final_loss": final_loss,
    }
    if kind == "linear":
        return HeadModel(weights=w, bias=b, kind="linear", meta=meta)
    return HeadModel(
        weights=w, bias=b, kind="mlp", hidden_weights=w1, hidden_bias=b1, meta=meta
    )


def brier_score(probs: np.ndarray, label: int) -> float:
    """Normalized squared distance between probs and the one-hot truth.

    0 for a confident true prediction, 1 for a confident wrong one.
    """
    p = np.asarray(probs, dtype=np.float64)
    target = np.zeros_like(p)
    target[label] = 1.0
    return float(((p - target) ** 2).sum() / 2.0)


def predict(head: HeadModel, v: np.ndarray, label: Optional[int] = None) -> Prediction:
    """Class distribution for one vector; Brier score when a label is given."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != head.dim:
        raise ValueError(f"dimension mismatch: vector has {v.shape[-1]}, head expects {head.dim}")
    logits, _ = _forward(head, v[None, :])
    probs = _softmax(logits)[0]
    return Prediction(
        probs=probs,
        predicted=int(np.argmax(probs)),
        brier=brier_score(probs, label) if label is not None else None,
    )


def predict_batch(
    head: HeadModel, matrix: np.ndarray, labels: Optional[Sequence[int]] = None
) -> BatchPrediction:
    x = np.asarray(matrix, dtype=np.float64)
    if x.shape[-1] != head.dim:
        raise ValueError(f"dimension mismatch: matrix has {x.shape[-1]}, head expects {head.dim}")
    logits, _ = _forward(head, x)
    probs = _softmax(logits)
    predicted = np.argmax(probs, axis=1)
    brier = None
    if labels is not None:
        y = np.asarray(labels, dtype=np.int64)
        target = np.zeros_like(probs)
        target[np.arange(len(y)), y] = 1.0
        brier = ((probs - target) ** 2).sum(axis=1) / 2.0
    return BatchPrediction(probs=probs, predicted=predicted, brier=brier)


def prob_gradient(head: HeadModel, v: np.ndarray, k: int) -> np.ndarray:
    """Gradient of the class-k probability with respect to the input vector.

    For the linear head this is p_k (W_k - sum_j p_j W_j); the mlp kind
    backpropagates the same expression through the tanh layer.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1] != head.dim:
        raise ValueError(f"dimension mismatch: vector has {v.shape[-1]}, head expects {head.dim}")
    logits, h = _forward(head, v[None, :])
    p = _softmax(logits)[0]
    dlogits = p[k] * (np.eye(head.n_classes)[k] - p)  # dp_k / dlogits
    if head.kind == "mlp":
        dh = dlogits @ head.weights
        return (dh * (1.0 - h[0] ** 2)) @ head.hidden_weights
    return dlogits @ head.weights


def logit_gradient(head: HeadModel, v: np.ndarray, k: int) -> np.ndarray:
    """Gradient of the class-k logit; constant W_k for the linear head."""
    v = np.asarray(v, dtype=np.float64)
    if head.kind == "mlp":
        h = np.tanh(head.hidden_weights @ v + head.hidden_bias)
        return (head.weights[k] * (1.0 - h**2)) @ head.hidden_weights
    return head.weights[k].copy()


@dataclass(frozen=True)
class ConceptInfluence:
    positive_fraction: float
    mean_derivative: float


def concept_influence(
    head: HeadModel,
    instance_set: np.ndarray,
    v_c: np.ndarray,
    k: int,
    target: str = "prob",
) -> ConceptInfluence:
    """Directional-derivative influence of a concept on class-k predictions.

    For each instance the class-k output gradient is projected on the unit
    concept direction; reported are the fraction of positive derivatives
    and their mean. ``target`` selects the probability (default) or the
    raw logit as the differentiated output.
    """
    x = np.atleast_2d(np.asarray(instance_set, dtype=np.float64))
    if x.shape[0] == 0:
        raise ValueError("concept influence requires a non-empty instance set")
    norm = float(np.linalg.norm(v_c))
    if norm <= 1e-12:
        raise ValueError("concept influence undefined for a zero-norm concept vector")
    unit = np.asarray(v_c, dtype=np.float64) / norm

    if target == "prob":
        logits, h = _forward(head, x)
        probs = _softmax(logits)
        if head.kind == "mlp":
            t = head.hidden_weights @ unit
            r = ((1.0 - h**2) * t) @ head.weights.T  # N x K: dlogits/du
        else:
            r = np.broadcast_to(head.weights @ unit, probs.shape)
        d = probs[:, k] * (r[:, k] - (probs * r).sum(axis=1))
    elif target == "logit":
        if head.kind == "mlp":
            h = np.tanh(x @ head.hidden_weights.T + head.hidden_bias)
            t = head.hidden_weights @ unit
            d = ((1.0 - h**2) * t) @ head.weights[k]
        else:
            d = np.full(x.shape[0], float(head.weights[k] @ unit))
    else:
        raise ValueError(f"unknown influence target {target!r}")
    return ConceptInfluence(
        positive_fraction=float(np.mean(d > 0)),
        mean_derivative=float(d.mean()),
    )


def save_head(head: HeadModel, path: str | Path) -> None:
    """Persist the head as head.json (row-major weights, bias, metadata)."""
    payload = {
        "kind": head.kind,
        "weights": head.weights.tolist(),
        "bias": head.bias.tolist(),
        "meta": head.meta,
    }
    if head.kind == "mlp":
        payload["hidden_weights"] = head.hidden_weights.tolist()
        payload["hidden_bias"] = head.hidden_bias.tolist()
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_head(path: str | Path) -> HeadModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    kind = payload.get("kind", "linear")
    return HeadModel(
        weights=np.array(payload["weights"], dtype=np.float64),
        bias=np.array(payload["bias"], dtype=np.float64),
        kind=kind,
        hidden_weights=(
            np.array(payload["hidden_weights"], dtype=np.float64) if kind == "mlp" else None
        ),
        hidden_bias=(
            np.array(payload["hidden_bias"], dtype=np.float64) if kind == "mlp" else None
        ),
        meta=payload.get("meta", {}),
    )
