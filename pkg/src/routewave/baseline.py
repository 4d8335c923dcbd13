"""Backprop benchmark: threshold attention on the input, one linear layer.

Same binarized patch encoding as the main method. Each patch is averaged
with every patch above the 0.7 pairwise similarity and renormalized; the
pixel slots concatenate to a 729-feature vector feeding a trainable [4, 729]
map with bias, softmax and cross-entropy, optimized by hand-rolled Adam.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .signals import DEFAULT_THRESHOLD, RawImage, image_signals
from .training import FewShotSpec, build_schedule, sample_pool

N_CLASSES = 4
N_FEATURES = 729
DEFAULT_BP_LR = 1e-2  # experiment default; adam_step itself defaults to 1e-3


@dataclass
class LinearModel:
    weights: np.ndarray  # (4, 729)
    bias: np.ndarray     # (4,)


@dataclass
class AdamState:
    m_w: np.ndarray
    v_w: np.ndarray
    m_b: np.ndarray
    v_b: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr: float = 1e-3

    @classmethod
    def for_model(cls, model: LinearModel, lr: float = 1e-3) -> "AdamState":
        return cls(np.zeros_like(model.weights), np.zeros_like(model.weights),
                   np.zeros_like(model.bias), np.zeros_like(model.bias), lr=lr)


def init_model(rng: np.random.Generator,
               n_classes: int = N_CLASSES,
               n_features: int = N_FEATURES) -> LinearModel:
    # Standard linear-layer init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    bound = 1.0 / np.sqrt(n_features)
    return LinearModel(rng.uniform(-bound, bound, size=(n_classes, n_features)),
                       rng.uniform(-bound, bound, size=n_classes))


def input_attention(signal_vectors: np.ndarray,
                    sim_threshold: float = 0.7) -> np.ndarray:
    """Average each patch with its similar peers, renormalize, drop rest slot."""
    sims = signal_vectors @ signal_vectors.T
    neighbors = sims >= sim_threshold  # self always included (sim 1)
    attended = neighbors.astype(float) @ signal_vectors
    attended /= neighbors.sum(axis=1, keepdims=True)
    attended /= np.linalg.norm(attended, axis=1, keepdims=True)
    return attended[:, 1:].reshape(-1)


def features_for(image: RawImage, threshold: int = DEFAULT_THRESHOLD) -> np.ndarray:
    vectors = np.stack([s.components for s in image_signals(image, threshold)])
    return input_attention(vectors)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def forward_loss_grad(model: LinearModel, features: np.ndarray,
                      label_index: int):
    """Cross-entropy loss and its analytic gradients."""
    probs = softmax(model.weights @ features + model.bias)
    loss = -float(np.log(probs[label_index]))
    d = probs.copy()
    d[label_index] -= 1.0
    return loss, (np.outer(d, features), d)


def adam_step(model: LinearModel, state: AdamState, grads):
    """Bias-corrected Adam update, in place."""
    g_w, g_b = grads
    state.step += 1
    t = state.step
    state.m_w = state.beta1 * state.m_w + (1 - state.beta1) * g_w
    state.v_w = state.beta2 * state.v_w + (1 - state.beta2) * g_w ** 2
    state.m_b = state.beta1 * state.m_b + (1 - state.beta1) * g_b
    state.v_b = state.beta2 * state.v_b + (1 - state.beta2) * g_b ** 2
    mhat_w = state.m_w / (1 - state.beta1 ** t)
    vhat_w = state.v_w / (1 - state.beta2 ** t)
    mhat_b = state.m_b / (1 - state.beta1 ** t)
    vhat_b = state.v_b / (1 - state.beta2 ** t)
    model.weights -= state.lr * mhat_w / (np.sqrt(vhat_w) + state.eps)
    model.bias -= state.lr * mhat_b / (np.sqrt(vhat_b) + state.eps)


def train_baseline(spec: FewShotSpec, dataset: Sequence[RawImage],
                   lr: float = DEFAULT_BP_LR,
                   threshold: int = DEFAULT_THRESHOLD):
    """Train on the same few-shot schedule as the route learner.

    Returns (model, per-step losses); shares pool sampling with the main
    method so the two see identical shots per seed.
    """
    classes = sorted(spec.classes)
    rng = np.random.default_rng(spec.seed)
    model = init_model(rng)
    state = AdamState.for_model(model, lr=lr)
    pool = sample_pool(dataset, spec)
    losses = []
    feat_cache = {id(img): features_for(img, threshold)
                  for imgs in pool.values() for img in imgs}
    for image in build_schedule(spec, pool):
        f = feat_cache[id(image)]
        loss, grads = forward_loss_grad(model, f, classes.index(image.label))
        adam_step(model, state, grads)
        losses.append(loss)
    return model, losses


def predict_baseline(model: LinearModel, features: np.ndarray,
                     classes: Sequence[int] = (0, 1, 2, 4)) -> int:
    logits = model.weights @ features + model.bias
    return sorted(classes)[int(np.argmax(logits))]


def evaluate_baseline(model: LinearModel, dataset: Sequence[RawImage],
                      classes: Sequence[int] = (0, 1, 2, 4),
                      threshold: int = DEFAULT_THRESHOLD,
                      limit_per_label: int | None = None) -> float:
    seen: dict = {}
    chosen = []
    for img in dataset:
        n = seen.get(img.label, 0)
        if limit_per_label is None or n < limit_per_label:
            chosen.append(img)
            seen[img.label] = n + 1
    hits = sum(predict_baseline(model, features_for(img, threshold), classes)
               == img.label for img in chosen)
    return hits / len(chosen)
