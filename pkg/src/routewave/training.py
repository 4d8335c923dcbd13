"""Few-shot sampling, presentation schedules and the per-example training step.

A training step feeds one example, lets the system evolve over the whole
horizon while accumulating route modifications at the true label's target,
then applies the accumulated update once and renormalizes. Other targets'
tables are untouched, which is what makes sequential class blocks safe.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .engine import _Episode, goal_J
from .geometry import mnist_geometry
from .policy import (LearningRates, RoutePolicy, UpdateAccumulator,
                     apply_and_renormalize, bucket_rates, init_uniform)
from .signals import DEFAULT_THRESHOLD, RawImage, Signal, image_signals, make_target


class SamplingError(ValueError):
    """Not enough examples to satisfy the requested few-shot pool."""


@dataclass
class FewShotSpec:
    classes: tuple = (0, 1, 2, 4)
    shots: int = 5
    epochs: int = 1
    schedule: str = "sequential"
    seed: int = 0

    def __post_init__(self):
        if self.shots < 1:
            raise SamplingError(f"shots must be >= 1, got {self.shots}")
        if self.schedule not in ("sequential", "mixed"):
            raise ValueError(f"unknown schedule {self.schedule!r}")


@dataclass
class RunLog:
    rows: list = field(default_factory=list)  # (step, label, J_true, checksum)


def _checksum(policy: RoutePolicy) -> str:
    return hashlib.sha256(policy.probs.tobytes()).hexdigest()[:12]


def sample_pool(dataset: Sequence[RawImage], spec: FewShotSpec) -> dict:
    """Seeded draw of `shots` examples per class, without replacement."""
    rng = np.random.default_rng(spec.seed)
    by_label = {c: [img for img in dataset if img.label == c] for c in spec.classes}
    pool = {}
    for c in spec.classes:
        cand = by_label[c]
        if len(cand) < spec.shots:
            raise SamplingError(
                f"class {c}: pool has {len(cand)} examples, need {spec.shots}")
        picks = rng.choice(len(cand), size=spec.shots, replace=False)
        pool[c] = [cand[i] for i in picks]
    return pool


def build_schedule(spec: FewShotSpec, pool: dict) -> list[RawImage]:
    """Presentation order over epochs: class blocks, or a per-epoch shuffle."""
    for c in spec.classes:
        if len(pool.get(c, ())) < spec.shots:
            raise SamplingError(
                f"class {c}: pool has {len(pool.get(c, ()))} examples, "
                f"need {spec.shots}")
    block = [img for c in spec.classes for img in pool[c][:spec.shots]]
    rng = np.random.default_rng(spec.seed)
    steps = []
    for _ in range(spec.epochs):
        if spec.schedule == "mixed":
            steps.extend(block[i] for i in rng.permutation(len(block)))
        else:
            steps.extend(block)
    return steps


def train_signals(policy: RoutePolicy, signals: Sequence[Signal], label: int,
                  rates: LearningRates, field=None) -> RoutePolicy:
    """One training episode on an already-encoded signal set.

    Accumulates the reinforcement deltas over every arrival event at the
    true label's target across the whole horizon, then applies them once.
    Similarities are taken against the unattended host `field` (default:
    the constant image host).
    """
    geom = policy.geometry
    yi = geom.label_index(label)
    g = (field or make_target(geom.sites[yi])).components
    ep = _Episode(signals, policy)
    sims_all = ep.vectors @ g if len(ep.vectors) else np.zeros(0)
    etas_all = bucket_rates(sims_all, rates)
    acc = UpdateAccumulator.zeros_like(policy)
    for t in range(policy.horizon + 1):
        idx, srcs, deltas, masses = ep.arrivals_at(policy, yi, t)
        if len(idx) == 0:
            continue
        # dw = eta(sim) * p; masses already equal N * p with N = 1
        np.add.at(acc.deltas[:, yi, :], (srcs, deltas), etas_all[idx] * masses)
    return apply_and_renormalize(policy, acc)


def train_example(policy: RoutePolicy, image: RawImage, label: int,
                  rates: LearningRates,
                  threshold: int = DEFAULT_THRESHOLD) -> RoutePolicy:
    """Encode one picture, emit from every source at tau=0, run one episode."""
    return train_signals(policy, image_signals(image, threshold), label, rates)


def train_run(spec: FewShotSpec, dataset: Sequence[RawImage],
              rates: LearningRates | None = None,
              geometry=None,
              threshold: int = DEFAULT_THRESHOLD,
              log_goal: bool = False) -> tuple[RoutePolicy, RunLog]:
    """Sample a pool, fold the schedule over train_example, return policy + log.

    Computing the post-step goal for the log roughly doubles the step cost,
    so it is opt-in.
    """
    rates = rates or LearningRates()
    geometry = geometry or mnist_geometry(sorted(spec.classes))
    policy = init_uniform(geometry)
    log = RunLog()
    pool = sample_pool(dataset, spec)
    for step, image in enumerate(build_schedule(spec, pool)):
        policy = train_example(policy, image, image.label, rates, threshold)
        J = np.nan
        if log_goal:
            signals = image_signals(image, threshold)
            site = geometry.sites[geometry.label_index(image.label)]
            J = goal_J(signals, policy, site, rates.sim_threshold).goal
        log.rows.append((step, image.label, J, _checksum(policy)))
    return policy, log


def evaluate_accuracy(policy: RoutePolicy, dataset: Sequence[RawImage],
                      threshold: int = DEFAULT_THRESHOLD,
                      sim_threshold: float = 0.7,
                      limit_per_label: int | None = None) -> float:
    """Fraction of examples whose argmax-goal label matches the truth."""
    from .engine import predict

    by_label: dict = {}
    chosen = []
    for img in dataset:
        n = by_label.get(img.label, 0)
        if limit_per_label is None or n < limit_per_label:
            chosen.append(img)
            by_label[img.label] = n + 1
    if not chosen:
        raise SamplingError("no evaluation examples")
    hits = sum(predict(image_signals(img, threshold), policy, sim_threshold)
               == img.label for img in chosen)
    return hits / len(chosen)
