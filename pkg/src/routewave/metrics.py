"""Arrival-composition diagnostics: expected similarity, arrival time, entropy.

These read a trained policy with the supervising field withdrawn: only the
guest-guest structure of what arrives is measured. The expected similarity
of the arrival mix at target y is  sum_lm q_l q_m x_l . x_m  with q the
per-source share of mass arrived by the snapshot time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import _Episode
from .policy import RoutePolicy
from .signals import (DEFAULT_THRESHOLD, RawImage, Signal, image_signals,
                      make_target)

LATE_WINDOW = (19, 24)  # snapshots where every source can have arrived


@dataclass
class ArrivalDistribution:
    q: np.ndarray  # per-source share of arrived mass, sums to 1
    target_label: int
    time: int


def _cumulative_mass(signals: Sequence[Signal], policy: RoutePolicy,
                     target_idx: int, t: int) -> np.ndarray:
    """Mass arrived per source over all events up to and including t."""
    ep = _Episode(signals, policy)
    out = np.zeros(policy.geometry.n_sources)
    for tt in range(min(t, policy.horizon) + 1):
        _, srcs, _, masses = ep.arrivals_at(policy, target_idx, tt)
        np.add.at(out, srcs, masses)
    return out


def arrival_distribution(policy: RoutePolicy, signals: Sequence[Signal],
                         target_label: int, t: int) -> ArrivalDistribution | None:
    """Normalized per-source arrived mass up to t; None before anything lands."""
    target_idx = policy.geometry.label_index(target_label)
    mass = _cumulative_mass(signals, policy, target_idx, t)
    total = mass.sum()
    if total <= 0.0:
        return None
    return ArrivalDistribution(mass / total, target_label, t)


def expected_similarity(dist: ArrivalDistribution,
                        signal_vectors: np.ndarray) -> float:
    """sum_lm q_l q_m x_l . x_m, self-terms included; equals |sum q_l x_l|^2."""
    m = dist.q @ signal_vectors
    return float(m @ m)


def similarity_table(policy: RoutePolicy, images: Sequence[RawImage],
                     threshold: int = DEFAULT_THRESHOLD,
                     n_per_label: int = 50,
                     window: tuple = LATE_WINDOW) -> np.ndarray:
    """Rows = learners, columns = true input label, averaged over the window.

    Cell (L, y): expected similarity of what learner L receives from inputs
    of label y, averaged over the window snapshots and up to n_per_label
    test images. Every source emits at tau=0, so the arrival shares per
    (learner, snapshot) are image independent and computed once.
    """
    geom = policy.geometry
    labels = sorted(geom.labels)
    snapshots = range(window[0], window[1] + 1)
    shares = {}
    for li, learner in enumerate(labels):
        yi = geom.label_index(learner)
        masked = np.where(geom.feasible[:, yi, :], policy.probs[:, yi, :], 0.0)
        arrived = np.cumsum(masked, axis=1)
        qs = []
        for t in snapshots:
            total = arrived[:, t].sum()
            qs.append(arrived[:, t] / total if total > 0 else None)
        shares[li] = qs
    tab = np.zeros((len(labels), len(labels)))
    for ci, lab in enumerate(labels):
        chosen = [img for img in images if img.label == lab][:n_per_label]
        vals = [[] for _ in labels]
        for img in chosen:
            vectors = np.stack(
                [s.components for s in image_signals(img, threshold)])
            for li in range(len(labels)):
                for q in shares[li]:
                    if q is None:
                        continue
                    m = q @ vectors
                    vals[li].append(m @ m)
        for li in range(len(labels)):
            tab[li, ci] = float(np.mean(vals[li])) if vals[li] else np.nan
    return tab


def expected_arrival_time(policy: RoutePolicy, destination_label: int,
                          sender_label: int) -> float | None:
    """Mean travel duration when sending with one policy toward another's site.

    White input: every source emits at tau=0, so the sending distribution is
    the policy column of `sender_label` and a duration counts only if it is
    feasible for the actual destination. None when nothing can arrive.
    """
    geom = policy.geometry
    li = geom.label_index(destination_label)
    pi = geom.label_index(sender_label)
    mass = np.where(geom.feasible[:, li, :], policy.probs[:, pi, :], 0.0)
    total = mass.sum()
    if total <= 0.0:
        return None
    durations = np.arange(policy.horizon + 1)
    return float((mass * durations[None, :]).sum() / total)


def arrival_time_table(policy: RoutePolicy) -> np.ndarray:
    """Rows = destination learner, columns = sending policy."""
    labels = sorted(policy.geometry.labels)
    n = len(labels)
    tab = np.zeros((n, n))
    for li, dest in enumerate(labels):
        for pi, sender in enumerate(labels):
            v = expected_arrival_time(policy, dest, sender)
            tab[li, pi] = np.nan if v is None else v
    return tab


def signal_entropy(policy: RoutePolicy, signals: Sequence[Signal],
                   target_label: int,
                   sim_threshold: float = 0.7) -> float | None:
    """Shannon entropy (nats) of when the similar-source mass arrives.

    q(t) is the share of similar-signal mass landing exactly at t; None when
    no similar source ever delivers.
    """
    geom = policy.geometry
    target_idx = geom.label_index(target_label)
    g = make_target(geom.sites[target_idx]).components
    ep = _Episode(signals, policy)
    if len(ep.vectors) == 0:
        return None
    sims_all = ep.vectors @ g
    per_t = np.zeros(policy.horizon + 1)
    for t in range(policy.horizon + 1):
        idx, _, _, masses = ep.arrivals_at(policy, target_idx, t)
        if len(idx):
            keep = sims_all[idx] >= sim_threshold
            per_t[t] = masses[keep].sum()
    total = per_t.sum()
    if total <= 0.0:
        return None
    q = per_t[per_t > 0] / total
    return float(-(q * np.log(q)).sum())
