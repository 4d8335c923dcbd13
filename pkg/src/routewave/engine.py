"""Episode simulation: arrival events, threshold attention, energy, prediction.

At each timestamp every target holds one interaction event gathering the
signals whose route duration lands there. Arrivals above the similarity
threshold pull the host toward their mean (the attended target); the event's
energy credits each similar arrival with its full mass and each dissimilar
one with mass times its alignment with the attended host. The goal is the
running peak of the cumulative event energy, and prediction is argmax of
that goal across the class targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import TargetSite
from .policy import RoutePolicy
from .signals import Signal, TargetField, make_target

SIM_THRESHOLD = 0.7


@dataclass
class ArrivalEvent:
    time: int
    target: TargetSite
    source_ids: np.ndarray   # (n,) int, indices into geometry.sources
    emit_times: np.ndarray   # (n,) int
    vectors: np.ndarray      # (n, dim) unit signals, unchanged since emission
    masses: np.ndarray       # (n,) arriving mass N * p[source, target, t - tau]

    @property
    def size(self) -> int:
        return len(self.masses)

    def arrivals(self):
        """(source_id, signal vector, mass) triples, mirroring the wire contract."""
        return list(zip(self.source_ids.tolist(), self.vectors, self.masses))


@dataclass
class AttendedTarget:
    vector: np.ndarray
    time: int


@dataclass
class EnergyTrace:
    energies: np.ndarray  # (horizon+1,) cumulative interaction energy per timestamp
    goal: float           # max over the trace


class _Episode:
    """Signals of one episode flattened to arrays for fast per-t collection."""

    def __init__(self, signals: Sequence[Signal], policy: RoutePolicy):
        geom = policy.geometry
        self.sources = np.array(
            [geom.source_index(s.source) for s in signals], dtype=np.intp)
        self.taus = np.array([s.emit_time for s in signals], dtype=np.int64)
        if signals:
            self.vectors = np.stack([s.components for s in signals])
        else:
            self.vectors = np.zeros((0, 1))

    def arrivals_at(self, policy: RoutePolicy, target_idx: int, t: int):
        deltas = t - self.taus
        ok = (deltas >= 0) & (deltas <= policy.horizon)
        idx = np.nonzero(ok)[0]
        deltas = deltas[idx]
        srcs = self.sources[idx]
        feas = policy.geometry.feasible[srcs, target_idx, deltas]
        idx, srcs, deltas = idx[feas], srcs[feas], deltas[feas]
        masses = policy.probs[srcs, target_idx, deltas]
        live = masses > 0.0  # zero-probability routes deliver no signals
        return idx[live], srcs[live], deltas[live], masses[live]


def collect_arrivals(signals: Sequence[Signal], policy: RoutePolicy,
                     target: TargetSite, t: int) -> ArrivalEvent:
    """Signals whose route lands at `target` exactly at timestamp t."""
    target_idx = policy.geometry.label_index(target.label)
    ep = _Episode(signals, policy)
    idx, srcs, _, masses = ep.arrivals_at(policy, target_idx, t)
    return ArrivalEvent(t, target, srcs, ep.taus[idx], ep.vectors[idx], masses)


def attended_target(event: ArrivalEvent, field: TargetField,
                    threshold: float = SIM_THRESHOLD) -> AttendedTarget:
    """Normalized mean of the host with every arrival above the threshold.

    With no similar arrival the host stays itself; the mean of unit vectors
    all within the threshold cone never vanishes, so normalization is safe.
    """
    g = field.components
    if event.size == 0:
        return AttendedTarget(g.copy(), event.time)
    sims = event.vectors @ g
    similar = event.vectors[sims >= threshold]
    if len(similar) == 0:
        return AttendedTarget(g.copy(), event.time)
    h = g + similar.sum(axis=0)
    return AttendedTarget(h / np.linalg.norm(h), event.time)


def instantaneous_energy(event: ArrivalEvent, attended: AttendedTarget,
                         field: TargetField,
                         threshold: float = SIM_THRESHOLD) -> float:
    """Event energy: similar arrivals credit rho * 1, others rho * (x . h)."""
    if event.size == 0:
        return 0.0
    sims = event.vectors @ field.components
    similar = sims >= threshold
    e = event.masses[similar].sum()
    dissimilar = ~similar
    if np.any(dissimilar):
        e += float(event.masses[dissimilar]
                   @ (event.vectors[dissimilar] @ attended.vector))
    return float(e)


def _trace_arrays(ep: _Episode, policy: RoutePolicy, target_idx: int,
                  g: np.ndarray, threshold: float) -> np.ndarray:
    horizon = policy.horizon
    sims_all = ep.vectors @ g if len(ep.vectors) else np.zeros(0)
    energies = np.empty(horizon + 1)
    running = 0.0
    for t in range(horizon + 1):
        idx, _, _, masses = ep.arrivals_at(policy, target_idx, t)
        if len(idx):
            sims = sims_all[idx]
            similar = sims >= threshold
            e = masses[similar].sum()
            if np.any(~similar):
                h = g + ep.vectors[idx[similar]].sum(axis=0)
                h /= np.linalg.norm(h)
                e += masses[~similar] @ (ep.vectors[idx[~similar]] @ h)
            running += float(e)
        energies[t] = running
    return energies


def goal_J(signals: Sequence[Signal], policy: RoutePolicy, target: TargetSite,
           threshold: float = SIM_THRESHOLD,
           field: TargetField | None = None) -> EnergyTrace:
    """Cumulative interaction energy over the horizon; goal is its peak.

    The energy at t aggregates every arrival event held at t' <= t, each
    evaluated with the attended host of its own timestamp. `field` overrides
    the default constant host (the wave experiment uses a 3-component one).
    """
    target_idx = policy.geometry.label_index(target.label)
    g = (field or make_target(target)).components
    ep = _Episode(signals, policy)
    energies = _trace_arrays(ep, policy, target_idx, g, threshold)
    return EnergyTrace(energies, float(energies.max()))


def predict(signals: Sequence[Signal], policy: RoutePolicy,
            threshold: float = SIM_THRESHOLD,
            fields: dict | None = None) -> int:
    """Label whose target reaches the highest goal; ties go to the smallest label."""
    geom = policy.geometry
    order = np.argsort(geom.labels)
    ep = _Episode(signals, policy)
    best_label, best_J = None, -np.inf
    for target_idx in order:
        site = geom.sites[target_idx]
        field = fields[site.label] if fields else make_target(site)
        energies = _trace_arrays(ep, policy, target_idx, field.components,
                                 threshold)
        J = float(energies.max())
        if J > best_J:
            best_label, best_J = site.label, J
    return best_label
