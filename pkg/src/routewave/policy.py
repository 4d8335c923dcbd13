"""Route probability tables and their reinforcement update.

Every (source, target) pair owns a probability distribution over travel
durations 0..T. Durations below the Manhattan distance can never produce an
arrival but still carry mass: they are the reservoir that lets the update
shift weight between "arrives" and "never arrives". The update adds
eta * p to each duration that produced an arrival, floors at zero, and
renormalizes each (source, target) row.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Geometry, GridCoord, SpacetimeConfig, TargetSite

log = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-9


@dataclass
class LearningRates:
    eta_plus: float = 1.0
    eta_minus: float = -0.5
    eta_minusminus: float = -0.8
    sim_threshold: float = 0.7

    def __post_init__(self):
        ok = (self.eta_plus > 0 > self.eta_minus >= self.eta_minusminus > -1)
        if not ok:
            raise ValueError(
                "rates must satisfy eta_plus > 0 > eta_minus >= eta_minusminus > -1, "
                f"got ({self.eta_plus}, {self.eta_minus}, {self.eta_minusminus})")


# Stronger depletion used when a run's purpose is the arrival-composition
# diagnostics: residual mass on inconsistent sources washes the expected
# similarity toward the all-off plateau.
TABLE_PROFILE_RATES = dict(eta_plus=1.0, eta_minus=-0.7, eta_minusminus=-0.95)


@dataclass
class RoutePolicy:
    geometry: Geometry
    probs: np.ndarray  # (n_sources, n_targets, horizon+1), rows sum to 1

    @property
    def horizon(self) -> int:
        return self.geometry.cfg.horizon

    def copy(self) -> "RoutePolicy":
        return RoutePolicy(self.geometry, self.probs.copy())

    def row(self, source: int, target: int) -> np.ndarray:
        return self.probs[source, target]

    def check_rows(self, tol: float = ROW_SUM_TOL):
        sums = self.probs.sum(axis=2)
        if not np.all(np.abs(sums - 1.0) <= tol):
            raise AssertionError(f"row sums off unity by up to {np.abs(sums - 1).max()}")
        if self.probs.min() < 0:
            raise AssertionError(f"negative probability {self.probs.min()}")


@dataclass
class UpdateAccumulator:
    deltas: np.ndarray

    @classmethod
    def zeros_like(cls, policy: RoutePolicy) -> "UpdateAccumulator":
        return cls(np.zeros_like(policy.probs))


def init_uniform(geometry: Geometry) -> RoutePolicy:
    """Uniform 1/(T+1) over every duration, infeasible ones included.

    The infeasible share acts as the non-arriving reservoir; with a constant
    host and single-timestamp emission the update would be a renormalization
    no-op without it.
    """
    n = geometry.cfg.horizon + 1
    probs = np.full((geometry.n_sources, geometry.n_targets, n), 1.0 / n)
    return RoutePolicy(geometry, probs)


def similarity_bucket(sim: float, rates: LearningRates) -> float:
    """Map an arriving signal's similarity with the host to a learning rate."""
    if sim >= rates.sim_threshold:
        return rates.eta_plus
    if sim <= -rates.sim_threshold:
        return rates.eta_minusminus
    return rates.eta_minus


def bucket_rates(sims: np.ndarray, rates: LearningRates) -> np.ndarray:
    """Vectorized similarity_bucket."""
    return np.where(sims >= rates.sim_threshold, rates.eta_plus,
                    np.where(sims <= -rates.sim_threshold,
                             rates.eta_minusminus, rates.eta_minus))


def accumulate(acc: UpdateAccumulator, source: int, target: int, delta: int,
               sim: float, policy: RoutePolicy, rates: LearningRates):
    """Record one arrival event's contribution: eta(sim) * p[source, target, delta]."""
    if not policy.geometry.feasible[source, target, delta]:
        raise ValueError(
            f"duration {delta} infeasible for source {source} -> target {target}; "
            f"an arrival event cannot have happened")
    acc.deltas[source, target, delta] += (
        similarity_bucket(sim, rates) * policy.probs[source, target, delta])


def apply_and_renormalize(policy: RoutePolicy, acc: UpdateAccumulator) -> RoutePolicy:
    """p <- max(p + dw, 0) then renormalize each (source, target) row."""
    new = np.clip(policy.probs + acc.deltas, 0.0, None)
    sums = new.sum(axis=2, keepdims=True)
    dead = sums[..., 0] <= 0.0
    if np.any(dead):
        n = policy.probs.shape[2]
        for src, tgt in zip(*np.nonzero(dead)):
            log.warning("route row (source=%d, target=%d) floored to zero; "
                        "reset to uniform", src, tgt)
            new[src, tgt] = 1.0 / n
            sums[src, tgt, 0] = 1.0
    return RoutePolicy(policy.geometry, new / sums)


# --- flat text artifact -------------------------------------------------
#
# Floats are written with repr(), which round-trips float64 exactly.

def save_policy(policy: RoutePolicy, path):
    geom = policy.geometry
    lines = ["routewave-policy 1"]
    lines.append("horizon %d max_speed %d grid_extent %d"
                 % (geom.cfg.horizon, geom.cfg.max_speed, geom.cfg.grid_extent))
    lines.append("targets " + " ".join(
        f"{s.label}:{s.coord.row}:{s.coord.col}" for s in geom.sites))
    lines.append("sources " + " ".join(f"{s.row}:{s.col}" for s in geom.sources))
    for l in range(geom.n_sources):
        for y in range(geom.n_targets):
            row = " ".join(repr(float(v)) for v in policy.probs[l, y])
            lines.append(f"{l} {y} {row}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_policy(path) -> RoutePolicy:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("routewave-policy"):
        raise ValueError(f"{path}: not a routewave policy file")
    horizon, max_speed, extent = (int(tok) for tok in lines[1].split()[1::2])
    sites = []
    for tok in lines[2].split()[1:]:
        lab, r, c = (int(x) for x in tok.split(":"))
        sites.append(TargetSite(lab, GridCoord(r, c)))
    sources = []
    for tok in lines[3].split()[1:]:
        r, c = (int(x) for x in tok.split(":"))
        sources.append(GridCoord(r, c))
    geom = Geometry(sources, sites,
                    SpacetimeConfig(horizon, max_speed, extent))
    probs = np.zeros((len(sources), len(sites), horizon + 1))
    for line in lines[4:]:
        parts = line.split()
        if not parts:
            continue
        l, y = int(parts[0]), int(parts[1])
        probs[l, y] = [float(v) for v in parts[2:]]
    return RoutePolicy(geom, probs)
