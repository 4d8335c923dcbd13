"""In-phase vs out-of-phase classification with two rotating sources.

Two sources emit rotating 2D unit vectors (plus a rest slot) over an
emission window; one learner per class trains its route tables on its own
class episodes, and prediction is argmax of the interference goal over the
two targets. Emission spanning many timestamps makes update contributions
collide on shared durations, exercising the negative-mass flooring path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import goal_J
from .geometry import Geometry, GridCoord, SpacetimeConfig, TargetSite
from .policy import LearningRates, init_uniform
from .signals import Signal, TargetField
from .training import train_signals

WAVE_DIM = 3  # rest slot + 2D rotating vector


def wave_target(site: TargetSite) -> TargetField:
    """Unit host (0, 0, 1): the phase-zero state of the rotating signals."""
    return TargetField(np.array([0.0, 0.0, 1.0]), site)


@dataclass
class RotatingSource:
    position: GridCoord
    phase: float
    omega: float
    noise: float


@dataclass
class DoubleSlitConfig:
    source_positions: tuple = (GridCoord(0, 0), GridCoord(0, 4))
    target_coords: tuple = (GridCoord(2, -2), GridCoord(2, 6))
    omega: float = 2 * np.pi / 8
    emit_len: int = 16           # emissions at tau = 0 .. emit_len
    horizon: int = 24
    noise: float = 0.1           # phase jitter ~ U(-noise, noise) per emission
    shots_per_class: int = 20
    eval_episodes: int = 200
    seed: int = 0
    rates: LearningRates = field(default_factory=LearningRates)

    # class 0: in phase, class 1: out of phase
    def phases(self, class_index: int) -> tuple:
        return (0.0, 0.0) if class_index == 0 else (0.0, np.pi)

    def geometry(self) -> Geometry:
        sites = [TargetSite(0, self.target_coords[0]),
                 TargetSite(1, self.target_coords[1])]
        return Geometry(list(self.source_positions), sites,
                        SpacetimeConfig(horizon=self.horizon))


def emit_wave(src: RotatingSource, tau: int,
              rng: np.random.Generator | None = None) -> Signal:
    """(0, sin, cos) of omega * tau + phase + jitter, renormalized."""
    eps = rng.uniform(-src.noise, src.noise) if (rng is not None and src.noise > 0) else 0.0
    phi = src.omega * tau + src.phase + eps
    v = np.array([0.0, np.sin(phi), np.cos(phi)])
    return Signal(v / np.linalg.norm(v), src.position, tau)


def episode_signals(cfg: DoubleSlitConfig, class_index: int,
                    rng: np.random.Generator) -> list[Signal]:
    phases = cfg.phases(class_index)
    sources = [RotatingSource(pos, ph, cfg.omega, cfg.noise)
               for pos, ph in zip(cfg.source_positions, phases)]
    return [emit_wave(s, tau, rng)
            for s in sources for tau in range(cfg.emit_len + 1)]


def run_double_slit(cfg: DoubleSlitConfig):
    """Train one learner per class, evaluate on fresh noisy episodes.

    Returns (accuracy, per-episode rows (index, true, predicted, J0, J1),
    trained policy).
    """
    geom = cfg.geometry()
    fields = {site.label: wave_target(site) for site in geom.sites}
    rng = np.random.default_rng(cfg.seed)
    policy = init_uniform(geom)
    for _ in range(cfg.shots_per_class):
        for class_index in (0, 1):
            signals = episode_signals(cfg, class_index, rng)
            policy = train_signals(policy, signals, class_index, cfg.rates,
                                   fields[class_index])
    rows = []
    hits = 0
    for i in range(cfg.eval_episodes):
        truth = i % 2
        signals = episode_signals(cfg, truth, rng)
        J = [goal_J(signals, policy, geom.sites[c], cfg.rates.sim_threshold,
                    fields[c]).goal
             for c in (0, 1)]
        pred = 0 if J[0] >= J[1] else 1
        hits += pred == truth
        rows.append((i, truth, pred, J[0], J[1]))
    return hits / cfg.eval_episodes, rows, policy
