"""Self-consistent mean field mu = tanh(beta * (n_bar * J * mu + |B|)).

Solved by damped fixed-point iteration, which is unconditionally stable on
[-1, 1]. Above beta * n_bar * J = 1 the zero-field solution bifurcates and
field sweeps develop hysteresis; the enclosed area is the dissipated energy
per switching cycle. Analysis tool only; not wired into training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class IterationLimitError(RuntimeError):
    """Fixed-point iteration failed to converge."""


@dataclass(frozen=True)
class MFParams:
    beta: float
    n_bar: float
    coupling: float = 1.0
    b_ext: float = 0.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.n_bar < 0:
            raise ValueError(f"n_bar must be non-negative, got {self.n_bar}")


DAMPING = 0.5
TOL = 1e-12
RESIDUAL_TOL = 1e-10
MAX_ITER = 100_000


def _bisect_root(gain: float, drive: float, side: int) -> float:
    """Root of x - tanh(gain x + drive) on the requested side of zero.

    f(-1) <= 0 <= f(1) always since |tanh| < 1; when the fixed point is not
    unique (zero drive above the transition) the side keeps branch identity.
    """
    if drive > 0:
        lo, hi = 0.0, 1.0
    elif drive < 0:
        lo, hi = -1.0, 0.0
    else:
        lo, hi = (0.0, 1.0) if side >= 0 else (-1.0, 0.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid - np.tanh(gain * mid + drive) <= 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _solve(gain: float, drive: float, init_mu: float) -> float:
    """Damped iteration with a bisection fallback near the critical slowdown."""
    mu = init_mu
    for _ in range(MAX_ITER):
        new = (1 - DAMPING) * mu + DAMPING * np.tanh(gain * mu + drive)
        if abs(new - mu) < TOL:
            return float(new)
        mu = new
    if abs(mu - np.tanh(gain * mu + drive)) <= RESIDUAL_TOL:
        return float(mu)
    # approach is only algebraic at the transition point itself
    root = _bisect_root(gain, drive, 1 if mu >= 0 else -1)
    if abs(root - np.tanh(gain * root + drive)) <= RESIDUAL_TOL:
        return float(root)
    raise IterationLimitError(
        f"no fixed point after {MAX_ITER} iterations "
        f"(gain={gain}, drive={drive}, init={init_mu})")


def solve_mu(params: MFParams, init_mu: float = 0.0) -> float:
    """Solve mu = tanh(beta (n_bar J mu + |B|)) starting from init_mu."""
    if not -1.0 <= init_mu <= 1.0:
        raise ValueError(f"init_mu must lie in [-1, 1], got {init_mu}")
    drive = params.beta * abs(params.b_ext)
    gain = params.beta * params.n_bar * params.coupling
    return _solve(gain, drive, init_mu)


def residual(params: MFParams, mu: float) -> float:
    drive = params.beta * abs(params.b_ext)
    gain = params.beta * params.n_bar * params.coupling
    return float(mu - np.tanh(gain * mu + drive))


def activation_curve(params: MFParams, b_grid, branch: str) -> np.ndarray:
    """Field sweep with warm starts; returns mu aligned with b_grid.

    The ascending branch walks b_grid upward starting from mu = -1, the
    descending branch walks downward from mu = +1. For gains above 1 the two
    disagree around zero field (hysteresis); below, they coincide.
    """
    b_grid = np.asarray(b_grid, dtype=float)
    if len(b_grid) == 0:
        raise ValueError("empty field grid")
    if np.any(np.diff(b_grid) < 0):
        raise ValueError("b_grid must be monotone non-decreasing")
    if branch == "ascending":
        order, mu = range(len(b_grid)), -1.0
    elif branch == "descending":
        order, mu = range(len(b_grid) - 1, -1, -1), 1.0
    else:
        raise ValueError(f"unknown branch {branch!r}")
    gain = params.beta * params.n_bar * params.coupling
    out = np.empty_like(b_grid)
    for i in order:
        # the sweep carries signed fields: negative b pulls mu down
        mu = _solve(gain, params.beta * b_grid[i], mu)
        out[i] = mu
    return out


def hysteresis_area(params: MFParams, b_grid) -> float:
    """Trapezoid integral of the branch gap; zero below the transition."""
    up = activation_curve(params, b_grid, "ascending")
    down = activation_curve(params, b_grid, "descending")
    trapezoid = getattr(np, "trapezoid", np.trapz)
    return float(trapezoid(down - up, np.asarray(b_grid, dtype=float)))


def transition_check(beta: float, coupling: float, n_bar_grid) -> float:
    """Smallest grid n_bar with spontaneous zero-field magnetization.

    The estimate brackets beta * n_bar * J = 1 within one grid step; raises
    if the grid does not straddle the transition.
    """
    n_bar_grid = np.asarray(n_bar_grid, dtype=float)
    spontaneous = []
    for n_bar in n_bar_grid:
        mu = solve_mu(MFParams(beta, float(n_bar), coupling, 0.0), init_mu=1.0)
        spontaneous.append(abs(mu) > 1e-6)
    if not any(spontaneous):
        raise ValueError("grid never crosses the transition (all subcritical)")
    first = int(np.argmax(spontaneous))
    if first == 0:
        raise ValueError("grid starts above the transition; extend it downward")
    return float(n_bar_grid[first])
