"""Uniform mesh on the truncated half-line and the absorbing layer near x = L."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LAMBDAS = (-1, 0, 1)


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    L: float
    nx: int
    dt: float
    T: float
    sponge_fraction: float = 0.25
    sponge_strength: float = 50.0

    @property
    def dx(self) -> float:
        return self.L / self.nx

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.nx + 1) * self.dx

    @property
    def nsteps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def sponge_start(self) -> float:
        return (1.0 - self.sponge_fraction) * self.L

    def weights(self) -> np.ndarray:
        """Composite trapezoid weights over the nodes."""
        w = np.full(self.nx + 1, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def sigma(self) -> np.ndarray:
        return sponge_profile(self, self.x)

    def refined(self, factor: int = 2) -> "GridSpec":
        """Same domain with both dx and dt divided by ``factor``."""
        return make_grid(self.L, self.nx * factor, self.dt / factor, self.T,
                         self.sponge_fraction, self.sponge_strength)


def make_grid(L, nx, dt, T, sponge_fraction=0.25, sponge_strength=50.0) -> GridSpec:
    if not L > 0:
        raise GridError("nonpositive domain")
    if int(nx) != nx or nx < 16:
        raise GridError("mesh too coarse")
    if not dt > 0:
        raise GridError("nonpositive time step")
    if not T >= dt:
        raise GridError("horizon shorter than one time step")
    if not 0 <= sponge_fraction < 0.5:
        raise GridError("sponge_fraction must lie in [0, 0.5)")
    if not sponge_strength >= 0:
        raise GridError("negative sponge strength")
    return GridSpec(float(L), int(nx), float(dt), float(T),
                    float(sponge_fraction), float(sponge_strength))


def sponge_profile(grid: GridSpec, x):
    """Cubic damping ramp: zero up to the layer start, sigma_max at x = L."""
    x = np.asarray(x, dtype=float)
    width = grid.L - grid.sponge_start
    if width <= 0:
        return np.zeros_like(x)
    s = np.clip((x - grid.sponge_start) / width, 0.0, 1.0)
    return grid.sponge_strength * s**3


@dataclass
class ComplexField:
    values: np.ndarray
    time_tag: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)

    @classmethod
    def zeros(cls, grid: GridSpec, t: float = 0.0) -> "ComplexField":
        return cls(np.zeros(grid.nx + 1, dtype=complex), t)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def check_lambda(lam) -> int:
    if lam not in LAMBDAS:
        raise ValueError(f"lambda must be one of {LAMBDAS}, got {lam!r}")
    return int(lam)
