"""Crank-Nicolson time stepping for the forced, damped cubic NLS on [0, L].

Semi-discrete system on the interior nodes j = 1..nx-1::

    q_t = i D2 q - 2 i lam |q|^2 q - sigma q - i f,

with q_0 = Q(t) (Dirichlet data) and q_nx = 0 behind the sponge.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg.lapack import zgtsv

from dtnlab.boundary import ManufacturedSolution, TraceSeries, manufactured_forcing
from dtnlab.diagnostics import NormSeries, SnapshotTerms, norms, snapshot_terms
from dtnlab.grid import ComplexField, GridSpec, check_lambda


class SolverError(RuntimeError):
    def __init__(self, msg, time=None):
        super().__init__(msg if time is None else f"{msg} (t = {time:.6g})")
        self.time = time


class FixedPointDivergence(SolverError):
    pass


class NonfiniteField(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    lam: int = 1
    fixed_point_tol: float = 1e-12
    max_fixed_point_iters: int = 50
    snapshot_stride: int = 10
    forcing: Optional[ManufacturedSolution] = None

    def __post_init__(self):
        check_lambda(self.lam)
        if not self.fixed_point_tol > 0:
            raise ValueError("fixed_point_tol must be positive")
        if self.max_fixed_point_iters < 1:
            raise ValueError("max_fixed_point_iters must be >= 1")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")

    def source(self, x, t):
        if self.forcing is None:
            return None
        return manufactured_forcing(self.forcing, self.lam, x, t)


@dataclass
class RunResult:
    traces: TraceSeries
    norms: NormSeries
    terms: SnapshotTerms
    final: ComplexField
    mass_leakage: np.ndarray
    grid: GridSpec
    config: SolverConfig
    fields: Optional[list] = None

    @property
    def t(self):
        return self.traces.t


def neumann_trace(field, grid: GridSpec) -> complex:
    """Second-order one-sided q_x(0)."""
    q = field.values if isinstance(field, ComplexField) else np.asarray(field)
    return complex((-3 * q[0] + 4 * q[1] - q[2]) / (2 * grid.dx))


def _laplacian(q, dx):
    out = np.zeros_like(q)
    out[1:-1] = (q[2:] - 2 * q[1:-1] + q[:-2]) / dx**2
    return out


def step(field: ComplexField, t: float, grid: GridSpec, config: SolverConfig,
         boundary, sigma=None) -> ComplexField:
    """Advance one Crank-Nicolson step, iterating the cubic term to convergence."""
    dt, dx, lam = grid.dt, grid.dx, config.lam
    if sigma is None:
        sigma = grid.sigma()
    q = field.values
    t1 = t + dt
    Q1 = complex(boundary.Q(t1))

    s_in = sigma[1:-1]
    a = 0.5 * dt * 1j / dx**2
    lap = _laplacian(q, dx)[1:-1]
    explicit = q[1:-1] + 0.5 * dt * (1j * lap - s_in * q[1:-1])
    if config.forcing is not None:
        x = grid.x[1:-1]
        explicit = explicit - 0.5j * dt * (config.source(x, t) + config.source(x, t1))
    explicit[0] += a * Q1

    off = np.full(grid.nx - 2, -a, dtype=complex)
    base_diag = 1 + 2 * a + 0.5 * dt * s_in

    u = q.copy()
    u[0] = Q1
    u[-1] = 0.0
    for _ in range(config.max_fixed_point_iters):
        w = 0.5 * (q[1:-1] + u[1:-1])
        nl = 1j * dt * lam * np.abs(w) ** 2
        diag = base_diag + nl
        rhs = explicit - nl * q[1:-1]
        _, _, _, sol, info = zgtsv(off, diag, off, rhs)
        if info != 0:
            raise NonfiniteField("tridiagonal solve failed", t1)
        change = np.max(np.abs(sol - u[1:-1])) if sol.size else 0.0
        u[1:-1] = sol
        if not np.isfinite(change):
            raise NonfiniteField("nonfinite field", t1)
        if change <= config.fixed_point_tol:
            break
    else:
        raise FixedPointDivergence("fixed-point divergence", t1)
    return ComplexField(u, t1)


def semidiscrete_rhs(q, t, grid, config, sigma):
    """Time derivative of the interior nodes; boundary entries are zero."""
    dq = 1j * _laplacian(q, grid.dx) - 2j * config.lam * np.abs(q) ** 2 * q - sigma * q
    if config.forcing is not None:
        dq = dq - 1j * config.source(grid.x, t)
    dq[0] = dq[-1] = 0.0
    return dq


def oracle_step_rk4(field: ComplexField, t: float, grid: GridSpec, config: SolverConfig,
                    boundary, sigma=None) -> ComplexField:
    """Classical RK4 step of the same semi-discrete system (validation only)."""
    dt = grid.dt
    if sigma is None:
        sigma = grid.sigma()

    def with_bc(v, tt):
        v = v.copy()
        v[0] = boundary.Q(tt)
        v[-1] = 0.0
        return v

    q = field.values
    k1 = semidiscrete_rhs(with_bc(q, t), t, grid, config, sigma)
    k2 = semidiscrete_rhs(with_bc(q + 0.5 * dt * k1, t + 0.5 * dt), t + 0.5 * dt, grid, config, sigma)
    k3 = semidiscrete_rhs(with_bc(q + 0.5 * dt * k2, t + 0.5 * dt), t + 0.5 * dt, grid, config, sigma)
    k4 = semidiscrete_rhs(with_bc(q + dt * k3, t + dt), t + dt, grid, config, sigma)
    u = with_bc(q + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4), t + dt)
    if not np.all(np.isfinite(u)):
        raise NonfiniteField("nonfinite field", t + dt)
    return ComplexField(u, t + dt)


def run(grid: GridSpec, config: SolverConfig, boundary, initial=None,
        keep_fields=False, integrator=step) -> RunResult:
    """Integrate from t = 0 to T, sampling diagnostics every ``snapshot_stride`` steps.

    ``initial`` defaults to the zero field; a nonzero one is accepted for
    plumbing but must match Q(0) at x = 0.
    """
    sigma = grid.sigma()
    if initial is None:
        field = ComplexField.zeros(grid)
        field.values[0] = boundary.Q(0.0)
    else:
        field = ComplexField(np.array(initial, dtype=complex), 0.0)
        if field.values.shape != (grid.nx + 1,):
            raise ValueError("initial field has wrong length")

    times, P, rows, terms, leakage, fields = [], [], [], [], [], []
    in_sponge = grid.x > grid.sponge_start
    w = grid.weights()

    def record(f: ComplexField):
        times.append(f.time_tag)
        P.append(neumann_trace(f, grid))
        row = norms(f, grid)
        rows.append(row)
        terms.append(snapshot_terms(f, grid, config, boundary, sigma))
        total = row["l2sq"]
        inside = float(np.sum(w[in_sponge] * np.abs(f.values[in_sponge]) ** 2))
        leakage.append(min(1.0, inside / total) if total > 0 else 0.0)
        if keep_fields:
            fields.append(f.values.copy())

    def result():
        traces = TraceSeries.from_traces(np.array(times), boundary, np.array(P))
        return RunResult(traces, NormSeries.from_rows(times, rows),
                         SnapshotTerms.stack(times, terms), field, np.array(leakage),
                         grid, config, fields if keep_fields else None)

    record(field)
    nsteps = grid.nsteps
    try:
        for n in range(nsteps):
            t = n * grid.dt
            new = integrator(field, t, grid, config, boundary, sigma)
            new.time_tag = (n + 1) * grid.dt
            if not new.is_finite():
                raise NonfiniteField("nonfinite field", new.time_tag)
            field = new
            if (n + 1) % config.snapshot_stride == 0 or n + 1 == nsteps:
                record(field)
    except SolverError as exc:
        # snapshots up to the failure, for callers that flush partial output
        exc.partial = result()
        raise
    return result()
