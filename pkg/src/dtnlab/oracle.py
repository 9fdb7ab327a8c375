"""Independent references for the solver: manufactured solutions,
a second time integrator, and self-convergence against a refined run."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from dtnlab.boundary import ManufacturedSolution, TraceSeries, write_table
from dtnlab.grid import GridSpec
from dtnlab.solver import NonfiniteField, SolverConfig, oracle_step_rk4, run


@dataclass
class ConvergenceStudy:
    levels: list                      # (dx, dt) per level
    max_errors: list
    l2_errors: list
    initial_errors: list = field(default_factory=list)

    @property
    def observed_orders(self):
        e = np.asarray(self.max_errors)
        return list(np.log2(e[:-1] / e[1:]))

    @property
    def observed_orders_l2(self):
        e = np.asarray(self.l2_errors)
        return list(np.log2(e[:-1] / e[1:]))

    def write_csv(self, path, header_lines=()):
        orders = [np.nan] + self.observed_orders
        data = [(dx, dt, em, el, o) for (dx, dt), em, el, o
                in zip(self.levels, self.max_errors, self.l2_errors, orders)]
        write_table(path, ["dx", "dt", "max_error", "l2_error", "observed_order"], data, header_lines)


def ladder(base: GridSpec, n_levels: int = 3) -> list:
    """Grids with dx and dt halved together, starting from ``base``."""
    return [base.refined(2**k) if k else base for k in range(n_levels)]


def manufactured_study(ms: ManufacturedSolution, lam, grids, fixed_point_tol=1e-12) -> ConvergenceStudy:
    if len(grids) < 3:
        raise ValueError("convergence study needs at least 3 levels")
    levels, emax, el2, e0 = [], [], [], []
    for g in grids:
        cfg = SolverConfig(lam=lam, fixed_point_tol=fixed_point_tol,
                           snapshot_stride=max(g.nsteps, 1), forcing=ms)
        res = run(g, cfg, ms, keep_fields=True)
        exact_T = ms.exact(g.x, res.final.time_tag)
        err = np.abs(res.final.values - exact_T)
        levels.append((g.dx, g.dt))
        emax.append(float(err.max()))
        el2.append(float(np.sqrt(np.sum(g.weights() * err**2))))
        e0.append(float(np.max(np.abs(res.fields[0] - ms.exact(g.x, 0.0)))))
    return ConvergenceStudy(levels, emax, el2, e0)


def cross_integrator_study(grid: GridSpec, config: SolverConfig, boundary, T_short=1.0) -> float:
    """Max nodal difference at T_short between Crank-Nicolson and RK4 runs."""
    if T_short > 5:
        raise ValueError("T_short must be <= 5 for the explicit integrator")
    g = replace(grid, T=float(T_short))
    cfg = replace(config, snapshot_stride=max(g.nsteps, 1))
    cn = run(g, cfg, boundary)
    try:
        rk = run(g, cfg, boundary, integrator=oracle_step_rk4)
    except NonfiniteField as exc:
        raise NonfiniteField("explicit integrator unstable: reduce dt", exc.time) from exc
    return float(np.max(np.abs(cn.final.values - rk.final.values)))


@dataclass
class RichardsonResult:
    reference: TraceSeries
    coarse_error: float     # max |P_coarse - P_ref|
    fine_error: float       # max |P_fine - P_ref|

    @property
    def ratio(self) -> float:
        return self.coarse_error / self.fine_error if self.fine_error > 0 else np.inf


def richardson_reference(grid: GridSpec, config: SolverConfig, boundary) -> RichardsonResult:
    """Neumann trace from a 4x refined run, compared with the 1x and 2x runs."""
    traces = []
    for k in (1, 2, 4):
        g = grid.refined(k) if k > 1 else grid
        cfg = replace(config, snapshot_stride=config.snapshot_stride * k)
        traces.append(run(g, cfg, boundary).traces)
    coarse, fine, ref = traces
    if not (np.allclose(coarse.t, ref.t) and np.allclose(fine.t, ref.t)):
        raise ValueError("snapshot times of the refinement levels do not align")
    return RichardsonResult(ref, float(np.max(np.abs(coarse.P - ref.P))),
                            float(np.max(np.abs(fine.P - ref.P))))
