"""Norms, boundary-flux identities and their residuals.

All spatial integrals use the composite trapezoid rule on the nodes and
q_x is taken by centered differences (second-order one-sided at the ends),
so the value of q_x at x = 0 coincides with the recorded Neumann trace.

The truncated problem differs from the half-line one by the sponge term
-sigma q and, in manufactured runs, by a source f. Each identity therefore
carries a correction evaluated on the same snapshot; with it the residuals
are pure discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from dtnlab.boundary import TraceSeries, time_derivative, write_table
from dtnlab.grid import ComplexField, GridSpec


NORM_COLUMNS = ("l2sq", "gradsq", "l4_4", "energy", "moment2", "virial", "supabs")


def spatial_derivative(q, dx):
    return np.gradient(q, dx, edge_order=2)


def norms(field, grid: GridSpec) -> dict:
    q = field.values if isinstance(field, ComplexField) else np.asarray(field, dtype=complex)
    w, x = grid.weights(), grid.x
    qx = spatial_derivative(q, grid.dx)
    a2 = np.abs(q) ** 2
    l2sq = float(np.sum(w * a2))
    gradsq = float(np.sum(w * np.abs(qx) ** 2))
    l4_4 = float(np.sum(w * a2**2))
    return {
        "l2sq": l2sq,
        "gradsq": gradsq,
        "l4_4": l4_4,
        "energy": gradsq + l4_4,
        "moment2": float(np.sum(w * x**2 * a2)),
        "virial": float(np.sum(w * x * np.imag(np.conj(q) * qx))),
        "supabs": float(np.max(np.abs(q))) if q.size else 0.0,
    }


@dataclass
class NormSeries:
    t: np.ndarray
    l2sq: np.ndarray
    gradsq: np.ndarray
    l4_4: np.ndarray
    energy: np.ndarray
    moment2: np.ndarray
    virial: np.ndarray
    supabs: np.ndarray

    @classmethod
    def from_rows(cls, times, rows):
        cols = {k: np.array([r[k] for r in rows], dtype=float) for k in NORM_COLUMNS}
        return cls(np.asarray(times, dtype=float), **cols)

    def write_csv(self, path, leakage=None, header_lines=()):
        leak = np.zeros_like(self.t) if leakage is None else np.asarray(leakage)
        data = np.column_stack([self.t] + [getattr(self, k) for k in NORM_COLUMNS] + [leak])
        write_table(path, ["t", *NORM_COLUMNS, "leakage"], data, header_lines)


@dataclass
class SnapshotTerms:
    """Per-snapshot quantities that the norms alone do not determine."""

    t: np.ndarray
    inner_qqx: np.ndarray       # (q, q_x) = int q conj(q_x)
    mass_corr: np.ndarray
    energy_corr: np.ndarray
    trace_corr: np.ndarray
    virial_corr: np.ndarray
    pseudoconf: np.ndarray

    @classmethod
    def stack(cls, times, rows):
        names = [f.name for f in fields(cls) if f.name != "t"]
        return cls(np.asarray(times, dtype=float),
                   **{k: np.array([r[k] for r in rows]) for k in names})


def snapshot_terms(field: ComplexField, grid: GridSpec, config, boundary, sigma=None) -> dict:
    """Inner product (q, q_x), sponge/source corrections and the pseudo-conformal check."""
    from dtnlab.solver import semidiscrete_rhs

    if sigma is None:
        sigma = grid.sigma()
    q, t = field.values, field.time_tag
    w, x = grid.weights(), grid.x
    qx = spatial_derivative(q, grid.dx)
    qt = semidiscrete_rhs(q, t, grid, config, sigma)
    qt[0] = boundary.Qt(t)
    f = config.source(x, t)
    if f is None:
        f = np.zeros_like(q)

    mass_corr = -2 * np.sum(w * sigma * np.abs(q) ** 2) + 2 * np.imag(np.sum(w * f * np.conj(q)))
    energy_corr = (2 * np.imag(np.sum(w * sigma * qt * np.conj(q)))
                   - 2 * np.real(np.sum(w * qt * np.conj(f))))
    trace_corr = (-2 * np.imag(np.sum(w * sigma * q * np.conj(qx)))
                  - 2 * np.real(np.sum(w * f * np.conj(qx))))
    virial_corr = (-2 * np.sum(w * sigma * x**2 * np.abs(q) ** 2)
                   + 2 * np.imag(np.sum(w * x**2 * f * np.conj(q))))
    return {
        "inner_qqx": complex(np.sum(w * q * np.conj(qx))),
        "mass_corr": float(mass_corr),
        "energy_corr": float(energy_corr),
        "trace_corr": float(trace_corr),
        "virial_corr": float(virial_corr),
        "pseudoconf": pseudoconformal_check(field, t, grid),
    }


def pseudoconformal_check(field, t, grid: GridSpec) -> float:
    """Relative mismatch of 4 t y = int x^2|q|^2 + 4t^2|q_x|^2 - |x q + 2 i t q_x|^2."""
    q = field.values if isinstance(field, ComplexField) else np.asarray(field, dtype=complex)
    w, x = grid.weights(), grid.x
    qx = spatial_derivative(q, grid.dx)
    y = np.sum(w * x * np.imag(np.conj(q) * qx))
    a = np.sum(w * x**2 * np.abs(q) ** 2)
    b = np.sum(w * 4 * t**2 * np.abs(qx) ** 2)
    c = np.sum(w * np.abs(x * q + 2j * t * qx) ** 2)
    scale = a + b
    if scale == 0:
        return 0.0
    return float(abs(4 * t * y - (a + b - c)) / scale)


def _check_aligned(norm_series, trace_series):
    if len(norm_series.t) != len(trace_series.t) or not np.allclose(norm_series.t, trace_series.t):
        raise ValueError("mismatched grids")


def mass_identity_residual(norm_series: NormSeries, trace_series: TraceSeries, terms=None):
    """d/dt |q|^2 - 2 Im(P conj Q) - corrections."""
    _check_aligned(norm_series, trace_series)
    t = norm_series.t
    r = time_derivative(norm_series.l2sq, t) - 2 * np.imag(trace_series.P * np.conj(trace_series.Q))
    if terms is not None:
        r = r - terms.mass_corr
    return r


def energy_identity_residual(norm_series: NormSeries, trace_series: TraceSeries, lam, terms=None):
    """d/dt (|q_x|^2 + lam |q|_4^4) + 2 Re(P conj Q_t) - corrections."""
    _check_aligned(norm_series, trace_series)
    t = norm_series.t
    lhs = time_derivative(norm_series.gradsq + lam * norm_series.l4_4, t)
    r = lhs + 2 * np.real(trace_series.P * np.conj(trace_series.Qt))
    if terms is not None:
        r = r - terms.energy_corr
    return r


def trace_identity_residual(terms: SnapshotTerms, trace_series: TraceSeries, lam):
    """|P|^2 - Re[i d/dt (q, q_x) + i Q conj(Q_t) + lam |Q|^4] - correction."""
    if len(terms.t) != len(trace_series.t):
        raise ValueError("mismatched grids")
    tr = trace_series
    rhs = (1j * time_derivative(terms.inner_qqx, terms.t)
           + 1j * tr.Q * np.conj(tr.Qt) + lam * np.abs(tr.Q) ** 4)
    return np.abs(tr.P) ** 2 - np.real(rhs) - terms.trace_corr


def trace_identity_integrated(terms: SnapshotTerms, trace_series: TraceSeries, lam):
    """(int_0^T |P|^2, Re[i (q,q_x)]_0^T + int_0^T Re[i Q conj Q_t + lam |Q|^4 + corr])."""
    tr, t = trace_series, terms.t
    lhs = np.trapezoid(np.abs(tr.P) ** 2, t)
    integrand = np.real(1j * tr.Q * np.conj(tr.Qt)) + lam * np.abs(tr.Q) ** 4 + terms.trace_corr
    jump = np.real(1j * (terms.inner_qqx[-1] - terms.inner_qqx[0]))
    return float(lhs), float(jump + np.trapezoid(integrand, t))


def virial_residual(norm_series: NormSeries, terms=None):
    """d/dt int x^2 |q|^2 - 4 y - correction."""
    t = norm_series.t
    r = time_derivative(norm_series.moment2, t) - 4 * norm_series.virial
    if terms is not None:
        if len(terms.t) != len(t):
            raise ValueError("mismatched grids")
        r = r - terms.virial_corr
    return r


@dataclass
class IdentityResiduals:
    t: np.ndarray
    mass_res: np.ndarray
    energy_res: np.ndarray
    trace_res: np.ndarray
    virial_res: np.ndarray
    pseudoconf_check: np.ndarray

    @classmethod
    def from_run(cls, result) -> "IdentityResiduals":
        lam = result.config.lam
        ns, tr, terms = result.norms, result.traces, result.terms
        return cls(ns.t,
                   mass_identity_residual(ns, tr, terms),
                   energy_identity_residual(ns, tr, lam, terms),
                   trace_identity_residual(terms, tr, lam),
                   virial_residual(ns, terms),
                   terms.pseudoconf)

    def max_abs(self) -> dict:
        return {k: float(np.max(np.abs(getattr(self, k))))
                for k in ("mass_res", "energy_res", "trace_res", "virial_res")}

    def write_csv(self, path, header_lines=()):
        data = np.column_stack([self.t, self.mass_res, self.energy_res, self.trace_res,
                                self.virial_res, self.pseudoconf_check])
        write_table(path, ["t", "mass_res", "energy_res", "trace_res", "virial_res", "pseudoconf"],
                    data, header_lines)


def sobolev_ratios(ns: NormSeries):
    """l4_4 / (l2sq^(3/2) gradsq^(1/2)) and supabs^2 / (l2sq gradsq)^(1/2), 0 where undefined."""
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = ns.l2sq**1.5 * np.sqrt(ns.gradsq)
        d2 = np.sqrt(ns.l2sq * ns.gradsq)
        r1 = np.where(d1 > 0, ns.l4_4 / d1, 0.0)
        r2 = np.where(d2 > 0, ns.supabs**2 / d2, 0.0)
    return r1, r2


def weighted_time_integrals(trace_series: TraceSeries, p: float):
    """Cumulative int t^p |P|^2, int |P|, int t |P| (trapezoid)."""
    if not p > 1:
        raise ValueError("weight exponent p must exceed 1")
    from scipy.integrate import cumulative_trapezoid

    t = trace_series.t
    aP = np.abs(trace_series.P)
    return tuple(cumulative_trapezoid(y, t, initial=0.0)
                 for y in (t**p * aP**2, aP, t * aP))
