"""Acceptance criteria 1-11, each reported on one line in the terminal summary."""

import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from conftest import ACCEPTANCE_LINES, DEFAULT_FAMILY, timed_run
from dtnlab.boundary import ManufacturedSolution, TraceSeries
from dtnlab.diagnostics import IdentityResiduals, sobolev_ratios
from dtnlab.grid import make_grid
from dtnlab.oracle import cross_integrator_study, ladder, manufactured_study
from dtnlab.solver import SolverConfig
from dtnlab.verify import (build_report, check_appendix, check_T21, check_T32, check_T38,
                           check_T39, run_suite)

TOL_SOBOLEV = 0.05


def record(n, ok, detail, part=""):
    key = f"{n:02d}{part}"
    ACCEPTANCE_LINES[key] = f"criterion {n:2d}{part or ' '}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(ACCEPTANCE_LINES[key])
    assert ok, detail


def test_criterion_01_manufactured_order():
    t0 = time.perf_counter()
    study = manufactured_study(ManufacturedSolution(), 1, ladder(make_grid(20, 200, 0.01, 2), 3))
    wall = time.perf_counter() - t0
    order = float(study.observed_orders[-1])
    record(1, 1.8 <= order <= 2.2 and wall < 60,
           f"manufactured order {order:.4f} in [1.8, 2.2], {wall:.1f} s")


def test_criterion_02_cross_integrator():
    disc = cross_integrator_study(make_grid(40, 800, 1e-4, 1.0), SolverConfig(lam=1),
                                  DEFAULT_FAMILY, 1.0)
    record(2, disc <= 1e-6, f"CN vs RK4 max nodal difference {disc:.3e} <= 1e-6")


def test_criterion_03_pseudoconformal():
    res, _ = timed_run(make_grid(40, 800, 0.005, 50), SolverConfig(lam=1, snapshot_stride=100),
                       DEFAULT_FAMILY)
    worst = float(np.max(res.terms.pseudoconf))
    record(3, len(res.t) >= 100 and worst <= 1e-10,
           f"{len(res.t)} snapshots, max relative mismatch {worst:.2e} <= 1e-10")


def test_criterion_04_residual_orders(default_pair):
    coarse, fine = (IdentityResiduals.from_run(r).max_abs() for r in default_pair)
    orders = {k: float(np.log2(coarse[k] / fine[k])) for k in coarse}
    text = ", ".join(f"{k[:-4]} {v:.2f}" for k, v in orders.items())
    record(4, min(orders.values()) >= 1, f"observed orders under halving: {text} (>= 1)")


def _acceptance_norms(default_pair, default_long, decay_run, focusing_run):
    runs = [*default_pair, default_long[0], decay_run, focusing_run]
    return [sobolev_ratios(r.norms) for r in runs]


def test_criterion_05a_quartic_chain(default_pair, default_long, decay_run, focusing_run):
    worst = max(float(np.max(r1)) for r1, _ in
                _acceptance_norms(default_pair, default_long, decay_run, focusing_run))
    record(5, worst <= 1 + TOL_SOBOLEV,
           f"|q|_4^4 / (|q|^3 |q_x|) max {worst:.4f} <= {1 + TOL_SOBOLEV}", "a")


def test_criterion_05b_trace_bound(default_pair, default_long, decay_run, focusing_run):
    worst = max(float(np.max(r2)) for _, r2 in
                _acceptance_norms(default_pair, default_long, decay_run, focusing_run))
    record(5, worst <= 1 + TOL_SOBOLEV,
           f"sup|q|^2 / (|q| |q_x|) max {worst:.4f} <= {1 + TOL_SOBOLEV}", "b")


def test_criterion_06_T21_plateau(default_long):
    res, wall = default_long
    v = check_T21(res.traces, 1)
    var = v.measured["rho_last_half_variation"]
    record(6, var < 0.25 and wall < 120,
           f"rho variation on [T/2, T] {var:.4f} < 0.25, run {wall:.1f} s < 120 s")


def test_criterion_07_quartic_decay(default_long):
    v = check_T32(default_long[0].norms, (10.0, 100.0))
    s, g = v.measured["slope"], v.measured["t_l4_4_growth"]
    record(7, v.passed, f"|q|_4^4 slope {s:.3f} <= -0.85, t|q|_4^4 growth {g:.3f} <= 1.25")


def test_criterion_08_neumann_decay(decay_run):
    from conftest import DECAY_FAMILY
    v38 = check_T38(decay_run.traces, DECAY_FAMILY)
    v39 = check_T39(decay_run.traces, DECAY_FAMILY)
    s, d = v38.measured["slope"], v38.measured["delta"]
    inc = v39.measured["l1_dyadic_increment"]
    record(8, v38.passed and inc < 0.05,
           f"|P| slope {s:.3f} <= {-d + 0.25:.2f} (delta {d}), int|P| dyadic increment {inc:.4f} < 0.05")


def test_criterion_09_appendix(decay_run):
    v = check_appendix(decay_run.traces, 1.1)
    t = np.linspace(0, 200, 20001)
    P = (1 + t) ** -1.0 + 0j
    control = check_appendix(TraceSeries(t, P, P, P, P, P), 1.1)
    incs = ", ".join(f"{k.split('_dyadic')[0]} {x:.4f}" for k, x in v.measured.items()
                     if k.endswith("dyadic_increment"))
    record(9, v.passed and not control.passed,
           f"increments {incs} < 0.05; (1+t)^-1 control rejected: {not control.passed}")


def test_criterion_10_focusing(focusing_family, focusing_run):
    from dtnlab.boundary import tail_integrals
    from dtnlab.verify import VerifyOptions

    mass = tail_integrals(focusing_family, 0.0)[0]
    verdicts = run_suite(focusing_run, focusing_family, VerifyOptions())
    v44 = next(v for v in verdicts if v.theorem_id == "T4.4")
    flagged = all("smallness assumed" in v.notes for v in verdicts)
    report = build_report(verdicts, {"lambda": -1})
    s = v44.measured["slope"]
    record(10, mass <= 0.05 and v44.passed and flagged and len(report.verdicts) == 7,
           f"int|Q|^2 = {mass:.3f}, |P| slope {s:.3f} <= -2.25, smallness flagged on all 7 verdicts")


def test_criterion_11_unit_suite():
    root = Path(__file__).resolve().parent
    files = sorted(str(p) for p in root.glob("test_*.py") if p.name != "test_acceptance.py")
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *files],
                          capture_output=True, text=True, cwd=root.parent)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    record(11, proc.returncode == 0, f"unit suite: {tail}")
