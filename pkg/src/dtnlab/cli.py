"""Command line entry point: ``dtnlab {run,verify,sweep,converge} --config PATH``.

Exit codes: 0 all selected verdicts pass, 1 some verdict failed,
2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import itertools
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from dtnlab import __version__
from dtnlab.boundary import DecayFamily, ManufacturedSolution
from dtnlab.config import ConfigError, RunConfig, load_config
from dtnlab.diagnostics import IdentityResiduals
from dtnlab.oracle import cross_integrator_study, ladder, manufactured_study, richardson_reference
from dtnlab.solver import SolverError, run
from dtnlab.verify import build_report, run_suite

log = logging.getLogger("dtnlab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def _header():
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return [f"generated: {stamp}", f"dtnlab {__version__}"]


def write_run_outputs(result, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    hdr = _header()
    result.traces.write_csv(out / "traces.csv", hdr)
    result.norms.write_csv(out / "norms.csv", result.mass_leakage, hdr)
    IdentityResiduals.from_run(result).write_csv(out / "residuals.csv", hdr)


def _mark_failed(out: Path, message: str):
    out.mkdir(parents=True, exist_ok=True)
    (out / "FAILED").write_text(message + "\n")


def _simulate(cfg: RunConfig, out: Path):
    try:
        result = run(cfg.grid, cfg.solver, cfg.data)
    except SolverError as exc:
        partial = getattr(exc, "partial", None)
        if partial is not None and len(partial.t) > 0:
            write_run_outputs(partial, out)
        _mark_failed(out, f"numerical failure: {exc}")
        log.error("numerical failure: %s", exc)
        return None
    write_run_outputs(result, out)
    return result


def _metadata(cfg: RunConfig):
    g, s = cfg.grid, cfg.solver
    meta = {"grid.L": g.L, "grid.nx": g.nx, "grid.dx": g.dx, "grid.dt": g.dt, "grid.T": g.T,
            "grid.sponge_fraction": g.sponge_fraction, "grid.sponge_strength": g.sponge_strength,
            "solver.lambda": s.lam, "solver.fixed_point_tol": s.fixed_point_tol,
            "solver.snapshot_stride": s.snapshot_stride}
    d = cfg.data
    if isinstance(d, DecayFamily):
        meta.update({"data.kind": "decay", "data.A": d.A, "data.m": d.m, "data.alpha": d.alpha,
                     "data.beta": d.beta, "data.gamma": d.gamma, "data.omega": d.omega,
                     "data.s": d.s})
    else:
        meta.update({"data.kind": "manufactured", "data.A": d.A})
    if cfg.inject != "none":
        meta["inject"] = cfg.inject
    return meta


def _inject(result, mode):
    if mode == "divergent_pt":
        t = result.traces.t
        result.traces.Pt = (1 + t) ** -0.4 + 0j
    return result


def verify_run(cfg: RunConfig, out: Path):
    """Simulate, write CSVs and the report; returns (exit code, report or None)."""
    result = _simulate(cfg, out)
    if result is None:
        return EXIT_NUMERIC, None
    _inject(result, cfg.inject)
    verdicts = run_suite(result, cfg.family, cfg.verify)
    report = build_report(verdicts, _metadata(cfg))
    (out / "report.txt").write_text(report.to_text())
    (out / "report.csv").write_text(report.to_csv())
    return (EXIT_OK if report.all_passed else EXIT_FAIL), report


def run_command(cfg: RunConfig, out: Path) -> int:
    return EXIT_OK if _simulate(cfg, out) is not None else EXIT_NUMERIC


def verify_command(cfg: RunConfig, out: Path) -> int:
    code, report = verify_run(cfg, out)
    if report is not None:
        for v in report.verdicts:
            log.info("%-5s %s", v.theorem_id, v.status)
    return code


def _sweep_one(args):
    run_id, cfg, out = args
    code, report = verify_run(cfg, out)
    d = cfg.family
    row = {"run_id": run_id, "alpha": d.alpha, "omega": d.omega, "lambda": cfg.solver.lam,
           "A": d.A, "beta": d.beta, "exit_code": code}
    if report is not None:
        v38 = [v for v in report.verdicts if v.theorem_id in ("T3.8", "T4.4")]
        if v38 and "slope" in v38[0].measured:
            row["fitted_slope"] = v38[0].measured["slope"]
            row["predicted_delta"] = v38[0].measured["delta"]
        row["n_fail"] = sum(v.status == "fail" for v in report.verdicts)
    return row


SWEEP_COLUMNS = ["run_id", "alpha", "omega", "lambda", "A", "beta", "fitted_slope",
                 "predicted_delta", "n_fail", "exit_code"]


def sweep_command(cfg: RunConfig, out: Path, workers: int = 1) -> int:
    if not cfg.sweep:
        raise ConfigError("missing section [sweep]")
    base = cfg.family
    if base is None:
        raise ConfigError("[sweep] requires decay data")
    axes = {k: (cfg.sweep[k] if cfg.sweep.get(k) else (default,))
            for k, default in (("alpha", base.alpha), ("omega", base.omega),
                               ("lambda", cfg.solver.lam), ("A", base.A))}
    jobs = []
    for i, (a, w, lam, amp) in enumerate(itertools.product(*axes.values())):
        if lam not in (-1, 0, 1):
            raise ConfigError(f"[sweep] lambda values must be -1, 0 or 1, got {lam}")
        fam = DecayFamily(amp, base.m, a, w, base.s)
        sub = replace(cfg, data=fam, solver=replace(cfg.solver, lam=int(lam)))
        run_id = f"run_{i:03d}"
        jobs.append((run_id, sub, out / run_id))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    rows.sort(key=lambda r: r["run_id"])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.csv", "w", newline="") as fh:
        for line in _header():
            fh.write(f"# {line}\n")
        w = csv.DictWriter(fh, SWEEP_COLUMNS, restval="")
        w.writeheader()
        w.writerows(rows)
    codes = [r["exit_code"] for r in rows]
    if EXIT_NUMERIC in codes:
        return EXIT_NUMERIC
    return EXIT_FAIL if EXIT_FAIL in codes else EXIT_OK


def converge_command(cfg: RunConfig, out: Path) -> int:
    c = cfg.converge
    lam = c["lambda"] if c["lambda"] is not None else cfg.solver.lam
    ms = cfg.data if isinstance(cfg.data, ManufacturedSolution) else ManufacturedSolution(c["A"])
    out.mkdir(parents=True, exist_ok=True)
    lines = []
    try:
        study = manufactured_study(ms, lam, ladder(cfg.grid, c["levels"]))
        study.write_csv(out / "convergence.csv", _header())
        order = study.observed_orders[-1]
        ok = 1.8 <= order <= 2.2
        lines += [f"manufactured.order_finest: {float(order)!r}", f"manufactured.pass: {ok}"]
        if cfg.family is not None:
            g = replace(cfg.grid, dt=c["cross_dt"], T=max(c["cross_T"], c["cross_dt"]))
            disc = cross_integrator_study(g, replace(cfg.solver, lam=lam), cfg.family, c["cross_T"])
            lines += [f"cross_integrator.discrepancy: {disc!r}",
                      f"cross_integrator.pass: {disc <= 1e-6}"]
            ok = ok and disc <= 1e-6
            if c["richardson"]:
                rr = richardson_reference(cfg.grid, replace(cfg.solver, lam=lam), cfg.family)
                lines += [f"richardson.coarse_error: {rr.coarse_error!r}",
                          f"richardson.fine_error: {rr.fine_error!r}",
                          f"richardson.ratio: {rr.ratio!r}"]
    except SolverError as exc:
        _mark_failed(out, f"numerical failure: {exc}")
        return EXIT_NUMERIC
    (out / "converge.txt").write_text("\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="dtnlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "verify", "sweep", "converge"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out", type=Path, default=None,
                        help="output directory (overrides [output] dir)")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--seed-free", action="store_true",
                        help="reserved; all computations are deterministic")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        out = args.out if args.out is not None else Path(cfg.out_dir)
        if args.command == "run":
            return run_command(cfg, out)
        if args.command == "verify":
            return verify_command(cfg, out)
        if args.command == "sweep":
            return sweep_command(cfg, out, max(1, args.workers))
        return converge_command(cfg, out)
    except (ConfigError, OSError) as exc:
        print(f"dtnlab: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
