"""Theorem-level verdicts built from run diagnostics.

"Bounded by a constant independent of t" is checked as a plateau of a ratio
series, and "finite improper integral" as a dyadic Cauchy test on a
cumulative integral. Decay rates come from log-log least squares.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from dtnlab.boundary import DecayFamily, TraceSeries, tail_integrals
from dtnlab.diagnostics import NormSeries, weighted_time_integrals

THEOREM_IDS = ("T2.1", "T3.2", "T3.4", "P3.5", "T3.6", "T3.8", "T3.9",
               "P4.1", "P4.2", "T4.3", "T4.4", "T4.5", "AppA")

PLATEAU_VARIATION = 0.25
CAUCHY_FRACTION = 0.05
SLOPE_TOL_T32 = 0.15
SLOPE_TOL_T38 = 0.25
SMALLNESS_DEFAULT = 0.05
FIT_FLOOR = 1e-30


class HypothesisWarning(UserWarning):
    pass


@dataclass
class PowerLawFit:
    t_min: float
    t_max: float
    slope: float
    intercept: float
    rms_residual: float
    n_points: int


@dataclass
class TheoremVerdict:
    theorem_id: str
    measured: dict
    threshold: dict
    passed: bool
    notes: list = field(default_factory=list)
    status: str = ""

    def __post_init__(self):
        if self.theorem_id not in THEOREM_IDS:
            raise ValueError(f"unknown theorem id {self.theorem_id!r}")
        if not self.status:
            self.status = "pass" if self.passed else "fail"


@dataclass
class EstimateMonitors:
    t: np.ndarray
    G: np.ndarray
    G1: np.ndarray
    G_tilde: np.ndarray
    F: np.ndarray


# --- fitting and formulas -------------------------------------------------

def fit_decay(t, values, window) -> PowerLawFit:
    """OLS of log(value) on log(t) over ``window``; slope is minus the decay rate."""
    t_min, t_max = map(float, window)
    if t_min < 1 or not t_max > 2 * t_min:
        raise ValueError("degenerate window")
    t = np.asarray(t, dtype=float)
    v = np.abs(np.asarray(values))
    mask = (t >= t_min) & (t <= t_max)
    n = int(mask.sum())
    if n < 10:
        raise ValueError("insufficient points")
    v = v[mask]
    if np.any(v <= 0):
        warnings.warn("nonpositive values floored before the log-log fit", RuntimeWarning)
        v = np.maximum(v, FIT_FLOOR)
    lt, lv = np.log(t[mask]), np.log(v)
    slope, intercept = np.polyfit(lt, lv, 1)
    rms = float(np.sqrt(np.mean((lv - (slope * lt + intercept)) ** 2)))
    return PowerLawFit(t_min, t_max, float(slope), float(intercept), rms, n)


def delta_hypotheses(alpha, beta, case="defocusing") -> bool:
    if case == "defocusing":
        return alpha > 2.5 and beta > 2.5
    if case == "focusing":
        return alpha > 2.5 and beta > 0.5
    raise ValueError(f"unknown case {case!r}")


def predicted_delta(alpha, beta, case="defocusing") -> float:
    """Neumann decay exponent predicted from the Dirichlet exponents."""
    if not delta_hypotheses(alpha, beta, case):
        warnings.warn(f"hypotheses violated for {case} case (alpha={alpha}, beta={beta})",
                      HypothesisWarning)
    first = (alpha + beta - 1) / 2
    if case == "defocusing":
        return min(first, (4 * alpha - 1) / 4)
    return min(first, 2 * alpha - 1)


def _case(lam) -> str:
    return "focusing" if lam < 0 else "defocusing"


# --- generic detectors ----------------------------------------------------

def last_half_variation(t, series):
    """(max - min) / max of ``series`` over t in [T/2, T]."""
    t, s = np.asarray(t), np.asarray(series)
    tail = s[(t >= t[-1] / 2) & np.isfinite(s)]
    top = np.max(tail) if tail.size else 0.0
    return float((top - np.min(tail)) / top) if top > 0 else 0.0


def plateau(t, ratio, t_start=1.0):
    """Plateau measurements of a ratio series restricted to t >= t_start."""
    t, ratio = np.asarray(t, dtype=float), np.asarray(ratio, dtype=float)
    keep = t >= t_start
    t, ratio = t[keep], ratio[keep]
    if ratio.size == 0:
        return {"sup": 0.0, "t_sup": 0.0, "last_half_variation": 0.0}, True
    k = int(np.argmax(ratio))
    meas = {"sup": float(ratio[k]), "t_sup": float(t[k]),
            "last_half_variation": last_half_variation(t, ratio)}
    ok = meas["t_sup"] < t[-1] / 2 or meas["last_half_variation"] < PLATEAU_VARIATION
    return meas, ok


def dyadic_increment(t, cumulative):
    """(C(T) - C(T/2)) / C(T) for a nondecreasing cumulative integral."""
    t, c = np.asarray(t, dtype=float), np.asarray(cumulative, dtype=float)
    total = c[-1]
    if total <= 0:
        return 0.0
    half = np.interp(t[-1] / 2, t, c)
    return float((total - half) / total)


def _vacuous(theorem_id, note="zero data: vacuous pass"):
    return TheoremVerdict(theorem_id, {}, {}, True, [note], "pass")


def _is_zero(*arrays):
    return all(not np.any(np.asarray(a)) for a in arrays)


# --- Dirichlet tails along a time grid -------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _interval_integrals(fn, t):
    a, b = t[:-1], t[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    return np.sum(fn(nodes) * _GL_W[None, :], axis=1) * half


def dirichlet_tails(family: Optional[DecayFamily], trace: TraceSeries):
    """int_t^inf of |Q|^2, |Q_t|^2, |Q|^4 at every trace time.

    Exact family tails when a DecayFamily is given; otherwise the recorded
    trace is integrated only up to the horizon.
    """
    t = np.asarray(trace.t, dtype=float)
    if family is None:
        out = []
        for y in (np.abs(trace.Q) ** 2, np.abs(trace.Qt) ** 2, np.abs(trace.Q) ** 4):
            c = cumulative_trapezoid(y, t, initial=0.0)
            out.append(c[-1] - c)
        return tuple(out)
    if family.A == 0:
        z = np.zeros_like(t)
        return z, z.copy(), z.copy()
    end = tail_integrals(family, float(t[-1]))
    fns = (lambda r: np.abs(family.Q(r)) ** 2,
           lambda r: np.abs(family.Qt(r)) ** 2,
           lambda r: np.abs(family.Q(r)) ** 4)
    out = []
    for fn, e in zip(fns, end):
        pieces = _interval_integrals(fn, t)
        tail = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]]) + e
        out.append(tail)
    return tuple(out)


def estimate_monitors(trace: TraceSeries, family=None) -> EstimateMonitors:
    t = trace.t
    tq2, tqt2, _ = dirichlet_tails(family, trace)
    G = tq2**0.25 * tqt2**0.25
    G1 = tq2**0.25
    a = t * np.real(trace.P * np.conj(trace.Q))
    b = t**2 * np.real(trace.P * np.conj(trace.Qt))
    F = -cumulative_trapezoid(a, t, initial=0.0) - 2 * cumulative_trapezoid(b, t, initial=0.0)
    return EstimateMonitors(t, G, G1, G + tq2, F)


# --- theorem checks ---------------------------------------------------------

def _cumulative_norms(trace: TraceSeries):
    t = trace.t
    c = lambda y: cumulative_trapezoid(y, t, initial=0.0)
    return (np.sqrt(c(np.abs(trace.P) ** 2)), np.sqrt(c(np.abs(trace.Q) ** 2)),
            np.sqrt(c(np.abs(trace.Qt) ** 2)), np.sqrt(c(np.abs(trace.Q) ** 4)))


def check_T21(trace: TraceSeries, lam, smallness=SMALLNESS_DEFAULT, family=None) -> TheoremVerdict:
    """Neumann L2(0,t) norm against the Dirichlet H1-type bound."""
    if _is_zero(trace.Q, trace.Qt):
        return _vacuous("T2.1", "degenerate denominator (zero data): vacuous pass")
    nP, nQ, nQt, nQ4 = _cumulative_norms(trace)
    denom = np.sqrt(nQ * nQt) + (nQ4 if lam > 0 else 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(denom > 0, nP / denom, 0.0)
    meas, ok = plateau(trace.t, rho)
    meas = {f"rho_{k}": v for k, v in meas.items()}
    notes = []
    if lam < 0:
        mass = tail_integrals(family, 0.0)[0] if family is not None else float(nQ[-1] ** 2)
        meas["dirichlet_l2sq"] = mass
        notes.append("smallness assumed")
        if mass > smallness:
            notes.append(f"int |Q|^2 = {mass:.3g} exceeds smallness threshold {smallness}")
    return TheoremVerdict("T2.1", meas, {"plateau_variation": PLATEAU_VARIATION}, ok, notes)


def check_T32(ns: NormSeries, window=(10.0, 100.0), hypotheses=None,
              monitors: Optional[EstimateMonitors] = None) -> TheoremVerdict:
    """Quartic norm decays like 1/t and t |q|_4^4 stays bounded."""
    if _is_zero(ns.l4_4):
        return _vacuous("T3.2")
    a, b = window
    if ns.t[-1] < b or ns.t[0] > a:
        raise ValueError("window outside data")
    fit = fit_decay(ns.t, ns.l4_4, window)
    tl = ns.t * ns.l4_4
    w = b - a
    last = tl[(ns.t >= a + 0.75 * w) & (ns.t <= b)]
    mid = tl[(ns.t >= a + 0.5 * w) & (ns.t < a + 0.75 * w)]
    growth = float(np.max(last) / np.max(mid)) if np.max(mid) > 0 else 0.0
    meas = {"slope": fit.slope, "rms_residual": fit.rms_residual,
            "sup_t_l4_4": float(np.max(tl[(ns.t >= a) & (ns.t <= b)])), "t_l4_4_growth": growth}
    thr = {"slope_max": -1 + SLOPE_TOL_T32, "growth_max": 1.25}
    ok = fit.slope <= thr["slope_max"] and growth <= thr["growth_max"]
    notes = _hyp_notes(hypotheses)
    if monitors is not None:
        fv = check_F_bounded(monitors)
        meas.update({f"F_{k}": v for k, v in fv.measured.items()})
        thr["F_growth_max"] = 1.1
        ok = ok and fv.passed
    return TheoremVerdict("T3.2", meas, thr, ok, notes)


def _hyp_notes(held):
    if held is None:
        return []
    return ["exponent hypotheses held" if held else "outside exponent hypotheses"]


def check_T34(ns: NormSeries, family: DecayFamily, lam, trace=None) -> TheoremVerdict:
    """Solution L2 and gradient norms against Dirichlet tails."""
    tid = "P4.1" if lam < 0 else "T3.4"
    if family is None or family.A == 0 or _is_zero(ns.l2sq):
        return _vacuous(tid)
    if trace is None:
        trace = TraceSeries.from_traces(ns.t, family, np.zeros_like(ns.t, dtype=complex))
    tq2, tqt2, _ = dirichlet_tails(family, trace)
    denom2 = np.sqrt(tqt2) + (tq2**1.5 if lam < 0 else 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(tq2 > 0, ns.l2sq / np.sqrt(tq2), 0.0)
        r2 = np.where(denom2 > 0, ns.gradsq / denom2, 0.0)
    m1, ok1 = plateau(ns.t, r1)
    m2, ok2 = plateau(ns.t, r2)
    meas = {**{f"mass_ratio_{k}": v for k, v in m1.items()},
            **{f"grad_ratio_{k}": v for k, v in m2.items()}}
    return TheoremVerdict(tid, meas, {"plateau_variation": PLATEAU_VARIATION}, ok1 and ok2,
                          ["smallness assumed"] if lam < 0 else [])


def neumann_tail(trace: TraceSeries):
    """int_t^inf |P|^2 from the recorded trace plus a power-law extrapolation past T."""
    t = trace.t
    p2 = np.abs(trace.P) ** 2
    c = cumulative_trapezoid(p2, t, initial=0.0)
    head = c[-1] - c
    T = t[-1]
    fit = fit_decay(t, p2, (max(1.0, T / 4), T))
    if fit.slope < -1:
        extra = -np.exp(fit.intercept) * T ** (fit.slope + 1) / (fit.slope + 1)
    else:
        extra = np.inf
    return head + extra, fit


def check_P35(trace: TraceSeries, family: DecayFamily, lam=1) -> TheoremVerdict:
    """Neumann L2 tail against the three-term Dirichlet bound."""
    tid = "P4.2" if lam < 0 else "P3.5"
    if _is_zero(trace.P) or family is None or family.A == 0:
        return _vacuous(tid)
    ntail, fit = neumann_tail(trace)
    tq2, tqt2, tq4 = dirichlet_tails(family, trace)
    if lam < 0:
        bound = (tq2 * tqt2) ** 0.25 + tq2 + np.sqrt(tq2 * tqt2)
    else:
        bound = (tq2 * tqt2) ** 0.25 + np.sqrt(tq2 * tqt2) + tq4
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, ntail / bound, 0.0)
    meas, ok = plateau(trace.t, ratio)
    meas = {f"ratio_{k}": v for k, v in meas.items()}
    meas.update(extrapolation_slope=fit.slope, extrapolation_rms=fit.rms_residual)
    notes = ["smallness assumed"] if lam < 0 else []
    if fit.rms_residual > 0.2 or not np.all(np.isfinite(ntail)):
        notes.append("tail extrapolation unreliable")
        return TheoremVerdict(tid, meas, {"plateau_variation": PLATEAU_VARIATION}, False,
                              notes, "inconclusive")
    return TheoremVerdict(tid, meas, {"plateau_variation": PLATEAU_VARIATION}, ok, notes)


def check_T36(trace: TraceSeries, lam=1, hypotheses=None) -> TheoremVerdict:
    """Square integrability of the mixed derivative q_xt(0, t)."""
    tid = "T4.3" if lam < 0 else "T3.6"
    cum = cumulative_trapezoid(np.abs(trace.Pt) ** 2, trace.t, initial=0.0)
    inc = dyadic_increment(trace.t, cum)
    meas = {"integral": float(cum[-1]), "dyadic_increment": inc}
    notes = _hyp_notes(hypotheses) + (["smallness assumed"] if lam < 0 else [])
    return TheoremVerdict(tid, meas, {"dyadic_increment_max": CAUCHY_FRACTION},
                          inc < CAUCHY_FRACTION, notes)


def check_T38(trace: TraceSeries, family: DecayFamily, case="defocusing",
              window=(20.0, 200.0)) -> TheoremVerdict:
    """Fitted Neumann decay rate against the predicted exponent."""
    tid = "T4.4" if case == "focusing" else "T3.8"
    if _is_zero(trace.P):
        return _vacuous(tid)
    held = delta_hypotheses(family.alpha, family.beta, case)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HypothesisWarning)
        delta = predicted_delta(family.alpha, family.beta, case)
    fit = fit_decay(trace.t, np.abs(trace.P), window)
    meas = {"slope": fit.slope, "delta": delta, "rms_residual": fit.rms_residual,
            "alpha": family.alpha, "beta": family.beta}
    thr = {"slope_max": -delta + SLOPE_TOL_T38}
    notes = _hyp_notes(held) + (["smallness assumed"] if case == "focusing" else [])
    return TheoremVerdict(tid, meas, thr, fit.slope <= thr["slope_max"], notes)


def check_T39(trace: TraceSeries, family: DecayFamily, case="defocusing",
              window=(20.0, 200.0)) -> TheoremVerdict:
    """Neumann trace decays like t^-(2+eps) and is integrable in time."""
    tid = "T4.5" if case == "focusing" else "T3.9"
    if _is_zero(trace.P):
        return _vacuous(tid)
    eps = min(family.alpha, family.beta) - 2.5
    fit = fit_decay(trace.t, np.abs(trace.P), window)
    cum = cumulative_trapezoid(np.abs(trace.P), trace.t, initial=0.0)
    inc = dyadic_increment(trace.t, cum)
    meas = {"slope": fit.slope, "eps": eps, "l1_integral": float(cum[-1]),
            "l1_dyadic_increment": inc}
    thr = {"slope_max": -(2 + eps) + SLOPE_TOL_T38, "dyadic_increment_max": CAUCHY_FRACTION}
    ok = fit.slope <= thr["slope_max"] and inc < CAUCHY_FRACTION
    notes = _hyp_notes(eps > 0) + (["smallness assumed"] if case == "focusing" else [])
    return TheoremVerdict(tid, meas, thr, ok, notes)


def check_F_bounded(monitors: EstimateMonitors) -> TheoremVerdict:
    """The boundary functional F stays bounded: late max within 10% of the earlier one."""
    t, F = monitors.t, np.abs(monitors.F)
    T = t[-1]
    late = F[t >= T / 2]
    early = F[(t >= T / 4) & (t < T / 2)]
    top_early = float(np.max(early)) if early.size else 0.0
    top_late = float(np.max(late)) if late.size else 0.0
    if top_late == 0:
        return TheoremVerdict("T3.2", {"max_late": 0.0, "max_early": top_early, "growth": 0.0},
                              {"growth_max": 1.1}, True, ["F identically zero"])
    growth = top_late / top_early if top_early > 0 else np.inf
    return TheoremVerdict("T3.2", {"max_late": top_late, "max_early": top_early,
                                   "growth": float(growth)},
                          {"growth_max": 1.1}, growth <= 1.1, ["F-boundedness"])


def check_appendix(trace: TraceSeries, p=1.1) -> TheoremVerdict:
    """Weighted L2 and L1 integrability of the Neumann trace."""
    w2, l1, tl1 = weighted_time_integrals(trace, p)
    meas = {}
    ok = True
    for name, c in (("weighted_l2", w2), ("l1", l1), ("t_l1", tl1)):
        inc = dyadic_increment(trace.t, c)
        meas[f"{name}_integral"] = float(c[-1])
        meas[f"{name}_dyadic_increment"] = inc
        ok = ok and inc < CAUCHY_FRACTION
    meas["p"] = p
    return TheoremVerdict("AppA", meas, {"dyadic_increment_max": CAUCHY_FRACTION}, ok)


# --- suites and reports -----------------------------------------------------

@dataclass
class VerifyOptions:
    window_T32: tuple = (10.0, 100.0)
    window_T38: tuple = (20.0, 200.0)
    p: float = 1.1
    smallness: float = SMALLNESS_DEFAULT
    theorems: tuple = ()


def theorem_hypotheses(family, theorem_id):
    if family is None:
        return None
    a, b, g = family.alpha, family.beta, family.gamma
    if theorem_id in ("T3.2", "T3.4", "P3.5"):
        return a > 1.5 and b > 2.5
    if theorem_id in ("T3.6", "T3.8", "T3.9", "AppA"):
        return a > 2.5 and b > 2.5 and g > 0.5
    if theorem_id in ("T4.3", "T4.4", "T4.5"):
        return a > 2.5 and b > 0.5
    return None


def _inconclusive(theorem_id, exc):
    return TheoremVerdict(theorem_id, {}, {}, False, [f"not evaluated: {exc}"], "inconclusive")


def run_suite(result, family, options: VerifyOptions = VerifyOptions()) -> list:
    """All wired verdicts for one run (eight defocusing or seven focusing entries)."""
    lam = result.config.lam
    tr, ns = result.traces, result.norms
    T = tr.t[-1]
    w32 = tuple(min(v, T) for v in options.window_T32)
    w38 = tuple(min(v, T) for v in options.window_T38)
    case = _case(lam)
    checks = {"T2.1": lambda: check_T21(tr, lam, options.smallness, family)}
    if lam < 0:
        checks.update({
            "P4.1": lambda: check_T34(ns, family, lam, tr),
            "P4.2": lambda: check_P35(tr, family, lam),
            "T4.3": lambda: check_T36(tr, lam, theorem_hypotheses(family, "T4.3")),
            "T4.4": lambda: check_T38(tr, family, case, w38),
            "T4.5": lambda: check_T39(tr, family, case, w38),
        })
    else:
        checks.update({
            "T3.2": lambda: check_T32(ns, w32, theorem_hypotheses(family, "T3.2"),
                                      estimate_monitors(tr, family)),
            "T3.4": lambda: check_T34(ns, family, lam, tr),
            "P3.5": lambda: check_P35(tr, family, lam),
            "T3.6": lambda: check_T36(tr, lam, theorem_hypotheses(family, "T3.6")),
            "T3.8": lambda: check_T38(tr, family, case, w38),
            "T3.9": lambda: check_T39(tr, family, case, w38),
        })
    checks["AppA"] = lambda: check_appendix(tr, options.p)

    out = []
    for tid, check in checks.items():
        if options.theorems and tid not in options.theorems:
            continue
        try:
            verdict = check()
        except ValueError as exc:
            verdict = _inconclusive(tid, exc)
        if lam < 0 and "smallness assumed" not in verdict.notes:
            verdict.notes.append("smallness assumed")
        out.append(verdict)
    return out


@dataclass
class VerificationReport:
    verdicts: list
    metadata: dict

    @property
    def all_passed(self) -> bool:
        return all(v.status != "fail" for v in self.verdicts)

    def to_text(self) -> str:
        lines = ["[run]"]
        lines += [f"{k}: {v}" for k, v in self.metadata.items()]
        for v in self.verdicts:
            lines += ["", f"[{v.theorem_id}]", f"status: {v.status}"]
            lines += [f"{k}: {_fmt(x)}" for k, x in v.measured.items()]
            lines += [f"threshold.{k}: {_fmt(x)}" for k, x in v.threshold.items()]
            if v.notes:
                lines.append("notes: " + "; ".join(v.notes))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theorem_id", "quantity", "value", "status"])
        for v in self.verdicts:
            for k, x in v.measured.items():
                w.writerow([v.theorem_id, k, _fmt(x), v.status])
            for k, x in v.threshold.items():
                w.writerow([v.theorem_id, f"threshold.{k}", _fmt(x), v.status])
        return buf.getvalue()


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def build_report(verdicts, metadata) -> VerificationReport:
    if not verdicts:
        raise ValueError("report needs at least one verdict")
    order = {tid: i for i, tid in enumerate(THEOREM_IDS)}
    return VerificationReport(sorted(verdicts, key=lambda v: order[v.theorem_id]), dict(metadata))
