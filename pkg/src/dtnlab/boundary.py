"""Dirichlet data families with closed-form derivatives and tail integrals.

A decay family is

    Q(t) = A (t/s)^m (1 + t/s)^-(m+alpha) exp(i omega t),

which vanishes to order m at t = 0 and decays like t^-alpha. The
manufactured solution A t^2 e^-t e^-x is used only to validate the solver.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import integrate


@dataclass(frozen=True)
class DecayFamily:
    A: float = 0.5
    m: int = 2
    alpha: float = 3.0
    omega: float = 0.0
    s: float = 1.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError("ramp_order m must be an integer >= 2")
        if not self.alpha > 0:
            raise ValueError("decay_alpha must be positive")
        if not self.s > 0:
            raise ValueError("time_scale must be positive")

    @property
    def beta(self) -> float:
        return self.alpha + 1 if self.omega == 0 else self.alpha

    @property
    def gamma(self) -> float:
        return self.alpha + 2 if self.omega == 0 else self.alpha

    # envelope g(u) = u^m (1+u)^-k and its t-derivatives
    def _envelope(self, t):
        u = np.asarray(t, dtype=float) / self.s
        m, k = self.m, self.m + self.alpha
        g = u**m * (1 + u) ** (-k)
        g1 = u ** (m - 1) * (1 + u) ** (-k - 1) * (m - self.alpha * u) / self.s
        g2 = (m * (m - 1) * u ** (m - 2) * (1 + u) ** (-k)
              - 2 * m * k * u ** (m - 1) * (1 + u) ** (-k - 1)
              + k * (k + 1) * u**m * (1 + u) ** (-k - 2)) / self.s**2
        return g, g1, g2

    def Q(self, t):
        g, _, _ = self._envelope(t)
        return self.A * g * np.exp(1j * self.omega * np.asarray(t, dtype=float))

    def Qt(self, t):
        g, g1, _ = self._envelope(t)
        w = self.omega
        return self.A * (g1 + 1j * w * g) * np.exp(1j * w * np.asarray(t, dtype=float))

    def Qtt(self, t):
        g, g1, g2 = self._envelope(t)
        w = self.omega
        return (self.A * (g2 + 2j * w * g1 - w**2 * g)
                * np.exp(1j * w * np.asarray(t, dtype=float)))

    def scaled_to_mass(self, target: float) -> "DecayFamily":
        """Copy with amplitude chosen so that the integral of |Q|^2 equals ``target``."""
        base = tail_integrals(DecayFamily(1.0, self.m, self.alpha, self.omega, self.s), 0.0)[0]
        return DecayFamily(float(np.sqrt(target / base)), self.m, self.alpha, self.omega, self.s)


def eval_Q(family, t):
    return family.Q(t)


def eval_Qt(family, t):
    return family.Qt(t)


def eval_Qtt(family, t):
    return family.Qtt(t)


def _series_tail(U, p, r, coef=1.0, tol=1e-18, max_terms=200):
    """Integral over [U, inf) of u^-p (1 + 1/u)^-r, by binomial expansion."""
    total, binom = 0.0, 1.0
    for j in range(max_terms):
        term = binom * U ** (1 - p - j) / (p + j - 1)
        total += term
        if abs(term) < tol * abs(total):
            break
        binom *= (-r - j) / (j + 1)
    return coef * total


def _tail_remainders(f: DecayFamily, U):
    """Analytic remainders beyond u = U of |Q|^2, |Q_t|^2, |Q|^4 (in t units)."""
    a, m, k, s, w = f.alpha, f.m, f.m + f.alpha, f.s, f.omega
    q2 = _series_tail(U, 2 * a, 2 * k)
    # g1^2 s^2 = u^(-2a-4) (1+1/u)^(-2k-2) (a^2 u^2 - 2 a m u + m^2)
    g1sq = (a**2 * _series_tail(U, 2 * a + 2, 2 * k + 2)
            - 2 * a * m * _series_tail(U, 2 * a + 3, 2 * k + 2)
            + m**2 * _series_tail(U, 2 * a + 4, 2 * k + 2))
    q4 = _series_tail(U, 4 * a, 4 * k)
    A2 = f.A**2
    return (A2 * s * q2,
            A2 * s * (g1sq / s**2 + w**2 * q2),
            A2**2 * s * q4)


def _quad_log(fun, a, b, epsrel=1e-12):
    if b <= a:
        return 0.0
    lo = max(a, 1e-3)
    edges = [a] + list(np.geomspace(lo, b, 40)[1:]) if a < lo else list(np.geomspace(a, b, 40))
    total = 0.0
    for lo_, hi_ in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(fun, lo_, hi_, epsrel=epsrel, epsabs=0.0, limit=200)
        total += val
    return total


def tail_integrals(family: DecayFamily, t: float):
    """(int_t^inf |Q|^2, int_t^inf |Q_t|^2, int_t^inf |Q|^4)."""
    if family.alpha <= 0.5:
        raise ValueError("tail integrals diverge for alpha <= 1/2")
    if family.A == 0:
        return 0.0, 0.0, 0.0
    if t < 0:
        raise ValueError("t must be nonnegative")
    t_big = 1e4 * family.s
    rem = _tail_remainders(family, max(t, t_big) / family.s)
    if t >= t_big:
        return tuple(float(r) for r in rem)

    def q2(r):
        return abs(family.Q(r)) ** 2

    def qt2(r):
        return abs(family.Qt(r)) ** 2

    def q4(r):
        return abs(family.Q(r)) ** 4

    return tuple(float(_quad_log(fn, t, t_big) + r)
                 for fn, r in zip((q2, qt2, q4), rem))


@dataclass(frozen=True)
class ManufacturedSolution:
    """q_m(x, t) = A t^2 e^-t e^-x, exact on the half-line."""

    A: float = 1.0

    @staticmethod
    def envelope(t):
        t = np.asarray(t, dtype=float)
        return t**2 * np.exp(-t)

    @staticmethod
    def envelope_t(t):
        t = np.asarray(t, dtype=float)
        return (2 * t - t**2) * np.exp(-t)

    @staticmethod
    def envelope_tt(t):
        t = np.asarray(t, dtype=float)
        return (2 - 4 * t + t**2) * np.exp(-t)

    def exact(self, x, t):
        return self.A * self.envelope(t) * np.exp(-np.asarray(x, dtype=float)) + 0j

    def Q(self, t):
        return self.A * self.envelope(t) + 0j

    def Qt(self, t):
        return self.A * self.envelope_t(t) + 0j

    def Qtt(self, t):
        return self.A * self.envelope_tt(t) + 0j

    def P(self, t):
        return -self.A * self.envelope(t) + 0j


def manufactured_forcing(ms: ManufacturedSolution, lam, x, t):
    """Residual i q_t + q_xx - 2 lam |q|^2 q of the manufactured solution."""
    x = np.asarray(x, dtype=float)
    h, ht = ms.envelope(t), ms.envelope_t(t)
    phi = np.exp(-x)
    q = ms.A * h * phi
    return ms.A * (1j * ht + h) * phi - 2 * lam * np.abs(q) ** 2 * q


@dataclass
class TraceSeries:
    t: np.ndarray
    Q: np.ndarray
    Qt: np.ndarray
    Qtt: np.ndarray
    P: np.ndarray
    Pt: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        for name in ("Q", "Qt", "Qtt", "P", "Pt"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"trace array {name} has wrong length")

    @classmethod
    def from_traces(cls, t, boundary, P) -> "TraceSeries":
        t = np.asarray(t, dtype=float)
        P = np.asarray(P, dtype=complex)
        return cls(t, np.asarray(boundary.Q(t), complex) * np.ones_like(t),
                   np.asarray(boundary.Qt(t), complex) * np.ones_like(t),
                   np.asarray(boundary.Qtt(t), complex) * np.ones_like(t),
                   P, time_derivative(P, t))

    def with_P(self, P) -> "TraceSeries":
        """Copy with a replaced Neumann trace (P_t recomputed)."""
        P = np.asarray(P, dtype=complex)
        return TraceSeries(self.t, self.Q, self.Qt, self.Qtt, P, time_derivative(P, self.t))

    def write_csv(self, path, header_lines=()):
        cols = ["t", "reQ", "imQ", "reQt", "imQt", "reP", "imP", "rePt", "imPt"]
        data = np.column_stack([self.t, self.Q.real, self.Q.imag, self.Qt.real, self.Qt.imag,
                                self.P.real, self.P.imag, self.Pt.real, self.Pt.imag])
        write_table(path, cols, data, header_lines)


def time_derivative(y, t):
    """Centered differences in the interior, second-order one-sided at the ends."""
    y = np.asarray(y)
    if len(y) < 3:
        return np.zeros_like(y)
    return np.gradient(y, np.asarray(t, dtype=float), edge_order=2)


def write_table(path, columns, data, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("# columns: " + ", ".join(columns) + "\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in np.asarray(data):
            w.writerow([repr(float(v)) for v in row])
