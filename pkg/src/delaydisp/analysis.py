"""Norm diagnostics and the constants of the exponential-stability estimate.

The stability constants follow the closed forms exactly as published,
including two internal inconsistencies of the source derivation that are
deliberately not "fixed":

* the ||a||_inf term in omega is squared (the intermediate estimate had a
  first power with an extra M^2), and
* the sigma condition carries exp(omega_tilde*tau) and 1/(pi^2*omega_tilde)
  factors that do not appear inside the exponential defining M.

Auxiliary Young constants are frozen at delta1 = delta2 = 1/6 and
delta3 = 1/(6 ||a||_inf); the omega and tau-interval formulas already have
them substituted.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .discretization import Operators
from .errors import DecayFitError, HypothesisViolation
from .model import DampingProfile, HistorySpec, ModelParams, validate_damping

__all__ = [
    "NormRow",
    "NormSeries",
    "DecayFit",
    "HistoryNorms",
    "StabilityReport",
    "norms_of",
    "wirtinger_check",
    "history_norms",
    "compute_gamma",
    "compute_M",
    "compute_log_M",
    "compute_tau_interval",
    "compute_omega",
    "SigmaProblem",
    "compute_sigma_and_tau_hat",
    "sigma_by_bisection",
    "stability_report",
    "theorem_bound_check",
    "dissipation_check",
    "fit_decay",
]

PI2 = math.pi**2
PI4 = math.pi**4
BOUND_TOL = 1e-6
SIGMA_LATTICE = 10_000


class NormRow(NamedTuple):
    l2_u: float
    h1_u: float
    h2_u: float
    weighted: float


def norms_of(u: np.ndarray, ops: Operators, a_values: np.ndarray | None = None) -> NormRow:
    """||u||, ||u_x||, ||u_xx|| and ||sqrt(|a|) u|| for one discrete state.

    The weighted norm uses |a| so that it stays real for negative damping.
    """
    w = ops.quadrature.weights
    ux = ops.d1.apply(u)
    uxx = ops.d2.apply(u)
    l2 = math.sqrt(float(np.dot(w, u * u)))
    h1 = math.sqrt(float(np.dot(w, ux * ux)))
    h2 = math.sqrt(float(np.dot(w, uxx * uxx)))
    if a_values is None:
        weighted = 0.0
    else:
        weighted = math.sqrt(float(np.dot(w, np.abs(a_values) * u * u)))
    return NormRow(l2, h1, h2, weighted)


@dataclass
class NormSeries:
    """Norm history of a run, one entry per time level."""

    t: np.ndarray
    l2_u: np.ndarray
    h1_u: np.ndarray
    h2_u: np.ndarray
    weighted: np.ndarray

    COLUMNS = ("l2_u", "h1_u", "h2_u", "weighted")

    def __len__(self) -> int:
        return len(self.t)

    def row(self, i: int) -> NormRow:
        return NormRow(self.l2_u[i], self.h1_u[i], self.h2_u[i], self.weighted[i])

    @classmethod
    def from_rows(cls, t, rows) -> "NormSeries":
        arr = np.asarray(rows, dtype=float).reshape(-1, 4)
        return cls(np.asarray(t, dtype=float), *(arr[:, j].copy() for j in range(4)))

    def fit(self, window, column: str = "l2_u") -> "DecayFit":
        return fit_decay(self.t, getattr(self, column), window)


def wirtinger_check(row: NormRow, ell: float) -> tuple[float, float]:
    """Ratios pi^2 ||u||^2 / (ell^2 ||u_x||^2) and pi^2 ||u_x||^2 / (ell^2 ||u_xx||^2).

    Both are at most 1 in the continuum; a zero denominator gives 0.
    """
    l2, h1, h2 = row[0], row[1], row[2]
    r1 = l2**2 * PI2 / (ell**2 * h1**2) if h1 > 0 else 0.0
    r2 = h1**2 * PI2 / (ell**2 * h2**2) if h2 > 0 else 0.0
    return r1, r2


# ---------------------------------------------------------------------------
# closed-form constants


def compute_gamma(p: float, a0: float, mu: float, nu: float, ell: float) -> float:
    """Growth constant in d/dt ||u_xx||^2 <= gamma ||u_x(t-tau)||^2 ||u_xx||^2."""
    if not 0.0 < p <= 1.0:
        raise HypothesisViolation(f"p must lie in (0, 1], got {p}")
    if not a0 > 0.0:
        raise HypothesisViolation(f"a0 must be positive, got {a0}")
    root = math.sqrt(a0)
    gap = 4.0 * p * mu * root - nu**2
    if not gap > 0.0:
        raise HypothesisViolation(
            f"nu^2 < 4 p mu sqrt(a0) fails: nu^2 = {nu**2:g} >= 4 p mu sqrt(a0) = {4 * p * mu * root:g}"
        )
    return 4.0 * p * PI2 * root / (ell * gap)


@dataclass(frozen=True)
class HistoryNorms:
    """Norms of the initial history entering M and sigma."""

    sup_vx: float  # sup over [-tau, 0] of ||v_x(s)||
    vx_sq_integral: float  # int_{-tau}^0 ||v_x(s)||^2 ds
    v0_sq: float  # ||v(0)||^2
    vxx0_sq: float  # ||v_xx(0)||^2


def _vx_sq(spec: HistorySpec, ops: Operators, s: float) -> float:
    v = np.asarray(spec(ops.grid.nodes, s), dtype=float)
    vx = ops.d1.apply(v)
    return float(np.dot(ops.quadrature.weights, vx * vx))


def history_norms(spec: HistorySpec, ops: Operators, tau: float, ds: float | None = None) -> HistoryNorms:
    """Sample the history on the lattice s = -k*ds and integrate by trapezoid."""
    v0 = np.asarray(spec(ops.grid.nodes, 0.0), dtype=float)
    w = ops.quadrature.weights
    v0_sq = float(np.dot(w, v0 * v0))
    vxx0 = ops.d2.apply(v0)
    vxx0_sq = float(np.dot(w, vxx0 * vxx0))
    if tau <= 0.0:
        sup_vx = math.sqrt(_vx_sq(spec, ops, 0.0))
        return HistoryNorms(sup_vx, 0.0, v0_sq, vxx0_sq)
    if ds is None or ds <= 0:
        ds = tau / 1000.0
    k = max(1, math.ceil(tau / ds - 1e-9))
    s = np.linspace(-tau, 0.0, k + 1)
    g = np.array([_vx_sq(spec, ops, si) for si in s])
    integral = float(np.sum(0.5 * (g[1:] + g[:-1]) * np.diff(s)))
    return HistoryNorms(math.sqrt(float(g.max())), integral, v0_sq, vxx0_sq)


def compute_log_M(hn: HistoryNorms, gamma: float, ell: float) -> float:
    """Natural log of M, evaluated without forming the exponential."""
    bracket = hn.v0_sq + hn.vxx0_sq
    if bracket == 0.0:
        return math.log(hn.sup_vx) if hn.sup_vx > 0 else -math.inf
    exponent = gamma * hn.vx_sq_integral + gamma * ell**2 / PI2 * hn.v0_sq
    log_second = math.log(4.0) + 0.5 * (math.log(bracket) + exponent)
    if hn.sup_vx > 0:
        return float(np.logaddexp(math.log(hn.sup_vx), log_second))
    return log_second


def compute_M(hn: HistoryNorms, gamma: float, ell: float) -> float:
    """Bound constant M; ``inf`` when it exceeds the double range (see compute_log_M)."""
    log_m = compute_log_M(hn, gamma, ell)
    if log_m == -math.inf:
        return 0.0
    if log_m > 700.0:
        return math.inf
    return math.exp(log_m)


def compute_tau_interval(M: float, nu: float, mu: float, ell: float, sup_a: float) -> tuple[float, float]:
    """Roots (tau1, tau2) of omega(tau) = 0.

    Evaluated in a rationalised form that avoids cancellation; it equals the
    textbook quadratic-root expression algebraically.
    """
    if not M > 0:
        raise HypothesisViolation("M = 0: zero history, no delay bound is needed")
    if math.isinf(M):
        return -0.0, 0.0
    q = ell**4 / PI2 + (nu**2 * ell + sup_a**2 * ell**5 / PI4) / M**2
    disc = math.sqrt(mu**2 * ell**2 + 12.0 * nu**2 * q)
    tau2 = 2.0 * nu**2 / (M**2 * (mu * ell + disc))
    tau1 = -(mu * ell + disc) / (6.0 * M**2 * q)
    return tau1, tau2


def _omega_radicand(tau, M, nu, mu, ell, sup_a):
    inner = (3.0 * ell**3 * tau / PI2) * M**4 + (
        mu + 3.0 * nu**2 * tau + 3.0 * sup_a**2 * ell**4 * tau / PI4
    ) * M**2
    return tau * ell * inner


def compute_omega(tau: float, M: float, nu: float, mu: float, ell: float, sup_a: float) -> tuple[float, float]:
    """(omega, omega_tilde) at delay ``tau``; requires 0 <= tau <= tau2."""
    if tau < 0:
        raise HypothesisViolation(f"tau must be non-negative, got {tau}")
    if tau == 0.0:
        omega = nu
    else:
        _, tau2 = compute_tau_interval(M, nu, mu, ell, sup_a)
        if tau > tau2 * (1.0 + 1e-12):
            raise HypothesisViolation(f"tau = {tau:g} exceeds tau2 = {tau2:g}; omega would be negative")
        omega = nu - math.sqrt(_omega_radicand(tau, M, nu, mu, ell, sup_a))
    omega_tilde = max(0.0, min(omega * PI2 / ell**2, mu))
    return omega, omega_tilde


class SigmaProblem:
    """Left side of the sigma condition as a function of the delay kappa.

    ``excess(kappa)`` is log(LHS) - log(M^2/4); the condition holds where it
    is <= 0.  The history integral ||v_x||^2_kappa is tabulated once on a
    lattice of ``lattice`` intervals over [0, tau2] and interpolated.
    """

    def __init__(self, spec: HistorySpec, ops: Operators, params: ModelParams,
                 gamma: float, M: float, sup_a: float, lattice: int = SIGMA_LATTICE):
        self.params = params
        self.gamma = gamma
        self.M = M
        self.sup_a = sup_a
        self.ell = params.ell
        self.lattice = lattice
        _, self.tau2 = compute_tau_interval(M, params.nu, params.mu, params.ell, sup_a)
        hn = history_norms(spec, ops, 0.0)
        self.v0_sq = hn.v0_sq
        self.bracket = hn.v0_sq + hn.vxx0_sq
        self.kappas = np.linspace(0.0, self.tau2, lattice + 1)
        g = np.array([_vx_sq(spec, ops, -k) for k in self.kappas])
        steps = np.diff(self.kappas)
        self.cumulative = np.concatenate(([0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * steps)))

    def vx_sq_integral(self, kappa: float) -> float:
        return float(np.interp(kappa, self.kappas, self.cumulative))

    def excess(self, kappa: float, vx_int: float | None = None) -> float:
        if self.bracket == 0.0:
            return -math.inf
        p = self.params
        _, wt = compute_omega(min(kappa, self.tau2), self.M, p.nu, p.mu, p.ell, self.sup_a)
        if wt <= 0.0:
            return math.inf
        if vx_int is None:
            vx_int = self.vx_sq_integral(kappa)
        inner = vx_int + self.ell**2 / (PI2 * wt) * self.v0_sq
        exponent = self.gamma * math.exp(wt * kappa) * inner
        return math.log(self.bracket) + exponent - (2.0 * math.log(self.M) - math.log(4.0))


def _refine(problem: SigmaProblem, good: float, bad: float, iters: int = 60) -> float:
    for _ in range(iters):
        mid = 0.5 * (good + bad)
        if problem.excess(mid) <= 0.0:
            good = mid
        else:
            bad = mid
        if bad - good <= 1e-15 * max(1.0, bad):
            break
    return good


def compute_sigma_and_tau_hat(problem: SigmaProblem) -> tuple[float, float, str]:
    """Largest prefix [0, sigma] of delays satisfying the sigma condition.

    Scans the lattice in order, stops at the first failure and bisects
    between the last good and first bad lattice point.  Returns
    (sigma, tau_hat, diagnostic).
    """
    tau2 = problem.tau2
    if problem.excess(0.0, 0.0) > 0.0:
        return 0.0, 0.0, "sigma condition fails at tau = 0: the bound is inapplicable for this history"
    last_good = 0.0
    for j in range(1, problem.lattice + 1):
        kappa = problem.kappas[j]
        if problem.excess(kappa, problem.cumulative[j]) > 0.0:
            sigma = _refine(problem, last_good, kappa)
            return sigma, min(sigma, tau2), ""
        last_good = kappa
    return tau2, tau2, "sigma condition holds on all of [0, tau2]"


def sigma_by_bisection(problem: SigmaProblem) -> float:
    """Independent sigma estimate assuming the excess is monotone in kappa."""
    if problem.excess(0.0) > 0.0:
        return 0.0
    if problem.excess(problem.tau2) <= 0.0:
        return problem.tau2
    return _refine(problem, 0.0, problem.tau2, iters=200)


# ---------------------------------------------------------------------------
# report


def _finite_or_none(x):
    if isinstance(x, float) and math.isnan(x):
        return None
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass
class StabilityReport:
    p: float
    gamma: float
    M: float
    omega: float
    omega_tilde: float
    tau1: float
    tau2: float
    sigma: float
    tau_hat: float
    hypotheses: dict
    delta1: float
    delta2: float
    delta3: float
    log_M: float = math.nan
    tau: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def applicable(self) -> bool:
        return bool(self.hypotheses) and all(self.hypotheses.values())

    def as_dict(self) -> dict:
        out = asdict(self)
        return {k: _finite_or_none(v) for k, v in out.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "StabilityReport":
        def back(v):
            if v is None:
                return math.nan
            if v == "inf":
                return math.inf
            if v == "-inf":
                return -math.inf
            return v
        return cls(**{k: back(v) for k, v in data.items()})


def stability_report(params: ModelParams, profile: DampingProfile, history: HistorySpec,
                     ops: Operators, p: float = 1.0, ds: float | None = None) -> StabilityReport:
    """Evaluate every constant of the stability estimate for one configuration."""
    nan = math.nan
    flags = validate_damping(profile)
    a0, sup_a = flags.a0, flags.sup_norm
    nu, mu, ell, tau = params.nu, params.mu, params.ell, params.tau
    hyp = {
        "positive_above_a0": flags.positive_above_a0,
        "concave_second_derivative": flags.concave_second_derivative,
        "nonneg_fourth_derivative": flags.nonneg_fourth_derivative,
        "nu_squared_below_4p_mu_sqrt_a0": bool(a0 > 0 and nu**2 < 4 * p * mu * math.sqrt(a0)),
        "tau_below_tau_hat": False,
    }
    report = StabilityReport(
        p=p, gamma=nan, M=nan, omega=nan, omega_tilde=nan, tau1=nan, tau2=nan,
        sigma=nan, tau_hat=nan, hypotheses=hyp, delta1=1 / 6, delta2=1 / 6,
        delta3=1 / (6 * sup_a) if sup_a > 0 else nan, tau=tau,
    )
    if not (hyp["positive_above_a0"] and hyp["nu_squared_below_4p_mu_sqrt_a0"]):
        report.notes.append("gamma undefined: requires a0 > 0 and nu^2 < 4 p mu sqrt(a0)")
        return report
    report.gamma = compute_gamma(p, a0, mu, nu, ell)
    hn = history_norms(history, ops, tau, ds)
    report.log_M = compute_log_M(hn, report.gamma, ell)
    report.M = compute_M(hn, report.gamma, ell)
    if report.M == 0.0:
        report.notes.append("zero history: the solution is identically zero")
        return report
    if math.isinf(report.M):
        report.notes.append(f"M overflows double precision (log M = {report.log_M:.6g})")
        report.tau1, report.tau2 = compute_tau_interval(report.M, nu, mu, ell, sup_a)
        report.sigma = report.tau_hat = 0.0
        return report
    report.tau1, report.tau2 = compute_tau_interval(report.M, nu, mu, ell, sup_a)
    if tau <= report.tau2:
        report.omega, report.omega_tilde = compute_omega(tau, report.M, nu, mu, ell, sup_a)
    else:
        report.notes.append(f"tau = {tau:g} exceeds tau2 = {report.tau2:g}")
    problem = SigmaProblem(history, ops, params, report.gamma, report.M, sup_a)
    report.sigma, report.tau_hat, diag = compute_sigma_and_tau_hat(problem)
    if diag:
        report.notes.append(diag)
    hyp["tau_below_tau_hat"] = bool(tau < report.tau_hat)
    return report


def theorem_bound_check(t, h2_u, report: StabilityReport, healthy: bool = True) -> int | None:
    """Number of times where ||u_xx||^2 exceeds (M^2/4) exp(-omega_tilde t).

    Returns None (not applicable) unless the run is healthy and every
    hypothesis in ``report`` holds.
    """
    if not healthy or not report.applicable:
        return None
    t = np.asarray(t, dtype=float)
    lhs = np.asarray(h2_u, dtype=float) ** 2
    rhs = report.M**2 / 4.0 * np.exp(-report.omega_tilde * t)
    return int(np.count_nonzero(lhs > rhs * (1.0 + BOUND_TOL)))


def dissipation_check(series: NormSeries, omega: float, mu: float, dt: float, tol: float | None = None) -> float:
    """Fraction of steps violating d/dt||u||^2 <= -2 omega ||u_x||^2 - 2 mu ||u_xx||^2.

    The derivative is the forward difference over each step and the right
    side is taken at the new time level.  ``tol`` defaults to 10*dt.
    """
    if len(series) < 2:
        return 0.0
    if tol is None:
        tol = 10.0 * dt
    e = series.l2_u**2
    lhs = np.diff(e) / np.diff(series.t)
    rhs = -2.0 * omega * series.h1_u[1:] ** 2 - 2.0 * mu * series.h2_u[1:] ** 2 + tol
    return float(np.count_nonzero(lhs > rhs)) / lhs.size


@dataclass(frozen=True)
class DecayFit:
    window: tuple
    slope: float
    intercept: float
    r_squared: float

    def as_dict(self) -> dict:
        return {"window": list(self.window), "slope": self.slope,
                "intercept": self.intercept, "r_squared": self.r_squared}


def fit_decay(t, values, window) -> DecayFit:
    """Least-squares line through (t, ln value) over ``window`` = (t_a, t_b)."""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    ta, tb = window
    eps = 1e-9 * max(1.0, abs(tb))
    mask = (t >= ta - eps) & (t <= tb + eps)
    if np.count_nonzero(mask) < 2:
        raise DecayFitError(f"window [{ta}, {tb}] holds fewer than two samples", ta)
    tw, vw = t[mask], values[mask]
    bad = np.flatnonzero(~(vw > 0))
    if bad.size:
        raise DecayFitError(
            f"non-positive norm at t = {tw[bad[0]]}; shrink the window", float(tw[bad[0]])
        )
    y = np.log(vw)
    tc = tw - tw.mean()
    slope = float(np.dot(tc, y - y.mean()) / np.dot(tc, tc))
    intercept = float(y.mean() - slope * tw.mean())
    resid = y - (intercept + slope * tw)
    ss_tot = float(np.dot(y - y.mean(), y - y.mean()))
    ss_res = float(np.dot(resid, resid))
    r2 = 1.0 if ss_tot <= 1e-30 * max(1.0, float(np.dot(y, y))) else max(0.0, 1.0 - ss_res / ss_tot)
    return DecayFit((float(ta), float(tb)), slope, intercept, r2)
