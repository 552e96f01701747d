"""Annealing schedules s(tau) and the hybrid coefficient functions A, B.

A :class:`Schedule` is a monotone map from reduced time tau = t/t_f in [0, 1]
to the annealing parameter s in [0, 1]. Analytic kinds evaluate their closed
form at any tau; sampled kinds (numeric, or anything read back from CSV) use
monotone cubic (PCHIP) interpolation between samples.

The product epsilon * t_f is fixed by each kind's runtime relation, so giving
either epsilon or t_f determines the other.
"""

from __future__ import annotations

import csv
import enum
import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import gammaln

from .exceptions import ConvergenceError


class ScheduleKind(enum.Enum):
    ANALYTIC = "analytic"
    NUMERIC = "numeric"
    LINEAR = "linear"
    AC_ANALYTIC = "ac"


# ---------------------------------------------------------------------------
# binomial constants


@lru_cache(maxsize=None)
def _binomial_sum(n: int, power: int) -> float:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    r = np.arange(1, n + 1)
    logw = gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1) - n * np.log(2.0)
    terms = np.exp(logw - power * np.log(r))
    # terms are all positive; fsum keeps the sum correctly rounded
    return math.fsum(terms.tolist())


def r1(n: int) -> float:
    """R1 = (1/N) sum_{r=1}^n C(n, r) / r."""
    return _binomial_sum(int(n), 1)


def r2(n: int) -> float:
    """R2 = (1/N) sum_{r=1}^n C(n, r) / r**2."""
    return _binomial_sum(int(n), 2)


def optimal_gamma(n: int) -> float:
    """Optimal hypercube quantum-walk hopping rate, gamma_o = R1."""
    return r1(n)


def optimal_beta(n: int) -> float:
    """beta_o = 1 / (1 + gamma_o); also the large-n location of the minimum gap."""
    return 1.0 / (1.0 + r1(n))


def beta_from_gamma(gamma: float) -> float:
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    return 1.0 / (1.0 + gamma)


# ---------------------------------------------------------------------------
# closed-form schedule pieces


def _analytic_constants(n: int) -> tuple[float, float, float, float]:
    """(amplitude, rate k, phase c, epsilon*t_f) of the analytic hypercube schedule.

    s(t) = amplitude * tan(k*eps*t - c) + 1/(1+R1), where requiring s(t_f) = 1
    fixes eps*t_f = (c + arctan(R1 (1+R1) sqrt(N) / (2 sqrt(R2)))) / k.
    """
    N = 2.0**n
    R1, R2 = r1(n), r2(n)
    amp = 2.0 * np.sqrt(R2) / (np.sqrt(N) * (1.0 + R1) ** 2)
    k = 8.0 * np.sqrt(R2) * R1**2 / (n * np.sqrt(N) * R2**2)
    c = np.arctan((1.0 + R1) * np.sqrt(N) / (2.0 * np.sqrt(R2)))
    upper = np.arctan(R1 * (1.0 + R1) * np.sqrt(N) / (2.0 * np.sqrt(R2)))
    return amp, k, c, (c + upper) / k


def analytic_epsilon_tf(n: int) -> float:
    """epsilon * t_f for the analytic schedule, including both arctan terms."""
    return _analytic_constants(n)[3]


def ac_epsilon_tf(g_min: float) -> float:
    """epsilon * t_f = (pi/2 - arctan g) / g for the avoided-crossing schedule."""
    return (0.5 * np.pi - np.arctan(g_min)) / g_min


def _s_analytic(n: int, tau: np.ndarray) -> np.ndarray:
    amp, k, c, et = _analytic_constants(n)
    s = amp * np.tan(k * et * tau - c) + 1.0 / (1.0 + r1(n))
    return np.clip(s, 0.0, 1.0)


def _s_ac(g: float, tau: np.ndarray) -> np.ndarray:
    # g (2 eps t + 1) written in reduced time
    arg = g + 2.0 * g * ac_epsilon_tf(g) * tau
    return np.clip(0.5 * (1.0 - g / np.tan(arg)), 0.0, 1.0)


# ---------------------------------------------------------------------------
# Schedule value type


@dataclass(frozen=True, eq=False)
class Schedule:
    """Monotone schedule tau -> s with its runtime metadata.

    Attributes:
        kind: which construction produced the schedule.
        epsilon: adiabatic accuracy parameter.
        t_f: total runtime.
        tau, s: sample table (tau ascending, both in [0, 1]).
        n: qubit count for hypercube kinds.
        g_min: minimum gap for the avoided-crossing kind.
        converged: False if an iterative construction stopped early.
        residuals: per-iteration max |s_new - s_old| for numeric schedules.
        sampled: evaluate by interpolation even when a closed form exists.
    """

    kind: ScheduleKind
    epsilon: float
    t_f: float
    tau: np.ndarray
    s: np.ndarray
    n: int | None = None
    g_min: float | None = None
    converged: bool = True
    residuals: tuple = ()
    sampled: bool = False
    _interp: object = field(default=None, repr=False)

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        s = np.asarray(self.s, dtype=float)
        if tau.ndim != 1 or tau.shape != s.shape or tau.size < 2:
            raise ValueError("tau and s must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(tau) <= 0):
            raise ValueError("tau samples must be strictly increasing")
        if np.any(np.diff(s) < 0):
            raise ValueError("schedule samples must be non-decreasing")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "kind", ScheduleKind(self.kind))

    @property
    def epsilon_tf(self) -> float:
        return self.epsilon * self.t_f

    def __call__(self, tau):
        """s(tau) for scalar or array tau in [0, 1]."""
        tau = np.asarray(tau, dtype=float)
        if not self.sampled:
            if self.kind is ScheduleKind.LINEAR:
                return np.clip(tau, 0.0, 1.0)
            if self.kind is ScheduleKind.ANALYTIC:
                return _s_analytic(self.n, tau)
            if self.kind is ScheduleKind.AC_ANALYTIC:
                return _s_ac(self.g_min, tau)
        if self._interp is None:
            object.__setattr__(self, "_interp", PchipInterpolator(self.tau, self.s, extrapolate=False))
        return np.clip(self._interp(np.clip(tau, 0.0, 1.0)), 0.0, 1.0)

    def with_runtime(self, t_f: float) -> "Schedule":
        """Same shape in tau, new runtime; epsilon rescales to keep epsilon*t_f fixed."""
        if t_f < 0:
            raise ValueError("t_f must be >= 0")
        eps = self.epsilon_tf / t_f if t_f > 0 else np.inf
        return replace(self, t_f=float(t_f), epsilon=float(eps), _interp=self._interp)

    def to_csv(self, path) -> None:
        write_schedule_csv(path, self.tau, self.s)


def _resolve_runtime(product: float, epsilon, t_f) -> tuple[float, float]:
    if (epsilon is None) == (t_f is None):
        raise ValueError("give exactly one of epsilon and t_f")
    if epsilon is not None:
        if not epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {epsilon}")
        return float(epsilon), product / float(epsilon)
    if not t_f > 0:
        raise ValueError(f"t_f must be > 0, got {t_f}")
    return product / float(t_f), float(t_f)


def _tau_grid(samples: int) -> np.ndarray:
    if samples < 2:
        raise ValueError("need at least two samples")
    return np.linspace(0.0, 1.0, int(samples))


def analytic_schedule(n: int, epsilon: float | None = None, t_f: float | None = None,
                      samples: int = 1001) -> Schedule:
    """Closed-form hypercube schedule built from the two-level gap approximation.

    The integration phase c makes s(0) = 0; the runtime relation is chosen so
    that s(1) = 1 exactly. The schedule slows down to its minimum speed at
    s = 1/(1+R1).
    """
    if n < 2:
        raise ValueError("analytic schedule needs n >= 2")
    eps, tf = _resolve_runtime(analytic_epsilon_tf(n), epsilon, t_f)
    tau = _tau_grid(samples)
    s = _s_analytic(n, tau)
    s[0], s[-1] = 0.0, 1.0
    return Schedule(ScheduleKind.ANALYTIC, eps, tf, tau, s, n=int(n))


def linear_schedule(t_f: float = 1.0, samples: int = 2, epsilon: float | None = None) -> Schedule:
    """s = tau. ``epsilon`` is carried along as metadata only."""
    tau = _tau_grid(samples)
    eps = np.nan if epsilon is None else float(epsilon)
    return Schedule(ScheduleKind.LINEAR, eps, float(t_f), tau, tau.copy())


def ac_schedule(g_min: float, epsilon: float | None = None, t_f: float | None = None,
                samples: int = 1001) -> Schedule:
    """Optimal local-adiabatic schedule of the two-level avoided-crossing model.

    s(t) = (1 - g cot[g (2 eps t + 1)]) / 2 with eps*t_f = (pi/2 - arctan g)/g.
    Both ends sit O(g**2) inside [0, 1] because terms of that order are dropped.
    """
    if not g_min > 0:
        raise ValueError("g_min must be > 0")
    eps, tf = _resolve_runtime(ac_epsilon_tf(g_min), epsilon, t_f)
    tau = _tau_grid(samples)
    return Schedule(ScheduleKind.AC_ANALYTIC, eps, tf, tau, _s_ac(g_min, tau), g_min=float(g_min))


# ---------------------------------------------------------------------------
# numeric schedule


def aqc_gap(n: int, s) -> np.ndarray:
    """E1 - E0 of (1-s) H0 + s Hp in the line representation, vectorised over s."""
    from .model import line_arrays

    s = np.asarray(s, dtype=float)
    flat = s.ravel()
    d0, e0 = line_arrays(n, 1.0, 0.0)
    d1, _ = line_arrays(n, 0.0, 1.0)
    H0 = np.diag(d0) + np.diag(e0, 1) + np.diag(e0, -1)
    Hp = np.diag(d1)
    out = np.empty(flat.size)
    chunk = max(1, int(4e6 // (n + 1) ** 2))
    for start in range(0, flat.size, chunk):
        sv = flat[start:start + chunk, None, None]
        w = np.linalg.eigvalsh((1.0 - sv) * H0 + sv * Hp)
        out[start:start + sv.shape[0]] = w[:, 1] - w[:, 0]
    out = out.reshape(s.shape)
    return out


def numeric_schedule(n: int, epsilon: float | None = None, t_f: float | None = None,
                     mesh: int = 4097, tol: float = 1e-8, max_iter: int = 100,
                     strict: bool = False) -> Schedule:
    """Locally adiabatic schedule from the exact line-representation gap.

    Solves ds/dt = eps * 4 g(s)**2 / n (the matrix element of dH/ds at its
    maximum n/4) by iterative mesh inversion: with sList the current mesh,
    F(s) = int_0^s ds'/g**2 normalised to F(1) = 1 is tabulated on sList and
    inverted at uniform tau; the new mesh concentrates where 1/g**2 is large.
    Iteration stops when max |s_new - s_old| < tol. With neither epsilon nor
    t_f given, epsilon = 1.

    If the iteration does not converge a :class:`RuntimeWarning` is issued and
    the best iterate is returned with ``converged=False``; ``strict=True``
    raises :class:`ConvergenceError` instead.
    """
    if mesh < 64:
        raise ValueError("mesh size must be >= 64")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    tau = np.linspace(0.0, 1.0, int(mesh))
    s_list = tau.copy()
    residuals = []
    total = np.nan
    converged = False
    for _ in range(int(max_iter)):
        mid = 0.5 * (s_list[1:] + s_list[:-1])
        weight = np.diff(s_list) / aqc_gap(n, mid) ** 2
        F = np.concatenate([[0.0], np.cumsum(weight)])
        total = F[-1]
        F /= total
        s_new = np.interp(tau, F, s_list)
        s_new[0], s_new[-1] = 0.0, 1.0
        residuals.append(float(np.max(np.abs(s_new - s_list))))
        s_list = s_new
        if residuals[-1] < tol:
            converged = True
            break
    if not np.isfinite(total):
        raise ConvergenceError("non-finite gap integral in numeric schedule")
    if not converged:
        msg = f"numeric schedule for n={n} not converged after {max_iter} iterations (last residual {residuals[-1]:.3g})"
        if strict:
            raise ConvergenceError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    # t_f = int ds / (eps 4 g^2 / n)  ->  eps t_f = (n/4) int ds/g^2
    product = 0.25 * n * total
    if epsilon is None and t_f is None:
        epsilon = 1.0
    eps, tf = _resolve_runtime(product, epsilon, t_f)
    return Schedule(ScheduleKind.NUMERIC, eps, tf, tau, s_list, n=int(n),
                    converged=converged, residuals=tuple(residuals), sampled=True)


# ---------------------------------------------------------------------------
# hybrid coefficients


@dataclass(frozen=True)
class HybridSpec:
    """Interpolation between quantum walk (alpha = 0) and annealing (alpha = 1).

    ``schedule`` may be None only for alpha = 0, where the coefficients are
    constant.
    """

    alpha: float
    beta: float
    schedule: Schedule | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if self.schedule is None and self.alpha != 0:
            raise ValueError("a schedule is required for alpha > 0")

    @property
    def is_walk(self) -> bool:
        return self.alpha == 0

    def coefficients(self, tau):
        return hybrid_coefficients(self, tau)


def interpolate_coefficients(alpha: float, beta: float, s):
    """A, B as functions of the schedule value s (arrays broadcast).

    A = (1-s) / (alpha + (1-alpha)(1-s)/(1-beta)),
    B = s / (alpha + (1-alpha) s / beta).
    For alpha = 0 the pair is the constant (1-beta, beta) for 0 < s < 1, with
    B = 0 at s = 0 and A = 0 at s = 1.
    """
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must lie in (0, 1), got {beta}")
    s = np.asarray(s, dtype=float)
    if alpha == 0:
        A = np.where(s >= 1.0, 0.0, 1.0 - beta)
        B = np.where(s <= 0.0, 0.0, beta)
        return A, B
    A = (1.0 - s) / (alpha + (1.0 - alpha) * (1.0 - s) / (1.0 - beta))
    B = s / (alpha + (1.0 - alpha) * s / beta)
    return A, B


def hybrid_coefficients(spec: HybridSpec, tau):
    """(A(tau), B(tau)) for a hybrid specification."""
    tau = np.asarray(tau, dtype=float)
    if np.any((tau < 0) | (tau > 1)):
        raise ValueError("tau must lie in [0, 1]")
    if spec.alpha == 0:
        # constant walk coefficients with the endpoint convention at tau in {0, 1}
        A = np.where(tau >= 1.0, 0.0, 1.0 - spec.beta)
        B = np.where(tau <= 0.0, 0.0, spec.beta)
        return A, B
    return interpolate_coefficients(spec.alpha, spec.beta, spec.schedule(tau))


# ---------------------------------------------------------------------------
# CSV exchange


def write_schedule_csv(path, tau, s) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "s"])
        for t, v in zip(np.asarray(tau, float), np.asarray(s, float)):
            w.writerow([repr(float(t)), repr(float(v))])


def read_schedule_csv(path, kind: ScheduleKind | str = ScheduleKind.NUMERIC,
                      epsilon: float = np.nan, t_f: float = np.nan, **meta) -> Schedule:
    """Load a ``tau,s`` table; the result is always evaluated by interpolation."""
    rows = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    return Schedule(ScheduleKind(kind), float(epsilon), float(t_f), rows[:, 0], rows[:, 1],
                    sampled=True, **meta)
