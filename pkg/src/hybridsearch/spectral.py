"""Spectral analysis: gaps, the minimum gap, overlaps and the transition width.

Hypercube quantities default to the symmetric-line representation, which is
exact for the symmetric initial state and keeps every eigensolve O(n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import bisect, brentq, minimize_scalar

from .exceptions import ConvergenceError, NumericalError
from .model import (
    ACModel,
    SearchSystem,
    ac_components,
    binomial_amplitudes,
    build_ac_hamiltonian,
    build_hamiltonian,
    line_arrays,
    log_binomial_weights,
)
from .schedules import interpolate_coefficients, optimal_beta, r1, r2

DEGENERACY_TOL = 1e-14
COARSE_POINTS = 256
S_TOL = 1e-12


@dataclass(frozen=True)
class GapProfile:
    s_values: np.ndarray
    gap01: np.ndarray
    gap02: np.ndarray | None = None

    def argmin(self) -> int:
        return int(np.argmin(self.gap01))


@dataclass(frozen=True)
class MinGapResult:
    s_m: float
    g_min: float


@dataclass(frozen=True)
class OverlapReport:
    """Squared overlaps with the two lowest instantaneous eigenstates.

    ``deficit_init`` and ``deficit_m`` are 1 minus the two-state sums, computed
    directly from the remaining eigenstates so that they stay accurate when
    they are far below machine epsilon relative to one.
    """

    s: float
    overlap_init_E0: float
    overlap_init_E1: float
    overlap_m_E0: float
    overlap_m_E1: float
    deficit_init: float
    deficit_m: float

    @property
    def p_max_qw(self) -> float:
        return (self.overlap_init_E0 + self.overlap_init_E1) * (self.overlap_m_E0 + self.overlap_m_E1)

    @property
    def p_max_deficit(self) -> float:
        """1 - p_max_qw without cancellation."""
        return self.deficit_init + self.deficit_m - self.deficit_init * self.deficit_m


def _as_system(system) -> SearchSystem | ACModel:
    if isinstance(system, (int, np.integer)):
        return SearchSystem.line(int(system))
    return system


def _coefficients(s, alpha: float, beta: float | None):
    s = np.asarray(s, dtype=float)
    if alpha == 1:
        return 1.0 - s, s
    if beta is None:
        raise ValueError("beta is required for alpha < 1")
    return interpolate_coefficients(alpha, beta, s)


def _lowest_levels(system, a: float, b: float, k: int) -> np.ndarray:
    """Lowest k eigenvalues at coefficients (a, b)."""
    if isinstance(system, ACModel):
        h0, hx, hz = ac_components(system, a, b)
        w = np.hypot(hx, hz)
        return np.array([h0 - w, h0 + w])[:k]
    if system.is_line:
        d, e = line_arrays(system.n, a, b)
        return eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, k - 1))
    return build_hamiltonian(system, a, b).eigvalsh()[:k]


def gap_profile(system, s_values, alpha: float = 1.0, beta: float | None = None) -> GapProfile:
    """Exact gaps E1-E0 (and E2-E0 for hypercube systems) along s.

    ``system`` may be a :class:`SearchSystem`, an :class:`ACModel` or an integer
    n (taken as the line representation). Coefficients are (1-s, s) for
    alpha = 1 and the hybrid pair for other alpha.
    """
    system = _as_system(system)
    s = np.asarray(s_values, dtype=float)
    if s.ndim != 1:
        raise ValueError("s_values must be one-dimensional")
    if np.any(np.diff(s) < 0) or np.any((s < 0) | (s > 1)):
        raise ValueError("s_values must be sorted and lie in [0, 1]")
    A, B = _coefficients(s, alpha, beta)
    is_ac = isinstance(system, ACModel)
    k = 2 if is_ac else min(3, system.dim)
    levels = np.empty((s.size, k))
    for i, (a, b) in enumerate(zip(np.broadcast_to(A, s.shape), np.broadcast_to(B, s.shape))):
        try:
            levels[i] = _lowest_levels(system, float(a), float(b), k)
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigensolver failed at s={s[i]!r}") from exc
    gap01 = levels[:, 1] - levels[:, 0]
    gap02 = None if is_ac or k < 3 else levels[:, 2] - levels[:, 0]
    return GapProfile(s, gap01, gap02)


def _gap_at(system, s: float) -> float:
    a, b = 1.0 - s, s
    w = _lowest_levels(system, a, b, 2)
    return float(w[1] - w[0])


def _gap_slope(system, s: float) -> float:
    # Hellmann-Feynman: d(E1 - E0)/ds = <1|dH/ds|1> - <0|dH/ds|0>, dH/ds = H(1) - H(0)
    w, V = _eigensystem(system, s)
    if isinstance(system, ACModel):
        dH = build_ac_hamiltonian(system, 1.0).to_dense() - build_ac_hamiltonian(system, 0.0).to_dense()
    else:
        dH = build_hamiltonian(system, 0.0, 1.0).to_dense() - build_hamiltonian(system, 1.0, 0.0).to_dense()
    v0, v1 = V[:, 0], V[:, 1]
    return float(v1 @ dH @ v1 - v0 @ dH @ v0)


def min_gap(system) -> MinGapResult:
    """Location and size of the minimum of E1 - E0 along s in [0, 1].

    A 256-point scan (plus the large-n estimate 1/(1+R1) for hypercube systems)
    brackets the minimum. The location is then refined to 1e-12 in s as the
    root of the exact gap slope, which crosses zero linearly; golden-section
    search on the gap itself, which can only resolve s to about the square
    root of machine precision, is the fallback.
    """
    system = _as_system(system)
    if isinstance(system, SearchSystem) and system.n < 2:
        raise ValueError("min_gap needs n >= 2 for hypercube systems")
    grid = np.linspace(0.0, 1.0, COARSE_POINTS)
    if isinstance(system, SearchSystem):
        grid = np.unique(np.append(grid, optimal_beta(system.n)))
    else:
        grid = np.unique(np.append(grid, 0.5))
    gaps = np.array([_gap_at(system, s) for s in grid])
    i = int(np.argmin(gaps))
    if i == 0 or i == grid.size - 1:
        raise ConvergenceError("minimum gap found at the boundary of [0, 1]")
    f = lambda s: _gap_at(system, s)
    slope = lambda s: _gap_slope(system, s)
    lo, mid, hi = grid[i - 1], grid[i], grid[i + 1]
    if slope(lo) < 0 < slope(hi):
        s_m = brentq(slope, lo, hi, xtol=S_TOL * 1e-2, rtol=4 * np.finfo(float).eps)
    else:
        try:
            res = minimize_scalar(f, bracket=(lo, mid, hi), method="golden",
                                  options={"xtol": S_TOL / max(mid, 1e-3)})
        except ValueError as exc:
            raise ConvergenceError(f"gap minimum refinement failed: {exc}") from exc
        s_m = float(res.x)
    if not lo <= s_m <= hi:
        raise ConvergenceError("refinement left the bracket")
    g = f(s_m)
    if g <= 0:
        raise NumericalError("non-positive minimum gap")
    return MinGapResult(float(s_m), g)


def approx_gap(n: int, s):
    """Two-level approximation to the hypercube gap near the avoided crossing.

    g(s) = (1-s) { ((1-s)/s - R1)**2 / R2**2 + 4 / (N R2) }**0.5
    """
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0) or np.any(s >= 1):
        raise ValueError("approx_gap needs 0 < s < 1")
    R1, R2 = r1(n), r2(n)
    N = 2.0**n
    x = (1.0 - s) / s - R1
    return (1.0 - s) * np.sqrt(x**2 / R2**2 + 4.0 / (N * R2))


def _secular(n: int, s: float):
    w = np.exp(log_binomial_weights(n))
    r = np.arange(n + 1)
    rhs = (1.0 - s) / s

    def f(lam):
        with np.errstate(over="ignore", divide="ignore"):
            return np.sum(w / (r - lam)) - rhs

    return f


def eigenvalue_equation_roots(n: int, s: float, bracket: tuple[float, float] | None = None):
    """Roots lambda of (1-s)/s = (1/N) sum_r C(n, r) / (r - lambda).

    Without ``bracket`` all n+1 roots are returned in ascending order: one
    below 0 and one between each pair of adjacent poles r-1, r. Energies follow
    as E_k = s + (1-s) lambda_k (see :func:`energies_from_roots`). With a
    bracket that straddles no pole, the single root inside it is returned.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("need 0 < s < 1")
    f = _secular(n, s)
    if bracket is not None:
        lo, hi = map(float, bracket)
        flo, fhi = f(lo), f(hi)
        if not (np.isfinite(flo) and np.isfinite(fhi)) or flo * fhi > 0:
            raise ConvergenceError(f"no sign change of the eigenvalue equation on [{lo}, {hi}]")
        return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    roots = np.empty(n + 1)
    lo = -(s / (1.0 - s) + 1.0)
    roots[0] = _root_between(f, lo, 0.0)
    for r in range(1, n + 1):
        roots[r] = _root_between(f, float(r - 1), float(r))
    return roots


def _root_between(f, lo: float, hi: float) -> float:
    # step one ulp inside each pole; if the root sits closer to a pole than
    # that, the pole itself is the best double-precision answer
    a, b = np.nextafter(lo, hi), np.nextafter(hi, lo)
    fa, fb = f(a), f(b)
    if fa > 0:
        return float(a)
    if fb < 0:
        return float(b)
    return brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def energies_from_roots(s: float, roots):
    return s + (1.0 - s) * np.asarray(roots)


def _eigensystem(system, s: float):
    a, b = 1.0 - s, s
    if isinstance(system, ACModel):
        return build_ac_hamiltonian(system, s).eigh()
    if system.is_line:
        d, e = line_arrays(system.n, a, b)
        return eigh_tridiagonal(d, e)
    return build_hamiltonian(system, a, b).eigh()


def ground_overlaps(system, s: float | None = None) -> OverlapReport:
    """Overlaps of |psi_init> and |m> with |E0>, |E1> of (1-s) H0 + s Hp.

    The default s is beta_o (s = 1/2 for the avoided-crossing model), the
    quantum-walk point at which ``p_max_qw`` is the two-level bound on the
    walk's success probability.
    """
    system = _as_system(system)
    if s is None:
        s = 0.5 if isinstance(system, ACModel) else optimal_beta(system.n)
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    w, V = _eigensystem(system, float(s))
    if w[1] - w[0] < DEGENERACY_TOL * max(1.0, abs(w[-1])):
        raise NumericalError(f"degenerate ground state at s={s!r}")
    psi = system.initial_state()
    m = system.marked_index
    ci = (V.T @ psi) ** 2
    cm = V[m, :] ** 2
    return OverlapReport(float(s), float(ci[0]), float(ci[1]), float(cm[0]), float(cm[1]),
                         float(np.sum(ci[2:])), float(np.sum(cm[2:])))


def _ground_vector(system, s: float) -> np.ndarray:
    w, V = _eigensystem(system, s)
    return V[:, 0]


def transition_width(n: int, p: float, system=None) -> tuple[float, float, float]:
    """Width w = s_high - s_low of the ground-state rotation.

    s_low is the largest s at which the ground state still overlaps the
    initial state with probability >= p; s_high is the smallest s at which it
    overlaps the marked state with probability >= p. The first overlap falls
    and the second rises monotonically with s, so both are located by
    bisection on [0, 1] to 1e-12.
    """
    if not 0.5 < p < 1.0:
        raise ValueError("threshold p must lie in (0.5, 1)")
    system = SearchSystem.line(n) if system is None else system
    psi = system.initial_state()
    m = system.marked_index

    def init_excess(s):
        return float(np.dot(_ground_vector(system, s), psi) ** 2) - p

    def marked_excess(s):
        return float(_ground_vector(system, s)[m] ** 2) - p

    if not init_excess(0.0) >= 0 > init_excess(1.0):
        raise ConvergenceError("initial-state overlap threshold not attained in [0, 1]")
    if not marked_excess(0.0) < 0 <= marked_excess(1.0):
        raise ConvergenceError("marked-state overlap threshold not attained in [0, 1]")
    s_low = bisect(init_excess, 0.0, 1.0, xtol=S_TOL)
    s_high = bisect(marked_excess, 0.0, 1.0, xtol=S_TOL)
    return s_low, s_high, s_high - s_low
