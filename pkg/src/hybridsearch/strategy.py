"""Multi-run strategy optimisation, misspecification convolutions and scaling fits.

A strategy repeats a search of duration t_f, each run costing an extra
initialisation time t_init, until the cumulative success probability
1 - (1 - P)**r reaches a target. The optimiser minimises r (t_f + t_init) over
precomputed success-probability surfaces P[alpha, t_f].
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.interpolate import RegularGridInterpolator

from .exceptions import InfeasibleError, NumericalError

R_MAX = 1000
QUADRATURE_NODES = 129


@dataclass(frozen=True)
class StrategyOutcome:
    alpha_o: float
    t_f_o: float
    r_o: int
    total_time: float
    achieved: float
    single_run: float


class MisspecKind(enum.Enum):
    GAP_SIZE = "gap"
    CROSSING_POSITION = "position"


@dataclass(frozen=True)
class MisspecConfig:
    kind: MisspecKind
    delta: float
    quadrature_nodes: int = QUADRATURE_NODES

    def __post_init__(self):
        object.__setattr__(self, "kind", MisspecKind(self.kind))
        if not np.isfinite(self.delta) or self.delta < 0:
            raise ValueError(f"delta must be finite and >= 0, got {self.delta}")
        if self.quadrature_nodes < 1:
            raise ValueError("need at least one quadrature node")

    @classmethod
    def parse(cls, text: str, quadrature_nodes: int = QUADRATURE_NODES) -> "MisspecConfig":
        """Parse ``kind:delta``, e.g. ``gap:0.3`` or ``position:0.5``."""
        try:
            kind, delta = text.split(":")
            return cls(MisspecKind(kind.strip()), float(delta), quadrature_nodes)
        except ValueError as exc:
            raise ValueError(f"misspecification must look like 'gap:0.3' or 'position:0.5', got {text!r}") from exc


class FitModel(enum.Enum):
    POWER_LAW = "power"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class FitResult:
    """y = prefactor * n**exponent (power law) or prefactor * exp(exponent * n)."""

    model: FitModel
    prefactor: float
    exponent: float
    r_squared: float

    def __call__(self, n):
        n = np.asarray(n, float)
        if self.model is FitModel.POWER_LAW:
            return self.prefactor * n**self.exponent
        return self.prefactor * np.exp(self.exponent * n)


# ---------------------------------------------------------------------------
# run counting


def cumulative_success(p, r):
    """1 - (1 - p)**r, accurate for small p."""
    p = np.asarray(p, float)
    r = np.asarray(r, float)
    with np.errstate(divide="ignore"):
        out = -np.expm1(r * np.log1p(-np.minimum(p, 1.0)))
    # a single run succeeds with exactly p
    return np.where(r == 1, p, out)


def runs_needed(p: float, target: float, r_max: int = R_MAX) -> int | None:
    """Smallest r with 1 - (1-p)**r >= target, or None if that exceeds r_max."""
    if p >= target:
        return 1
    if p <= 0:
        return None
    if p >= 1:
        return 1
    estimate = math.log1p(-target) / math.log1p(-p)
    if not np.isfinite(estimate) or estimate > r_max + 1:
        return None
    r = max(1, int(math.ceil(estimate)))
    # guard the ceil against rounding on either side
    while r > 1 and cumulative_success(p, r - 1) >= target:
        r -= 1
    while cumulative_success(p, r) < target:
        r += 1
    return r if r <= r_max else None


def runs_table(P: np.ndarray, target: float, r_max: int = R_MAX) -> np.ndarray:
    """Elementwise :func:`runs_needed`; infeasible cells hold 0."""
    P = np.asarray(P, float)
    out = np.zeros(P.shape, dtype=np.int64)
    for idx, p in np.ndenumerate(P):
        r = runs_needed(float(p), target, r_max)
        out[idx] = 0 if r is None else r
    return out


def _pick(totals, runs, t_grid, a_grid):
    """Index of the minimal total time with ties to smaller r, t_f, alpha."""
    feasible = runs > 0
    if not feasible.any():
        return None
    best = np.min(totals[feasible])
    tie = feasible & (totals <= best * (1 + 1e-12) + 1e-300)
    cand = np.argwhere(tie)
    keys = [(runs[i, j], t_grid[j], a_grid[i]) for i, j in cand]
    k = min(range(len(keys)), key=keys.__getitem__)
    return tuple(cand[k])


def multirun_optimize(P_surface, target: float, t_init: float, alphas, t_fs,
                      r_max: int = R_MAX) -> StrategyOutcome:
    """Exhaustive minimisation of r (t_f + t_init) over an (alpha, t_f) grid.

    Args:
        P_surface: array P[alpha, t_f] of single-run success probabilities, or a
            callable (alpha, t_f) -> probability evaluated on the grid.
        target: required cumulative success probability.
        t_init: per-run initialisation time.
        alphas, t_fs: grid axes.
        r_max: largest admissible number of runs.

    Raises:
        InfeasibleError: no grid point reaches the target within r_max runs.
    """
    alphas = np.atleast_1d(np.asarray(alphas, float))
    t_fs = np.atleast_1d(np.asarray(t_fs, float))
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    if t_init < 0:
        raise ValueError("t_init must be >= 0")
    if alphas.size == 0 or t_fs.size == 0:
        raise ValueError("grids must be non-empty")
    if callable(P_surface):
        P = np.array([[P_surface(a, t) for t in t_fs] for a in alphas], float)
    else:
        P = np.asarray(P_surface, float)
    if P.shape != (alphas.size, t_fs.size):
        raise ValueError(f"surface shape {P.shape} does not match grids {(alphas.size, t_fs.size)}")
    runs = runs_table(P, target, r_max)
    totals = runs * (t_fs[None, :] + t_init)
    pick = _pick(totals, runs, t_fs, alphas)
    if pick is None:
        raise InfeasibleError(f"no grid point reaches {target} within {r_max} runs")
    i, j = pick
    r = int(runs[i, j])
    return StrategyOutcome(float(alphas[i]), float(t_fs[j]), r, float(totals[i, j]),
                           float(cumulative_success(P[i, j], r)), float(P[i, j]))


@dataclass(frozen=True, eq=False)
class StrategyMap:
    """Optimal protocol over a (row, column) parameter grid; infeasible cells are NaN / 0."""

    row_axis: np.ndarray
    col_axis: np.ndarray
    alpha_o: np.ndarray
    r_o: np.ndarray
    t_f_o: np.ndarray
    total_time: np.ndarray

    @property
    def feasible(self) -> np.ndarray:
        return self.r_o > 0


def strategy_map(P_surface, alphas, t_fs, targets, t_inits, r_max: int = R_MAX) -> StrategyMap:
    """Optimal (alpha, t_f, r) for every (t_init, target) pair on one surface.

    Rows index ``t_inits`` and columns ``targets``.
    """
    alphas = np.atleast_1d(np.asarray(alphas, float))
    t_fs = np.atleast_1d(np.asarray(t_fs, float))
    targets = np.atleast_1d(np.asarray(targets, float))
    t_inits = np.atleast_1d(np.asarray(t_inits, float))
    P = np.asarray(P_surface, float)
    shape = (t_inits.size, targets.size)
    a_o = np.full(shape, np.nan)
    tf_o = np.full(shape, np.nan)
    tot = np.full(shape, np.nan)
    r_o = np.zeros(shape, dtype=np.int64)
    for jc, target in enumerate(targets):
        runs = runs_table(P, float(target), r_max)
        for ir, t_init in enumerate(t_inits):
            totals = runs * (t_fs[None, :] + t_init)
            pick = _pick(totals, runs, t_fs, alphas)
            if pick is None:
                continue
            i, j = pick
            a_o[ir, jc], tf_o[ir, jc] = alphas[i], t_fs[j]
            r_o[ir, jc], tot[ir, jc] = runs[i, j], totals[i, j]
    return StrategyMap(t_inits, targets, a_o, r_o, tf_o, tot)


def interpolate_surface(P_surface, alphas, t_fs):
    """Bilinear interpolant (alpha, t_f) -> P of a precomputed surface."""
    f = RegularGridInterpolator((np.asarray(alphas, float), np.asarray(t_fs, float)),
                                np.asarray(P_surface, float), method="linear")
    return lambda a, t: f(np.stack(np.broadcast_arrays(a, t), axis=-1))


# ---------------------------------------------------------------------------
# misspecification


def gauss_hermite(nodes: int = QUADRATURE_NODES) -> tuple[np.ndarray, np.ndarray]:
    """Nodes x_i and weights w_i (summing to one) for expectations over N(0, 1)."""
    x, w = hermegauss(int(nodes))
    return x, w / w.sum()


def _significant(x, w, cutoff: float = 1e-18):
    # weights below the cutoff cannot change a probability in double precision
    keep = w > cutoff * w.max()
    return x[keep], w[keep] / w[keep].sum()


def misspec_gap(P_curve, delta: float, t_f, nodes: int = QUADRATURE_NODES):
    """Success probability with a Gaussian-uncertain energy scale.

    P(t_f, delta) = E[P(|t'|)] with t' ~ N(t_f, (delta t_f)**2), evaluated by
    Gauss-Hermite quadrature. ``P_curve`` maps an array of runtimes to success
    probabilities and is called once with every required runtime.
    """
    if not np.isfinite(delta) or delta < 0:
        raise ValueError("delta must be finite and >= 0")
    t_f = np.asarray(t_f, float)
    if delta == 0:
        return np.asarray(P_curve(t_f), float)
    x, w = gauss_hermite(nodes)
    t_prime = np.abs(t_f[..., None] * (1.0 + delta * x))
    vals = np.asarray(P_curve(t_prime.ravel()), float).reshape(t_prime.shape)
    if not np.all(np.isfinite(vals)):
        raise NumericalError("non-finite integrand in gap misspecification")
    return vals @ w


def misspec_position(ac, alpha, t_f, delta: float, nodes: int = QUADRATURE_NODES,
                     steps: int | None = None, schedule=None, beta: float = 0.5):
    """Success probability averaged over a Gaussian crossing shift q ~ N(0, delta**2).

    ``ac`` supplies g_min; ``alpha`` and ``t_f`` may be arrays, in which case
    the result has shape (len(alpha), len(t_f)).
    """
    from .dynamics import MIN_STEPS, ac_success_surface

    if not np.isfinite(delta) or delta < 0:
        raise ValueError("delta must be finite and >= 0")
    steps = MIN_STEPS if steps is None else steps
    scalar = np.ndim(alpha) == 0 and np.ndim(t_f) == 0
    if delta == 0:
        x, w = np.zeros(1), np.ones(1)
    else:
        x, w = _significant(*gauss_hermite(nodes))
    P = ac_success_surface(ac.g_min, alpha, t_f, ac.q + delta * x, schedule=schedule,
                           beta=beta, steps=steps)
    if not np.all(np.isfinite(P)):
        raise NumericalError("non-finite integrand in position misspecification")
    out = P @ w
    return float(out[0, 0]) if scalar else out


def gap_misspec_surface(g_min: float, alphas, t_fs, delta: float, nodes: int = QUADRATURE_NODES,
                        steps: int | None = None, schedule=None, beta: float = 0.5) -> np.ndarray:
    """P[alpha, t_f] for the avoided-crossing model under gap misspecification."""
    from .dynamics import MIN_STEPS, ac_success_surface

    steps = MIN_STEPS if steps is None else steps
    alphas = np.atleast_1d(np.asarray(alphas, float))
    t_fs = np.atleast_1d(np.asarray(t_fs, float))
    if delta == 0:
        return ac_success_surface(g_min, alphas, t_fs, 0.0, schedule, beta, steps)[:, :, 0]
    x, w = _significant(*gauss_hermite(nodes))
    t_prime = np.abs(t_fs[:, None] * (1.0 + delta * x))
    P = ac_success_surface(g_min, alphas, t_prime.ravel(), 0.0, schedule, beta, steps)[:, :, 0]
    return P.reshape(alphas.size, t_fs.size, x.size) @ w


# ---------------------------------------------------------------------------
# noisy strategies


def noisy_strategy(system, kappas, alphas, t_fs, targets, t_inits, schedule, beta: float,
                   steps: int | None = None, r_max: int = R_MAX):
    """Strategy maps for each dephasing rate.

    Returns ``(surface, maps)`` with surface[alpha, t_f, kappa] and one
    :class:`StrategyMap` per kappa.
    """
    from .dynamics import open_success_surface

    surface = open_success_surface(system, alphas, beta, schedule, t_fs, kappas, steps)
    maps = [strategy_map(surface[:, :, k], alphas, t_fs, targets, t_inits, r_max)
            for k in range(surface.shape[2])]
    return surface, maps


# ---------------------------------------------------------------------------
# scaling fits


def scaling_fit(points, model: FitModel | str = FitModel.POWER_LAW, fit_range=None) -> FitResult:
    """Least-squares line on log-log (power law) or semilog (exponential) axes.

    ``r_squared`` is 1 - SS_res / SS_tot of the transformed data about the
    fitted line.
    """
    model = FitModel(model)
    pts = np.asarray(points, float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be a sequence of (n, y) pairs")
    n, y = pts[:, 0], pts[:, 1]
    if fit_range is not None:
        lo, hi = fit_range
        keep = (n >= lo) & (n <= hi)
        n, y = n[keep], y[keep]
    if n.size < 3:
        raise ValueError("need at least three points to fit")
    if np.any(y <= 0):
        raise ValueError("log transform needs positive y values")
    if model is FitModel.POWER_LAW and np.any(n <= 0):
        raise ValueError("log-log fit needs positive n")
    X = np.log(n) if model is FitModel.POWER_LAW else n
    Y = np.log(y)
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    ss_tot = np.sum((Y - Y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(model, float(np.exp(intercept)), float(slope), float(r2))
