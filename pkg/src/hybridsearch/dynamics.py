"""Closed- and open-system time evolution under hybrid search Hamiltonians.

Every propagator is piecewise constant: step k uses the coefficients A, B at
the midpoint of its tau interval and applies exp(-i H dt) exactly.

* Line representation: eigendecomposition of the tridiagonal matrix per step.
* Avoided-crossing model: closed-form SU(2) exponential.
* Full space: a matrix-free exact step. The driver factorises over qubits and
  the problem term only acts inside the symmetric subspace around the marked
  vertex, so

      exp(-i dt (a H0 + b Hp)) = e^{-i b dt} K + E (U_line - e^{-i b dt} K_line) E^T,

  with K = exp(-i a dt H0) a Kronecker product of single-qubit factors, E the
  isometric embedding of the Dicke states |w_r> into the vertex basis and
  U_line, K_line the corresponding (n+1)-dimensional exponentials.

Dephasing (open systems) multiplies every vertex-basis coherence by
exp(-kappa dt) and is interleaved by Strang splitting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from .exceptions import CapacityError, NumericalError
from .model import (
    OPEN_SYSTEM_MAX_N,
    ACModel,
    SearchSystem,
    ac_components,
    hamming_weights,
    line_arrays,
)
from .schedules import HybridSpec, hybrid_coefficients, interpolate_coefficients

MIN_STEPS = 2000
STEPS_PER_UNIT_TIME = 40
CLOSED_NORM_TOL = 1e-9
OPEN_TRACE_TOL = 1e-8
#: Batch size for stacked eigendecompositions of line Hamiltonians.
EIG_CHUNK = 512
#: Up to this dimension open-system steps use dense unitaries and BLAS products.
DENSE_STEP_MAX_N = 512


@dataclass(frozen=True)
class EvolutionConfig:
    """Runtime and discretisation of one evolution.

    ``steps=None`` selects max(2000, ceil(40 * t_f * E_scale)); E_scale is the
    scale of the time-dependent coefficients, which is at most one here.
    ``allow_long`` lifts the 5 pi / g_min runtime cap for schedule-driven runs.
    """

    t_f: float
    steps: int | None = None
    record_stride: int = 1
    allow_long: bool = False

    def __post_init__(self):
        if not np.isfinite(self.t_f) or self.t_f < 0:
            raise ValueError(f"t_f must be finite and >= 0, got {self.t_f}")
        if self.steps is not None and int(self.steps) < 1:
            raise ValueError("steps must be >= 1")
        if int(self.record_stride) < 1:
            raise ValueError("record_stride must be >= 1")

    def resolved_steps(self, energy_scale: float = 1.0) -> int:
        if self.steps is not None:
            return int(self.steps)
        return default_steps(self.t_f, energy_scale)


def default_steps(t_f: float, energy_scale: float = 1.0) -> int:
    return max(MIN_STEPS, int(math.ceil(STEPS_PER_UNIT_TIME * t_f * energy_scale)))


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    times: np.ndarray
    success: np.ndarray
    final_norm_error: float
    steps: int
    final_state: np.ndarray | None = field(default=None, repr=False)

    @property
    def final_success(self) -> float:
        return float(self.success[-1])


# ---------------------------------------------------------------------------
# helpers


@lru_cache(maxsize=64)
def hypercube_min_gap(n: int) -> float:
    from .spectral import min_gap

    return min_gap(SearchSystem.line(n)).g_min


def runtime_cap(system) -> float:
    """5 pi / g_min, the longest runtime studied for schedule-driven searches."""
    g = system.g_min if isinstance(system, ACModel) else hypercube_min_gap(system.n)
    return 5.0 * np.pi / g


def _check_cap(system, spec: HybridSpec, config: EvolutionConfig) -> None:
    if spec.alpha == 0 or config.allow_long:
        return
    if isinstance(system, SearchSystem) and system.n < 2:
        return
    cap = runtime_cap(system)
    if config.t_f > cap * (1 + 1e-12):
        raise ValueError(f"t_f={config.t_f} exceeds the runtime cap 5*pi/g_min={cap:.6g}; "
                         "pass allow_long=True to override")


def _midpoint_coefficients(spec: HybridSpec, steps: int) -> tuple[np.ndarray, np.ndarray]:
    tau = (np.arange(steps) + 0.5) / steps
    A, B = hybrid_coefficients(spec, tau)
    return np.broadcast_to(A, tau.shape).astype(float), np.broadcast_to(B, tau.shape).astype(float)


def _record_indices(steps: int, stride: int) -> np.ndarray:
    idx = np.arange(0, steps + 1, stride)
    if idx[-1] != steps:
        idx = np.append(idx, steps)
    return idx


def _line_eigh_batch(n: int, A: np.ndarray, B: np.ndarray):
    """Stacked eigendecompositions of the line Hamiltonian for coefficient arrays."""
    d0, e0 = line_arrays(n, 1.0, 0.0)
    H0 = np.diag(d0) + np.diag(e0, 1) + np.diag(e0, -1)
    Hp = np.diag(line_arrays(n, 0.0, 1.0)[0])
    return np.linalg.eigh(A[:, None, None] * H0 + B[:, None, None] * Hp)


# ---------------------------------------------------------------------------
# line representation


def _evolve_line(system: SearchSystem, spec: HybridSpec, config: EvolutionConfig,
                 psi0: np.ndarray | None = None) -> EvolutionResult:
    n = system.n
    psi = (system.initial_state() if psi0 is None else np.asarray(psi0)).astype(complex)
    steps = config.resolved_steps()
    dt = config.t_f / steps
    rec = _record_indices(steps, config.record_stride)
    times = rec * dt
    m = system.marked_index
    norm0 = np.vdot(psi, psi).real

    if spec.alpha == 0:
        # static Hamiltonian: exact at every recorded time
        A, B = hybrid_coefficients(spec, 0.5)
        w, V = _line_eigh_batch(n, np.atleast_1d(A), np.atleast_1d(B))
        w, V = w[0], V[0]
        c = V.T @ psi
        amps = V[m] @ (c[:, None] * np.exp(-1j * np.outer(w, times)))
        success = np.abs(amps) ** 2
        success[0] = abs(psi[m]) ** 2
        final = V @ (c * np.exp(-1j * w * config.t_f))
        norm_err = abs(np.vdot(final, final).real - norm0)
        return _finish(times, success, norm_err, steps, final, CLOSED_NORM_TOL)

    A, B = _midpoint_coefficients(spec, steps)
    success = np.empty(rec.size)
    success[0] = abs(psi[m]) ** 2
    j = 1
    for start in range(0, steps, EIG_CHUNK):
        stop = min(steps, start + EIG_CHUNK)
        w, V = _line_eigh_batch(n, A[start:stop], B[start:stop])
        phase = np.exp(-1j * dt * w)
        for i in range(stop - start):
            psi = V[i] @ (phase[i] * (V[i].T @ psi))
            k = start + i + 1
            if j < rec.size and rec[j] == k:
                success[j] = abs(psi[m]) ** 2
                j += 1
    norm_err = abs(np.vdot(psi, psi).real - norm0)
    return _finish(times, success, norm_err, steps, psi, CLOSED_NORM_TOL)


def _finish(times, success, norm_err, steps, final, tol) -> EvolutionResult:
    if not np.all(np.isfinite(success)):
        raise NumericalError("non-finite success probability")
    if norm_err > tol:
        raise NumericalError(f"norm drift {norm_err:.3g} exceeds {tol:g}")
    success = np.clip(success, 0.0, 1.0)
    return EvolutionResult(np.asarray(times, float), success, float(norm_err), int(steps), final)


def line_success_surface(n: int, alphas, beta: float, schedule, t_fs, steps: int | None = None,
                         ) -> np.ndarray:
    """Final success probabilities P[alpha, t_f] in the line representation.

    Every t_f shares the tau-grid and hence the per-step eigendecompositions;
    only the step length differs. ``steps`` defaults to the rule for the
    largest t_f.
    """
    alphas = np.atleast_1d(np.asarray(alphas, float))
    t_fs = np.atleast_1d(np.asarray(t_fs, float))
    if steps is None:
        steps = default_steps(float(t_fs.max()))
    system = SearchSystem.line(n)
    psi0 = system.initial_state().astype(complex)
    dts = t_fs / steps
    out = np.empty((alphas.size, t_fs.size))
    tau = (np.arange(steps) + 0.5) / steps
    for ia, alpha in enumerate(alphas):
        spec = HybridSpec(float(alpha), beta, schedule if alpha > 0 else None)
        if alpha == 0:
            A, B = hybrid_coefficients(spec, 0.5)
            w, V = _line_eigh_batch(n, np.atleast_1d(A), np.atleast_1d(B))
            amps = V[0][0] @ ((V[0].T @ psi0)[:, None] * np.exp(-1j * np.outer(w[0], t_fs)))
            out[ia] = np.abs(amps) ** 2
            continue
        A, B = hybrid_coefficients(spec, tau)
        psi = np.repeat(psi0[:, None], t_fs.size, axis=1)
        for start in range(0, steps, EIG_CHUNK):
            stop = min(steps, start + EIG_CHUNK)
            w, V = _line_eigh_batch(n, A[start:stop], B[start:stop])
            for i in range(stop - start):
                phase = np.exp(-1j * np.outer(w[i], dts))
                psi = V[i] @ (phase * (V[i].T @ psi))
        out[ia] = np.abs(psi[0]) ** 2
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# avoided-crossing model


def _su2_step(p0, p1, hx, hz, dt):
    """Apply exp(-i dt (hx X + hz Z)) to the amplitude pair (p0, p1)."""
    w = np.sqrt(hx * hx + hz * hz)
    c = np.cos(w * dt)
    with np.errstate(invalid="ignore", divide="ignore"):
        sw = np.where(w > 0, np.sin(w * dt) / np.where(w > 0, w, 1.0), dt)
    n0 = c * p0 - 1j * sw * (hz * p0 + hx * p1)
    n1 = c * p1 - 1j * sw * (hx * p0 - hz * p1)
    return n0, n1


def _evolve_ac(model: ACModel, spec: HybridSpec, config: EvolutionConfig) -> EvolutionResult:
    steps = config.resolved_steps()
    dt = config.t_f / steps
    rec = _record_indices(steps, config.record_stride)
    times = rec * dt
    A, B = _midpoint_coefficients(spec, steps)
    p0, p1 = 0.0 + 0.0j, 1.0 + 0.0j
    success = np.empty(rec.size)
    success[0] = 0.0
    j = 1
    for k in range(steps):
        h0, hx, hz = ac_components(model, A[k], B[k])
        p0, p1 = _su2_step(p0, p1, hx, hz, dt)
        ph = np.exp(-1j * h0 * dt)
        p0, p1 = p0 * ph, p1 * ph
        if j < rec.size and rec[j] == k + 1:
            success[j] = abs(p0) ** 2
            j += 1
    final = np.array([p0, p1])
    norm_err = abs(np.vdot(final, final).real - 1.0)
    return _finish(times, success, norm_err, steps, final, CLOSED_NORM_TOL)


def ac_success_surface(g_min: float, alphas, t_fs, qs=0.0, schedule=None, beta: float = 0.5,
                       steps: int = MIN_STEPS) -> np.ndarray:
    """Final success probabilities P[alpha, t_f, q] for the avoided-crossing model.

    ``schedule`` is any callable tau -> s (default: the optimal AC schedule for
    ``g_min``); its shape in tau is shared by every t_f. Global phases are
    dropped since only |<0|psi>|**2 is returned.
    """
    from .schedules import ac_schedule

    alphas = np.atleast_1d(np.asarray(alphas, float))
    t_fs = np.atleast_1d(np.asarray(t_fs, float))
    qs = np.atleast_1d(np.asarray(qs, float))
    if schedule is None:
        schedule = ac_schedule(g_min, epsilon=1.0)
    tau = (np.arange(steps) + 0.5) / steps
    s = np.asarray(schedule(tau), float)
    A = np.empty((alphas.size, steps))
    B = np.empty((alphas.size, steps))
    for i, alpha in enumerate(alphas):
        if alpha == 0:
            A[i], B[i] = 1.0 - beta, beta
        else:
            A[i], B[i] = interpolate_coefficients(float(alpha), beta, s)
    shape = (alphas.size, t_fs.size, qs.size)
    dt = (t_fs / steps)[None, :, None]
    qg = 0.5 * g_min * qs[None, None, :]
    p0 = np.zeros(shape, complex)
    p1 = np.ones(shape, complex)
    for k in range(steps):
        a = A[:, k][:, None, None]
        b = B[:, k][:, None, None]
        hx = -g_min * a
        hz = 0.5 * (a - b) + qg
        p0, p1 = _su2_step(p0, p1, hx, hz, dt)
    return np.clip(np.abs(p0) ** 2, 0.0, 1.0)


def ac_walk_success(g_min: float, t, q: float = 0.0, beta: float = 0.5):
    """Exact P(t) for the static avoided-crossing walk (vectorised over t)."""
    model = ACModel(g_min, q)
    h0, hx, hz = ac_components(model, 1.0 - beta, beta)
    w = np.hypot(hx, hz)
    return (hx / w) ** 2 * np.sin(w * np.asarray(t, float)) ** 2


# ---------------------------------------------------------------------------
# full space


class FullSpaceStepper:
    """Exact matrix-free exp(-i dt (a H0 + b Hp)) on 2**n vertex vectors.

    Works on arrays of shape (2**n, ...) so that batches of states and the
    columns of density matrices are propagated together.
    """

    def __init__(self, system: SearchSystem):
        if system.is_line:
            raise ValueError("FullSpaceStepper needs a FULL_SPACE system")
        self.system = system
        n = self.n = system.n
        N = system.N
        weights = hamming_weights(n, system.marked)
        logc = gammaln(n + 1) - gammaln(weights + 1) - gammaln(n - weights + 1)
        self.E = sp.csr_matrix((np.exp(-0.5 * logc), (np.arange(N), weights)), shape=(N, n + 1))
        self.ET = self.E.T.tocsr()
        d0, e0 = line_arrays(n, 1.0, 0.0)
        H0 = np.diag(d0) + np.diag(e0, 1) + np.diag(e0, -1)
        _, self.V0 = np.linalg.eigh(H0)
        # eigenvalues of the line driver are exactly 0, 1, ..., n
        self.r = np.arange(n + 1, dtype=float)
        self._Hp = np.diag(line_arrays(n, 0.0, 1.0)[0])
        self._H0 = H0

    def line_unitary(self, a: float, b: float, dt: float) -> np.ndarray:
        w, V = np.linalg.eigh(a * self._H0 + b * self._Hp)
        return (V * np.exp(-1j * dt * w)) @ V.T

    def _driver(self, X: np.ndarray, theta: float) -> np.ndarray:
        """Apply prod_j exp(-i theta (1 - X_j)/2)."""
        c0 = 0.5 * (1 + np.exp(-1j * theta))
        c1 = 0.5 * (1 - np.exp(-1j * theta))
        if c1 == 0:
            return X.astype(complex, copy=True)
        N = X.shape[0]
        Y = np.ascontiguousarray(X, dtype=complex).reshape(N, -1)
        for k in range(self.n):
            Z = Y.reshape(2**k, 2, -1)
            lo, hi = Z[:, 0], Z[:, 1]
            Y = np.stack([c0 * lo + c1 * hi, c1 * lo + c0 * hi], axis=1)
        return Y.reshape(X.shape)

    def operator(self, a: float, b: float, dt: float):
        """Return a function applying the step unitary to arrays of shape (N, ...)."""
        U_line = self.line_unitary(a, b, dt)
        theta = a * dt
        pb = np.exp(-1j * b * dt)
        K_line = (self.V0 * np.exp(-1j * theta * self.r)) @ self.V0.T
        D = U_line - pb * K_line

        def apply(X):
            flat = X.reshape(X.shape[0], -1)
            out = pb * self._driver(flat, theta) + self.E @ (D @ (self.ET @ flat))
            return np.asarray(out).reshape(X.shape)

        return apply

    def dense_unitary(self, a: float, b: float, dt: float) -> np.ndarray:
        """The same step as a dense N x N matrix (cheap for small n)."""
        theta = a * dt
        c0 = 0.5 * (1 + np.exp(-1j * theta))
        c1 = 0.5 * (1 - np.exp(-1j * theta))
        K = np.ones((1, 1), complex)
        factor = np.array([[c0, c1], [c1, c0]])
        for _ in range(self.n):
            K = np.kron(K, factor)
        pb = np.exp(-1j * b * dt)
        K_line = (self.V0 * np.exp(-1j * theta * self.r)) @ self.V0.T
        D = self.line_unitary(a, b, dt) - pb * K_line
        Ed = self.E.toarray()
        return pb * K + Ed @ D @ Ed.T


def _evolve_full(system: SearchSystem, spec: HybridSpec, config: EvolutionConfig,
                 psi0: np.ndarray | None = None) -> EvolutionResult:
    stepper = FullSpaceStepper(system)
    psi = (system.initial_state() if psi0 is None else np.asarray(psi0)).astype(complex)
    steps = config.resolved_steps()
    dt = config.t_f / steps
    rec = _record_indices(steps, config.record_stride)
    times = rec * dt
    m = system.marked_index
    A, B = _midpoint_coefficients(spec, steps)
    norm0 = np.vdot(psi, psi).real
    success = np.empty(rec.size)
    success[0] = abs(psi[m]) ** 2
    j = 1
    U = None
    for k in range(steps):
        if U is None or spec.alpha != 0:
            U = stepper.operator(A[k], B[k], dt)
        psi = U(psi)
        if j < rec.size and rec[j] == k + 1:
            success[j] = abs(psi[m]) ** 2
            j += 1
    norm_err = abs(np.vdot(psi, psi).real - norm0)
    return _finish(times, success, norm_err, steps, psi, CLOSED_NORM_TOL)


# ---------------------------------------------------------------------------
# public entry points


def evolve_closed(system, spec: HybridSpec, config: EvolutionConfig,
                  initial_state: np.ndarray | None = None) -> EvolutionResult:
    """Schrodinger evolution from the uniform superposition.

    ``system`` is a :class:`SearchSystem` (either representation) or an
    :class:`ACModel` (which always starts in |1>). The result records
    P(t) = |<m|psi(t)>|**2 every ``record_stride`` steps and at t_f.
    """
    _check_cap(system, spec, config)
    if isinstance(system, ACModel) and initial_state is not None:
        raise ValueError("the avoided-crossing model always starts in |1>")
    if config.t_f == 0:
        return _unevolved(system, config, initial_state)
    if isinstance(system, ACModel):
        return _evolve_ac(system, spec, config)
    if system.is_line:
        return _evolve_line(system, spec, config, initial_state)
    return _evolve_full(system, spec, config, initial_state)


def _unevolved(system, config: EvolutionConfig, psi0) -> EvolutionResult:
    # zero runtime: measure the initial state without accumulating identity steps
    psi = (system.initial_state() if psi0 is None else np.asarray(psi0)).astype(complex)
    steps = config.resolved_steps()
    times = np.zeros(_record_indices(steps, config.record_stride).size)
    if psi0 is None and isinstance(system, SearchSystem):
        p = 1.0 / system.N  # exact, free of the square-root round trip
    else:
        p = abs(psi[system.marked_index]) ** 2 / np.vdot(psi, psi).real
    return EvolutionResult(times, np.full(times.size, p), 0.0, steps, psi)


def _dephase(rho: np.ndarray, decay: np.ndarray) -> np.ndarray:
    """rho_ij -> decay * rho_ij for i != j; ``decay`` broadcasts over the batch axis."""
    diag = np.diagonal(rho, axis1=-2, axis2=-1).copy()
    out = rho * decay[:, None, None]
    idx = np.arange(rho.shape[-1])
    out[:, idx, idx] = diag
    return out


def evolve_open_batch(system: SearchSystem, spec: HybridSpec, config: EvolutionConfig,
                      kappas) -> list[EvolutionResult]:
    """Dephasing evolution for several rates at once (shared unitary steps)."""
    if isinstance(system, ACModel) or system.is_line:
        raise ValueError("open-system evolution needs a FULL_SPACE hypercube system")
    if system.n > OPEN_SYSTEM_MAX_N:
        raise CapacityError(f"density matrices limited to n <= {OPEN_SYSTEM_MAX_N}")
    kappas = np.atleast_1d(np.asarray(kappas, float))
    if np.any(kappas < 0) or not np.all(np.isfinite(kappas)):
        raise ValueError("kappa must be finite and >= 0")
    # the runtime cap only governs closed runs; noisy scans go to t_f = 200
    stepper = FullSpaceStepper(system)
    N = system.N
    m = system.marked_index
    steps = config.resolved_steps()
    dt = config.t_f / steps
    rec = _record_indices(steps, config.record_stride)
    times = rec * dt
    A, B = _midpoint_coefficients(spec, steps)
    psi = system.initial_state()
    rho = np.repeat(np.outer(psi, psi).astype(complex)[None], kappas.size, axis=0)
    decay = np.exp(-kappas * dt)
    success = np.empty((kappas.size, rec.size))
    success[:, 0] = rho[:, m, m].real
    j = 1

    dense = N <= DENSE_STEP_MAX_N

    def left(U, r):
        # U acting on the row index of every matrix in the stack
        return np.moveaxis(U(np.moveaxis(r, 1, 0)), 0, 1)

    def conj_half(U, r):
        if dense:
            Y = U @ r @ U.conj().T
        else:
            # U (U r)^dagger = U r U^dagger for Hermitian r
            Y = left(U, left(U, r).conj().transpose(0, 2, 1))
        return 0.5 * (Y + Y.conj().transpose(0, 2, 1))

    make = stepper.dense_unitary if dense else stepper.operator
    U = None
    for k in range(steps):
        if U is None or spec.alpha != 0:
            U = make(A[k], B[k], 0.5 * dt)
        rho = conj_half(U, rho)
        rho = _dephase(rho, decay)
        rho = conj_half(U, rho)
        if j < rec.size and rec[j] == k + 1:
            success[:, j] = rho[:, m, m].real
            j += 1
    results = []
    for i in range(kappas.size):
        r = rho[i]
        trace_err = abs(np.trace(r).real - 1.0)
        herm_err = float(np.max(np.abs(r - r.conj().T)))
        if herm_err > 1e-10:
            raise NumericalError(f"density matrix lost Hermiticity ({herm_err:.3g})")
        results.append(_finish(times, success[i], trace_err, steps, r, OPEN_TRACE_TOL))
    return results


def evolve_open(system: SearchSystem, spec: HybridSpec, config: EvolutionConfig,
                kappa: float) -> EvolutionResult:
    """Density-matrix evolution with vertex-basis dephasing at rate ``kappa``.

    Each step is half a unitary step, full dephasing of the coherences by
    exp(-kappa dt), then the other half unitary step. P(t) = <m|rho(t)|m>.
    """
    return evolve_open_batch(system, spec, config, [kappa])[0]


def open_success_surface(system: SearchSystem, alphas, beta: float, schedule, t_fs, kappas,
                         steps: int | None = None) -> np.ndarray:
    """P[alpha, t_f, kappa] from single long runs recorded along the way.

    Each alpha is simulated once per t_f; kappas are batched.
    """
    alphas = np.atleast_1d(np.asarray(alphas, float))
    t_fs = np.atleast_1d(np.asarray(t_fs, float))
    kappas = np.atleast_1d(np.asarray(kappas, float))
    out = np.empty((alphas.size, t_fs.size, kappas.size))
    for ia, alpha in enumerate(alphas):
        spec = HybridSpec(float(alpha), beta, schedule if alpha > 0 else None)
        for it, tf in enumerate(t_fs):
            if tf == 0:
                out[ia, it] = 1.0 / system.N
                continue
            cfg = EvolutionConfig(float(tf), steps=steps, record_stride=10**9, allow_long=True)
            res = evolve_open_batch(system, spec, cfg, kappas)
            out[ia, it] = [r.final_success for r in res]
    return out


# ---------------------------------------------------------------------------
# quantum-walk first peak


def qw_first_peak(system, gamma: float, t_max: float | None = None) -> tuple[float, float]:
    """Time and height of the first peak of P(t) under the static walk Hamiltonian.

    The walk Hamiltonian is (1-beta) H0 + beta Hp with beta = 1/(1+gamma).
    Small ripples from higher levels are skipped: the first peak is the first
    local maximum whose height exceeds half the maximum over [0, t_max]
    (default 5 pi / g, g the walk Hamiltonian's gap). A coarse scan brackets it
    and a parabolic fit through the three bracketing samples refines it.
    """
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    beta = 1.0 / (1.0 + gamma)
    if isinstance(system, ACModel):
        from .model import build_ac_hamiltonian

        w, V = build_ac_hamiltonian(system, 0.0, 1.0 - beta, beta).eigh()
        psi, m = system.initial_state(), system.marked_index
    else:
        line = system if system.is_line else system.gauge_fixed()
        w, V = _line_eigh_batch(line.n, np.array([1.0 - beta]), np.array([beta]))
        w, V = w[0], V[0]
        psi, m = line.initial_state(), 0
    amp = V[m] * (V.T @ psi)
    gap = w[1] - w[0]
    if t_max is None:
        t_max = 5.0 * np.pi / gap
    spread = w[-1] - w[0]
    dt = min(2.0 * np.pi / (64.0 * gap), np.pi / (8.0 * spread))
    count = int(min(2_000_000, math.ceil(t_max / dt))) + 1
    t = np.linspace(0.0, t_max, count)

    def P(tt):
        tt = np.atleast_1d(tt)
        out = np.empty(tt.size)
        for s0 in range(0, tt.size, 20000):
            blk = tt[s0:s0 + 20000]
            out[s0:s0 + blk.size] = np.abs(np.exp(-1j * np.outer(blk, w)) @ amp) ** 2
        return out

    p = P(t)
    thresh = 0.5 * p.max()
    inner = (p[1:-1] >= p[:-2]) & (p[1:-1] > p[2:]) & (p[1:-1] >= thresh)
    hits = np.flatnonzero(inner)
    if hits.size == 0:
        raise NumericalError("no peak of P(t) found within the scan window")
    i = hits[0] + 1
    h = t[1] - t[0]
    y0, y1, y2 = p[i - 1], p[i], p[i + 1]
    denom = y0 - 2 * y1 + y2
    shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
    t_peak = float(t[i] + np.clip(shift, -1.0, 1.0) * h)
    return t_peak, float(P(t_peak)[0])


def walk_success(system, gamma: float, times) -> np.ndarray:
    """Exact P(t) for the static walk with hopping rate gamma (line representation)."""
    beta = 1.0 / (1.0 + gamma)
    if isinstance(system, ACModel):
        return ac_walk_success(system.g_min, times, system.q, beta)
    line = system if system.is_line else system.gauge_fixed()
    w, V = _line_eigh_batch(line.n, np.array([1.0 - beta]), np.array([beta]))
    amp = V[0][0] * (V[0].T @ line.initial_state())
    t = np.atleast_1d(np.asarray(times, float))
    return np.abs(np.exp(-1j * np.outer(t, w[0])) @ amp) ** 2
