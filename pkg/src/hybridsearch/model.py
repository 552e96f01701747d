"""Hamiltonians for search on the hypercube and the two-level avoided-crossing model.

Two representations of the same hypercube problem are supported:

* ``FULL_SPACE`` -- the 2**n vertex basis, dense real-symmetric storage.
* ``SYMMETRIC_LINE`` -- the (n+1)-dimensional Hamming-weight (Dicke) basis
  |w_r>, r = 0..n, with the marked vertex gauge-fixed to all-zeros so that it
  is |w_0>. The driver is tridiagonal in this basis and the problem term is
  diagonal.

Vertex j is identified with the bitstring ``format(j, f"0{n}b")``; the
leftmost character is qubit 1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .exceptions import CapacityError

#: Largest n for which dense 2**n state vectors are allowed.
FULL_SPACE_MAX_N = 14
#: Largest n for which 2**n x 2**n density matrices are allowed.
OPEN_SYSTEM_MAX_N = 10
#: Largest n for the symmetric-subspace representation.
LINE_MAX_N = 200
#: Above this n, FullSpace matrices are not materialised densely (2**12 x 2**12 doubles = 128 MB).
DENSE_MATRIX_MAX_N = 12


class Representation(enum.Enum):
    FULL_SPACE = "full"
    SYMMETRIC_LINE = "line"


class Storage(enum.Enum):
    DENSE_SYMMETRIC = "dense"
    SYMMETRIC_TRIDIAGONAL = "tridiagonal"


@dataclass(frozen=True)
class SearchSystem:
    """An n-qubit hypercube search instance.

    ``marked`` is an n-character bitstring. In the symmetric-line
    representation it must be all zeros; use :meth:`gauge_fixed` to obtain the
    equivalent line system for any marked vertex.
    """

    n: int
    marked: str | None = None
    representation: Representation = Representation.FULL_SPACE

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")
        rep = Representation(self.representation)
        object.__setattr__(self, "representation", rep)
        marked = "0" * self.n if self.marked is None else str(self.marked)
        _check_bitstring(marked, self.n)
        object.__setattr__(self, "marked", marked)
        if rep is Representation.SYMMETRIC_LINE:
            if self.n > LINE_MAX_N:
                raise CapacityError(f"line representation limited to n <= {LINE_MAX_N}")
            if marked != "0" * self.n:
                raise ValueError("line representation requires the gauge-fixed marked vertex 0...0")
        elif self.n > FULL_SPACE_MAX_N:
            raise CapacityError(f"full-space representation limited to n <= {FULL_SPACE_MAX_N}")

    @classmethod
    def line(cls, n: int) -> "SearchSystem":
        return cls(n, None, Representation.SYMMETRIC_LINE)

    @classmethod
    def full(cls, n: int, marked: str | None = None) -> "SearchSystem":
        return cls(n, marked, Representation.FULL_SPACE)

    @property
    def N(self) -> int:
        return 2**self.n

    @property
    def dim(self) -> int:
        if self.representation is Representation.SYMMETRIC_LINE:
            return self.n + 1
        return self.N

    @property
    def marked_index(self) -> int:
        """Index of the marked basis state in this representation."""
        if self.representation is Representation.SYMMETRIC_LINE:
            return 0
        return int(self.marked, 2)

    @property
    def is_line(self) -> bool:
        return self.representation is Representation.SYMMETRIC_LINE

    def gauge_fixed(self) -> "SearchSystem":
        """The symmetric-line system equivalent to this one."""
        return SearchSystem.line(self.n)

    def initial_state(self) -> np.ndarray:
        """Uniform superposition over vertices, expressed in this representation."""
        if self.is_line:
            return binomial_amplitudes(self.n)
        return np.full(self.N, 1.0 / np.sqrt(self.N))

    def marked_state(self) -> np.ndarray:
        e = np.zeros(self.dim)
        e[self.marked_index] = 1.0
        return e


@dataclass(frozen=True)
class ACModel:
    """Two-level single-avoided-crossing model.

    Basis index 0 is the marked state |0> and index 1 the initial state |1>.
    ``q`` shifts the crossing position by adding (q/2) g_min sigma_z.
    """

    g_min: float
    q: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.g_min) or self.g_min <= 0:
            raise ValueError(f"g_min must be > 0, got {self.g_min!r}")
        if not np.isfinite(self.q):
            raise ValueError("q must be finite")

    dim = 2
    marked_index = 0
    N = 2

    def initial_state(self) -> np.ndarray:
        return np.array([0.0, 1.0])

    def marked_state(self) -> np.ndarray:
        return np.array([1.0, 0.0])

    def shifted(self, q: float) -> "ACModel":
        return ACModel(self.g_min, q)


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    """Real symmetric matrix in dense or symmetric-tridiagonal storage.

    For tridiagonal storage ``data`` holds the diagonal and ``offdiag`` the
    first super-diagonal; symmetry then holds by construction.
    """

    storage: Storage
    data: np.ndarray
    offdiag: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def to_dense(self) -> np.ndarray:
        if self.storage is Storage.DENSE_SYMMETRIC:
            return self.data
        return np.diag(self.data) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (ascending) and orthonormal eigenvectors as columns."""
        if "eigh" not in self._cache:
            if self.storage is Storage.SYMMETRIC_TRIDIAGONAL:
                if self.dim == 1:
                    res = self.data.copy(), np.ones((1, 1))
                else:
                    res = eigh_tridiagonal(self.data, self.offdiag)
            else:
                res = np.linalg.eigh(self.data)
            self._cache["eigh"] = res
        return self._cache["eigh"]

    def eigvalsh(self) -> np.ndarray:
        if "eigh" in self._cache:
            return self._cache["eigh"][0]
        if self.storage is Storage.SYMMETRIC_TRIDIAGONAL:
            if self.dim == 1:
                return self.data.copy()
            return eigh_tridiagonal(self.data, self.offdiag, eigvals_only=True)
        return np.linalg.eigvalsh(self.data)

    def is_symmetric(self) -> bool:
        if self.storage is Storage.SYMMETRIC_TRIDIAGONAL:
            return True
        return bool(np.array_equal(self.data, self.data.T))


def _check_bitstring(m: str, n: int) -> None:
    if len(m) != n:
        raise ValueError(f"marked label {m!r} has length {len(m)}, expected n={n}")
    if set(m) - {"0", "1"}:
        raise ValueError(f"marked label {m!r} is not a bitstring")


def _check_coefficients(a: float, b: float) -> None:
    if a < 0 or b < 0:
        raise ValueError(f"coefficients must be non-negative, got a={a}, b={b}")


def log_binomial_weights(n: int) -> np.ndarray:
    """log(C(n, r) / 2**n) for r = 0..n."""
    r = np.arange(n + 1)
    return gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1) - n * np.log(2.0)


def binomial_amplitudes(n: int) -> np.ndarray:
    """Components sqrt(C(n, r) / N) of the uniform superposition in the Dicke basis."""
    return np.exp(0.5 * log_binomial_weights(n))


def ladder_elements(n: int) -> np.ndarray:
    """<w_{r+1}| S_x |w_r> = sqrt((r+1)(n-r))/2 for r = 0..n-1 (spin j = n/2)."""
    r = np.arange(n, dtype=float)
    return 0.5 * np.sqrt((r + 1.0) * (n - r))


def hamming_weights(n: int, marked: str | None = None) -> np.ndarray:
    """Hamming distance of every vertex from the marked vertex."""
    j = np.arange(2**n, dtype=np.int64)
    if marked is not None:
        j = j ^ int(marked, 2)
    w = np.zeros(2**n, dtype=np.int64)
    for k in range(n):
        w += (j >> k) & 1
    return w


def build_full_hamiltonian(system: SearchSystem, a: float, b: float) -> HamiltonianMatrix:
    """Dense a*H0 + b*Hp with H0 = (n - sum_j X_j)/2 and Hp = 1 - |m><m|."""
    if system.is_line:
        raise ValueError("build_full_hamiltonian needs a FULL_SPACE system")
    _check_coefficients(a, b)
    n = system.n
    if n > DENSE_MATRIX_MAX_N:
        raise CapacityError(f"dense 2**n matrices limited to n <= {DENSE_MATRIX_MAX_N}; "
                            "use the matrix-free dynamics or the line representation")
    N = system.N
    H = np.zeros((N, N))
    idx = np.arange(N)
    for k in range(n):
        H[idx, idx ^ (1 << k)] = -0.5 * a
    H[idx, idx] = 0.5 * a * n + b
    m = system.marked_index
    H[m, m] -= b
    return HamiltonianMatrix(Storage.DENSE_SYMMETRIC, H)


def line_arrays(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and super-diagonal of the line Hamiltonian (no validation)."""
    diag = np.full(n + 1, 0.5 * a * n + b)
    diag[0] -= b
    return diag, -a * ladder_elements(n)


def build_line_hamiltonian(system: SearchSystem, a: float, b: float) -> HamiltonianMatrix:
    """Tridiagonal a*(n/2 - S_x) + b*(1 - |w_0><w_0|) in the Dicke basis."""
    if not system.is_line:
        raise ValueError("build_line_hamiltonian needs a SYMMETRIC_LINE system")
    _check_coefficients(a, b)
    diag, off = line_arrays(system.n, a, b)
    return HamiltonianMatrix(Storage.SYMMETRIC_TRIDIAGONAL, diag, off)


def build_hamiltonian(system: SearchSystem, a: float, b: float) -> HamiltonianMatrix:
    if system.is_line:
        return build_line_hamiltonian(system, a, b)
    return build_full_hamiltonian(system, a, b)


def ac_components(model: ACModel, a: float, b: float) -> tuple[float, float, float]:
    """(identity, sigma_x, sigma_z) coefficients of a*H0 + b*Hp + shift."""
    h0 = 0.5 * (a + b)
    hx = -a * model.g_min
    hz = 0.5 * (a - b) + 0.5 * model.q * model.g_min
    return h0, hx, hz


def build_ac_hamiltonian(model: ACModel, s: float, a: float | None = None,
                         b: float | None = None) -> HamiltonianMatrix:
    """(1-s){(1+Z)/2 - g X} + s (1-Z)/2 + (q/2) g Z.

    Passing ``a`` and ``b`` replaces (1-s, s) by general hybrid coefficients.
    """
    if a is None or b is None:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"s must lie in [0, 1], got {s}")
        a, b = 1.0 - s, s
    h0, hx, hz = ac_components(model, a, b)
    H = np.array([[h0 + hz, hx], [hx, h0 - hz]])
    return HamiltonianMatrix(Storage.DENSE_SYMMETRIC, H)


def gauge_map(m: str, n: int | None = None):
    """Relabeling v -> v XOR m that sends the marked vertex to all-zeros.

    Returns a function acting on bitstrings or on integer vertex indices.
    """
    if n is None:
        n = len(m)
    _check_bitstring(m, n)
    mask = int(m, 2)

    def relabel(vertex):
        if isinstance(vertex, str):
            _check_bitstring(vertex, n)
            return format(int(vertex, 2) ^ mask, f"0{n}b")
        return np.asarray(vertex) ^ mask if np.ndim(vertex) else int(vertex) ^ mask

    return relabel


def gauge_permutation(m: str) -> np.ndarray:
    """Index permutation P with (P x)[v] = x[v XOR m]; an involution."""
    return np.arange(2 ** len(m)) ^ int(m, 2)
