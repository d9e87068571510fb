"""Dense density-matrix utilities, purifications and exact entropy values.

Everything here is ground truth for the estimators: exact traces of powers,
Tsallis entropies, Hellinger distances and partial traces.

Qubit ordering is big-endian throughout: in a register ``A ⊗ B`` the qubits
of ``A`` are the most significant bits of the basis index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
EIGEN_FLOOR = -1e-10
DIST_TOL = 1e-12
UNITARY_TOL = 1e-10

#: Largest register (in qubits) any dense construction in this package accepts.
MAX_QUBITS = 18


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class QubitBudgetError(ValidationError):
    """Raised when a construction would exceed :data:`MAX_QUBITS`."""


def check_qubit_budget(n_qubits: int, what: str, limit: int = MAX_QUBITS) -> None:
    if n_qubits > limit:
        raise QubitBudgetError(
            f"{what} needs {n_qubits} qubits; the qubit budget is {limit}"
        )


def _as_complex_matrix(matrix) -> np.ndarray:
    arr = np.array(matrix, dtype=complex)
    if arr.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix has non-finite entries")
    return arr


def _n_qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise ValidationError(f"dimension {dim} is not a power of two")
    return n


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    eye = np.eye(u.shape[0])
    return bool(np.linalg.norm(u.conj().T @ u - eye, 2) <= tol)


def clamped_spectrum(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a PSD Hermitian matrix with tiny negatives set to 0."""
    herm = (matrix + matrix.conj().T) / 2
    vals, vecs = np.linalg.eigh(herm)
    return np.clip(vals, 0.0, None), vecs


@dataclass(frozen=True)
class DensityMatrix:
    """A validated n-qubit density operator (Hermitian, PSD, unit trace)."""

    n_qubits: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = _as_complex_matrix(self.matrix)
        dim = 2**self.n_qubits
        if mat.shape != (dim, dim):
            raise ValidationError(
                f"density matrix for {self.n_qubits} qubits must be {dim}x{dim}, "
                f"got {mat.shape}"
            )
        if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_TOL:
            raise ValidationError("density matrix is not Hermitian")
        if abs(np.trace(mat) - 1) > TRACE_TOL:
            raise ValidationError(f"density matrix has trace {float(np.trace(mat).real)!r}")
        if np.min(np.linalg.eigvalsh((mat + mat.conj().T) / 2)) < EIGEN_FLOOR:
            raise ValidationError("density matrix is not positive semidefinite")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_matrix(cls, matrix) -> "DensityMatrix":
        mat = _as_complex_matrix(matrix)
        return cls(_n_qubits_of(mat.shape[0]), mat)

    @classmethod
    def pure(cls, n_qubits: int = 1, index: int = 0) -> "DensityMatrix":
        mat = np.zeros((2**n_qubits, 2**n_qubits), dtype=complex)
        mat[index, index] = 1
        return cls(n_qubits, mat)

    @classmethod
    def maximally_mixed(cls, n_qubits: int = 1) -> "DensityMatrix":
        dim = 2**n_qubits
        return cls(n_qubits, np.eye(dim, dtype=complex) / dim)

    @classmethod
    def diagonal(cls, probabilities) -> "DensityMatrix":
        """Diagonal embedding ``sum_j p_j |j><j|``, zero-padded to a power of two."""
        p = Distribution(probabilities).probabilities
        n = max(int(np.ceil(np.log2(len(p)))), 0) if len(p) > 1 else 0
        padded = np.zeros(2**n)
        padded[: len(p)] = p
        return cls(n, np.diag(padded).astype(complex))

    @classmethod
    def random(cls, n_qubits: int, seed: int, rank: int | None = None) -> "DensityMatrix":
        """Ginibre-ensemble random state of the given rank (full rank by default)."""
        dim = 2**n_qubits
        rng = np.random.default_rng(seed)
        g = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
        mat = g @ g.conj().T
        mat /= np.trace(mat).real
        return cls(n_qubits, (mat + mat.conj().T) / 2)

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def eigenvalues(self) -> np.ndarray:
        return clamped_spectrum(self.matrix)[0]


@dataclass(frozen=True)
class Distribution:
    """A finite probability vector."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float).ravel()
        if p.size < 1:
            raise ValidationError("distribution needs at least one outcome")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValidationError("probabilities must be finite and non-negative")
        if abs(p.sum() - 1) > DIST_TOL:
            raise ValidationError(f"probabilities sum to {float(p.sum())!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    def __len__(self) -> int:
        return self.probabilities.size


def _probs(p) -> np.ndarray:
    return p.probabilities if isinstance(p, Distribution) else Distribution(p).probabilities


@dataclass
class QueryLedger:
    """Exact counts of oracle uses, split by query variant.

    A controlled query counts as a single query; each query is recorded in
    exactly one of the three counters.
    """

    count_forward: int = 0
    count_inverse: int = 0
    count_controlled: int = 0

    def charge(self, forward: int = 0, inverse: int = 0, controlled: int = 0,
               times: int = 1) -> None:
        if min(forward, inverse, controlled, times) < 0:
            raise ValidationError("query charges must be non-negative")
        self.count_forward += forward * times
        self.count_inverse += inverse * times
        self.count_controlled += controlled * times

    @property
    def total(self) -> int:
        return self.count_forward + self.count_inverse + self.count_controlled

    def snapshot(self) -> "QueryLedger":
        return QueryLedger(self.count_forward, self.count_inverse, self.count_controlled)


@dataclass(frozen=True)
class StatePrepOracle:
    """Unitary on ``n_system + a_ancilla`` qubits preparing a purification.

    ``unitary[:, 0]`` is the purified state ``|psi>_AB``; tracing out the last
    ``a_ancilla`` qubits gives the prepared density matrix.
    """

    n_system: int
    a_ancilla: int
    unitary: np.ndarray = field(repr=False)
    ledger: QueryLedger = field(default_factory=QueryLedger, compare=False)

    def __post_init__(self):
        u = _as_complex_matrix(self.unitary)
        dim = 2 ** (self.n_system + self.a_ancilla)
        if u.shape != (dim, dim):
            raise ValidationError(f"oracle unitary must be {dim}x{dim}, got {u.shape}")
        if not is_unitary(u):
            raise ValidationError("oracle matrix is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)

    @property
    def n_qubits(self) -> int:
        return self.n_system + self.a_ancilla

    def prepared_state(self) -> np.ndarray:
        return self.unitary[:, 0]

    def rho(self) -> DensityMatrix:
        psi = self.prepared_state()
        return partial_trace(np.outer(psi, psi.conj()), self.n_system, keep="first")


def purify(rho: DensityMatrix, seed: int = 0) -> StatePrepOracle:
    """Build an oracle preparing ``sum_j sqrt(lambda_j) |psi_j>|j>``.

    The remaining columns of the unitary come from a seeded QR completion, so
    the oracle is a deterministic function of ``(rho, seed)``.
    """
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix.from_matrix(rho)
    n = rho.n_qubits
    check_qubit_budget(2 * n, "purification")
    vals, vecs = clamped_spectrum(rho.matrix)
    vals, vecs = vals[::-1], vecs[:, ::-1]  # largest weight on |0>_B
    dim = rho.dim
    # psi[i, j] = sqrt(lambda_j) <i|psi_j>, flattened row-major is |A>|B>
    psi = (vecs * np.sqrt(vals)[None, :]).reshape(-1)
    psi = psi / np.linalg.norm(psi)

    rng = np.random.default_rng(seed)
    full = dim * dim
    basis = rng.normal(size=(full, full)) + 1j * rng.normal(size=(full, full))
    basis[:, 0] = psi
    q, r = np.linalg.qr(basis)
    q[:, 0] *= r[0, 0] / abs(r[0, 0])
    return StatePrepOracle(n_system=n, a_ancilla=n, unitary=q)


def trace_power(rho: DensityMatrix, q: int) -> float:
    """``tr(rho^q)`` from the clamped spectrum."""
    if q < 1:
        raise ValidationError(f"q must be >= 1, got {q}")
    return float(np.sum(rho.eigenvalues() ** q))


def tsallis_exact(rho: DensityMatrix, q: int) -> float:
    if q < 2:
        raise ValidationError(f"Tsallis order must be an integer >= 2, got {q}")
    return (1.0 - trace_power(rho, q)) / (q - 1)


def tsallis_exact_dist(p, q: int) -> float:
    if q < 2:
        raise ValidationError(f"Tsallis order must be an integer >= 2, got {q}")
    probs = _probs(p)
    return (1.0 - float(np.sum(probs**q))) / (q - 1)


def hellinger(p, r) -> float:
    """Hellinger distance ``sqrt(1/2 sum (sqrt p_j - sqrt r_j)^2)``."""
    a, b = _probs(p), _probs(r)
    if a.size != b.size:
        raise ValidationError(f"support sizes differ: {a.size} vs {b.size}")
    return float(np.sqrt(0.5 * np.sum((np.sqrt(a) - np.sqrt(b)) ** 2)))


def partial_trace(state, n_first: int, keep: str = "first") -> DensityMatrix:
    """Trace out one half of a bipartite density matrix.

    ``n_first`` is the qubit count of the first (most significant) subsystem;
    ``keep`` selects which subsystem survives, ``"first"`` or ``"second"``.
    """
    mat = _as_complex_matrix(state)
    n_total = _n_qubits_of(mat.shape[0])
    if mat.shape[0] != mat.shape[1]:
        raise ValidationError("partial trace needs a square matrix")
    if not 0 <= n_first <= n_total:
        raise ValidationError(f"cannot split {n_total} qubits at {n_first}")
    da, db = 2**n_first, 2 ** (n_total - n_first)
    t = mat.reshape(da, db, da, db)
    if keep == "first":
        out, n = np.einsum("ijkj->ik", t), n_first
    elif keep == "second":
        out, n = np.einsum("ijil->jl", t), n_total - n_first
    else:
        raise ValidationError(f"keep must be 'first' or 'second', got {keep!r}")
    return DensityMatrix(n, (out + out.conj().T) / 2)
