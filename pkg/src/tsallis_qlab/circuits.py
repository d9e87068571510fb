"""Hadamard test, Shift test and canonical amplitude estimation.

Probability laws are computed exactly from the simulated circuits; sampling
only enters through amplitude estimation, seeded per shot by
``(seed, shot_index)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .blockenc import BlockEncoding
from .linalg import (
    DensityMatrix,
    QueryLedger,
    StatePrepOracle,
    ValidationError,
    check_qubit_budget,
)

HADAMARD = np.array([[1, 1], [1, -1]]) / np.sqrt(2)

#: Qubit budget for the Shift test on ``q`` copies plus its control qubit.
#: The copies are simulated as a density operator (4^(qn) entries), hence
#: the tighter cap than the state-vector budget.
SHIFT_TEST_QUBITS = 12


@dataclass(frozen=True)
class MarkedUnitary:
    """A unitary ``V`` whose first qubit reads 0 with probability ``gamma``.

    ``charge`` holds the (forward, inverse, controlled) oracle queries spent
    per use of ``V``. ``unitary`` may be ``None`` when only the acceptance
    probability is known (enough for the analytic amplitude-estimation mode).
    """

    n_qubits: int
    gamma: float
    unitary: np.ndarray | None = field(default=None, repr=False)
    charge: tuple[int, int, int] = (0, 0, 0)

    @classmethod
    def from_unitary(cls, unitary: np.ndarray,
                     charge: tuple[int, int, int] = (0, 0, 0)) -> "MarkedUnitary":
        u = np.asarray(unitary, dtype=complex)
        n = int(u.shape[0]).bit_length() - 1
        col = u[:, 0]
        gamma = float(np.sum(np.abs(col[: u.shape[0] // 2]) ** 2))
        u.setflags(write=False)
        return cls(n, min(max(gamma, 0.0), 1.0), u, charge)

    @property
    def queries_per_use(self) -> int:
        return sum(self.charge)


@dataclass(frozen=True)
class QAEResult:
    """Amplitude-estimation output.

    ``samples`` holds every single-shot estimate; ``estimate`` is the only
    sample when ``shots == 1`` and their median otherwise.
    """

    estimate: float
    grid_size_M: int
    shots: int
    raw_outcomes: dict = field(repr=False)
    samples: tuple = field(repr=False, default=())


def controlled(u: np.ndarray) -> np.ndarray:
    """``|0><0| ⊗ I + |1><1| ⊗ U`` with the control as the leading qubit."""
    dim = u.shape[0]
    out = np.zeros((2 * dim, 2 * dim), dtype=complex)
    out[:dim, :dim] = np.eye(dim)
    out[dim:, dim:] = u
    return out


def hadamard_test_circuit(u: np.ndarray) -> np.ndarray:
    """``(H ⊗ I) · c-U · (H ⊗ I)``, which equals ``½ [[I+U, I-U], [I-U, I+U]]``."""
    h = np.kron(HADAMARD, np.eye(u.shape[0]))
    return h @ controlled(u) @ h


def _accept_probability(w: np.ndarray, state: np.ndarray) -> float:
    out = w @ state @ w.conj().T
    half = out.shape[0] // 2
    return float(np.real(np.trace(out[:half, :half])))


def hadamard_test_probability(be: BlockEncoding, rho: DensityMatrix) -> float:
    """Pr[control reads 0] for the Hadamard test on ``rho ⊗ |0><0|^(anc)``."""
    if be.alpha != 1:
        raise ValidationError("the Hadamard test needs an alpha = 1 encoding")
    if rho.n_qubits != be.system_qubits:
        raise ValidationError(
            f"state has {rho.n_qubits} qubits, encoding acts on {be.system_qubits}"
        )
    check_qubit_budget(be.n_qubits + 1, "Hadamard test")
    w = hadamard_test_circuit(be.unitary)
    anc0 = np.zeros((2 ** (be.ancillas + 1),) * 2)
    anc0[0, 0] = 1
    # layout [control | ancillas | system]
    return _accept_probability(w, np.kron(anc0, rho.matrix))


def build_hadamard_test_unitary(oracle: StatePrepOracle, be: BlockEncoding) -> MarkedUnitary:
    """Hadamard-test unitary fed by one oracle query.

    Layout ``[control | be ancillas | system (n) | purifier (a)]``; the oracle
    prepares the system register, then the controlled encoding and Hadamards
    act. One use charges one forward query plus ``be.ledger_cost`` controlled
    queries.
    """
    if be.alpha != 1:
        raise ValidationError("the Hadamard test needs an alpha = 1 encoding")
    if be.system_qubits != oracle.n_system:
        raise ValidationError("encoding and oracle act on different system sizes")
    a = oracle.a_ancilla
    check_qubit_budget(1 + be.n_qubits + a, "Hadamard-test unitary")
    x = np.kron(be.unitary, np.eye(2**a))
    prep = np.kron(np.eye(2**be.ancillas), oracle.unitary)
    plus, minus = (prep + x @ prep) / 2, (prep - x @ prep) / 2
    v = np.block([[plus, minus], [minus, plus]])
    return MarkedUnitary.from_unitary(v, charge=(1, 0, be.ledger_cost))


def shift_operator(q: int, n: int) -> np.ndarray:
    """Permutation ``|r_1 r_2 ... r_q> -> |r_q r_1 ... r_{q-1}>`` on n-qubit registers."""
    if q < 2:
        raise ValidationError(f"Shift needs q >= 2, got {q}")
    check_qubit_budget(q * n, "Shift operator", SHIFT_TEST_QUBITS - 1)
    rows = _shift_rows(q, n)
    s = np.zeros((rows.size, rows.size))
    s[rows, np.arange(rows.size)] = 1
    return s


def _shift_rows(q: int, n: int) -> np.ndarray:
    idx = np.arange(2 ** (q * n)).reshape((2**n,) * q)
    return np.moveaxis(idx, 0, -1).reshape(-1)


def tensor_power(m: np.ndarray, q: int) -> np.ndarray:
    out = m
    for _ in range(q - 1):
        out = np.kron(out, m)
    return out


def shift_test_probability(rho: DensityMatrix, q: int) -> float:
    """Pr[x = 0] for the Shift test on ``rho^⊗q``.

    Gates are applied to ``|0><0| ⊗ rho^⊗q`` block-wise: after the first
    Hadamard the state is ``½ [[X, X], [X, X]]``; the controlled shift maps it
    to ``½ [[X, X S†], [S X, S X S†]]``; the final Hadamard's 0-block is the
    quarter-sum of the four blocks.
    """
    if q < 2:
        raise ValidationError(f"Shift test needs q >= 2, got {q}")
    check_qubit_budget(q * rho.n_qubits + 1, "Shift test", SHIFT_TEST_QUBITS)
    x = tensor_power(rho.matrix, q)
    inv = np.argsort(_shift_rows(q, rho.n_qubits))
    idx = np.arange(inv.size)
    # traces of X, X S†, S X and S X S† read off by index, without copies
    accept = (np.trace(x) + x[idx, inv].sum() + x[inv, idx].sum()
              + x[inv, inv].sum()) / 4
    return float(np.real(accept))


def shift_test_unitary(oracle: StatePrepOracle, q: int) -> MarkedUnitary:
    """``U = W · O^⊗q`` as a dense unitary; one use charges q forward queries.

    Layout ``[control | A_1 .. A_q | B_1 .. B_q]``.
    """
    n, a = oracle.n_system, oracle.a_ancilla
    total = 1 + q * (n + a)
    check_qubit_budget(total, "Shift-test unitary")
    o_q = tensor_power(oracle.unitary, q)
    # reorder (A_1 B_1)...(A_q B_q) -> A_1..A_q B_1..B_q
    shape = (2**n, 2**a) * q
    order = list(range(0, 2 * q, 2)) + list(range(1, 2 * q, 2))
    perm = np.arange(o_q.shape[0]).reshape(shape).transpose(order).reshape(-1)
    o_q = o_q[perm][:, perm]
    s = np.kron(shift_operator(q, n), np.eye(2 ** (q * a)))
    v = hadamard_test_circuit(s) @ np.kron(np.eye(2), o_q)
    return MarkedUnitary.from_unitary(v, charge=(q, 0, 0))


def qae_grid_size(eps: float) -> int:
    """``M = 2^ceil(log2(2 pi / eps))``."""
    if not 0 < eps < 1:
        raise ValidationError(f"eps must lie in (0, 1), got {eps}")
    return 2 ** math.ceil(math.log2(2 * math.pi / eps))


def _fejer(delta: np.ndarray, m: int) -> np.ndarray:
    """``|1/M sum_k exp(2 pi i k delta / M)|^2``."""
    num = np.sin(np.pi * delta) ** 2
    den = (m * np.sin(np.pi * delta / m)) ** 2
    on_grid = np.isclose(np.mod(delta + m / 2, m) - m / 2, 0, atol=1e-12)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(on_grid, 1.0, num / np.where(on_grid, 1.0, den))
    return out


def qae_outcome_distribution(gamma: float, m: int) -> np.ndarray:
    """Closed-form law of the phase register for amplitude ``gamma``.

    With ``gamma = sin^2(theta)`` the start state splits evenly over the
    Grover eigenvectors with phases ``±theta/pi``, so
    ``Pr[y] = ½ F(M theta/pi - y) + ½ F(-M theta/pi - y)``.
    """
    theta = math.asin(math.sqrt(min(max(gamma, 0.0), 1.0)))
    y = np.arange(m)
    shift = m * theta / math.pi
    probs = 0.5 * _fejer(shift - y, m) + 0.5 * _fejer(-shift - y, m)
    return probs / probs.sum()


def qae_circuit_distribution(target: MarkedUnitary, m: int) -> np.ndarray:
    """Outcome law of phase estimation on the Grover operator, simulated exactly.

    The register-plus-system state is ``M^-½ sum_k |k> Q^k V|0>`` with
    ``Q = -V S_0 V† S_chi``; the inverse QFT on the register is a DFT over k.
    """
    if target.unitary is None:
        raise ValidationError("full-circuit mode needs the marked unitary itself")
    v = target.unitary
    dim = v.shape[0]
    half = dim // 2
    psi = v[:, 0].copy()
    stack = np.empty((m, dim), dtype=complex)
    stack[0] = psi
    vdag = v.conj().T
    for k in range(1, m):
        w = stack[k - 1].copy()
        w[:half] *= -1  # S_chi: flip the marked (first qubit 0) subspace
        w = vdag @ w
        w[0] *= -1  # S_0 = I - 2|0><0|
        stack[k] = -(v @ w)
    amps = np.fft.fft(stack, axis=0)
    probs = np.sum(np.abs(amps) ** 2, axis=1) / m**2
    return probs / probs.sum()


def shot_rng(seed: int, shot: int) -> np.random.Generator:
    return np.random.default_rng([seed, shot])


def amplitude_estimate(target: MarkedUnitary, eps: float, seed: int,
                       mode: str = "analytic-sampler", shots: int = 1,
                       ledger: QueryLedger | None = None,
                       grid_size: int | None = None) -> QAEResult:
    """Canonical amplitude estimation with ``M = qae_grid_size(eps)``.

    Each shot measures the phase register once and reports
    ``sin^2(pi y / M)``; the ledger is charged ``M`` uses of ``V`` per shot.
    """
    m = grid_size if grid_size is not None else qae_grid_size(eps)
    if mode == "analytic-sampler":
        probs = qae_outcome_distribution(target.gamma, m)
    elif mode == "full-circuit":
        probs = qae_circuit_distribution(target, m)
    else:
        raise ValidationError(f"unknown amplitude-estimation mode {mode!r}")
    if shots < 1:
        raise ValidationError("need at least one shot")
    ys = [int(shot_rng(seed, i).choice(m, p=probs)) for i in range(shots)]
    samples = tuple(math.sin(math.pi * y / m) ** 2 for y in ys)
    hist: dict[float, int] = {}
    for s in samples:
        hist[s] = hist.get(s, 0) + 1
    if ledger is not None:
        f, i, c = target.charge
        ledger.charge(f, i, c, times=m * shots)
    estimate = samples[0] if shots == 1 else float(np.median(samples))
    return QAEResult(estimate, m, shots, dict(sorted(hist.items())), samples)


def median_amplify(run: Callable[[int], float], k: int) -> float:
    """Median of ``k`` single-shot estimates ``run(0), ..., run(k-1)``."""
    if k < 1 or k % 2 == 0:
        raise ValidationError(f"k must be a positive odd integer, got {k}")
    return float(np.median([run(i) for i in range(k)]))
