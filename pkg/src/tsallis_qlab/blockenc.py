"""Block-encodings and a spectral QSVT backend.

Register layout convention: ancilla qubits come first (most significant),
system qubits last, so the encoded block is the top-left ``2^n x 2^n``
corner of the unitary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    MAX_QUBITS,
    StatePrepOracle,
    ValidationError,
    check_qubit_budget,
    is_unitary,
)
from .polyapprox import BOUND_SLACK, CERT_GRID, ChebyshevPoly, max_abs_on_grid

HERMITIAN_BLOCK_TOL = 1e-9


@dataclass(frozen=True)
class BlockEncoding:
    """An ``(alpha, ancillas, err)``-block-encoding.

    ``ledger_cost`` is the number of state-preparation queries charged for a
    single use of ``unitary``.
    """

    unitary: np.ndarray = field(repr=False)
    alpha: float
    ancillas: int
    err: float
    system_qubits: int
    ledger_cost: int = 0

    def __post_init__(self):
        u = np.asarray(self.unitary, dtype=complex)
        dim = 2 ** (self.ancillas + self.system_qubits)
        if u.shape != (dim, dim):
            raise ValidationError(f"block-encoding unitary must be {dim}x{dim}, got {u.shape}")
        if self.alpha <= 0 or self.err < 0:
            raise ValidationError("alpha must be positive and err non-negative")
        if not is_unitary(u):
            raise ValidationError("block-encoding matrix is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)

    @property
    def n_qubits(self) -> int:
        return self.ancillas + self.system_qubits


def extract_block(be: BlockEncoding) -> np.ndarray:
    """``alpha (<0|^a ⊗ I) U (|0>^a ⊗ I)``."""
    dim = 2**be.system_qubits
    return be.alpha * np.array(be.unitary[:dim, :dim])


def unitary_dilation(a: np.ndarray, ledger_cost: int = 0) -> BlockEncoding:
    """One-ancilla ``(1, 1, 0)``-block-encoding of any ``A`` with ``||A|| <= 1``.

    Uses the Halmos dilation ``[[A, (I - A A†)^½], [(I - A† A)^½, -A†]]``.
    """
    a = np.asarray(a, dtype=complex)
    n = int(np.log2(a.shape[0]))
    if a.shape != (2**n, 2**n):
        raise ValidationError(f"operator must be 2^n x 2^n, got {a.shape}")
    if np.linalg.norm(a, 2) > 1 + 1e-12:
        raise ValidationError("operator norm exceeds 1")
    eye = np.eye(2**n)
    u = np.block([[a, _psd_sqrt(eye - a @ a.conj().T)],
                  [_psd_sqrt(eye - a.conj().T @ a), -a.conj().T]])
    return BlockEncoding(u, 1.0, 1, 0.0, n, ledger_cost)


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    return (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.conj().T


def density_block_encoding(oracle: StatePrepOracle) -> BlockEncoding:
    """``(1, n + a, 0)``-block-encoding of the prepared state from two queries.

    Registers are ordered ``[A (n) | B (a) | F (n)]``, with the purification's
    registers as ancillas and the fresh register F as the system. The circuit
    is ``(U† ⊗ I_F) · SWAP(A, F) · (U ⊗ I_F)``.
    """
    n, a = oracle.n_system, oracle.a_ancilla
    total = 2 * n + a
    check_qubit_budget(total, "density block-encoding")
    u_ab = np.kron(oracle.unitary, np.eye(2**n))
    swap = _register_swap(n, a)
    w = u_ab.conj().T @ swap @ u_ab
    return BlockEncoding(w, 1.0, n + a, 0.0, n, ledger_cost=2)


def _register_swap(n: int, a: int) -> np.ndarray:
    """Permutation swapping the first and last n-qubit registers of [n | a | n]."""
    dn, da = 2**n, 2**a
    idx = np.arange(dn * da * dn).reshape(dn, da, dn)
    perm = idx.transpose(2, 1, 0).reshape(-1)
    swap = np.zeros((perm.size, perm.size))
    swap[perm, np.arange(perm.size)] = 1
    return swap


def qsvt_apply(be: BlockEncoding, poly: ChebyshevPoly,
               grid_size: int = CERT_GRID) -> BlockEncoding:
    """Spectral stand-in for the QSVT circuit implementing ``p(A)``.

    Diagonalizes the encoded Hermitian block, forms ``P = p(A)`` and embeds it
    as ``[[P, S], [S, -P]]`` with ``S = (I - P^2)^½`` on one fresh ancilla
    (placed first). One use charges ``degree(p)`` uses of ``be``.
    """
    if be.alpha != 1:
        raise ValidationError("qsvt_apply needs an alpha = 1 encoding")
    if poly.parity not in ("even", "odd"):
        raise ValidationError("QSVT needs a polynomial of definite parity")
    if max_abs_on_grid(poly, grid_size) > 1 + BOUND_SLACK:
        raise ValidationError("polynomial exceeds 1 in absolute value on [-1, 1]")
    check_qubit_budget(be.n_qubits + 1, "QSVT block-encoding")
    a = extract_block(be)
    if np.max(np.abs(a - a.conj().T)) > HERMITIAN_BLOCK_TOL:
        raise ValidationError("encoded block is not Hermitian")
    vals, vecs = np.linalg.eigh((a + a.conj().T) / 2)
    if np.max(np.abs(vals)) > 1 + 1e-9:
        raise ValidationError("encoded operator has norm above 1")
    pvals = poly(np.clip(vals, -1, 1))
    if np.max(np.abs(pvals)) > 1 + 1e-9:
        raise ValidationError("||p(A)|| exceeds 1")
    pvals = np.clip(pvals, -1, 1)
    p_mat = (vecs * pvals) @ vecs.conj().T
    s_mat = (vecs * np.sqrt(1 - pvals**2)) @ vecs.conj().T
    eye_anc = np.eye(2**be.ancillas)
    top = np.kron(eye_anc, p_mat)
    side = np.kron(eye_anc, s_mat)
    u = np.block([[top, side], [side, -top]])
    return BlockEncoding(u, 1.0, be.ancillas + 1, 0.0, be.system_qubits,
                         ledger_cost=poly.degree * be.ledger_cost)


__all__ = [
    "BlockEncoding",
    "MAX_QUBITS",
    "density_block_encoding",
    "extract_block",
    "qsvt_apply",
    "unitary_dilation",
]
