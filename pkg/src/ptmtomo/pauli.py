"""Multi-qubit Pauli bases and Pauli-vector state representations.

Conventions used throughout the package:

* The ``n``-qubit Pauli basis is ordered identity first, then
  lexicographically in the letters ``(I, X, Y, Z)`` on each qubit with the
  letter of qubit 1 as the slow index.  For two qubits the sequence starts
  ``II, IX, IY, IZ, IX -> XI, ...`` i.e. index ``q`` encodes the base-4
  digits of the label.  ``labels[1] == "IX"`` corresponds to ``I (x) X``
  (qubit 1 is the left tensor factor).
* Basis elements are the bare tensor products of ``{I, X, Y, Z}`` with no
  normalisation, so ``Tr[P_i P_j] = d * delta_ij`` with ``d = 2**n``.
* A density operator and its Pauli vector are related by
  ``p_i = Tr[P_i rho]`` and ``rho = (1/d) * sum_i p_i P_i``; the identity
  component of a unit-trace operator is therefore exactly 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

from .tolerances import DEFAULT_POLICY, NumericPolicy

MAX_QUBITS = 3

_SINGLE_QUBIT = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

_LETTERS = "IXYZ"


def _check_qubit_count(n_qubits: int) -> None:
    if not isinstance(n_qubits, (int, np.integer)) or isinstance(n_qubits, bool):
        raise TypeError(f"n_qubits must be an integer, got {n_qubits!r}")
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValueError(
            f"n_qubits must lie in [1, {MAX_QUBITS}], got {n_qubits}"
        )


@dataclass(frozen=True)
class PauliBasis:
    """Ordered n-qubit Pauli basis.

    Attributes:
        n_qubits: number of qubits.
        labels: tuple of letter strings, e.g. ``("II", "IX", ...)``;
            position 0 is always the identity.
        matrices: complex array of shape ``(d**2, d, d)`` with
            ``matrices[q]`` the operator for ``labels[q]``.
    """

    n_qubits: int
    labels: tuple[str, ...]
    matrices: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        """Hilbert-space dimension ``d = 2**n_qubits``."""
        return 2 ** self.n_qubits

    @property
    def size(self) -> int:
        """Number of basis elements, ``d**2``."""
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        """Position of ``label`` in the basis ordering."""
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown Pauli label {label!r}") from None


@lru_cache(maxsize=MAX_QUBITS)
def pauli_basis(n_qubits: int) -> PauliBasis:
    """Build (and cache) the canonical n-qubit Pauli basis.

    Args:
        n_qubits: number of qubits, between 1 and :data:`MAX_QUBITS`.

    Returns:
        The :class:`PauliBasis` in canonical identity-first order.
    """
    _check_qubit_count(n_qubits)
    labels = []
    mats = []
    for letters in product(_LETTERS, repeat=n_qubits):
        op = _SINGLE_QUBIT[letters[0]]
        for letter in letters[1:]:
            op = np.kron(op, _SINGLE_QUBIT[letter])
        labels.append("".join(letters))
        mats.append(op)
    matrices = np.array(mats, dtype=complex)
    matrices.setflags(write=False)
    return PauliBasis(n_qubits=int(n_qubits), labels=tuple(labels), matrices=matrices)


def pauli_labels(n_qubits: int) -> tuple[str, ...]:
    """Labels of the canonical basis, identity first."""
    return pauli_basis(n_qubits).labels


def identity_last_permutation(n_qubits: int) -> np.ndarray:
    """Index permutation from the canonical order to identity-last order.

    Some presentations order the single-qubit letters ``(X, Y, Z, I)`` so
    that the identity component sits in the last row/column of a transfer
    matrix.  The returned integer array ``perm`` satisfies
    ``R_identity_last = R[perm][:, perm]`` and maps Pauli vectors the same
    way.

    Args:
        n_qubits: number of qubits.

    Returns:
        Integer permutation array of length ``4**n_qubits``.
    """
    basis = pauli_basis(n_qubits)
    alt = {"X": 0, "Y": 1, "Z": 2, "I": 3}

    def key(label: str) -> int:
        code = 0
        for letter in label:
            code = 4 * code + alt[letter]
        return code

    return np.array(sorted(range(basis.size), key=lambda q: key(basis.labels[q])))


def _require_square(op: np.ndarray, name: str = "operator") -> np.ndarray:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {op.shape}")
    return op


def _require_hermitian(
    op: np.ndarray, policy: NumericPolicy, name: str = "operator"
) -> np.ndarray:
    op = _require_square(op, name)
    dev = np.max(np.abs(op - op.conj().T))
    if dev > policy.hermiticity_atol:
        raise ValueError(
            f"{name} is not Hermitian: max|A - A^dag| = {dev:.3e} exceeds "
            f"{policy.hermiticity_atol:.1e}"
        )
    return op


def _qubits_for_dim(dim: int, name: str = "operator") -> int:
    n = int(round(np.log2(dim)))
    if 2**n != dim or not 1 <= n <= MAX_QUBITS:
        raise ValueError(
            f"{name} dimension {dim} is not 2**n for n in [1, {MAX_QUBITS}]"
        )
    return n


def pauli_vector(
    rho: np.ndarray, policy: NumericPolicy = DEFAULT_POLICY
) -> np.ndarray:
    """Expand a Hermitian operator in the Pauli basis.

    Args:
        rho: Hermitian ``d x d`` operator (d = 2, 4 or 8).
        policy: numeric thresholds for the hermiticity check.

    Returns:
        Real vector ``p`` of length ``d**2`` with ``p[i] = Tr[P_i rho]``.

    Raises:
        ValueError: if ``rho`` is not square, not of qubit dimension, or
            not Hermitian within ``policy.hermiticity_atol``.
    """
    rho = _require_hermitian(np.asarray(rho, dtype=complex), policy, "rho")
    n = _qubits_for_dim(rho.shape[0], "rho")
    basis = pauli_basis(n)
    # Tr[P rho] for Hermitian P, rho is real; einsum over the stacked basis.
    return np.real(np.einsum("qab,ba->q", basis.matrices, rho))


def operator_from_pauli_vector(p: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pauli_vector`: ``rho = (1/d) sum_i p_i P_i``."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError(f"pauli vector must be 1-D, got shape {p.shape}")
    d2 = p.shape[0]
    d = int(round(np.sqrt(d2)))
    if d * d != d2:
        raise ValueError(f"pauli vector length {d2} is not a perfect square")
    n = _qubits_for_dim(d, "pauli vector")
    basis = pauli_basis(n)
    return np.einsum("q,qab->ab", p, basis.matrices) / d


def partial_trace(op: np.ndarray, dims: tuple[int, int], trace_out: str) -> np.ndarray:
    """Trace out one factor of a bipartite operator on ``A (x) B``.

    Args:
        op: operator on the product space, shape ``(dA*dB, dA*dB)``.
        dims: pair ``(dA, dB)`` of subsystem dimensions.
        trace_out: ``"A"`` or ``"B"``, the subsystem removed.

    Returns:
        The reduced operator on the remaining subsystem.
    """
    da, db = dims
    op = _require_square(op, "op")
    if op.shape[0] != da * db:
        raise ValueError(
            f"operator dimension {op.shape[0]} does not match dims {dims}"
        )
    blocks = np.asarray(op, dtype=complex).reshape(da, db, da, db)
    if trace_out == "A":
        return np.einsum("abac->bc", blocks)
    if trace_out == "B":
        return np.einsum("abcb->ac", blocks)
    raise ValueError(f"trace_out must be 'A' or 'B', got {trace_out!r}")


def hermitian_eig(
    op: np.ndarray, policy: NumericPolicy = DEFAULT_POLICY
) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian operator, eigenvalues descending.

    Wraps the LAPACK symmetric solver and post-checks the reconstruction
    residual against ``policy.eig_residual_atol`` so every decomposition in
    the package is certified, not assumed.

    Args:
        op: Hermitian matrix.
        policy: numeric thresholds.

    Returns:
        ``(w, v)`` with eigenvalues ``w`` sorted descending and ``v[:, k]``
        the eigenvector for ``w[k]``.

    Raises:
        ValueError: if ``op`` is not Hermitian or the residual check fails.
    """
    op = _require_hermitian(np.asarray(op, dtype=complex), policy, "op")
    w, v = np.linalg.eigh(op)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    residual = np.max(np.abs(op - (v * w) @ v.conj().T))
    scale = max(1.0, float(np.max(np.abs(w))))
    if residual > policy.eig_residual_atol * scale:
        raise ValueError(
            f"eigendecomposition residual {residual:.3e} exceeds "
            f"{policy.eig_residual_atol:.1e} * {scale:.3e}"
        )
    return w, v


def computational_state(n_qubits: int, index: int = 0) -> np.ndarray:
    """Ket of the computational basis state ``|index>`` on ``n_qubits``."""
    _check_qubit_count(n_qubits)
    d = 2**n_qubits
    if not 0 <= index < d:
        raise ValueError(f"index must lie in [0, {d}), got {index}")
    ket = np.zeros(d, dtype=complex)
    ket[index] = 1.0
    return ket


def projector(ket: np.ndarray) -> np.ndarray:
    """Rank-one density operator ``|ket><ket|`` (the ket is normalised)."""
    ket = np.asarray(ket, dtype=complex).reshape(-1)
    norm = np.linalg.norm(ket)
    if norm == 0:
        raise ValueError("cannot project the zero vector")
    ket = ket / norm
    return np.outer(ket, ket.conj())
