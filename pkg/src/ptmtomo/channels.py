"""Quantum channel representations: PTM, Choi and Kraus, plus conversions.

The Pauli transfer matrix (PTM) of a map ``E`` is the real ``d**2 x d**2``
matrix ``R_ij = (1/d) Tr[P_i E(P_j)]`` in the canonical basis of
:mod:`ptmtomo.pauli`.  Pauli vectors transform as ``p' = R p`` and channel
composition is matrix multiplication, ``ptm(E1 o E2) = R1 @ R2`` (``R2``
acts first).

The Choi operator used here carries the normalisation
``rho_E = (1/d**2) sum_ij R_ij (P_j^T (x) P_i)``, equivalently
``R_ij = Tr[rho_E (P_j^T (x) P_i)]``, so a trace-preserving map has
``Tr[rho_E] = 1`` and the channel acts as
``E(rho) = d * Tr_A[(rho^T (x) I) rho_E]``.  Complete positivity is
``rho_E >= 0``, trace preservation is ``Tr_B[rho_E] = I/d`` and unitality
is ``Tr_A[rho_E] = I/d``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import (
    _qubits_for_dim,
    _require_square,
    partial_trace,
    pauli_basis,
)
from .tolerances import DEFAULT_POLICY, NumericPolicy


class ResidualCheck(tuple):
    """(passed, residual) pair returned by the linear physicality tests."""

    __slots__ = ()

    def __new__(cls, passed: bool, residual: float):
        return super().__new__(cls, (bool(passed), float(residual)))

    @property
    def passed(self) -> bool:
        return self[0]

    @property
    def residual(self) -> float:
        return self[1]

    def __bool__(self) -> bool:
        return self[0]


class PositivityCheck(tuple):
    """(passed, min_eigenvalue) pair returned by the CP test."""

    __slots__ = ()

    def __new__(cls, passed: bool, min_eigenvalue: float):
        return super().__new__(cls, (bool(passed), float(min_eigenvalue)))

    @property
    def passed(self) -> bool:
        return self[0]

    @property
    def min_eigenvalue(self) -> float:
        return self[1]

    def __bool__(self) -> bool:
        return self[0]


def _require_ptm(r: np.ndarray) -> tuple[np.ndarray, int]:
    r = np.asarray(r, dtype=float)
    r = _require_square(r, "ptm")
    d2 = r.shape[0]
    d = int(round(np.sqrt(d2)))
    if d * d != d2:
        raise ValueError(f"ptm dimension {d2} is not a perfect square")
    return r, _qubits_for_dim(d, "ptm")


def _require_choi(choi: np.ndarray) -> tuple[np.ndarray, int]:
    choi = np.asarray(choi, dtype=complex)
    choi = _require_square(choi, "choi")
    d2 = choi.shape[0]
    d = int(round(np.sqrt(d2)))
    if d * d != d2:
        raise ValueError(f"choi dimension {d2} is not a perfect square")
    return choi, _qubits_for_dim(d, "choi")


def ptm_of_unitary(
    u: np.ndarray, policy: NumericPolicy = DEFAULT_POLICY
) -> np.ndarray:
    """PTM of the unitary conjugation ``rho -> U rho U^dag``.

    Args:
        u: unitary ``d x d`` matrix.
        policy: numeric thresholds for the unitarity check.

    Returns:
        Real ``d**2 x d**2`` transfer matrix.

    Raises:
        ValueError: if ``u`` is not unitary within ``policy.unitarity_atol``.
    """
    u = _require_square(np.asarray(u, dtype=complex), "u")
    dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if dev > policy.unitarity_atol:
        raise ValueError(
            f"matrix is not unitary: max|U^dag U - I| = {dev:.3e} exceeds "
            f"{policy.unitarity_atol:.1e}"
        )
    n = _qubits_for_dim(u.shape[0], "u")
    basis = pauli_basis(n)
    conj = np.einsum("ab,qbc,dc->qad", u, basis.matrices, u.conj())
    return np.real(np.einsum("iab,jba->ij", basis.matrices, conj)) / basis.dim


@dataclass(frozen=True)
class KrausChannel:
    """A channel given by Kraus operators ``E(rho) = sum_k K_k rho K_k^dag``."""

    operators: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not self.operators:
            raise ValueError("KrausChannel needs at least one operator")
        ops = []
        dim = None
        for k, op in enumerate(self.operators):
            op = np.asarray(op, dtype=complex)
            if op.ndim != 2 or op.shape[0] != op.shape[1]:
                raise ValueError(
                    f"Kraus operator {k} must be square, got shape {op.shape}"
                )
            if dim is None:
                dim = op.shape[0]
                _qubits_for_dim(dim, "Kraus operator")
            elif op.shape[0] != dim:
                raise ValueError(
                    f"Kraus operator {k} has dimension {op.shape[0]}, "
                    f"expected {dim}"
                )
            op.setflags(write=False)
            ops.append(op)
        object.__setattr__(self, "operators", tuple(ops))

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    @property
    def n_qubits(self) -> int:
        return _qubits_for_dim(self.dim)

    def completeness_residual(self) -> float:
        """``max|sum_k K_k^dag K_k - I|``; zero for a trace-preserving set."""
        acc = sum(op.conj().T @ op for op in self.operators)
        return float(np.max(np.abs(acc - np.eye(self.dim))))

    def is_trace_preserving(self, atol: float = 1e-10) -> bool:
        return self.completeness_residual() <= atol

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Apply the channel to a density operator."""
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise ValueError(
                f"state shape {rho.shape} does not match channel dimension "
                f"{self.dim}"
            )
        return sum(op @ rho @ op.conj().T for op in self.operators)


def ptm_of_kraus(channel: KrausChannel) -> np.ndarray:
    """PTM of a Kraus channel, ``R_ij = (1/d) Tr[P_i sum_k K_k P_j K_k^dag]``."""
    if not isinstance(channel, KrausChannel):
        channel = KrausChannel(tuple(np.asarray(k) for k in channel))
    basis = pauli_basis(channel.n_qubits)
    kstack = np.array(channel.operators)
    mapped = np.einsum("kab,qbc,kdc->qad", kstack, basis.matrices, kstack.conj())
    return np.real(np.einsum("iab,jba->ij", basis.matrices, mapped)) / basis.dim


def choi_of_ptm(r: np.ndarray) -> np.ndarray:
    """Choi operator of a PTM, ``(1/d**2) sum_ij R_ij (P_j^T (x) P_i)``."""
    r, n = _require_ptm(r)
    p = pauli_basis(n).matrices
    d = 2**n
    # kron(P_j^T, P_i)[(a,alpha),(b,beta)] = P_j[b,a] * P_i[alpha, beta]
    choi = np.einsum("ij,jba,iuv->abuv", r, p, p) / d**2
    d2 = d * d
    return choi.transpose(0, 2, 1, 3).reshape(d2, d2)


def ptm_of_choi(choi: np.ndarray) -> np.ndarray:
    """Inverse of :func:`choi_of_ptm`, ``R_ij = Tr[choi (P_j^T (x) P_i)]``."""
    choi, n = _require_choi(choi)
    p = pauli_basis(n).matrices
    d = 2**n
    blocks = choi.reshape(d, d, d, d).transpose(0, 2, 1, 3)
    return np.real(np.einsum("abuv,jab,ivu->ij", blocks, p, p))


def apply_channel(choi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Act with a channel (given as Choi operator) on a density operator.

    Implements ``E(rho) = d * Tr_A[(rho^T (x) I) rho_E]``.
    """
    choi, n = _require_choi(choi)
    d = 2**n
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise ValueError(f"state shape {rho.shape} does not match dimension {d}")
    blocks = choi.reshape(d, d, d, d)
    return d * np.einsum("ca,cuav->uv", rho, blocks)


def apply_ptm(r: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Propagate a Pauli vector through a transfer matrix, ``p' = R p``."""
    r, _ = _require_ptm(r)
    p = np.asarray(p, dtype=float)
    if p.shape != (r.shape[1],):
        raise ValueError(
            f"pauli vector length {p.shape} does not match ptm {r.shape}"
        )
    return r @ p


def compose(*ptms: np.ndarray) -> np.ndarray:
    """Compose channels given as PTMs; the last argument acts first.

    ``compose(R1, R2)`` is the map "apply ``R2``, then ``R1``" and equals
    ``R1 @ R2``.
    """
    if not ptms:
        raise ValueError("compose needs at least one ptm")
    mats = []
    dim = None
    for r in ptms:
        r, _ = _require_ptm(r)
        if dim is None:
            dim = r.shape[0]
        elif r.shape[0] != dim:
            raise ValueError("cannot compose ptms of different dimensions")
        mats.append(r)
    out = mats[0]
    for r in mats[1:]:
        out = out @ r
    return out


def is_trace_preserving(
    choi: np.ndarray, atol: float | None = None
) -> ResidualCheck:
    """Test ``Tr_B[rho_E] = I/d`` on a Choi operator."""
    choi, n = _require_choi(choi)
    d = 2**n
    if atol is None:
        atol = DEFAULT_POLICY.channel_atol
    reduced = partial_trace(choi, (d, d), trace_out="B")
    residual = float(np.max(np.abs(reduced - np.eye(d) / d)))
    return ResidualCheck(residual <= atol, residual)


def is_unital(choi: np.ndarray, atol: float | None = None) -> ResidualCheck:
    """Test ``Tr_A[rho_E] = I/d`` (the map fixes the identity)."""
    choi, n = _require_choi(choi)
    d = 2**n
    if atol is None:
        atol = DEFAULT_POLICY.channel_atol
    reduced = partial_trace(choi, (d, d), trace_out="A")
    residual = float(np.max(np.abs(reduced - np.eye(d) / d)))
    return ResidualCheck(residual <= atol, residual)


def is_completely_positive(
    choi: np.ndarray, slack: float | None = None
) -> PositivityCheck:
    """Test ``rho_E >= 0`` up to an eigenvalue slack."""
    choi, _ = _require_choi(choi)
    if slack is None:
        slack = DEFAULT_POLICY.psd_slack
    herm = (choi + choi.conj().T) / 2
    w = np.linalg.eigvalsh(herm)
    return PositivityCheck(w[0] >= -slack, float(w[0]))


def is_signed_permutation(r: np.ndarray, atol: float = 1e-9) -> bool:
    """True if the PTM has exactly one entry of magnitude 1 per row and
    column and zeros elsewhere (the shape of any Clifford transfer matrix)."""
    r, _ = _require_ptm(r)
    mags = np.abs(r)
    on = mags > atol
    if not (np.all(on.sum(axis=0) == 1) and np.all(on.sum(axis=1) == 1)):
        return False
    return bool(np.max(np.abs(mags[on] - 1.0)) <= atol)


# ---------------------------------------------------------------------------
# Built-in single-qubit noise channels
# ---------------------------------------------------------------------------

def amplitude_damping_kraus(gamma: float) -> KrausChannel:
    """Amplitude damping with decay probability ``gamma``.

    Kraus operators ``[[1, 0], [0, sqrt(1-gamma)]]`` and
    ``[[0, sqrt(gamma)], [0, 0]]``.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    k0 = np.array([[1.0, 0.0], [0.0, np.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, np.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return KrausChannel((k0, k1))


def dephasing_kraus(p: float) -> KrausChannel:
    """Phase flip ``rho -> (1-p) rho + p Z rho Z``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    k0 = np.sqrt(1.0 - p) * np.eye(2, dtype=complex)
    k1 = np.sqrt(p) * np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
    return KrausChannel((k0, k1))


def depolarizing_kraus(p: float, n_qubits: int = 1) -> KrausChannel:
    """Depolarising channel ``rho -> (1-p) rho + p I/d`` on ``n_qubits``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    basis = pauli_basis(n_qubits)
    d2 = basis.size
    weights = np.full(d2, p / d2)
    weights[0] += 1.0 - p
    ops = tuple(
        np.sqrt(w) * basis.matrices[q] for q, w in enumerate(weights) if w > 0
    )
    return KrausChannel(ops)


def decoherence_kraus(
    t1_us: float, t2_us: float, duration_ns: float
) -> KrausChannel:
    """Single-qubit free decoherence for a given duration.

    Amplitude damping at rate ``1/T1`` composed with pure dephasing at rate
    ``1/T_phi = 1/T2 - 1/(2 T1)``; the two commute, so the order is
    immaterial.  Times are in microseconds, the duration in nanoseconds.

    Raises:
        ValueError: if the rates are unphysical (``T2 > 2 T1`` or
            non-positive times).
    """
    if t1_us <= 0 or t2_us <= 0:
        raise ValueError("T1 and T2 must be positive")
    if duration_ns < 0:
        raise ValueError("duration must be non-negative")
    if t2_us > 2.0 * t1_us * (1.0 + 1e-12):
        raise ValueError(
            f"T2 = {t2_us} exceeds 2*T1 = {2 * t1_us}; no physical channel"
        )
    t_us = duration_ns * 1e-3
    gamma = 1.0 - np.exp(-t_us / t1_us)
    rate_phi = 1.0 / t2_us - 0.5 / t1_us
    # Clamp tiny negative rates from the T2 <= 2 T1 boundary.
    f = np.exp(-t_us * max(rate_phi, 0.0))
    p = (1.0 - f) / 2.0
    damp = amplitude_damping_kraus(float(gamma))
    deph = dephasing_kraus(float(p))
    ops = tuple(
        kd @ ka for kd in deph.operators for ka in damp.operators
    )
    return KrausChannel(ops)


def decoherence_ptm(t1_us: float, t2_us: float, duration_ns: float) -> np.ndarray:
    """Single-qubit PTM of :func:`decoherence_kraus`.

    Analytically ``diag(1, e^{-t/T2}, e^{-t/T2}, e^{-t/T1})`` with an extra
    feeding term ``R_{Z,I} = gamma`` from amplitude damping.
    """
    return ptm_of_kraus(decoherence_kraus(t1_us, t2_us, duration_ns))
