"""Seeded random ensembles: GUE Hamiltonians, Haar unitaries, CPTP maps.

All samplers take a :class:`numpy.random.Generator` so that callers own the
seeding discipline; nothing here touches global random state.
"""

from __future__ import annotations

import numpy as np

from .channels import KrausChannel
from .pauli import _qubits_for_dim


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    """GUE-distributed Hermitian matrix (unnormalised)."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (g + g.conj().T) / 2.0


def gue_hamiltonian(dim: int, rng: np.random.Generator) -> np.ndarray:
    """GUE sample rescaled to unit spectral norm.

    Used as the generator of coherent gate errors
    ``U_err = exp(-i eps H / 2)``; with ``|H| = 1`` the strength ``eps``
    bounds the rotation angle.
    """
    h = random_hermitian(dim, rng)
    norm = np.max(np.abs(np.linalg.eigvalsh(h)))
    if norm == 0.0:
        # Probability zero, but keep the contract total.
        return np.eye(dim)
    return h / norm


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with phase fixing."""
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    phases = np.diagonal(r).copy()
    phases /= np.abs(phases)
    return q * phases


def random_density_matrix(
    dim: int, rng: np.random.Generator, rank: int | None = None
) -> np.ndarray:
    """Random mixed state from the Ginibre ensemble (unit trace)."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must lie in [1, {dim}], got {rank}")
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_cptp_kraus(
    n_qubits: int, rng: np.random.Generator, kraus_rank: int | None = None
) -> KrausChannel:
    """Random CPTP channel via a Ginibre-sampled Stinespring isometry.

    A complex Gaussian block matrix of shape ``(d * rank, d)`` is
    orthonormalised into an isometry ``V``; its ``d x d`` blocks are the
    Kraus operators, trace preserving by construction.
    """
    d = 2**n_qubits
    _qubits_for_dim(d)
    rank = d * d if kraus_rank is None else kraus_rank
    if rank < 1:
        raise ValueError(f"kraus_rank must be positive, got {rank}")
    g = rng.standard_normal((d * rank, d)) + 1j * rng.standard_normal((d * rank, d))
    # Orthonormalise the columns: V = G (G^dag G)^(-1/2).
    gram = g.conj().T @ g
    w, v = np.linalg.eigh(gram)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    iso = g @ inv_sqrt
    ops = tuple(iso[k * d : (k + 1) * d, :] for k in range(rank))
    return KrausChannel(ops)
