"""Pauli basis construction, expansion round-trips and spectral helpers."""

import numpy as np
import pytest

from ptmtomo.pauli import (
    computational_state,
    hermitian_eig,
    operator_from_pauli_vector,
    partial_trace,
    pauli_basis,
    pauli_labels,
    pauli_vector,
    projector,
)

from oracles import pauli_matrices


@pytest.mark.parametrize("n_qubits", [1, 2, 3])
def test_basis_matches_reference_construction(n_qubits):
    basis = pauli_basis(n_qubits)
    reference = pauli_matrices(n_qubits)
    assert len(basis.labels) == 4**n_qubits
    for mat, ref in zip(basis.matrices, reference):
        assert np.abs(mat - ref).max() < 1e-14


@pytest.mark.parametrize("n_qubits", [1, 2, 3])
def test_trace_orthogonality(n_qubits):
    """Tr[P_i P_j] = d * delta_ij across the full basis."""
    basis = pauli_basis(n_qubits)
    d = 2**n_qubits
    mats = basis.matrices
    gram = np.einsum("aij,bji->ab", mats, mats).real
    assert np.abs(gram - d * np.eye(4**n_qubits)).max() < 1e-12


def test_labels_identity_first_lexicographic():
    assert pauli_labels(1) == ("I", "X", "Y", "Z")
    labels2 = pauli_labels(2)
    assert labels2[:5] == ("II", "IX", "IY", "IZ", "XI")
    assert labels2[-1] == "ZZ"
    # first qubit's letter varies slowest
    assert [label[0] for label in labels2[:4]] == ["I"] * 4
    assert [label[0] for label in labels2[4:8]] == ["X"] * 4


@pytest.mark.parametrize("seed", range(4))
def test_pauli_vector_roundtrip(seed):
    rng = np.random.default_rng(seed)
    for n_qubits in (1, 2):
        d = 2**n_qubits
        h = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        h = (h + h.conj().T) / 2
        vec = pauli_vector(h)
        assert vec.dtype == float
        back = operator_from_pauli_vector(vec)
        assert np.abs(back - h).max() < 1e-12


def test_pauli_vector_of_density_matrix_starts_with_one():
    rho = projector(computational_state(2, index=0))
    vec = pauli_vector(rho)
    assert abs(vec[0] - 1.0) < 1e-12


def test_partial_trace_preserves_trace():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        for side in ("A", "B"):
            reduced = partial_trace(x, (2, 2), side)
            assert reduced.shape == (2, 2)
            assert abs(np.trace(reduced) - np.trace(x)) < 1e-12


def test_partial_trace_of_product():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b /= np.trace(b)
    assert np.abs(partial_trace(np.kron(a, b), (2, 2), "B") - a).max() < 1e-12
    a /= np.trace(a)
    assert np.abs(partial_trace(np.kron(a, b), (2, 2), "A") - b).max() < 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_hermitian_eig_residual(seed):
    rng = np.random.default_rng(100 + seed)
    h = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    h = (h + h.conj().T) / 2
    eigenvalues, vectors = hermitian_eig(h)
    recon = (vectors * eigenvalues) @ vectors.conj().T
    assert np.abs(recon - h).max() < 1e-10
    assert np.all(np.diff(eigenvalues) >= 0) or np.all(np.diff(eigenvalues) <= 0)


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(ValueError):
        hermitian_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_computational_state_and_projector():
    ket = computational_state(2, index=2)
    assert ket.shape == (4,)
    assert abs(np.linalg.norm(ket) - 1.0) < 1e-15
    p = projector(ket)
    assert np.abs(p @ p - p).max() < 1e-14
    assert abs(np.trace(p) - 1.0) < 1e-14
