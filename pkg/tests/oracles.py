"""Independent reference implementations the tests cross-check against.

Everything here is built from definitions using numpy/scipy only, without
touching the package's own conversion helpers, so a bug in the package
cannot leak into its own expected values.
"""

from __future__ import annotations

import itertools

import numpy as np
import scipy.optimize

PAULI_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


def pauli_matrices(n_qubits: int) -> list[np.ndarray]:
    """n-qubit Pauli products, identity first, first qubit varying slowest."""
    mats = []
    for labels in itertools.product("IXYZ", repeat=n_qubits):
        m = np.array([[1.0 + 0.0j]])
        for label in labels:
            m = np.kron(m, PAULI_1Q[label])
        mats.append(m)
    return mats


def unitary_map(u: np.ndarray):
    return lambda rho: u @ rho @ u.conj().T


def kraus_map(operators):
    return lambda rho: sum(k @ rho @ k.conj().T for k in operators)


def ptm_of_map(apply_map, d: int) -> np.ndarray:
    """R_ij = Tr[P_i map(P_j)] / d, straight from the definition."""
    paulis = pauli_matrices(int(round(np.log2(d))))
    r = np.empty((d * d, d * d))
    for j, p_in in enumerate(paulis):
        out = apply_map(p_in)
        for i, p_out in enumerate(paulis):
            r[i, j] = np.real(np.trace(p_out @ out)) / d
    return r


def choi_of_map(apply_map, d: int) -> np.ndarray:
    """Choi state (1/d) sum_ij |i><j| (x) map(|i><j|), input side first."""
    eye = np.eye(d)
    choi = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            basis = np.outer(eye[i], eye[j].conj())
            choi += np.kron(basis, apply_map(basis))
    return choi / d


def apply_ptm_map(r: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Apply a transfer matrix to a density matrix via the Pauli expansion."""
    d2 = r.shape[0]
    d = int(round(np.sqrt(d2)))
    paulis = pauli_matrices(int(round(np.log2(d))))
    coeffs = np.array([np.real(np.trace(p @ rho)) for p in paulis])
    out_coeffs = r @ coeffs
    out = np.zeros((d, d), dtype=complex)
    for c, p in zip(out_coeffs, paulis):
        out += c * p / d
    return out


def expected_value_density_path(
    r_process: np.ndarray,
    prep_unitary: np.ndarray,
    analysis_unitary: np.ndarray,
    meas_diagonal,
) -> float:
    """<M> via explicit density matrices: prepare, evolve, rotate, read out."""
    d = prep_unitary.shape[0]
    ground = np.zeros((d, d), dtype=complex)
    ground[0, 0] = 1.0
    rho = prep_unitary @ ground @ prep_unitary.conj().T
    rho = apply_ptm_map(r_process, rho)
    rho = analysis_unitary @ rho @ analysis_unitary.conj().T
    return float(np.real(np.trace(np.diag(meas_diagonal) @ rho)))


def project_to_psd_trace(choi: np.ndarray, trace: float | None = None) -> np.ndarray:
    """Nearest (Frobenius) PSD matrix with optionally fixed trace.

    Solved as a small constrained program over the real parametrization of
    a Hermitian matrix, so it shares no code with the eigenvalue-based
    projection it is used to check.
    """
    n = choi.shape[0]
    tri = np.triu_indices(n, k=1)

    def unpack(x):
        diag = x[:n]
        re = x[n : n + len(tri[0])]
        im = x[n + len(tri[0]) :]
        h = np.diag(diag.astype(complex))
        h[tri] = re + 1j * im
        h += np.tril(h.conj().T, k=-1)
        return h

    def pack(h):
        return np.concatenate([np.real(np.diag(h)), np.real(h[tri]), np.imag(h[tri])])

    def objective(x):
        return float(np.sum(np.abs(unpack(x) - choi) ** 2))

    constraints = [
        {
            "type": "ineq",
            "fun": lambda x: float(np.linalg.eigvalsh(unpack(x)).min()),
        }
    ]
    if trace is not None:
        constraints.append(
            {"type": "eq", "fun": lambda x: float(np.real(np.trace(unpack(x)))) - trace}
        )
    start = pack(choi)
    best = scipy.optimize.minimize(
        objective,
        start,
        method="SLSQP",
        constraints=constraints,
        options={"maxiter": 500, "ftol": 1e-14},
    )
    return unpack(best.x)


def decay_model(n, a, b, f):
    return a + b * np.power(f, n)


def curve_fit_decay(fidelities, n_values):
    """scipy reference fit for the exponential-decay model."""
    popt, _ = scipy.optimize.curve_fit(
        decay_model,
        np.asarray(n_values, dtype=float),
        np.asarray(fidelities, dtype=float),
        p0=(0.75, 0.25, 0.98),
        maxfev=20000,
    )
    return popt


def weighted_objective(w: np.ndarray, values: np.ndarray, variances_per_point: np.ndarray, r_vec: np.ndarray) -> float:
    """delta^T V^-1 delta evaluated directly from the design matrix."""
    delta = values - w @ r_vec
    return float(np.sum(delta * delta / variances_per_point))
