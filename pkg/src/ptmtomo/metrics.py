"""Fidelities, distances and the per-gate diagnostic record.

Definitions (``d`` the Hilbert dimension, ``R`` transfer matrices,
``rho`` the unit-trace Choi operators of :mod:`ptmtomo.channels`):

* process fidelity  ``F_p = Tr[R_ideal^T R] / d**2 = Tr[rho_ideal rho]``
  (the two forms agree identically; the first needs ``R_ideal`` unitary);
* average gate fidelity  ``F_g = (d F_p + 1) / (d + 1)``;
* purified fidelity  ``F_pure = Tr[rho_ideal rho_max]`` where ``rho_max``
  is the normalised projector onto the top Choi eigenvector — the fidelity
  the gate would have if the incoherent part of the reconstruction were
  stripped away;
* negative eigenvalue weight  ``sum_{lambda < 0} lambda`` of a Choi
  operator, the standard witness of a non-physical linear-inversion result;
* two-norm distance, printed form ``sqrt(Tr|A - B|)``; the alternative
  ``frobenius`` mode is ``sqrt(Tr[(A - B)^2]) = ||A - B||_F``.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .channels import _require_choi, _require_ptm, choi_of_ptm
from .pauli import _require_hermitian, hermitian_eig, projector
from .tolerances import DEFAULT_POLICY, NumericPolicy

TWO_NORM_MODES = ("printed", "frobenius")


def process_fidelity(
    r_ideal: np.ndarray, r_actual: np.ndarray, check_unitary: bool = True
) -> float:
    """Process (entanglement) fidelity between an ideal and an actual PTM.

    Args:
        r_ideal: transfer matrix of the target map; the trace formula
            assumes it is unitary (orthogonal PTM).
        r_actual: transfer matrix of the map under test.
        check_unitary: warn if ``r_ideal`` is not orthogonal, in which case
            the trace formula is not a fidelity.

    Returns:
        ``Tr[R_ideal^T R_actual] / d**2``.
    """
    r_ideal, _ = _require_ptm(r_ideal)
    r_actual, _ = _require_ptm(r_actual)
    if r_ideal.shape != r_actual.shape:
        raise ValueError(
            f"ptm shapes differ: {r_ideal.shape} vs {r_actual.shape}"
        )
    if check_unitary:
        dev = np.max(np.abs(r_ideal.T @ r_ideal - np.eye(r_ideal.shape[0])))
        if dev > 1e-6:
            warnings.warn(
                "r_ideal is not orthogonal (max deviation %.2e); the trace "
                "formula is not a fidelity for non-unitary targets" % dev,
                stacklevel=2,
            )
    d2 = r_ideal.shape[0]
    return float(np.einsum("ji,ji->", r_ideal, r_actual) / d2)


def gate_fidelity(process_fid: float, dim: int) -> float:
    """Average gate fidelity ``(d F_p + 1) / (d + 1)`` for dimension ``d``."""
    if dim not in (2, 4, 8):
        raise ValueError(f"dim must be a qubit dimension (2, 4, 8), got {dim}")
    return (dim * process_fid + 1.0) / (dim + 1.0)


@dataclass(frozen=True)
class PurifiedFidelity:
    """Result of :func:`purified_fidelity`."""

    f_pure: float
    lambda_max: float
    degenerate: bool


def purified_fidelity(
    choi_ideal: np.ndarray,
    choi_actual: np.ndarray,
    gap_atol: float = 1e-10,
    policy: NumericPolicy = DEFAULT_POLICY,
) -> PurifiedFidelity:
    """Fidelity of the dominant coherent part of a reconstruction.

    The top eigenvector of ``choi_actual`` is renormalised into a rank-one
    Choi operator ``rho_max`` and compared with the ideal:
    ``F_pure = Tr[rho_ideal rho_max]``.  A (near-)degenerate top eigenvalue
    makes the eigenvector ill-defined; the result is then flagged.
    """
    choi_ideal, _ = _require_choi(choi_ideal)
    choi_actual, _ = _require_choi(choi_actual)
    w, v = hermitian_eig(choi_actual, policy)
    degenerate = bool(len(w) > 1 and (w[0] - w[1]) <= gap_atol * max(1.0, abs(w[0])))
    if degenerate:
        warnings.warn(
            "top Choi eigenvalue is degenerate within %.1e; purified "
            "fidelity is not well defined" % gap_atol,
            stacklevel=2,
        )
    rho_max = projector(v[:, 0])
    f_pure = float(np.real(np.einsum("ab,ba->", choi_ideal, rho_max)))
    return PurifiedFidelity(
        f_pure=f_pure, lambda_max=float(w[0]), degenerate=degenerate
    )


def negative_eigenvalue_weight(
    choi: np.ndarray, policy: NumericPolicy = DEFAULT_POLICY
) -> float:
    """Sum of the negative Choi eigenvalues (zero for a CP map)."""
    choi, _ = _require_choi(choi)
    herm = _require_hermitian(choi, policy, "choi")
    w = np.linalg.eigvalsh(herm)
    return float(np.sum(w[w < 0.0]))


def two_norm_distance(a: np.ndarray, b: np.ndarray, mode: str = "printed") -> float:
    """Spectral distance between two Hermitian operators.

    Args:
        a: first operator (e.g. a Choi matrix).
        b: second operator.
        mode: ``"printed"`` for ``sqrt(Tr|a - b|)`` (trace norm of the
            difference under a square root) or ``"frobenius"`` for
            ``sqrt(Tr[(a - b)^2])``.

    Returns:
        The selected distance; both modes vanish iff ``a == b``.
    """
    if mode not in TWO_NORM_MODES:
        raise ValueError(f"mode must be one of {TWO_NORM_MODES}, got {mode!r}")
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError(f"operator shapes differ: {a.shape} vs {b.shape}")
    delta = a - b
    delta = (delta + delta.conj().T) / 2
    w = np.linalg.eigvalsh(delta)
    if mode == "printed":
        return float(np.sqrt(np.sum(np.abs(w))))
    return float(np.sqrt(np.sum(w * w)))


def state_fidelity(rho: np.ndarray, target_ket: np.ndarray) -> float:
    """Fidelity ``<psi| rho |psi>`` of a state with a pure target."""
    rho = np.asarray(rho, dtype=complex)
    ket = np.asarray(target_ket, dtype=complex).reshape(-1)
    norm = np.linalg.norm(ket)
    if norm == 0:
        raise ValueError("target ket must be non-zero")
    ket = ket / norm
    if rho.shape != (ket.size, ket.size):
        raise ValueError(
            f"state shape {rho.shape} does not match ket length {ket.size}"
        )
    return float(np.real(ket.conj() @ rho @ ket))


def concurrence(rho: np.ndarray, policy: NumericPolicy = DEFAULT_POLICY) -> float:
    """Two-qubit concurrence ``max(0, l1 - l2 - l3 - l4)``.

    The ``l_k`` are the decreasing square roots of the eigenvalues of
    ``rho (Y (x) Y) rho* (Y (x) Y)``.
    """
    rho = _require_hermitian(np.asarray(rho, dtype=complex), policy, "rho")
    if rho.shape != (4, 4):
        raise ValueError(f"concurrence is defined for two qubits, got {rho.shape}")
    y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
    yy = np.kron(y, y)
    m = rho @ yy @ rho.conj() @ yy
    w = np.linalg.eigvals(m)
    lam = np.sqrt(np.clip(np.real(w), 0.0, None))
    lam = np.sort(lam)[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


@dataclass(frozen=True)
class GateDiagnostics:
    """One row of the per-gate error report.

    Distances are between Choi operators; ``*_printed`` uses the
    ``sqrt(Tr|.|)`` form and ``*_frobenius`` the ``||.||_F`` form, with
    "data" the linear-inversion reconstruction and "mle" the constrained
    one.  ``delta_f_g`` stays ``None`` until a bootstrap run fills it in.
    """

    gate: str
    f_p: float
    f_g: float
    r_identity: float
    f_pure: float
    lambda_max: float
    negative_weight: float
    half_dist_mle_ideal_printed: float
    half_dist_mle_data_printed: float
    half_dist_data_ideal_printed: float
    half_dist_mle_ideal_frobenius: float
    half_dist_mle_data_frobenius: float
    half_dist_data_ideal_frobenius: float
    pure_degenerate: bool = False
    delta_f_g: float | None = None

    def as_dict(self) -> dict:
        """Plain-dict form used by the CSV/JSON report writers."""
        out = {
            "gate": self.gate,
            "f_p": self.f_p,
            "f_g": self.f_g,
            "delta_f_g": self.delta_f_g,
            "r_identity": self.r_identity,
            "f_pure": self.f_pure,
            "lambda_max": self.lambda_max,
            "negative_weight": self.negative_weight,
            "half_dist_mle_ideal_printed": self.half_dist_mle_ideal_printed,
            "half_dist_mle_data_printed": self.half_dist_mle_data_printed,
            "half_dist_data_ideal_printed": self.half_dist_data_ideal_printed,
            "half_dist_mle_ideal_frobenius": self.half_dist_mle_ideal_frobenius,
            "half_dist_mle_data_frobenius": self.half_dist_mle_data_frobenius,
            "half_dist_data_ideal_frobenius": self.half_dist_data_ideal_frobenius,
            "pure_degenerate": self.pure_degenerate,
        }
        return out

    def with_delta_f_g(self, delta: float) -> "GateDiagnostics":
        return dataclasses.replace(self, delta_f_g=float(delta))


def diagnose(
    gate: str,
    r_mle: np.ndarray,
    r_linear: np.ndarray,
    r_ideal: np.ndarray,
) -> GateDiagnostics:
    """Assemble the full diagnostic row for one reconstructed gate.

    Args:
        gate: display name for the row.
        r_mle: constrained (physical) reconstruction.
        r_linear: raw linear-inversion reconstruction.
        r_ideal: target transfer matrix (assumed unitary).
    """
    r_mle, n = _require_ptm(r_mle)
    r_linear, _ = _require_ptm(r_linear)
    r_ideal, _ = _require_ptm(r_ideal)
    d = 2**n
    choi_mle = choi_of_ptm(r_mle)
    choi_lin = choi_of_ptm(r_linear)
    choi_ideal = choi_of_ptm(r_ideal)
    f_p = process_fidelity(r_ideal, r_mle)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pure = purified_fidelity(choi_ideal, choi_mle)
    dists = {}
    for mode in TWO_NORM_MODES:
        dists[("mle_ideal", mode)] = 0.5 * two_norm_distance(choi_mle, choi_ideal, mode)
        dists[("mle_data", mode)] = 0.5 * two_norm_distance(choi_mle, choi_lin, mode)
        dists[("data_ideal", mode)] = 0.5 * two_norm_distance(choi_lin, choi_ideal, mode)
    return GateDiagnostics(
        gate=gate,
        f_p=f_p,
        f_g=gate_fidelity(f_p, d),
        r_identity=float(r_mle[0, 0]),
        f_pure=pure.f_pure,
        lambda_max=pure.lambda_max,
        negative_weight=negative_eigenvalue_weight(choi_lin),
        half_dist_mle_ideal_printed=dists[("mle_ideal", "printed")],
        half_dist_mle_data_printed=dists[("mle_data", "printed")],
        half_dist_data_ideal_printed=dists[("data_ideal", "printed")],
        half_dist_mle_ideal_frobenius=dists[("mle_ideal", "frobenius")],
        half_dist_mle_data_frobenius=dists[("mle_data", "frobenius")],
        half_dist_data_ideal_frobenius=dists[("data_ideal", "frobenius")],
        pure_degenerate=pure.degenerate,
    )
