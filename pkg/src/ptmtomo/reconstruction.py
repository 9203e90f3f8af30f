"""Process estimation from tomography records.

Three estimators are provided:

* :func:`linear_inversion` — unconstrained weighted-free least squares,
  ``r = (W^T W)^{-1} W^T m``; fast, unbiased, but generally non-CP in the
  presence of noise.
* :func:`mle_reconstruct` — Gaussian maximum likelihood: minimise
  ``delta^T V^{-1} delta`` over ``vec(R)`` with ``delta = W vec(R) - m``
  subject to the Choi operator of ``R`` being positive semidefinite.  The
  program is the semidefinite problem "minimise ``b^T y`` over
  ``y = (t, vec(R))`` with ``blkdiag(Z, rho(R)) >= 0``", where the Schur
  complement of ``Z = [[t, delta^T], [delta, V]]`` pins ``t`` to the
  weighted residual at the optimum.  Trace preservation is NOT imposed by
  default; ``SolverOptions(tp_constraint=True)`` adds the affine constraint
  by eliminating the identity row of ``R``.
* :func:`state_mle` — the state-tomography analogue: eigenvalue
  truncation-and-redistribution onto the closest density matrix.

Two independent solvers back :func:`solve_sdp`:

* ``interior-point`` (reference): a primal logarithmic-barrier
  path-following method.  The slack block ``Z`` is handled in closed form
  (for any ``R`` the optimal ``t`` equals the weighted residual), leaving
  ``min f(r) - mu log det rho(r)`` which is centered by damped Newton
  steps; ``mu`` is reduced tenfold per stage and the duality gap of the
  barrier certificate is ``mu * d**2``.
* ``projected-gradient`` (oracle): accelerated projected gradient descent
  with step ``1/L``; the Euclidean projection onto the CP cone in
  ``vec(R)`` coordinates is exactly Choi eigenvalue clipping because
  ``r -> rho(r)`` is a scaled isometry.

Both are deterministic, report a common :class:`SolverReport`, and are
cross-checked against each other in the test suite.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

from .measurement import (
    GateSet,
    MeasurementOperator,
    MeasurementRecord,
    calibrate_measurement,
    describe_directions,
    design_rank,
    gateset_from_labels,
    transfer_matrix,
)
from .pauli import MAX_QUBITS, hermitian_eig, operator_from_pauli_vector, pauli_basis
from .tolerances import DEFAULT_POLICY

SOLVERS = ("interior-point", "projected-gradient")


class ReconstructionError(RuntimeError):
    """Base class for estimation failures."""


class RankDeficientDesignError(ReconstructionError):
    """The measurement design does not determine every process parameter."""

    def __init__(self, rank: int, n_par: int, directions: str):
        self.rank = rank
        self.n_par = n_par
        self.directions = directions
        super().__init__(
            f"design matrix has numerical rank {rank} < {n_par}; "
            f"undetermined directions: {directions}"
        )


@dataclass(frozen=True)
class SolverOptions:
    """Options shared by both solvers.

    Attributes:
        solver: ``"interior-point"`` (reference) or ``"projected-gradient"``
            (oracle).
        tp_constraint: additionally impose trace preservation (identity row
            of ``R`` fixed); interior-point only.
        max_iterations: Newton-step budget of the interior-point method.
        pg_max_iterations: iteration budget of the projected-gradient
            method.
        gap_tolerance: duality-gap target, absolute on the per-measurement
            normalised objective (gap <= gap_tolerance * n_measurements).
        pg_step_tolerance: fixed-point residual target of the
            projected-gradient map, in transfer-matrix-entry units.
        cp_shortcut_slack: linear inversion counts as already CP when its
            minimum Choi eigenvalue is above ``-cp_shortcut_slack``; the
            constrained solve is then skipped.
    """

    solver: str = "interior-point"
    tp_constraint: bool = False
    max_iterations: int = 200
    pg_max_iterations: int = 100_000
    gap_tolerance: float = 1e-9
    pg_step_tolerance: float = 1e-10
    cp_shortcut_slack: float = 1e-11

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if self.max_iterations < 1 or self.pg_max_iterations < 1:
            raise ValueError("iteration budgets must be positive")
        if self.gap_tolerance <= 0 or self.pg_step_tolerance <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class SolverReport:
    """Outcome of one constrained solve.

    ``status`` is ``"optimal"`` (contract: ``min_choi_eigenvalue >= -1e-8``
    and ``kkt_residual <= 1e-7``), ``"max_iter"`` (budget exhausted, best
    iterate returned) or ``"infeasible"``.  ``kkt_residual`` is the scaled
    stationarity/complementarity residual for the interior-point method and
    the fixed-point residual of the projection map for projected gradient.
    """

    solver: str
    status: str
    iterations: int
    primal_objective: float
    min_choi_eigenvalue: float
    kkt_residual: float
    tp_constraint: bool
    message: str = ""

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class SdpProblem:
    """CP-constrained weighted least squares in SDP standard form.

    Encodes "minimise ``b^T y`` over ``y = (t, vec(R))`` subject to
    ``blkdiag(Z(y), rho(R)) >= 0``" with ``Z = [[t, delta^T], [delta, V]]``
    and ``delta = W vec(R) - values``.  ``vec`` is column-major.

    Attributes:
        w: design matrix, shape ``(n_measurements, d**4)``.
        values: measured means, length ``n_measurements``.
        covariance: diagonal of ``V`` (1-D, all entries positive) or a full
            symmetric positive-definite matrix.
        n_qubits: number of qubits.
        warm_start: optional ``vec(R)`` hint (typically linear inversion).
    """

    w: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    covariance: np.ndarray = field(repr=False)
    n_qubits: int
    warm_start: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        cov = np.asarray(self.covariance, dtype=float)
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits out of range: {self.n_qubits}")
        n_par = (4**self.n_qubits) ** 2
        if w.ndim != 2 or w.shape[1] != n_par:
            raise ValueError(
                f"design must have {n_par} columns for {self.n_qubits} "
                f"qubits, got shape {w.shape}"
            )
        if values.shape[0] != w.shape[0]:
            raise ValueError(
                f"{values.shape[0]} values for {w.shape[0]} design rows"
            )
        if cov.ndim == 1:
            if cov.shape[0] != w.shape[0]:
                raise ValueError("diagonal covariance length mismatch")
            if np.any(cov <= 0):
                raise ValueError(
                    "covariance must be positive definite; got non-positive "
                    "diagonal entries"
                )
        elif cov.ndim == 2:
            if cov.shape != (w.shape[0], w.shape[0]):
                raise ValueError(f"covariance shape {cov.shape} mismatch")
            if np.max(np.abs(cov - cov.T)) > 1e-12 * max(1.0, np.max(np.abs(cov))):
                raise ValueError("covariance must be symmetric")
            eigmin = float(np.linalg.eigvalsh(cov)[0])
            if eigmin <= 0:
                raise ValueError(
                    f"covariance must be positive definite; min eigenvalue "
                    f"{eigmin:.3e}"
                )
        else:
            raise ValueError("covariance must be 1-D (diagonal) or 2-D")
        if self.warm_start is not None:
            ws = np.asarray(self.warm_start, dtype=float).reshape(-1)
            if ws.shape[0] != n_par:
                raise ValueError("warm_start length mismatch")
            object.__setattr__(self, "warm_start", ws)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "covariance", cov)

    @property
    def n_parameters(self) -> int:
        return (4**self.n_qubits) ** 2

    @property
    def b(self) -> np.ndarray:
        """Objective vector of the standard form: minimise ``t``."""
        out = np.zeros(1 + self.n_parameters)
        out[0] = 1.0
        return out

    def residual(self, r_vec: np.ndarray) -> np.ndarray:
        return self.w @ r_vec - self.values

    def objective(self, r_vec: np.ndarray) -> float:
        """Weighted residual ``delta^T V^{-1} delta`` at ``vec(R)``."""
        delta = self.residual(r_vec)
        if self.covariance.ndim == 1:
            return float(np.sum(delta * delta / self.covariance))
        return float(delta @ np.linalg.solve(self.covariance, delta))

    def z_block(self, t: float, r_vec: np.ndarray) -> np.ndarray:
        """Assemble the Schur-complement block ``Z(y)`` (diagnostics)."""
        delta = self.residual(r_vec)
        n = delta.shape[0]
        v = np.diag(self.covariance) if self.covariance.ndim == 1 else self.covariance
        z = np.empty((n + 1, n + 1))
        z[0, 0] = t
        z[0, 1:] = delta
        z[1:, 0] = delta
        z[1:, 1:] = v
        return z

    def choi_block(self, r_vec: np.ndarray) -> np.ndarray:
        a, _ = _choi_basis_map(self.n_qubits)
        d2 = 4**self.n_qubits
        rho = (a @ r_vec).reshape(d2, d2)
        return (rho + rho.conj().T) / 2


# ---------------------------------------------------------------------------
# vec(R) <-> Choi machinery
# ---------------------------------------------------------------------------

@lru_cache(maxsize=MAX_QUBITS)
def _choi_basis_map(n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
    """Linear map from ``vec(R)`` (column-major) to the flattened Choi.

    Returns ``(a, b_stack)`` where column ``k = j*d**2 + i`` of ``a`` is the
    row-major flattening of ``B_k = kron(P_j^T, P_i) / d**2`` and
    ``b_stack[k]`` is ``B_k`` itself.  The columns are orthogonal with
    ``a^dag a = I / d**2``, so ``r = d**2 * Re(a^dag vec(rho))``.
    """
    basis = pauli_basis(n_qubits)
    d2 = basis.size
    n_par = d2 * d2
    b_stack = np.empty((n_par, d2, d2), dtype=complex)
    for j in range(d2):
        ptj = basis.matrices[j].T.copy()
        for i in range(d2):
            b_stack[j * d2 + i] = np.kron(ptj, basis.matrices[i]) / d2
    a = b_stack.reshape(n_par, d2 * d2).T.copy()
    a.setflags(write=False)
    b_stack.setflags(write=False)
    return a, b_stack


def _choi_from_r(r_vec: np.ndarray, n_qubits: int) -> np.ndarray:
    a, _ = _choi_basis_map(n_qubits)
    d2 = 4**n_qubits
    rho = (a @ r_vec).reshape(d2, d2)
    return (rho + rho.conj().T) / 2


def _r_from_choi(rho: np.ndarray, n_qubits: int) -> np.ndarray:
    a, _ = _choi_basis_map(n_qubits)
    d2 = 4**n_qubits
    return d2 * np.real(a.conj().T @ rho.reshape(-1))


def _project_r(r_vec: np.ndarray, n_qubits: int) -> np.ndarray:
    """Euclidean projection of ``vec(R)`` onto the CP cone.

    Exact because ``||rho(r)||_F = ||r|| / d**2``: clipping negative Choi
    eigenvalues is the nearest-point map in both metrics.
    """
    rho = _choi_from_r(r_vec, n_qubits)
    w, v = np.linalg.eigh(rho)
    if w[0] >= 0.0:
        return np.asarray(r_vec, dtype=float).copy()
    w = np.clip(w, 0.0, None)
    return _r_from_choi((v * w) @ v.conj().T, n_qubits)


def project_to_cp(r: np.ndarray) -> np.ndarray:
    """Clip the negative Choi eigenvalues of a PTM (naive CP projection)."""
    r = np.asarray(r, dtype=float)
    d2 = r.shape[0]
    n = {4: 1, 16: 2, 64: 3}.get(d2)
    if n is None or r.shape != (d2, d2):
        raise ValueError(f"ptm shape {r.shape} is not a qubit transfer matrix")
    r_vec = r.flatten(order="F")
    return _project_r(r_vec, n).reshape(d2, d2, order="F")


# ---------------------------------------------------------------------------
# Design resolution and linear inversion
# ---------------------------------------------------------------------------

def _resolve_design(
    record: MeasurementRecord,
    gates: GateSet | None,
    meas: MeasurementOperator | None,
    analysis_gates: GateSet | None,
) -> tuple[GateSet, GateSet, MeasurementOperator]:
    if gates is None:
        gates = gateset_from_labels(record.labels_prep)
    if analysis_gates is None:
        if record.labels_analysis == gates.labels:
            analysis_gates = gates
        else:
            analysis_gates = gateset_from_labels(record.labels_analysis)
    if meas is None:
        meas = calibrate_measurement(record)
    return gates, analysis_gates, meas


class _Design:
    """Cached design pieces shared by repeated reconstructions."""

    def __init__(
        self,
        gates: GateSet,
        analysis_gates: GateSet,
        meas: MeasurementOperator,
        cond_limit: float = 1e10,
    ):
        self.gates = gates
        self.analysis_gates = analysis_gates
        self.meas = meas
        self.n_qubits = gates.n_qubits
        self.d2 = 4**self.n_qubits
        self.n_par = self.d2 * self.d2
        self.w = transfer_matrix(gates, meas, analysis_gates)
        rank, null = design_rank(self.w, cond_limit)
        if rank < self.n_par:
            raise RankDeficientDesignError(
                rank, self.n_par, describe_directions(null, self.n_qubits)
            )
        self._gram_cho = cho_factor(self.w.T @ self.w)

    def linear(self, values: np.ndarray) -> np.ndarray:
        """Least-squares ``vec(R)`` for a flattened value grid."""
        flat = np.asarray(values, dtype=float).reshape(-1)
        if flat.shape[0] != self.w.shape[0]:
            raise ValueError(
                f"{flat.shape[0]} values for {self.w.shape[0]} design rows"
            )
        return cho_solve(self._gram_cho, self.w.T @ flat)

    def to_matrix(self, r_vec: np.ndarray) -> np.ndarray:
        return r_vec.reshape(self.d2, self.d2, order="F")


def linear_inversion(
    record: MeasurementRecord,
    gates: GateSet | None = None,
    meas: MeasurementOperator | None = None,
    analysis_gates: GateSet | None = None,
) -> np.ndarray:
    """Unconstrained least-squares estimate ``r = (W^T W)^{-1} W^T m``.

    Args:
        record: the measurement record.
        gates: preparation gate set; rebuilt from the record labels
            (assuming ideal pulses) when omitted.
        meas: measurement operator; self-calibrated from the record's
            computational-state rows when omitted.
        analysis_gates: distinct analysis set, if any.

    Returns:
        The estimated transfer matrix (possibly non-CP).

    Raises:
        RankDeficientDesignError: when the gate set does not determine all
            ``d**4`` parameters; the message names the missing directions.
    """
    gates, analysis_gates, meas = _resolve_design(record, gates, meas, analysis_gates)
    design = _Design(gates, analysis_gates, meas)
    return design.to_matrix(design.linear(record.values))


def _flat_covariance(record: MeasurementRecord) -> tuple[np.ndarray, str]:
    """Per-entry covariance of the record means, with the uniform fallback.

    Noise-free records (all variances zero) get uniform unit weights scaled
    to the mean squared signal — the argmin is invariant under any common
    rescaling of ``V``, and this keeps the objective a dimensionless
    residual of order one.  Mixed zero/non-zero variances are rejected.
    """
    var = np.tile(record.variances, len(record.labels_prep)) / record.shots
    if np.all(var == 0):
        scale = float(np.mean(record.values**2))
        if scale <= 0:
            scale = 1.0
        return np.full(var.shape, scale), "uniform"
    if np.any(var == 0):
        raise ReconstructionError(
            "record mixes zero and non-zero variances; the weight matrix "
            "V^{-1} is ill-conditioned"
        )
    return var, "record"


def mle_reconstruct(
    record: MeasurementRecord,
    gates: GateSet | None = None,
    meas: MeasurementOperator | None = None,
    options: SolverOptions | None = None,
    analysis_gates: GateSet | None = None,
) -> tuple[np.ndarray, SolverReport]:
    """CP-constrained maximum-likelihood estimate of the process.

    Runs linear inversion first; if that is already CP (minimum Choi
    eigenvalue above ``-options.cp_shortcut_slack``) the constraint is
    inactive and the linear estimate is returned unchanged with a
    zero-iteration report.  Otherwise the SDP is solved with the selected
    solver.

    Returns:
        ``(R, report)`` with ``R`` the constrained estimate.
    """
    options = options or SolverOptions()
    reconstructor = Reconstructor(
        record, gates=gates, meas=meas, options=options,
        analysis_gates=analysis_gates,
    )
    return reconstructor.mle(record.values)


class Reconstructor:
    """Repeated reconstructions against one fixed design and noise model.

    Bootstrap replicates and study sweeps share the design matrix, its
    Cholesky factor and the whitened normal matrix; only the value grid
    changes between calls.
    """

    def __init__(
        self,
        record: MeasurementRecord,
        gates: GateSet | None = None,
        meas: MeasurementOperator | None = None,
        options: SolverOptions | None = None,
        analysis_gates: GateSet | None = None,
    ):
        self.options = options or SolverOptions()
        gates, analysis_gates, meas = _resolve_design(
            record, gates, meas, analysis_gates
        )
        self.design = _Design(gates, analysis_gates, meas)
        self.covariance, self.weighting = _flat_covariance(record)
        self._sig = np.sqrt(self.covariance)
        self._obj_scale = 1.0
        self._wt = self.design.w / self._sig[:, None]
        self._q = self._wt.T @ self._wt
        self._q_eig: np.ndarray | None = None

    @property
    def q_eigenvalues(self) -> np.ndarray:
        if self._q_eig is None:
            self._q_eig = np.linalg.eigvalsh(self._q)
        return self._q_eig

    def linear(self, values: np.ndarray) -> np.ndarray:
        return self.design.to_matrix(self.design.linear(values))

    def objective(self, r_vec: np.ndarray, values: np.ndarray) -> float:
        """Weighted residual in the record's covariance units."""
        delta = self.design.w @ r_vec - np.asarray(values, dtype=float).reshape(-1)
        return float(np.sum(delta * delta / self.covariance))

    def mle(self, values: np.ndarray) -> tuple[np.ndarray, SolverReport]:
        flat = np.asarray(values, dtype=float).reshape(-1)
        r_li = self.design.linear(flat)
        rho = _choi_from_r(r_li, self.design.n_qubits)
        lam_min = float(np.linalg.eigvalsh(rho)[0])
        tp = self.options.tp_constraint
        tp_ok = True
        if tp:
            row = r_li.reshape(self.design.d2, self.design.d2, order="F")[0]
            target = np.zeros(self.design.d2)
            target[0] = 1.0
            tp_ok = bool(np.max(np.abs(row - target)) <= 1e-9)
        if lam_min >= -self.options.cp_shortcut_slack and tp_ok:
            report = SolverReport(
                solver=self.options.solver,
                status="optimal",
                iterations=0,
                primal_objective=self.objective(r_li, flat),
                min_choi_eigenvalue=lam_min,
                kkt_residual=0.0,
                tp_constraint=tp,
                message="linear inversion already CP; constraint inactive",
            )
            return self.design.to_matrix(r_li), report
        mt = flat / self._sig
        r_vec, report = _solve_whitened(
            self._wt,
            mt,
            self.design.n_qubits,
            self.options,
            self._obj_scale,
            warm_start=r_li,
            q=self._q,
            q_eigenvalues=self.q_eigenvalues
            if self.options.solver == "projected-gradient"
            else None,
        )
        return self.design.to_matrix(r_vec), report


def solve_sdp(
    problem: SdpProblem, options: SolverOptions | None = None
) -> tuple[np.ndarray, SolverReport]:
    """Solve the SDP standard form directly.

    Args:
        problem: the weighted least-squares problem.
        options: solver selection and tolerances.

    Returns:
        ``(y, report)`` with ``y = (t, vec(R))``, ``t`` the optimal
        weighted residual.
    """
    options = options or SolverOptions()
    cov = problem.covariance
    if cov.ndim == 1:
        u = float(np.max(cov))
        sig = np.sqrt(cov)
        wt = problem.w / sig[:, None]
        mt = problem.values / sig
        obj_scale = 1.0
    else:
        chol = np.linalg.cholesky(cov)
        wt = solve_triangular(chol, problem.w, lower=True)
        mt = solve_triangular(chol, problem.values, lower=True)
        obj_scale = 1.0
    r_vec, report = _solve_whitened(
        wt, mt, problem.n_qubits, options, obj_scale,
        warm_start=problem.warm_start,
    )
    y = np.concatenate(([report.primal_objective], r_vec))
    return y, report


# ---------------------------------------------------------------------------
# Whitened-core solvers
# ---------------------------------------------------------------------------

def _tp_fixed_coordinates(d2: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices and values pinning the identity row of ``R`` in ``vec(R)``."""
    idx = np.arange(d2) * d2
    vals = np.zeros(d2)
    vals[0] = 1.0
    return idx, vals


def _start_point(
    wt: np.ndarray,
    mt: np.ndarray,
    n_qubits: int,
    tp_constraint: bool,
    warm_start: np.ndarray | None,
) -> np.ndarray:
    """Strictly feasible start: depolarising PTM mixed with projected LI."""
    d2 = 4**n_qubits
    n_par = d2 * d2
    r_dep = np.zeros(n_par)
    r_dep[0] = 1.0
    if warm_start is None:
        warm_start, *_ = np.linalg.lstsq(wt, mt, rcond=None)
    r_cp = _project_r(np.asarray(warm_start, dtype=float), n_qubits)
    fixed_idx = fixed_vals = None
    if tp_constraint:
        fixed_idx, fixed_vals = _tp_fixed_coordinates(d2)
        r_cp = r_cp.copy()
        r_cp[fixed_idx] = fixed_vals
    for alpha in (0.5, 0.6, 0.75, 0.9, 0.99, 1.0):
        r0 = alpha * r_dep + (1.0 - alpha) * r_cp
        if tp_constraint:
            r0[fixed_idx] = fixed_vals
        lam_min = float(np.linalg.eigvalsh(_choi_from_r(r0, n_qubits))[0])
        if lam_min > 1e-3 / d2:
            return r0
    return r_dep


def _solve_whitened(
    wt: np.ndarray,
    mt: np.ndarray,
    n_qubits: int,
    options: SolverOptions,
    obj_scale: float,
    warm_start: np.ndarray | None = None,
    q: np.ndarray | None = None,
    q_eigenvalues: np.ndarray | None = None,
) -> tuple[np.ndarray, SolverReport]:
    if options.solver == "interior-point":
        return _interior_point(
            wt, mt, n_qubits, options, obj_scale, warm_start, q
        )
    if options.tp_constraint:
        raise ValueError(
            "the trace-preservation constraint is only available with the "
            "interior-point solver"
        )
    return _projected_gradient(
        wt, mt, n_qubits, options, obj_scale, warm_start, q, q_eigenvalues
    )


def _interior_point(
    wt: np.ndarray,
    mt: np.ndarray,
    n_qubits: int,
    options: SolverOptions,
    obj_scale: float,
    warm_start: np.ndarray | None,
    q: np.ndarray | None,
) -> tuple[np.ndarray, SolverReport]:
    d2 = 4**n_qubits
    n_par = d2 * d2
    n_meas = mt.shape[0]
    a_map, b_stack = _choi_basis_map(n_qubits)
    if q is None:
        q = wt.T @ wt
    qlin = wt.T @ mt
    cconst = float(mt @ mt)

    def f_of(r):
        return float(r @ (q @ r) - 2.0 * (qlin @ r) + cconst)

    def grad_f(r):
        return 2.0 * (q @ r - qlin)

    tp = options.tp_constraint
    if tp:
        fixed_idx, _ = _tp_fixed_coordinates(d2)
        free_idx = np.setdiff1d(np.arange(n_par), fixed_idx)
    else:
        free_idx = np.arange(n_par)

    r = _start_point(wt, mt, n_qubits, tp, warm_start)
    f_now = f_of(r)
    mu = max(f_now, 1.0) / d2
    newton_total = 0
    status = "max_iter"
    message = ""
    decrement = np.inf
    centered = False
    eye = np.eye(d2)

    while True:
        # --- center at the current barrier weight ---
        centered = False
        for _ in range(60):
            rho = _choi_from_r(r, n_qubits)
            try:
                chol = np.linalg.cholesky(rho)
            except np.linalg.LinAlgError:
                status = "infeasible"
                message = "iterate left the PSD cone"
                break
            linv = solve_triangular(chol, eye, lower=True)
            rho_inv = linv.conj().T @ linv
            grad_phi = grad_f(r) - mu * np.real(a_map.conj().T @ rho_inv.reshape(-1))
            grad_phi_free = grad_phi[free_idx]
            y_stack = np.einsum(
                "ab,kbc,dc->kad", linv, b_stack[free_idx], linv.conj(),
                optimize=True,
            )
            g_mat = y_stack.reshape(free_idx.shape[0], d2 * d2)
            h = 2.0 * q[np.ix_(free_idx, free_idx)] + mu * np.real(
                g_mat @ g_mat.conj().T
            )
            try:
                step_free = -cho_solve(cho_factor(h), grad_phi_free)
            except np.linalg.LinAlgError:
                h = h + (1e-12 * np.trace(h) / h.shape[0]) * np.eye(h.shape[0])
                step_free = -np.linalg.solve(h, grad_phi_free)
            decrement = max(float(-grad_phi_free @ step_free), 0.0)
            # Centered once the decrement is small against the barrier scale
            # (suboptimality at this stage then stays within ~1% of the gap);
            # the second arm is the floating-point floor below which further
            # centering is not resolvable.
            if decrement <= max(1e-2 * mu * d2, 2e-10 * (1.0 + abs(f_now))):
                centered = True
                break
            if newton_total >= options.max_iterations:
                break
            # Damped step: stay strictly inside the cone, decrease phi.
            step = np.zeros(n_par)
            step[free_idx] = step_free
            logdet = 2.0 * float(np.sum(np.log(np.real(np.diagonal(chol)))))
            phi0 = f_now - mu * logdet
            slope = float(grad_phi_free @ step_free)
            alpha = 1.0
            accepted = False
            while alpha > 1e-13:
                r_new = r + alpha * step
                rho_new = _choi_from_r(r_new, n_qubits)
                try:
                    chol_new = np.linalg.cholesky(rho_new)
                except np.linalg.LinAlgError:
                    alpha *= 0.5
                    continue
                f_new = f_of(r_new)
                logdet_new = 2.0 * float(
                    np.sum(np.log(np.real(np.diagonal(chol_new))))
                )
                if f_new - mu * logdet_new <= phi0 + 1e-4 * alpha * slope:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                # Stalled line search: charge the attempt to the budget so
                # the outer loop cannot spin without making progress.
                newton_total += 1
                break
            r = r_new
            f_now = f_new
            newton_total += 1
        if status == "infeasible":
            break
        f_orig = f_now * obj_scale
        gap = mu * d2 * obj_scale
        if centered and gap <= min(
            options.gap_tolerance * n_meas, 5e-9 * max(1.0, abs(f_orig))
        ):
            status = "optimal"
            break
        if newton_total >= options.max_iterations:
            message = f"Newton budget ({options.max_iterations}) exhausted"
            break
        mu /= 10.0

    rho = _choi_from_r(r, n_qubits)
    lam_min = float(np.linalg.eigvalsh(rho)[0])
    # Stationarity in the Newton (H^-1) metric plus the complementarity gap,
    # both relative to the objective scale; the raw gradient norm is not
    # meaningful under the barrier's extreme curvature.
    obj_ref = max(1.0, abs(f_now))
    stationarity = 0.5 * decrement / obj_ref if np.isfinite(decrement) else np.inf
    kkt = max(stationarity, mu * d2 / obj_ref)
    report = SolverReport(
        solver="interior-point",
        status=status,
        iterations=newton_total,
        primal_objective=f_now * obj_scale,
        min_choi_eigenvalue=lam_min,
        kkt_residual=kkt,
        tp_constraint=tp,
        message=message,
    )
    return r, report


def _projected_gradient(
    wt: np.ndarray,
    mt: np.ndarray,
    n_qubits: int,
    options: SolverOptions,
    obj_scale: float,
    warm_start: np.ndarray | None,
    q: np.ndarray | None,
    q_eigenvalues: np.ndarray | None,
) -> tuple[np.ndarray, SolverReport]:
    d2 = 4**n_qubits
    if q is None:
        q = wt.T @ wt
    qlin = wt.T @ mt
    cconst = float(mt @ mt)
    if q_eigenvalues is None:
        q_eigenvalues = np.linalg.eigvalsh(q)
    lip = 2.0 * float(q_eigenvalues[-1])
    mu_sc = 2.0 * max(float(q_eigenvalues[0]), 0.0)

    def f_of(r):
        return float(r @ (q @ r) - 2.0 * (qlin @ r) + cconst)

    if lip <= 0.0:
        r0 = _start_point(wt, mt, n_qubits, False, warm_start)
        report = SolverReport(
            solver="projected-gradient",
            status="optimal",
            iterations=0,
            primal_objective=f_of(r0) * obj_scale,
            min_choi_eigenvalue=0.0,
            kkt_residual=0.0,
            tp_constraint=False,
            message="zero design; any feasible point is optimal",
        )
        return r0, report

    if mu_sc > 1e-12 * lip:
        root = np.sqrt(lip / mu_sc)
        beta = (root - 1.0) / (root + 1.0)
    else:
        beta = None  # fall back to the 1/k**2 momentum schedule

    x = _project_r(_start_point(wt, mt, n_qubits, False, warm_start), n_qubits)
    y = x.copy()
    fx = f_of(x)
    t_k = 1.0
    res = np.inf
    status = "max_iter"
    iterations = 0
    check_every = 20

    for it in range(1, options.pg_max_iterations + 1):
        iterations = it
        grad_y = 2.0 * (q @ y - qlin)
        x_new = _project_r(y - grad_y / lip, n_qubits)
        f_new = f_of(x_new)
        if f_new > fx + 1e-14 * max(1.0, abs(fx)):
            # Momentum overshoot: restart from the last monotone iterate.
            y = x
            t_k = 1.0
            grad_y = 2.0 * (q @ y - qlin)
            x_new = _project_r(y - grad_y / lip, n_qubits)
            f_new = f_of(x_new)
        if beta is not None:
            y = x_new + beta * (x_new - x)
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k))
            y = x_new + ((t_k - 1.0) / t_next) * (x_new - x)
            t_k = t_next
        x = x_new
        fx = f_new
        if it % check_every == 0 or it == options.pg_max_iterations:
            grad_x = 2.0 * (q @ x - qlin)
            res = float(
                np.max(np.abs(x - _project_r(x - grad_x / lip, n_qubits)))
            )
            if res <= options.pg_step_tolerance:
                status = "optimal"
                break

    rho = _choi_from_r(x, n_qubits)
    lam_min = float(np.linalg.eigvalsh(rho)[0])
    report = SolverReport(
        solver="projected-gradient",
        status=status,
        iterations=iterations,
        primal_objective=fx * obj_scale,
        min_choi_eigenvalue=lam_min,
        kkt_residual=res,
        tp_constraint=False,
        message="" if status == "optimal" else (
            f"fixed-point residual {res:.2e} after "
            f"{options.pg_max_iterations} iterations"
        ),
    )
    return x, report


# ---------------------------------------------------------------------------
# State tomography
# ---------------------------------------------------------------------------

def state_mle(
    pauli_expectations: np.ndarray, variances: np.ndarray | None = None
) -> np.ndarray:
    """Closest density matrix to a measured Pauli expectation set.

    The raw operator ``rho = (1/d) sum_i p_i P_i`` is made physical by
    eigenvalue truncation-and-redistribution: negative eigenvalues are
    zeroed from the bottom up while the running deficit is spread uniformly
    over the remaining ones.  For a unit-trace input this is exactly the
    Euclidean projection of the spectrum onto the probability simplex
    (eigenvectors unchanged), i.e. the closest density matrix in the
    2-norm.

    Args:
        pauli_expectations: full Pauli vector (identity component first).
        variances: accepted for interface compatibility; the projection
            weighs all directions uniformly and ignores them.

    Returns:
        A density matrix with ``lambda_min >= 0`` and unit trace.
    """
    del variances
    p = np.asarray(pauli_expectations, dtype=float)
    rho = operator_from_pauli_vector(p)
    trace = float(np.real(np.trace(rho)))
    if trace <= 0:
        raise ValueError(f"expectations give non-positive trace {trace:.3e}")
    rho = rho / trace
    w, v = hermitian_eig(rho, DEFAULT_POLICY)
    if w[-1] >= 0.0:
        return rho
    w = w.copy()
    deficit = 0.0
    i = w.shape[0]
    while i > 0 and w[i - 1] + deficit / i < 0.0:
        deficit += w[i - 1]
        w[i - 1] = 0.0
        i -= 1
    w[:i] += deficit / i
    return (v * w) @ v.conj().T
