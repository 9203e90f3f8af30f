"""Experiment model: pulse gate sets, the measurement operator, and
simulation of tomography records.

A tomography experiment on ``n`` qubits prepares ``|0...0>``, applies a
preparation gate ``G_i``, the process under study, and an analysis gate
``G_j``, then reads out a single voltage-valued observable ``M``.  The
expected record entry is

``m_ij = Tr[M  G_j(Lambda(G_i(rho_0)))]
       = (1/d) c_j^T R b_i``

with ``b_i = R_{G_i} p_0`` the prepared Pauli vectors and
``c_j = R_{G_j}^T mu`` the analysis functionals (``mu_m = Tr[M P_m]``,
pushed through the analysis gate in the Heisenberg picture).  Stacking the
rows ``w_(ij) = kron(b_i, c_j) / d`` over the grid gives the design matrix
``W`` with ``m = W vec(R)`` for the column-major vectorisation of ``R``.

Gate sets are the six-pulse menu ``I, X_pi, X_+-pi/2, Y_+-pi/2`` per qubit
(36 two-qubit combinations, qubit-1 pulse as the slow index).  Additive
Gaussian noise with per-analysis-setting variance ``v_j / N`` models
averaging ``N`` shots of a voltage readout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .channels import compose, decoherence_ptm, ptm_of_unitary
from .gates import TOMOGRAPHY_PULSES, pulse_unitary
from .pauli import (
    _check_qubit_count,
    computational_state,
    pauli_basis,
    pauli_vector,
    projector,
)
from .sampling import gue_hamiltonian

#: Default readout calibration: voltage levels (microvolt) of the four
#: computational states of a joint two-qubit dispersive readout, the common
#: variance of a single shot, and the number of averaged shots.
DEFAULT_LEVELS_2Q = (0.0035, 0.0196, 0.0302, 0.0323)
DEFAULT_LEVELS_1Q = (0.0035, 0.0323)
DEFAULT_SQRT_VARIANCE = 0.0143
DEFAULT_SHOTS = 10_000


@dataclass(frozen=True)
class MeasurementOperator:
    """Diagonal voltage observable with a shot-noise model.

    Attributes:
        diagonal: voltage level per computational state, length ``d``.
        variance: single-shot variance of the voltage channel (0 disables
            noise).
        shots: number of averaged shots; the recorded mean has variance
            ``variance / shots``.
    """

    diagonal: tuple[float, ...]
    variance: float = DEFAULT_SQRT_VARIANCE**2
    shots: int = DEFAULT_SHOTS

    def __post_init__(self):
        diag = tuple(float(x) for x in self.diagonal)
        if len(diag) not in (2, 4, 8):
            raise ValueError(
                f"diagonal must have qubit dimension (2, 4 or 8), got "
                f"{len(diag)}"
            )
        if self.variance < 0:
            raise ValueError(f"variance must be >= 0, got {self.variance}")
        if int(self.shots) < 1:
            raise ValueError(f"shots must be >= 1, got {self.shots}")
        object.__setattr__(self, "diagonal", diag)
        object.__setattr__(self, "variance", float(self.variance))
        object.__setattr__(self, "shots", int(self.shots))

    @property
    def dim(self) -> int:
        return len(self.diagonal)

    @property
    def n_qubits(self) -> int:
        return {2: 1, 4: 2, 8: 3}[self.dim]

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(np.asarray(self.diagonal, dtype=complex))

    def pauli_coefficients(self) -> np.ndarray:
        """``mu_m = Tr[M P_m]`` in the canonical Pauli order."""
        return pauli_vector(self.matrix)


def default_measurement(n_qubits: int) -> MeasurementOperator:
    """Hardware-flavoured default calibration for 1 or 2 qubits."""
    _check_qubit_count(n_qubits)
    if n_qubits == 1:
        return MeasurementOperator(DEFAULT_LEVELS_1Q)
    if n_qubits == 2:
        return MeasurementOperator(DEFAULT_LEVELS_2Q)
    raise ValueError("no default calibration beyond two qubits")


def _pulse_label(parts: tuple[str, ...]) -> str:
    return ",".join(parts)


def calibrate_measurement(record: "MeasurementRecord") -> MeasurementOperator:
    """Read the measurement levels off a record itself.

    With the analysis gate set to identity and the preparation gates chosen
    from ``{I, Xpi}`` per qubit, the recorded mean is the voltage level of
    the corresponding computational state — exactly how the readout is
    calibrated in practice.  The level for state index ``b`` (qubit-1 bit
    most significant) comes from the preparation label with ``Xpi`` on each
    set bit.

    Raises:
        ValueError: if the record lacks the identity analysis column or a
            required preparation row.
    """
    n = record.n_qubits
    identity = _pulse_label(("I",) * n)
    try:
        col = record.labels_analysis.index(identity)
    except ValueError:
        raise ValueError(
            "record lacks the identity analysis setting needed for "
            "self-calibration"
        ) from None
    levels = []
    for bits in product((0, 1), repeat=n):
        label = _pulse_label(tuple("Xpi" if b else "I" for b in bits))
        try:
            row = record.labels_prep.index(label)
        except ValueError:
            raise ValueError(
                f"record lacks preparation {label!r} needed for "
                "self-calibration"
            ) from None
        levels.append(float(record.values[row, col]))
    return MeasurementOperator(
        tuple(levels),
        variance=float(np.mean(record.variances)),
        shots=record.shots,
    )


@dataclass(frozen=True)
class GateSet:
    """Ordered collection of preparation/analysis gates as PTMs.

    Attributes:
        labels: per-gate labels; multi-qubit pulses are comma separated
            with qubit 1 first, e.g. ``"Xpi2,I"``.
        ptms: array of shape ``(n_gates, d**2, d**2)``.
        perturbation: short description of how the set deviates from ideal
            (``"none"`` for the ideal set); carried into records.
    """

    labels: tuple[str, ...]
    ptms: np.ndarray = field(repr=False)
    perturbation: str = "none"

    def __post_init__(self):
        ptms = np.asarray(self.ptms, dtype=float)
        if ptms.ndim != 3 or ptms.shape[1] != ptms.shape[2]:
            raise ValueError(f"ptms must be (n, d**2, d**2), got {ptms.shape}")
        if len(self.labels) != ptms.shape[0]:
            raise ValueError(
                f"{len(self.labels)} labels for {ptms.shape[0]} gates"
            )
        ptms = ptms.copy()
        ptms.setflags(write=False)
        object.__setattr__(self, "ptms", ptms)
        object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.ptms.shape[1])))

    @property
    def n_qubits(self) -> int:
        return {2: 1, 4: 2, 8: 3}[self.dim]


def ideal_gateset(n_qubits: int) -> GateSet:
    """The ideal tomography pulse set: all per-qubit combinations of the
    six-pulse menu, qubit-1 pulse as the slow index (6 or 36 gates)."""
    _check_qubit_count(n_qubits)
    if n_qubits > 2:
        raise ValueError("tomography pulse sets are defined for 1 or 2 qubits")
    labels = []
    ptms = []
    for parts in product(TOMOGRAPHY_PULSES, repeat=n_qubits):
        u = pulse_unitary(parts[0])
        for p in parts[1:]:
            u = np.kron(u, pulse_unitary(p))
        labels.append(_pulse_label(parts))
        ptms.append(ptm_of_unitary(u))
    return GateSet(labels=tuple(labels), ptms=np.array(ptms))


def gateset_from_labels(labels: tuple[str, ...] | list[str]) -> GateSet:
    """Rebuild an ideal gate set from stored labels (e.g. from a record).

    Labels must name pulses from the tomography menu, comma separated per
    qubit.  The result is the ideal PTM for each label; it is what an
    analyst assumes about the pulses when inverting a record.
    """
    if not labels:
        raise ValueError("empty label list")
    ptms = []
    n_parts = None
    for label in labels:
        parts = tuple(label.split(","))
        if n_parts is None:
            n_parts = len(parts)
        elif len(parts) != n_parts:
            raise ValueError(f"inconsistent label arity in {label!r}")
        u = None
        for p in parts:
            if p not in TOMOGRAPHY_PULSES:
                raise ValueError(
                    f"label {label!r} names unknown pulse {p!r}; "
                    f"known: {TOMOGRAPHY_PULSES}"
                )
            up = pulse_unitary(p)
            u = up if u is None else np.kron(u, up)
        ptms.append(ptm_of_unitary(u))
    return GateSet(labels=tuple(labels), ptms=np.array(ptms))


def prep_pauli_vectors(gates: GateSet) -> np.ndarray:
    """Matrix ``B`` with row ``i`` the Pauli vector of ``G_i |0...0>``."""
    p0 = pauli_vector(projector(computational_state(gates.n_qubits)))
    return gates.ptms @ p0


def analysis_functionals(gates: GateSet, meas: MeasurementOperator) -> np.ndarray:
    """Matrix ``C`` with row ``j`` the Heisenberg-picture functional
    ``R_j^T mu`` of the measurement after analysis gate ``j``."""
    if meas.n_qubits != gates.n_qubits:
        raise ValueError(
            f"measurement acts on {meas.n_qubits} qubits, gates on "
            f"{gates.n_qubits}"
        )
    mu = meas.pauli_coefficients()
    return np.einsum("gmn,m->gn", gates.ptms, mu)


def expected_values(
    r: np.ndarray,
    gates: GateSet,
    meas: MeasurementOperator,
    analysis_gates: GateSet | None = None,
) -> np.ndarray:
    """Noise-free record grid for a process with transfer matrix ``r``.

    Args:
        r: the process PTM.
        gates: preparation gate set (also used for analysis when
            ``analysis_gates`` is None).
        meas: measurement operator.
        analysis_gates: optional distinct analysis gate set.

    Returns:
        Array of shape ``(n_prep, n_analysis)`` with
        ``values[i, j] = (1/d) c_j^T R b_i``.
    """
    r = np.asarray(r, dtype=float)
    b = prep_pauli_vectors(gates)
    c = analysis_functionals(analysis_gates or gates, meas)
    if r.shape != (b.shape[1], b.shape[1]):
        raise ValueError(
            f"ptm shape {r.shape} does not match gate dimension {b.shape[1]}"
        )
    return (b @ r.T @ c.T) / gates.dim


def expected_value(
    r: np.ndarray,
    prep_index: int,
    analysis_index: int,
    gates: GateSet,
    meas: MeasurementOperator,
    analysis_gates: GateSet | None = None,
) -> float:
    """Single entry of :func:`expected_values`."""
    a_gates = analysis_gates or gates
    if not 0 <= prep_index < len(gates):
        raise IndexError(f"prep_index {prep_index} out of range [0, {len(gates)})")
    if not 0 <= analysis_index < len(a_gates):
        raise IndexError(
            f"analysis_index {analysis_index} out of range [0, {len(a_gates)})"
        )
    b = prep_pauli_vectors(gates)[prep_index]
    c = analysis_functionals(a_gates, meas)[analysis_index]
    r = np.asarray(r, dtype=float)
    return float(c @ r @ b) / gates.dim


def transfer_matrix(
    gates: GateSet,
    meas: MeasurementOperator,
    analysis_gates: GateSet | None = None,
) -> np.ndarray:
    """Design matrix ``W`` mapping ``vec(R)`` to the flattened record.

    Row ``i * n_analysis + j`` is ``kron(b_i, c_j) / d``; ``vec`` is
    column-major, so ``W @ r.flatten(order="F")`` reproduces
    ``expected_values(...).flatten()``.
    """
    b = prep_pauli_vectors(gates)
    c = analysis_functionals(analysis_gates or gates, meas)
    n_prep, d2 = b.shape
    n_meas = c.shape[0]
    w = np.einsum("in,jm->ijnm", b, c).reshape(n_prep * n_meas, d2 * d2)
    return w / gates.dim


def design_rank(w: np.ndarray, cond_limit: float = 1e10) -> tuple[int, np.ndarray]:
    """Numerical rank of a design matrix and its undetermined directions.

    Singular directions of ``W^T W`` whose eigenvalue falls below
    ``lambda_max / cond_limit`` are reported as columns of the second
    return value (each a unit vector in ``vec(R)`` space).
    """
    w = np.asarray(w, dtype=float)
    gram = w.T @ w
    eigval, eigvec = np.linalg.eigh(gram)
    lam_max = eigval[-1]
    if lam_max <= 0:
        return 0, eigvec
    bad = eigval < lam_max / cond_limit
    return int(np.sum(~bad)), eigvec[:, bad]


def describe_directions(null_vectors: np.ndarray, n_qubits: int, top: int = 3) -> str:
    """Human-readable summary of undetermined ``vec(R)`` directions.

    Each direction is described by its largest components, labelled
    ``out<-in`` in Pauli letters (e.g. ``XY<-ZI``).
    """
    labels = pauli_basis(n_qubits).labels
    d2 = len(labels)
    parts = []
    for k in range(null_vectors.shape[1]):
        vec = null_vectors[:, k]
        order = np.argsort(-np.abs(vec))[:top]
        terms = []
        for q in order:
            j, i = divmod(int(q), d2)  # column-major: index = j*d2 + i
            terms.append(f"{vec[q]:+.2f} {labels[i]}<-{labels[j]}")
        parts.append(" ".join(terms))
    return "; ".join(parts)


@dataclass(frozen=True)
class MeasurementRecord:
    """One simulated (or loaded) tomography data set.

    Attributes:
        n_qubits: number of qubits.
        labels_prep: preparation gate labels, in row order of ``values``.
        labels_analysis: analysis gate labels, in column order.
        values: voltage means, shape ``(n_prep, n_analysis)``.
        variances: single-shot variance per analysis setting (length
            ``n_analysis``); the mean of ``shots`` shots has variance
            ``variances / shots``.
        shots: number of averaged shots.
        seed: RNG seed used for the noise draw (None for noise-free).
        scenario: free-form provenance string.
    """

    n_qubits: int
    labels_prep: tuple[str, ...]
    labels_analysis: tuple[str, ...]
    values: np.ndarray = field(repr=False)
    variances: np.ndarray = field(repr=False)
    shots: int
    seed: int | None = None
    scenario: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        variances = np.asarray(self.variances, dtype=float)
        if values.shape != (len(self.labels_prep), len(self.labels_analysis)):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"{len(self.labels_prep)} x {len(self.labels_analysis)} labels"
            )
        if variances.shape != (len(self.labels_analysis),):
            raise ValueError(
                f"variances must have one entry per analysis setting, got "
                f"shape {variances.shape}"
            )
        if np.any(variances < 0):
            raise ValueError("variances must be non-negative")
        values = values.copy()
        variances = variances.copy()
        values.setflags(write=False)
        variances.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "labels_prep", tuple(self.labels_prep))
        object.__setattr__(self, "labels_analysis", tuple(self.labels_analysis))
        object.__setattr__(self, "shots", int(self.shots))

    @property
    def noise_sigma(self) -> np.ndarray:
        """Standard deviation of each column of ``values``."""
        return np.sqrt(self.variances / self.shots)


def simulate_record(
    true_ptm: np.ndarray,
    gates: GateSet,
    meas: MeasurementOperator,
    seed: int | None = None,
    analysis_gates: GateSet | None = None,
    scenario: str = "",
) -> MeasurementRecord:
    """Simulate a tomography record for a (possibly non-ideal) true process.

    With ``meas.variance == 0`` the record is the exact expectation grid and
    no random numbers are consumed; otherwise i.i.d. Gaussian noise of
    standard deviation ``sqrt(variance / shots)`` is added per entry using
    ``numpy.random.default_rng(seed)``.
    """
    a_gates = analysis_gates or gates
    mean = expected_values(true_ptm, gates, meas, analysis_gates)
    values = mean
    if meas.variance > 0:
        rng = np.random.default_rng(seed)
        sigma = np.sqrt(meas.variance / meas.shots)
        values = mean + sigma * rng.standard_normal(mean.shape)
    variances = np.full(len(a_gates), meas.variance)
    return MeasurementRecord(
        n_qubits=gates.n_qubits,
        labels_prep=gates.labels,
        labels_analysis=a_gates.labels,
        values=values,
        variances=variances,
        shots=meas.shots,
        seed=seed,
        scenario=scenario,
    )


def perturb_gateset_unitary(
    gates: GateSet,
    epsilon: float,
    seed: int,
    decouple_roles: bool = False,
) -> GateSet | tuple[GateSet, GateSet]:
    """Compose every gate with an independent coherent error.

    Each gate label receives ``U_err = exp(-i eps H / 2)`` with ``H`` a GUE
    sample of unit spectral norm, applied after the ideal pulse; the
    per-gate infidelity is then of order ``(eps/2)**2``.  By default one
    draw per label is shared between the preparation and analysis roles;
    ``decouple_roles=True`` returns two independently drawn sets instead.

    Args:
        gates: the set to perturb.
        epsilon: error strength (0 returns the input PTMs unchanged).
        seed: RNG seed; different seeds give different error draws.
        decouple_roles: draw separate errors for prep and analysis.

    Returns:
        A perturbed :class:`GateSet`, or a ``(prep, analysis)`` pair when
        roles are decoupled.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    tag = f"unitary(eps={epsilon:g}, seed={seed})"
    if epsilon == 0.0:
        out = GateSet(gates.labels, gates.ptms, perturbation=tag)
        return (out, out) if decouple_roles else out

    def draw(rng: np.random.Generator, role: str) -> GateSet:
        perturbed = np.empty_like(gates.ptms)
        for g in range(len(gates)):
            h = gue_hamiltonian(gates.dim, rng)
            w, v = np.linalg.eigh(h)
            u_err = (v * np.exp(-0.5j * epsilon * w)) @ v.conj().T
            perturbed[g] = compose(ptm_of_unitary(u_err), gates.ptms[g])
        return GateSet(gates.labels, perturbed, perturbation=f"{tag} [{role}]")

    rng = np.random.default_rng(seed)
    if not decouple_roles:
        out = draw(rng, "shared")
        return out
    return draw(rng, "prep"), draw(rng, "analysis")


def register_decoherence_ptm(
    t1_us: tuple[float, ...] | float,
    t2_us: tuple[float, ...] | float,
    duration_ns: float,
    n_qubits: int,
) -> np.ndarray:
    """Transfer matrix of per-qubit free decoherence across a register.

    ``t1_us`` / ``t2_us`` give per-qubit times (scalars are broadcast).
    Infinite times yield the identity factor on that qubit.
    """
    t1 = (t1_us,) * n_qubits if np.isscalar(t1_us) else tuple(t1_us)
    t2 = (t2_us,) * n_qubits if np.isscalar(t2_us) else tuple(t2_us)
    if len(t1) != n_qubits or len(t2) != n_qubits:
        raise ValueError(
            f"need one T1/T2 per qubit ({n_qubits}), got {len(t1)}/{len(t2)}"
        )
    factor = np.eye(1)
    for q in range(n_qubits):
        r_q = (
            np.eye(4)
            if np.isinf(t1[q]) and np.isinf(t2[q])
            else decoherence_ptm(t1[q], t2[q], duration_ns)
        )
        factor = np.kron(factor, r_q)
    return factor


def perturb_gateset_decoherence(
    gates: GateSet,
    t1_us: tuple[float, ...] | float,
    t2_us: tuple[float, ...] | float,
    gate_duration_ns: float,
) -> GateSet:
    """Compose every gate with per-qubit free decoherence of one gate time.

    ``t1_us`` / ``t2_us`` give per-qubit times (scalars are broadcast).
    Infinite times yield the identity factor on that qubit.
    """
    n = gates.n_qubits
    factor = register_decoherence_ptm(t1_us, t2_us, gate_duration_ns, n)
    t1 = (t1_us,) * n if np.isscalar(t1_us) else tuple(t1_us)
    t2 = (t2_us,) * n if np.isscalar(t2_us) else tuple(t2_us)
    perturbed = np.array([compose(factor, r) for r in gates.ptms])
    tag = (
        f"decoherence(t1={tuple(t1)}, t2={tuple(t2)}, "
        f"duration_ns={gate_duration_ns:g})"
    )
    return GateSet(gates.labels, perturbed, perturbation=tag)
