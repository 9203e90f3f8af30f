"""Statistical and systematic error studies for reconstructed processes.

Four studies live here: bootstrap resampling of a tomography record to put
an error bar on the gate fidelity, a Monte Carlo sweep over faulty
preparation/analysis pulse sets, a coherence-limited error budget, and the
repeated-gate decay experiment with its exponential fit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .channels import compose, ptm_of_unitary
from .gates import process_ptm, rotation
from .measurement import (
    GateSet,
    MeasurementOperator,
    MeasurementRecord,
    default_measurement,
    ideal_gateset,
    perturb_gateset_unitary,
    register_decoherence_ptm,
    simulate_record,
)
from .metrics import (
    concurrence,
    gate_fidelity,
    process_fidelity,
    state_fidelity,
    two_norm_distance,
)
from .pauli import computational_state, operator_from_pauli_vector, pauli_vector, projector
from .reconstruction import ReconstructionError, Reconstructor, SolverOptions
from .sampling import gue_hamiltonian

__all__ = [
    "BootstrapResult",
    "bootstrap",
    "FaultyGatesetRow",
    "faulty_gateset_study",
    "mean_pulse_fidelity",
    "calibrate_epsilon",
    "BudgetEntry",
    "decoherence_budget",
    "RepeatedGateResult",
    "repeated_gate_experiment",
    "bell_input_ket",
    "bell_target_ket",
    "DecayFit",
    "fit_decay",
]


# ---------------------------------------------------------------------------
# bootstrap error bars


@dataclass(frozen=True)
class BootstrapResult:
    """Spread of the gate fidelity over resampled tomography records.

    ``fidelities`` holds one gate fidelity per successful replicate;
    ``delta_f_g`` is their sample standard deviation, the quoted error bar.
    The mean of the replicates sits slightly below the full-data fit (the
    constraint boundary pushes resampled fits to one side); that offset is
    recorded but not folded into the error bar.
    """

    replicates: int
    fidelities: np.ndarray
    delta_f_g: float
    mean_offset: float
    base_f_g: float
    failed: int = 0

    def __post_init__(self):
        fids = np.asarray(self.fidelities, dtype=float)
        fids.setflags(write=False)
        object.__setattr__(self, "fidelities", fids)
        if self.delta_f_g < 0:
            raise ValueError("delta_f_g must be non-negative")

    def as_dict(self) -> dict:
        return {
            "replicates": self.replicates,
            "delta_f_g": self.delta_f_g,
            "mean_offset": self.mean_offset,
            "base_f_g": self.base_f_g,
            "failed": self.failed,
            "fidelities": [float(x) for x in self.fidelities],
        }


def _gate_fidelity_to(ideal: np.ndarray, r: np.ndarray) -> float:
    d = int(round(np.sqrt(r.shape[0])))
    return gate_fidelity(process_fidelity(ideal, r), d)


def bootstrap(
    record: MeasurementRecord,
    ideal: np.ndarray,
    gates: GateSet | None = None,
    meas: MeasurementOperator | None = None,
    replicates: int = 100,
    seed: int = 0,
    options: SolverOptions | None = None,
    analysis_gates: GateSet | None = None,
    workers: int | None = None,
) -> BootstrapResult:
    """Error bar on the gate fidelity from resampled records.

    Each replicate perturbs the record entrywise by Gaussian noise of the
    record's own standard deviation ``sqrt(v_j / N)`` and refits by
    constrained maximum likelihood; the spread of the resulting fidelities
    against ``ideal`` is the reported uncertainty.

    Args:
        record: measured (or simulated) tomography record.
        ideal: target transfer matrix the fidelity is taken against.
        gates/meas/analysis_gates: design override; defaults to the
            record's own labels and self-calibrated measurement.
        replicates: number of resampled records (>= 2).
        seed: master seed; replicate streams are spawned from it.
        options: solver options shared by every fit.
        workers: thread count for the refits (None or 1 = sequential).

    Returns:
        A :class:`BootstrapResult`; replicates whose solve does not reach
        the optimal status are dropped and counted in ``failed``.
    """
    if replicates < 2:
        raise ValueError(f"replicates must be >= 2, got {replicates}")
    solver = Reconstructor(record, gates, meas, options, analysis_gates)
    r_base, base_report = solver.mle(record.values)
    if base_report.status != "optimal":
        raise ReconstructionError(
            f"full-data fit did not converge: {base_report.message}"
        )
    base_f_g = _gate_fidelity_to(ideal, r_base)

    sigma = record.noise_sigma
    children = np.random.SeedSequence(seed).spawn(replicates)
    grids = []
    for child in children:
        rng = np.random.default_rng(child)
        grids.append(record.values + sigma * rng.standard_normal(record.values.shape))

    def refit(values: np.ndarray) -> float | None:
        r_k, report = solver.mle(values)
        if report.status != "optimal":
            return None
        return _gate_fidelity_to(ideal, r_k)

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(refit, grids))
    else:
        results = [refit(g) for g in grids]

    fids = np.array([f for f in results if f is not None], dtype=float)
    failed = replicates - fids.size
    if fids.size < 2:
        raise ReconstructionError(
            f"only {fids.size} of {replicates} replicates converged"
        )
    delta = float(np.std(fids, ddof=1))
    return BootstrapResult(
        replicates=replicates,
        fidelities=fids,
        delta_f_g=delta,
        mean_offset=float(np.mean(fids) - base_f_g),
        base_f_g=base_f_g,
        failed=failed,
    )


# ---------------------------------------------------------------------------
# faulty gate set Monte Carlo


@dataclass(frozen=True)
class FaultyGatesetRow:
    """Averages over one error strength of the faulty-pulse sweep."""

    epsilon: float
    pulse_f_g: float
    recon_f_g: float
    half_distance: float
    half_distance_frobenius: float
    trials: int
    recon_f_g_std: float = 0.0

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "pulse_f_g": self.pulse_f_g,
            "recon_f_g": self.recon_f_g,
            "half_distance": self.half_distance,
            "half_distance_frobenius": self.half_distance_frobenius,
            "trials": self.trials,
            "recon_f_g_std": self.recon_f_g_std,
        }


def mean_pulse_fidelity(ideal: GateSet, *perturbed: GateSet) -> float:
    """Average gate fidelity of perturbed pulse sets against their ideals."""
    if not perturbed:
        raise ValueError("need at least one perturbed gate set")
    d = ideal.dim
    vals = []
    for gset in perturbed:
        if gset.labels != ideal.labels:
            raise ValueError("gate sets must share labels")
        for r_id, r in zip(ideal.ptms, gset.ptms):
            vals.append(gate_fidelity(process_fidelity(r_id, r), d))
    return float(np.mean(vals))


def faulty_gateset_study(
    epsilons,
    trials_per_eps: int = 10,
    seed: int = 0,
    n_qubits: int = 2,
    include_shot_noise: bool = False,
    decouple_roles: bool = True,
    options: SolverOptions | None = None,
    workers: int | None = None,
) -> tuple[FaultyGatesetRow, ...]:
    """Reconstruct a perfect identity with faulty tomography pulses.

    For each error strength fresh faulty pulse sets are drawn per trial
    (independently for the preparation and analysis roles by default),
    the exact record a perfect identity process would produce under those
    pulses is simulated (noiseless voltage channel by default, so the rows
    isolate the systematic error), and the record is then analyzed
    assuming ideal pulses and a self-calibrated measurement.  The
    calibration step absorbs part of the correlated pulse error, exactly
    as it would on hardware.  Row values are averages over the trials.

    Args:
        epsilons: iterable of error strengths (see
            :func:`perturb_gateset_unitary`).
        trials_per_eps: error-set draws averaged per row.
        seed: master seed for all draws.
        n_qubits: register size of the identity process.
        include_shot_noise: also add the default voltage noise.
        decouple_roles: draw independent errors for prep and analysis
            (set False to reuse one faulty set for both roles).
        options: solver options for the MLE fits.
        workers: thread count for the trials (None or 1 = sequential).
    """
    eps_list = [float(e) for e in np.atleast_1d(np.asarray(epsilons, dtype=float))]
    if trials_per_eps < 1:
        raise ValueError("trials_per_eps must be >= 1")
    clean = ideal_gateset(n_qubits)
    d2 = clean.dim**2
    identity = np.eye(d2)
    meas = default_measurement(n_qubits)
    if not include_shot_noise:
        meas = MeasurementOperator(meas.diagonal, variance=0.0, shots=meas.shots)
    n_total = len(eps_list) * trials_per_eps
    trial_seeds = np.random.SeedSequence(seed).generate_state(
        2 * n_total, dtype=np.uint64
    )

    def run_trial(task: tuple[int, int]) -> tuple[int, float, float, float, float]:
        e_idx, t_idx = task
        flat = e_idx * trials_per_eps + t_idx
        eps = eps_list[e_idx]
        draw = perturb_gateset_unitary(
            clean, eps, int(trial_seeds[flat]), decouple_roles=decouple_roles
        )
        prep, analysis = draw if decouple_roles else (draw, draw)
        record = simulate_record(
            identity,
            prep,
            meas,
            seed=int(trial_seeds[n_total + flat]),
            analysis_gates=analysis,
            scenario=f"faulty-gateset eps={eps:g}",
        )
        r_mle, report = Reconstructor(record, gates=clean, options=options).mle(
            record.values
        )
        if report.status != "optimal":
            raise ReconstructionError(
                f"trial (eps={eps:g}, trial={t_idx}) did not converge: "
                f"{report.message}"
            )
        pulse = mean_pulse_fidelity(clean, prep, analysis)
        return (
            e_idx,
            pulse,
            _gate_fidelity_to(identity, r_mle),
            0.5 * two_norm_distance(r_mle, identity, mode="printed"),
            0.5 * two_norm_distance(r_mle, identity, mode="frobenius"),
        )

    tasks = [(e, t) for e in range(len(eps_list)) for t in range(trials_per_eps)]
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run_trial, tasks))
    else:
        outcomes = [run_trial(task) for task in tasks]

    rows = []
    for e_idx, eps in enumerate(eps_list):
        block = np.array([o[1:] for o in outcomes if o[0] == e_idx])
        rows.append(
            FaultyGatesetRow(
                epsilon=eps,
                pulse_f_g=float(np.mean(block[:, 0])),
                recon_f_g=float(np.mean(block[:, 1])),
                half_distance=float(np.mean(block[:, 2])),
                half_distance_frobenius=float(np.mean(block[:, 3])),
                trials=trials_per_eps,
                recon_f_g_std=float(np.std(block[:, 1], ddof=1))
                if trials_per_eps > 1
                else 0.0,
            )
        )
    return tuple(rows)


def calibrate_epsilon(
    target_pulse_f_g: float,
    n_qubits: int = 2,
    seed: int = 0,
    draws: int = 300,
) -> float:
    """Error strength whose expected pulse fidelity hits a target.

    A coherent error ``exp(-i eps H / 2)`` with Hamiltonian eigenvalues
    ``l_k`` has gate fidelity ``(|sum_k exp(-i eps l_k / 2)|^2 / d + 1) /
    (d + 1)`` regardless of which pulse it lands on, so the expected pulse
    fidelity at strength ``eps`` is a closed form once the Hamiltonians
    are drawn.  This averages that closed form over ``draws`` samples and
    root-finds the strength matching ``target_pulse_f_g``.
    """
    if not 0.0 < target_pulse_f_g <= 1.0:
        raise ValueError(f"target fidelity must be in (0, 1], got {target_pulse_f_g}")
    if target_pulse_f_g == 1.0:
        return 0.0
    d = 2**n_qubits
    rng = np.random.default_rng(seed)
    spectra = np.array(
        [np.linalg.eigvalsh(gue_hamiltonian(d, rng)) for _ in range(draws)]
    )

    def mean_f_g(eps: float) -> float:
        traces = np.abs(np.exp(-0.5j * eps * spectra).sum(axis=1)) ** 2
        return float(np.mean((traces / d + 1.0) / (d + 1.0)))

    hi = 0.05
    while mean_f_g(hi) > target_pulse_f_g:
        hi *= 2.0
        if hi > 16.0:
            raise ValueError(
                f"target fidelity {target_pulse_f_g} not reachable by eps <= 16"
            )
    return float(brentq(lambda e: mean_f_g(e) - target_pulse_f_g, 0.0, hi, xtol=1e-12))


# ---------------------------------------------------------------------------
# coherence-limited error budget


@dataclass(frozen=True)
class BudgetEntry:
    """Infidelity a pulse sequence of a given length picks up from decoherence."""

    duration_ns: float
    f_g: float
    error: float

    def as_dict(self) -> dict:
        return {"duration_ns": self.duration_ns, "f_g": self.f_g, "error": self.error}


def decoherence_budget(
    t1_us,
    t2_us,
    durations_ns,
    n_qubits: int = 2,
    sequence_ptm: np.ndarray | None = None,
) -> tuple[BudgetEntry, ...]:
    """Error estimates from running a sequence for a given wall time.

    Composes the ideal sequence with amplitude damping and dephasing for
    each total duration and reports ``1 - F_g`` against the undamped
    sequence.  With the default identity sequence (or any unitary one) the
    number depends only on the duration, so one entry per duration is the
    whole budget.
    """
    durations = np.atleast_1d(np.asarray(durations_ns, dtype=float))
    d2 = (2**n_qubits) ** 2
    seq = np.eye(d2) if sequence_ptm is None else np.asarray(sequence_ptm, dtype=float)
    if seq.shape != (d2, d2):
        raise ValueError(f"sequence PTM must be {d2}x{d2}, got {seq.shape}")
    entries = []
    for t_ns in durations:
        damped = compose(register_decoherence_ptm(t1_us, t2_us, t_ns, n_qubits), seq)
        f_g = _gate_fidelity_to(seq, damped)
        entries.append(BudgetEntry(duration_ns=float(t_ns), f_g=f_g, error=1.0 - f_g))
    return tuple(entries)


# ---------------------------------------------------------------------------
# repeated-gate decay


def bell_input_ket() -> np.ndarray:
    """Input ``(|00> + i|10>)/sqrt(2)`` prepared by an X rotation on qubit 1."""
    return np.array([1.0, 0.0, 1.0j, 0.0]) / np.sqrt(2.0)


def bell_target_ket() -> np.ndarray:
    """Entangled target ``(|00> + i|11>)/sqrt(2)`` reached after odd gate counts."""
    return np.array([1.0, 0.0, 0.0, 1.0j]) / np.sqrt(2.0)


@dataclass(frozen=True)
class RepeatedGateResult:
    """States and figures of merit after 0..N applications of a gate."""

    n_values: np.ndarray
    states: np.ndarray
    fidelities: np.ndarray
    concurrences: np.ndarray

    def __post_init__(self):
        for name in ("n_values", "states", "fidelities", "concurrences"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def repeated_gate_experiment(
    gate: np.ndarray | None = None,
    n_max: int = 12,
    noise: np.ndarray | None = None,
    input_prep: np.ndarray | None = None,
) -> RepeatedGateResult:
    """Apply a two-qubit gate up to ``n_max`` times and track the state.

    The register starts in ``|00>`` and is prepared by ``input_prep``
    (default: the ideal X rotation by ``-pi/2`` on qubit 1, giving
    ``(|00> + i|10>)/sqrt(2)``).  Each application composes ``noise`` after
    ``gate`` when a noise channel is given.  Fidelities are taken against
    the ideal alternating targets — the entangled state after odd counts,
    the input state after even counts — and the concurrence of each state
    is recorded.

    Args:
        gate: 16x16 transfer matrix applied repeatedly (default: CNOT).
        n_max: largest application count (>= 1).
        noise: optional 16x16 transfer matrix composed after each gate.
        input_prep: optional 16x16 preparation transfer matrix.

    Returns:
        A :class:`RepeatedGateResult` with entries for ``N = 0 .. n_max``.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    step = np.asarray(gate, dtype=float) if gate is not None else process_ptm("CNOT")
    if step.shape != (16, 16):
        raise ValueError(f"gate PTM must be 16x16, got {step.shape}")
    if noise is not None:
        step = compose(np.asarray(noise, dtype=float), step)
    if input_prep is None:
        u_prep = np.kron(rotation("x", -np.pi / 2), np.eye(2))
        input_prep = ptm_of_unitary(u_prep)
    p = np.asarray(input_prep, dtype=float) @ pauli_vector(
        projector(computational_state(2, 0))
    )

    targets = (bell_input_ket(), bell_target_ket())
    states, fids, concs = [], [], []
    for n in range(n_max + 1):
        rho = operator_from_pauli_vector(p)
        states.append(rho)
        fids.append(state_fidelity(rho, targets[n % 2]))
        concs.append(concurrence(rho))
        p = step @ p
    return RepeatedGateResult(
        n_values=np.arange(n_max + 1),
        states=np.array(states),
        fidelities=np.array(fids),
        concurrences=np.array(concs),
    )


# ---------------------------------------------------------------------------
# exponential decay fit


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of fidelities to ``A * F_g**N + B``.

    ``residual`` is the root-mean-square misfit and ``fitted`` the model
    curve on the input grid.  ``degenerate`` flags a rank-deficient fit
    (for example constant data, where the decay rate is unidentifiable).
    """

    a: float
    b: float
    f_g: float
    residual: float
    fitted: np.ndarray
    iterations: int
    converged: bool
    degenerate: bool = False

    def __post_init__(self):
        arr = np.asarray(self.fitted, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "fitted", arr)
        if not 0.0 < self.f_g <= 1.0:
            raise ValueError(f"fitted F_g must lie in (0, 1], got {self.f_g}")

    def as_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "f_g": self.f_g,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "degenerate": self.degenerate,
            "fitted": [float(x) for x in self.fitted],
        }


_FG_FLOOR = 1e-9


def _decay_model(theta: np.ndarray, n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b, f = theta
    powers = f**n
    model = a * powers + b
    df = np.where(n == 0, 0.0, a * n * f ** np.maximum(n - 1, 0))
    jac = np.column_stack([powers, np.ones_like(powers), df])
    return model, jac


def fit_decay(
    fidelities,
    n_values=None,
    max_iterations: int = 200,
) -> DecayFit:
    """Fit per-count state fidelities to the decay model ``A*F_g**N + B``.

    Damped Gauss-Newton with a Levenberg-Marquardt schedule: the normal
    matrix is regularized by ``lambda * diag``, ``lambda`` shrinks tenfold
    on an accepted step and grows tenfold on a rejected one, starting from
    1e-3.  The start point is fixed at ``(A, B, F_g) = (0.75, 0.25, 0.98)``
    so repeated runs are bit-identical.  ``F_g`` is kept inside ``(0, 1]``
    throughout.  Non-convergence is reported on the best iterate rather
    than raised.

    Args:
        fidelities: state fidelities, one per gate count.
        n_values: gate counts; defaults to ``0, 1, ..., len - 1``.
        max_iterations: cap on accepted Gauss-Newton steps.
    """
    y = np.asarray(fidelities, dtype=float).reshape(-1)
    if y.size < 4:
        raise ValueError(f"need at least 4 points to fit, got {y.size}")
    n = (
        np.arange(y.size, dtype=float)
        if n_values is None
        else np.asarray(n_values, dtype=float).reshape(-1)
    )
    if n.shape != y.shape:
        raise ValueError(f"n_values length {n.size} does not match data {y.size}")

    theta = np.array([0.75, 0.25, 0.98])
    model, jac = _decay_model(theta, n)
    resid = model - y
    cost = float(resid @ resid)
    lam = 1e-3
    converged = False
    iterations = 0
    while iterations < max_iterations and not converged:
        gram = jac.T @ jac
        grad = jac.T @ resid
        diag = np.maximum(np.diag(gram), 1e-12)
        accepted = False
        while lam <= 1e12:
            step = np.linalg.solve(gram + lam * np.diag(diag), -grad)
            trial = theta + step
            trial[2] = min(max(trial[2], _FG_FLOOR), 1.0)
            t_model, t_jac = _decay_model(trial, n)
            t_resid = t_model - y
            t_cost = float(t_resid @ t_resid)
            if t_cost < cost or np.linalg.norm(trial - theta) == 0.0:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        moved = np.linalg.norm(trial - theta)
        theta, model, jac, resid, cost = trial, t_model, t_jac, t_resid, t_cost
        lam = max(lam / 10.0, 1e-15)
        iterations += 1
        if moved <= 1e-12 * (1.0 + np.linalg.norm(theta)):
            converged = True

    gram = jac.T @ jac
    degenerate = bool(np.linalg.cond(gram) > 1e12)
    return DecayFit(
        a=float(theta[0]),
        b=float(theta[1]),
        f_g=float(theta[2]),
        residual=float(np.sqrt(cost / y.size)),
        fitted=model,
        iterations=iterations,
        converged=converged,
        degenerate=degenerate,
    )
