"""Tomography experiment model: designs, records, calibration, perturbations."""

import dataclasses

import numpy as np
import pytest

from ptmtomo.channels import ptm_of_kraus
from ptmtomo.gates import process_ptm, pulse_unitary
from ptmtomo.measurement import (
    analysis_functionals,
    calibrate_measurement,
    default_measurement,
    design_rank,
    expected_value,
    expected_values,
    gateset_from_labels,
    ideal_gateset,
    perturb_gateset_unitary,
    prep_pauli_vectors,
    register_decoherence_ptm,
    simulate_record,
    transfer_matrix,
)
from ptmtomo.sampling import random_cptp_kraus

from oracles import expected_value_density_path


def _label_unitary(label: str) -> np.ndarray:
    """Unitary of a preparation/analysis gate label like ``"Xpi2,I"``."""
    u = np.array([[1.0 + 0.0j]])
    for part in label.split(","):
        u = np.kron(u, pulse_unitary(part))
    return u


def test_default_measurement_calibration_values():
    meas1 = default_measurement(1)
    assert meas1.shots == 10000
    assert meas1.variance == pytest.approx(0.0143**2, rel=1e-12)
    meas2 = default_measurement(2)
    assert meas2.diagonal == (0.0035, 0.0196, 0.0302, 0.0323)
    assert len(meas1.diagonal) == 2


@pytest.mark.parametrize("n_qubits", [1, 2])
def test_expected_value_matches_density_matrix_path(n_qubits):
    """The Pauli-functional grid equals the direct prepare-evolve-measure path."""
    rng = np.random.default_rng(42)
    gates = ideal_gateset(n_qubits)
    meas = default_measurement(n_qubits)
    n_dirs = len(gates.labels)
    checks = 250 if n_qubits == 1 else 125
    for _ in range(checks):
        r = ptm_of_kraus(random_cptp_kraus(n_qubits, rng, kraus_rank=2))
        i = int(rng.integers(n_dirs))
        j = int(rng.integers(n_dirs))
        got = expected_value(r, i, j, gates, meas)
        want = expected_value_density_path(
            r,
            _label_unitary(gates.labels[i]),
            _label_unitary(gates.labels[j]),
            meas.diagonal,
        )
        assert got == pytest.approx(want, abs=1e-10)


def test_expected_values_grid_matches_entrywise():
    rng = np.random.default_rng(1)
    gates = ideal_gateset(1)
    meas = default_measurement(1)
    r = ptm_of_kraus(random_cptp_kraus(1, rng))
    grid = expected_values(r, gates, meas)
    assert grid.shape == (6, 6)
    for i in range(6):
        for j in range(6):
            assert grid[i, j] == pytest.approx(expected_value(r, i, j, gates, meas), abs=1e-14)


def test_design_matrix_reproduces_identity_record():
    gates = ideal_gateset(2)
    meas = default_measurement(2)
    w = transfer_matrix(gates, meas)
    assert w.shape == (1296, 256)
    grid = expected_values(np.eye(16), gates, meas)
    assert np.abs(w @ np.eye(16).reshape(-1) - grid.reshape(-1)).max() < 1e-12


@pytest.mark.parametrize("n_qubits", [1, 2])
def test_design_is_full_rank_and_reproducible(n_qubits):
    gates = ideal_gateset(n_qubits)
    meas = default_measurement(n_qubits)
    w1 = transfer_matrix(gates, meas)
    w2 = transfer_matrix(gates, meas)
    assert np.array_equal(w1, w2)
    gram = w1.T @ w1
    assert np.abs(gram - gram.T).max() < 1e-15
    eigenvalues = np.linalg.eigvalsh(gram)
    assert eigenvalues.min() > 0
    rank, _ = design_rank(w1)
    assert rank == (4**n_qubits) ** 2


def test_rank_detects_degenerate_analysis():
    # analysis restricted to identity pulses cannot resolve X or Y components
    gates = ideal_gateset(1)
    degenerate = gateset_from_labels(("I",) * 6)
    meas = default_measurement(1)
    w = transfer_matrix(gates, meas, analysis_gates=degenerate)
    rank, _ = design_rank(w)
    assert rank < 16


def test_prep_pauli_vectors_normalization():
    vectors = prep_pauli_vectors(ideal_gateset(1))
    assert vectors.shape == (6, 4)
    assert np.abs(vectors[:, 0] - 1.0).max() < 1e-12
    # pure single-qubit states have unit Bloch vectors
    assert np.abs(np.linalg.norm(vectors[:, 1:], axis=1) - 1.0).max() < 1e-12


def test_analysis_functionals_shape_and_identity_row():
    gates = ideal_gateset(1)
    meas = default_measurement(1)
    functionals = analysis_functionals(gates, meas)
    assert functionals.shape == (6, 4)
    # the identity coefficient is the same for every analysis pulse
    assert np.abs(functionals[:, 0] - functionals[0, 0]).max() < 1e-12
    assert functionals[0, 0] == pytest.approx(sum(meas.diagonal), abs=1e-12)


def test_simulate_record_seeded_reproducibility():
    gates = ideal_gateset(2)
    meas = default_measurement(2)
    r = process_ptm("CNOT")
    rec1 = simulate_record(r, gates, meas, seed=123)
    rec2 = simulate_record(r, gates, meas, seed=123)
    assert np.array_equal(rec1.values, rec2.values)
    assert np.array_equal(rec1.variances, rec2.variances)
    rec3 = simulate_record(r, gates, meas, seed=124)
    assert not np.array_equal(rec1.values, rec3.values)


def test_noiseless_record_equals_expectations():
    gates = ideal_gateset(1)
    meas = dataclasses.replace(default_measurement(1), variance=0.0)
    rec = simulate_record(np.eye(4), gates, meas, seed=None)
    assert np.array_equal(rec.values, expected_values(np.eye(4), gates, meas))
    assert np.all(rec.variances == 0.0)


def test_record_noise_statistics():
    """Empirical variance of a record entry approaches v/N over many draws."""
    gates = ideal_gateset(1)
    meas = default_measurement(1)
    expected = expected_values(np.eye(4), gates, meas)
    draws = np.empty(10000)
    for k in range(10000):
        rec = simulate_record(np.eye(4), gates, meas, seed=50000 + k)
        draws[k] = rec.values[2, 3]
    empirical = draws.var(ddof=1)
    target = meas.variance / meas.shots
    assert abs(empirical - target) / target < 0.05
    assert abs(draws.mean() - expected[2, 3]) < 5 * np.sqrt(target / 10000)


def test_self_calibration_recovers_levels_on_identity():
    meas = dataclasses.replace(default_measurement(2), variance=0.0)
    rec = simulate_record(np.eye(16), ideal_gateset(2), meas, seed=None)
    recovered = calibrate_measurement(rec)
    assert np.abs(np.array(recovered.diagonal) - np.array(meas.diagonal)).max() < 1e-12
    assert recovered.shots == meas.shots


def test_self_calibration_poisoned_by_bit_flipping_process():
    """Calibrating from a record whose process permutes computational states
    mis-assigns the level ordering — the known failure mode of in-situ
    calibration on non-identity data."""
    meas = dataclasses.replace(default_measurement(2), variance=0.0)
    rec = simulate_record(process_ptm("CNOT"), ideal_gateset(2), meas, seed=None)
    recovered = calibrate_measurement(rec)
    assert np.abs(np.array(recovered.diagonal) - np.array(meas.diagonal)).max() > 1e-3


def test_perturb_gateset_deterministic_and_identity_at_zero():
    clean = ideal_gateset(2)
    a = perturb_gateset_unitary(clean, 0.3, seed=5)
    b = perturb_gateset_unitary(clean, 0.3, seed=5)
    assert np.array_equal(a.ptms, b.ptms)
    c = perturb_gateset_unitary(clean, 0.3, seed=6)
    assert not np.array_equal(a.ptms, c.ptms)
    zero = perturb_gateset_unitary(clean, 0.0, seed=5)
    assert np.abs(zero.ptms - clean.ptms).max() < 1e-12


def test_perturb_gateset_decoupled_roles_differ():
    clean = ideal_gateset(1)
    prep, analysis = perturb_gateset_unitary(clean, 0.3, seed=7, decouple_roles=True)
    assert not np.array_equal(prep.ptms, analysis.ptms)
    shared = perturb_gateset_unitary(clean, 0.3, seed=7)
    assert np.array_equal(shared.ptms, prep.ptms)


def test_pulse_infidelity_grows_with_epsilon():
    clean = ideal_gateset(2)
    fids = []
    for eps in (0.05, 0.15, 0.3):
        perturbed = perturb_gateset_unitary(clean, eps, seed=11)
        total = 0.0
        for r_clean, r_pert in zip(clean.ptms, perturbed.ptms):
            total += np.trace(r_clean.T @ r_pert) / 16.0
        fids.append(total / len(clean.labels))
    assert fids[0] > fids[1] > fids[2]


def test_register_decoherence_broadcast_and_limits():
    per_qubit = register_decoherence_ptm((8.2, 9.7), (7.1, 10.3), 110.0, 2)
    assert per_qubit.shape == (16, 16)
    # scalars broadcast to both qubits
    same = register_decoherence_ptm(8.2, 7.1, 110.0, 2)
    both = register_decoherence_ptm((8.2, 8.2), (7.1, 7.1), 110.0, 2)
    assert np.abs(same - both).max() < 1e-15
    assert np.abs(register_decoherence_ptm(np.inf, np.inf, 110.0, 2) - np.eye(16)).max() < 1e-12
    assert np.abs(register_decoherence_ptm(8.2, 7.1, 0.0, 2) - np.eye(16)).max() < 1e-12


def test_record_metadata_round_trip_fields():
    gates = ideal_gateset(1)
    meas = default_measurement(1)
    rec = simulate_record(np.eye(4), gates, meas, seed=9, scenario="identity check")
    assert rec.n_qubits == 1
    assert rec.labels_prep == gates.labels
    assert rec.labels_analysis == gates.labels
    assert rec.seed == 9
    assert rec.scenario == "identity check"
    assert rec.shots == meas.shots
    assert np.all(rec.variances == meas.variance)
