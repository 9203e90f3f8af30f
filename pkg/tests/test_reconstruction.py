"""Linear inversion and the constrained maximum-likelihood solver."""

import dataclasses

import numpy as np
import pytest

from ptmtomo.channels import choi_of_ptm, ptm_of_choi, ptm_of_kraus, ptm_of_unitary
from ptmtomo.gates import process_ptm, rotation
from ptmtomo.measurement import (
    default_measurement,
    gateset_from_labels,
    ideal_gateset,
    perturb_gateset_unitary,
    simulate_record,
)
from ptmtomo.reconstruction import (
    RankDeficientDesignError,
    Reconstructor,
    SolverOptions,
    linear_inversion,
    mle_reconstruct,
    project_to_cp,
    state_mle,
)
from ptmtomo.sampling import random_cptp_kraus

from oracles import choi_of_map, project_to_psd_trace


MEAS1 = default_measurement(1)


def _noisy_record(seed=7, true_ptm=None):
    """One-qubit noisy record; reconstruct with ``meas=MEAS1`` (the record is
    a quarter turn, so in-place self-calibration would be meaningless)."""
    if true_ptm is None:
        true_ptm = ptm_of_unitary(rotation("x", np.pi / 2))
    return simulate_record(true_ptm, ideal_gateset(1), MEAS1, seed=seed)


def test_linear_inversion_recovers_truth_noiselessly():
    gates = ideal_gateset(2)
    meas = dataclasses.replace(default_measurement(2), variance=0.0)
    truth = process_ptm("CNOT")
    rec = simulate_record(truth, gates, meas, seed=None)
    assert np.abs(linear_inversion(rec, meas=meas) - truth).max() < 1e-9


def test_linear_inversion_random_channel_noiseless():
    rng = np.random.default_rng(3)
    truth = ptm_of_kraus(random_cptp_kraus(1, rng))
    meas = dataclasses.replace(default_measurement(1), variance=0.0)
    rec = simulate_record(truth, ideal_gateset(1), meas, seed=None)
    assert np.abs(linear_inversion(rec, meas=meas) - truth).max() < 1e-9


def test_mle_takes_cp_shortcut_on_physical_linear_estimate():
    """When linear inversion is already CP the solver returns it unchanged."""
    meas = dataclasses.replace(default_measurement(1), variance=0.0)
    truth = ptm_of_unitary(rotation("y", np.pi / 2))
    rec = simulate_record(truth, ideal_gateset(1), meas, seed=None)
    r_mle, report = mle_reconstruct(rec, meas=meas)
    assert np.abs(r_mle - linear_inversion(rec, meas=meas)).max() < 1e-8
    assert report.status == "optimal"


def test_mle_beats_feasible_competitors():
    """The solver's objective is no worse than any sampled CP candidate."""
    rec = _noisy_record(seed=11)
    recon = Reconstructor(rec, meas=MEAS1)
    r_mle, report = recon.mle(rec.values)
    best = recon.objective(r_mle.flatten(order="F"), rec.values)
    rng = np.random.default_rng(0)
    for _ in range(50):
        candidate = ptm_of_kraus(random_cptp_kraus(1, rng))
        assert best <= recon.objective(candidate.flatten(order="F"), rec.values) + 1e-9
    clipped = project_to_cp(recon.linear(rec.values))
    assert best <= recon.objective(clipped.flatten(order="F"), rec.values) + 1e-9


def test_mle_choi_is_positive():
    rec = _noisy_record(seed=13)
    r_mle, report = mle_reconstruct(rec, meas=MEAS1)
    eigenvalues = np.linalg.eigvalsh(choi_of_ptm(r_mle))
    assert eigenvalues.min() >= -1e-8
    assert report.min_choi_eigenvalue >= -1e-8
    assert report.status == "optimal"


def test_variance_rescale_leaves_estimate_unchanged():
    """Multiplying every variance by a constant cannot move the optimum."""
    rec = _noisy_record(seed=17)
    scaled = dataclasses.replace(rec, variances=rec.variances * 25.0)
    r_a, _ = mle_reconstruct(rec, meas=MEAS1)
    r_b, _ = mle_reconstruct(scaled, meas=MEAS1)
    assert np.abs(r_a - r_b).max() < 1e-8


def test_reconstruction_is_bit_deterministic():
    rec = _noisy_record(seed=19)
    r_a, rep_a = mle_reconstruct(rec, meas=MEAS1)
    r_b, rep_b = mle_reconstruct(rec, meas=MEAS1)
    assert np.array_equal(r_a, r_b)
    assert rep_a == rep_b


def test_objective_gradient_matches_finite_differences():
    """Central finite differences of the exposed objective agree with the
    analytic weighted-least-squares gradient."""
    rec = _noisy_record(seed=23)
    recon = Reconstructor(rec, meas=MEAS1)
    rng = np.random.default_rng(5)
    r_vec = ptm_of_kraus(random_cptp_kraus(1, rng)).flatten(order="F")
    w = recon.design.w
    delta = w @ r_vec - rec.values.reshape(-1)
    analytic = 2.0 * (w.T @ (delta / recon.covariance))
    step = 1e-6
    largest_rel = 0.0
    for k in range(r_vec.size):
        bumped = r_vec.copy()
        bumped[k] += step
        up = recon.objective(bumped, rec.values)
        bumped[k] = r_vec[k] - step
        down = recon.objective(bumped, rec.values)
        fd = (up - down) / (2 * step)
        scale = max(abs(analytic[k]), abs(fd), 1e-6)
        largest_rel = max(largest_rel, abs(fd - analytic[k]) / scale)
    assert largest_rel < 1e-6


def test_solvers_agree_on_noisy_data():
    rec = _noisy_record(seed=29)
    recon = Reconstructor(rec, meas=MEAS1)
    r_ip, rep_ip = mle_reconstruct(rec, meas=MEAS1)
    r_pg, rep_pg = mle_reconstruct(
        rec, meas=MEAS1, options=SolverOptions(solver="projected-gradient")
    )
    assert rep_ip.solver == "interior-point"
    assert rep_pg.solver == "projected-gradient"
    f_ip = recon.objective(r_ip.flatten(order="F"), rec.values)
    f_pg = recon.objective(r_pg.flatten(order="F"), rec.values)
    assert abs(f_ip - f_pg) / max(abs(f_ip), 1e-12) < 1e-6
    assert np.abs(r_ip - r_pg).max() < 1e-3


def test_project_to_cp_is_nearest_psd_choi():
    """Eigenvalue clipping of the process matrix equals the Frobenius-nearest
    positive-semidefinite process found by a generic constrained optimizer."""
    rng = np.random.default_rng(31)
    base = ptm_of_kraus(random_cptp_kraus(1, rng))
    r_bad = base + 0.08 * rng.standard_normal((4, 4))
    projected = project_to_cp(r_bad)
    choi_projected = choi_of_ptm(projected)
    eigenvalues = np.linalg.eigvalsh(choi_projected)
    assert eigenvalues.min() >= -1e-10
    oracle = project_to_psd_trace(choi_of_ptm(r_bad))
    assert np.abs(choi_projected - oracle).max() < 5e-6
    # already-CP input passes through untouched
    assert np.abs(project_to_cp(base) - base).max() < 1e-10


def test_tp_constraint_pins_identity_row():
    rec = _noisy_record(seed=37)
    r_free, _ = mle_reconstruct(rec, meas=MEAS1)
    r_tp, rep = mle_reconstruct(
        rec, meas=MEAS1, options=SolverOptions(tp_constraint=True)
    )
    assert rep.tp_constraint is True
    assert np.abs(r_tp[0] - np.array([1.0, 0.0, 0.0, 0.0])).max() < 1e-8
    assert np.abs(r_free[0] - np.array([1.0, 0.0, 0.0, 0.0])).max() > 1e-6


def test_state_mle_projects_onto_physical_states():
    rho = state_mle(np.array([1.0, 1.1, 0.0, 0.0]))
    assert np.abs(rho - np.array([[0.5, 0.5], [0.5, 0.5]])).max() < 1e-8
    inside = state_mle(np.array([1.0, 0.3, -0.2, 0.4]))
    want = 0.5 * (
        np.eye(2)
        + 0.3 * np.array([[0, 1], [1, 0]])
        - 0.2 * np.array([[0, -1j], [1j, 0]])
        + 0.4 * np.diag([1.0, -1.0])
    )
    assert np.abs(inside - want).max() < 1e-10
    rng = np.random.default_rng(2)
    noisy = np.concatenate(([1.0], rng.standard_normal(15)))
    rho2 = state_mle(noisy)
    assert rho2.shape == (4, 4)
    assert np.abs(rho2 - rho2.conj().T).max() < 1e-12
    assert np.linalg.eigvalsh(rho2).min() >= -1e-10
    assert np.trace(rho2).real == pytest.approx(1.0, abs=1e-10)


def test_rank_deficient_design_raises_with_directions():
    gates = ideal_gateset(1)
    degenerate = gateset_from_labels(("I",) * 6)
    meas = default_measurement(1)
    rec = simulate_record(np.eye(4), gates, meas, seed=41, analysis_gates=degenerate)
    with pytest.raises(RankDeficientDesignError) as err:
        linear_inversion(rec, analysis_gates=degenerate)
    assert "undetermined" in str(err.value).lower() or "direction" in str(err.value).lower()


def test_reconstructor_accepts_perturbed_gatesets():
    """Reconstructing with the true (perturbed) gates removes the bias seen
    when pretending the pulses were ideal."""
    clean = ideal_gateset(1)
    perturbed = perturb_gateset_unitary(clean, 0.25, seed=43)
    meas = dataclasses.replace(default_measurement(1), variance=0.0)
    truth = ptm_of_unitary(rotation("x", np.pi))
    rec = simulate_record(truth, perturbed, meas, seed=None, analysis_gates=perturbed)
    r_true_gates, _ = mle_reconstruct(rec, gates=perturbed, meas=meas, analysis_gates=perturbed)
    r_wrong_gates, _ = mle_reconstruct(rec, gates=clean, meas=meas, analysis_gates=clean)
    assert np.abs(r_true_gates - truth).max() < 1e-6
    assert np.abs(r_wrong_gates - truth).max() > 1e-3


def test_report_objective_matches_recomputation():
    rec = _noisy_record(seed=47)
    recon = Reconstructor(rec, meas=MEAS1)
    r_mle, report = recon.mle(rec.values)
    assert report.primal_objective == pytest.approx(
        recon.objective(r_mle.flatten(order="F"), rec.values), rel=1e-9
    )
    assert report.iterations > 0
    assert report.kkt_residual < 1e-6


def test_ptm_choi_round_trip_on_solver_output():
    rec = _noisy_record(seed=53)
    r_mle, _ = mle_reconstruct(rec, meas=MEAS1)
    assert np.abs(ptm_of_choi(choi_of_ptm(r_mle)) - r_mle).max() < 1e-10
