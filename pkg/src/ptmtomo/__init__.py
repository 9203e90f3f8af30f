"""Pauli-transfer-matrix process tomography: simulation, constrained
maximum-likelihood reconstruction, and error analysis."""

__version__ = "0.1.0"

from .pauli import (
    PauliBasis,
    hermitian_eig,
    identity_last_permutation,
    operator_from_pauli_vector,
    partial_trace,
    pauli_basis,
    pauli_labels,
    pauli_vector,
)
from .channels import (
    KrausChannel,
    amplitude_damping_kraus,
    apply_channel,
    apply_ptm,
    choi_of_ptm,
    compose,
    decoherence_kraus,
    decoherence_ptm,
    dephasing_kraus,
    depolarizing_kraus,
    is_completely_positive,
    is_signed_permutation,
    is_trace_preserving,
    is_unital,
    ptm_of_choi,
    ptm_of_kraus,
    ptm_of_unitary,
)
from .gates import (
    CNOT,
    TOMOGRAPHY_PULSES,
    process_menu,
    process_ptm,
    process_unitary,
    pulse_unitary,
    rotation,
    single_qubit_clifford_ptms,
)
from .metrics import (
    GateDiagnostics,
    concurrence,
    diagnose,
    gate_fidelity,
    negative_eigenvalue_weight,
    process_fidelity,
    purified_fidelity,
    state_fidelity,
    two_norm_distance,
)
from .measurement import (
    GateSet,
    MeasurementOperator,
    MeasurementRecord,
    calibrate_measurement,
    default_measurement,
    expected_value,
    expected_values,
    gateset_from_labels,
    ideal_gateset,
    perturb_gateset_decoherence,
    perturb_gateset_unitary,
    register_decoherence_ptm,
    simulate_record,
    transfer_matrix,
)
from .sampling import (
    gue_hamiltonian,
    random_cptp_kraus,
    random_density_matrix,
    random_hermitian,
    random_unitary,
)
from .reconstruction import (
    RankDeficientDesignError,
    ReconstructionError,
    Reconstructor,
    SdpProblem,
    SolverOptions,
    SolverReport,
    linear_inversion,
    mle_reconstruct,
    project_to_cp,
    solve_sdp,
    state_mle,
)
from .analysis import (
    BootstrapResult,
    BudgetEntry,
    DecayFit,
    FaultyGatesetRow,
    RepeatedGateResult,
    bell_input_ket,
    bell_target_ket,
    bootstrap,
    calibrate_epsilon,
    decoherence_budget,
    faulty_gateset_study,
    fit_decay,
    mean_pulse_fidelity,
    repeated_gate_experiment,
)
from .scenarios import (
    DecoherenceSpec,
    MeasurementSpec,
    PulseErrorSpec,
    Scenario,
    calibration_scenario,
    hardware_like_scenario,
)
from .serialize import (
    SchemaError,
    digest_file,
    load_record,
    load_result,
    load_scenario,
    load_study,
    record_to_csv,
    result_to_dict,
    save_record,
    save_scenario,
    transfer_matrix_csv,
)
from .render import bar_data, heatmap_png, heatmap_svg, render_transfer_matrix
from .report import attach_bootstrap, report_row, write_report
from .tolerances import DEFAULT_POLICY, NumericPolicy

__all__ = [name for name in dir() if not name.startswith("_")]
