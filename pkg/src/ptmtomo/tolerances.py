"""Shared numeric tolerances.

Every validation threshold used across the package lives in one frozen
record so that tests and production code agree on what "Hermitian",
"positive semidefinite" or "unitary" mean numerically.  Functions accept
an optional policy argument and fall back to :data:`DEFAULT_POLICY`.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class NumericPolicy:
    """Numeric thresholds applied by validation and decomposition routines.

    Attributes:
        hermiticity_atol: max absolute entry of ``A - A.conj().T`` tolerated
            before an operator is rejected as non-Hermitian.
        eig_residual_atol: bound on ``max|A - V diag(w) V^dag|`` for accepted
            eigendecompositions of Hermitian operators.
        psd_slack: eigenvalue slack when testing positive semidefiniteness;
            spectra above ``-psd_slack`` count as physical.
        unitarity_atol: max absolute entry of ``U^dag U - I`` tolerated when a
            unitary is required.
        channel_atol: residual tolerated by trace-preservation and unitality
            checks on Choi matrices.
        roundtrip_atol: agreement required of representation round trips
            (PTM -> Choi -> PTM and friends) in tests and self checks.
    """

    hermiticity_atol: float = 1e-12
    eig_residual_atol: float = 1e-10
    psd_slack: float = 1e-8
    unitarity_atol: float = 1e-10
    channel_atol: float = 1e-8
    roundtrip_atol: float = 1e-10


DEFAULT_POLICY = NumericPolicy()
