"""Canonical systems with a hidden spectral parameter, Darboux dressing,
multiplicative integrals, cut boundary values and triangular model
operators with their characteristic matrix functions."""

from .gbdt import (
    GbdtParams,
    GbdtTrajectory,
    TransferEval,
    evolve,
    g0_eval,
    positivity_report,
    sample_params,
    transfer,
    transformed_boundary_values,
    transformed_fundamental,
    transformed_hamiltonian,
    validate_params,
    w0_at,
)
from .linalg import (
    HermitianReport,
    SingularMatrixError,
    expm,
    hermitian_report,
    solve,
)
from .system import (
    BoundaryValueReport,
    CanonicalSystem,
    FundamentalSolution,
    HamiltonianSpec,
    KernelBoundReport,
    SpectralPointError,
    boundary_values,
    fundamental_solution,
    j_monotonicity_defect,
    kernel_bound,
    product_integral,
    validate_system,
)
from .triangular import (
    CharFnSample,
    DiscretizedOperator,
    TriangularModel,
    char_fn,
    char_fn_via_fundamental,
    conjugate_transform_model,
    discretize,
    resolvent_identity_check,
    similarity_probe,
    transform_model,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryValueReport",
    "CanonicalSystem",
    "CharFnSample",
    "DiscretizedOperator",
    "FundamentalSolution",
    "GbdtParams",
    "GbdtTrajectory",
    "HamiltonianSpec",
    "HermitianReport",
    "KernelBoundReport",
    "SingularMatrixError",
    "SpectralPointError",
    "TransferEval",
    "TriangularModel",
    "boundary_values",
    "char_fn",
    "char_fn_via_fundamental",
    "conjugate_transform_model",
    "discretize",
    "evolve",
    "expm",
    "fundamental_solution",
    "g0_eval",
    "hermitian_report",
    "j_monotonicity_defect",
    "kernel_bound",
    "positivity_report",
    "product_integral",
    "resolvent_identity_check",
    "sample_params",
    "similarity_probe",
    "solve",
    "transfer",
    "transform_model",
    "transformed_boundary_values",
    "transformed_fundamental",
    "transformed_hamiltonian",
    "validate_params",
    "validate_system",
    "w0_at",
]
